/**
 * Shared test utilities: golden fixture loading and extraction of
 * displayed values from rendered markup. Fixtures are verbatim service
 * responses captured by scripts/capture_fixtures.py.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const here = dirname(fileURLToPath(import.meta.url));

export function fixture<T>(name: string): T {
  const path = join(here, "fixtures", `${name}.json`);
  return JSON.parse(readFileSync(path, "utf8")) as T;
}

export function unescapeHtml(value: string): string {
  return value
    .replace(/&quot;/g, '"')
    .replace(/&lt;/g, "<")
    .replace(/&gt;/g, ">")
    .replace(/&amp;/g, "&");
}

/**
 * Pull every `<td data-cat=... data-field=FIELD>text</td>` out of rendered
 * table markup, keyed by (unescaped) category.
 */
export function extractCells(html: string, field: string): Map<string, string> {
  const cells = new Map<string, string>();
  const pattern = new RegExp(
    `<td[^>]*data-cat="([^"]*)" data-field="${field}"[^>]*>([^<]*)</td>`,
    "g",
  );
  for (const match of html.matchAll(pattern)) {
    cells.set(unescapeHtml(match[1]), match[2]);
  }
  return cells;
}

/** Grid cell texts from the ρ heatmap, keyed "i,j". */
export function extractGridTexts(svg: string): Map<string, string> {
  const cells = new Map<string, string>();
  const pattern = /<text[^>]*data-i="(\d+)" data-j="(\d+)">([^<]*)<\/text>/g;
  for (const match of svg.matchAll(pattern)) {
    cells.set(`${match[1]},${match[2]}`, match[3]);
  }
  return cells;
}

/** Tooltip titles from the ρ heatmap rects, keyed "i,j". */
export function extractGridTitles(svg: string): Map<string, string> {
  const titles = new Map<string, string>();
  const pattern =
    /<rect[^>]*data-i="(\d+)" data-j="(\d+)"><title>([^<]*)<\/title>/g;
  for (const match of svg.matchAll(pattern)) {
    titles.set(`${match[1]},${match[2]}`, unescapeHtml(match[3]));
  }
  return titles;
}

/** Trend-chart points as {at, value} display texts. */
export function extractTrendPoints(svg: string): { at: string; value: string }[] {
  const points: { at: string; value: string }[] = [];
  const pattern = /<circle[^>]*data-at="([^"]*)" data-value="([^"]*)"/g;
  for (const match of svg.matchAll(pattern)) {
    points.push({ at: match[1], value: match[2] });
  }
  return points;
}
