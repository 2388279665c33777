/**
 * Display formatting. The service pre-rounds every float to 4 decimals,
 * so rendering with toFixed is lossless: Number(cell4(v)) === v for every
 * value the service can send. Nothing in here computes a metric — these
 * functions only turn payload fields into text.
 */

export const NA = "NA";

/** Four-decimal cell text for a payload float; NA for null/missing. */
export function cell4(value: number | null | undefined): string {
  if (value === null || value === undefined || Number.isNaN(value)) return NA;
  return value.toFixed(4);
}

/** Two-decimal cell text (correlation grids, invariant sums). */
export function cell2(value: number | null | undefined): string {
  if (value === null || value === undefined || Number.isNaN(value)) return NA;
  return value.toFixed(2);
}

/** Signed four-decimal delta between two payload fields. */
export function signed4(delta: number): string {
  if (Number.isNaN(delta)) return NA;
  if (delta > 0) return `+${delta.toFixed(4)}`;
  if (delta < 0) return `-${Math.abs(delta).toFixed(4)}`;
  return "0.0000";
}

export function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
