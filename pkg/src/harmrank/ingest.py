"""Annotation ingestion: schema adapters, severity orderings, frequency tables.

Input files are UTF-8 delimited text (comma or tab, auto-detected from the
header line). Four layouts are supported, each describing one observation of
"this harm category affected this severity-ranked unit":

``aggregated_triplets``
    Pre-aggregated counts. Columns ``category, unit, weight`` plus an
    optional ``subcategory`` column. This is also the normalized form the
    ``ingest`` command emits.
``aiaaic_raw``
    One annotation per row. Columns ``datetime, annotator_id, incident_id,
    stakeholders, harm_category, harm_subcategory, harm_type, notes``. A row
    naming several stakeholders (separated by ``;``) is exploded into one
    unit-weight record per stakeholder.
``mit_ratings``
    Incident tracker exports where a numeric rating level plays the role of
    the severity-ranked unit. Columns ``category`` (or ``harm_category``),
    ``rating``, ``freq``.
``oecd_monitor``
    Monitor exports. Columns ``harm_type`` (the category), ``stakeholder``,
    ``freq``; a ``severity`` column, when present, is ignored because unit
    ordering always comes from the active severity ordering.
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from harmrank.errors import EmptyInputError, SchemaError, ValidationError

FREQ_ROW_TOL = 1e-12

SUBCATEGORY_SEPARATOR = " / "
UNSPECIFIED_SUBCATEGORY = "(unspecified)"


class Schema(str, Enum):
    """Supported input file layouts."""

    AIAAIC_RAW = "aiaaic_raw"
    AGGREGATED_TRIPLETS = "aggregated_triplets"
    MIT_RATINGS = "mit_ratings"
    OECD_MONITOR = "oecd_monitor"


class Kind(str, Enum):
    """Whether an annotation records an actual or a potential harm."""

    ACTUAL = "actual"
    POTENTIAL = "potential"


class Granularity(str, Enum):
    """Row granularity of a frequency table."""

    CATEGORY = "category"
    SUBCATEGORY = "subcategory"


@dataclass(frozen=True)
class AnnotationRecord:
    """One (category, severity-ranked unit) observation.

    ``unit`` is a stakeholder group name, or a rating level for schemas
    without stakeholder annotations. ``weight`` is the number of identical
    observations the record stands for.
    """

    category: str
    unit: str
    weight: int = 1
    subcategory: str | None = None
    kind: Kind | None = None
    incident_id: str | None = None
    annotator_id: str | None = None
    timestamp: str | None = None
    notes: str | None = None

    def __post_init__(self) -> None:
        if not self.category or not self.category.strip():
            raise ValidationError("annotation category must be non-empty")
        if not self.unit or not self.unit.strip():
            raise ValidationError("annotation unit must be non-empty")
        if not isinstance(self.weight, int) or self.weight < 1:
            raise ValidationError(
                f"annotation weight must be a positive integer, got {self.weight!r}"
            )


@dataclass(frozen=True)
class SeverityOrdering:
    """Total order over units, ascending severity (least severe first).

    Only the order carries meaning: position ``j`` (1-based) is the severity
    rank. Numeric labels attached in ordering files are discarded after they
    have established the order.
    """

    units: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.units) < 2:
            raise ValidationError("severity ordering needs at least 2 units")
        if len(set(self.units)) != len(self.units):
            dupes = sorted({u for u in self.units if self.units.count(u) > 1})
            raise ValidationError(f"severity ordering has duplicate units: {dupes}")

    @property
    def m(self) -> int:
        return len(self.units)

    @cached_property
    def _positions(self) -> dict[str, int]:
        return {unit: j for j, unit in enumerate(self.units, start=1)}

    def rank(self, unit: str) -> int:
        """1-based severity rank of ``unit`` (M = most severe)."""
        try:
            return self._positions[unit]
        except KeyError:
            raise ValidationError(f"unit {unit!r} not in severity ordering") from None

    def __contains__(self, unit: str) -> bool:
        return unit in self._positions

    def swapped(self, position: int) -> "SeverityOrdering":
        """New ordering with adjacent positions ``position`` and ``position + 1`` exchanged (0-based)."""
        if not 0 <= position < self.m - 1:
            raise ValidationError(f"swap position {position} out of range for M={self.m}")
        units = list(self.units)
        units[position], units[position + 1] = units[position + 1], units[position]
        return SeverityOrdering(tuple(units))

    def reversed(self) -> "SeverityOrdering":
        return SeverityOrdering(tuple(reversed(self.units)))


@dataclass(frozen=True)
class FrequencyTable:
    """Counts and row-normalized conditional frequencies per category.

    ``counts[i][j]`` is the total annotation weight for category ``i`` on the
    unit at severity rank ``j + 1``; column order equals the ordering the
    table was built with. Rows with zero total are listed in ``degenerate``
    and carry NaN frequencies rather than silently becoming zeros.
    """

    categories: tuple[str, ...]
    units: tuple[str, ...]
    counts: np.ndarray
    freqs: np.ndarray
    degenerate: tuple[str, ...] = ()
    unmapped: tuple[tuple[str, int], ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.unmapped, tuple):
            pairs = tuple(sorted(dict(self.unmapped).items()))
            object.__setattr__(self, "unmapped", pairs)
        counts = np.ascontiguousarray(np.asarray(self.counts, dtype=np.int64))
        freqs = np.ascontiguousarray(np.asarray(self.freqs, dtype=np.float64))
        shape = (len(self.categories), len(self.units))
        if counts.shape != shape or freqs.shape != shape:
            raise ValidationError(
                f"matrix shape mismatch: expected {shape}, "
                f"got counts {counts.shape} / freqs {freqs.shape}"
            )
        if (counts < 0).any():
            raise ValidationError("counts must be non-negative")
        row_sums = freqs[~np.isnan(freqs).any(axis=1)].sum(axis=1)
        if row_sums.size and np.abs(row_sums - 1.0).max() > FREQ_ROW_TOL:
            raise ValidationError("frequency rows must sum to 1")
        counts.setflags(write=False)
        freqs.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "freqs", freqs)

    @property
    def m(self) -> int:
        return len(self.units)

    @property
    def active_categories(self) -> tuple[str, ...]:
        """Categories with a positive total, in table order."""
        skip = set(self.degenerate)
        return tuple(c for c in self.categories if c not in skip)

    def row(self, category: str) -> np.ndarray:
        try:
            i = self.categories.index(category)
        except ValueError:
            raise ValidationError(f"unknown category {category!r}") from None
        return self.freqs[i]

    def count_row(self, category: str) -> np.ndarray:
        try:
            i = self.categories.index(category)
        except ValueError:
            raise ValidationError(f"unknown category {category!r}") from None
        return self.counts[i]


@dataclass(frozen=True)
class SkippedRow:
    line: int
    reason: str


@dataclass
class ParseResult:
    """Records plus the per-row outcome report of one parse."""

    records: list[AnnotationRecord]
    skipped: list[SkippedRow] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def total_weight(self) -> int:
        return sum(r.weight for r in self.records)


@dataclass(frozen=True)
class _SchemaSpec:
    required: tuple[str, ...]
    optional: tuple[str, ...] = ()
    aliases: Mapping[str, str] = field(default_factory=dict)


_SCHEMA_SPECS: dict[Schema, _SchemaSpec] = {
    Schema.AGGREGATED_TRIPLETS: _SchemaSpec(
        required=("category", "unit", "weight"),
        optional=("subcategory",),
    ),
    Schema.AIAAIC_RAW: _SchemaSpec(
        required=(
            "datetime",
            "annotator_id",
            "incident_id",
            "stakeholders",
            "harm_category",
            "harm_subcategory",
            "harm_type",
            "notes",
        ),
    ),
    Schema.MIT_RATINGS: _SchemaSpec(
        required=("category", "rating", "freq"),
        aliases={"harm_category": "category", "frequency": "freq", "weight": "freq"},
    ),
    Schema.OECD_MONITOR: _SchemaSpec(
        required=("harm_type", "stakeholder", "freq"),
        optional=("severity", "incident_id"),
        aliases={"frequency": "freq"},
    ),
}

STAKEHOLDER_SEPARATOR = ";"


def _normalize_header(name: str) -> str:
    return name.strip().lower().replace(" ", "_")


def _open_text(source: str | Path | IO[str]) -> IO[str]:
    if isinstance(source, Path):
        return source.open("r", encoding="utf-8", newline="")
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def _parse_weight(raw: str, column: str) -> int:
    text = raw.strip()
    try:
        value = int(text)
    except ValueError:
        raise ValueError(f"{column} {raw!r} is not an integer") from None
    if value < 1:
        raise ValueError(f"{column} must be >= 1, got {value}")
    return value


def _parse_kind(raw: str, line: int, warnings: list[str]) -> Kind | None:
    text = raw.strip().lower()
    if not text:
        return None
    try:
        return Kind(text)
    except ValueError:
        warnings.append(f"line {line}: unknown harm_type {raw!r}, kept without kind")
        return None


def parse_annotations(source: str | Path | IO[str], schema: Schema | str) -> ParseResult:
    """Parse a delimited annotation file into records.

    ``source`` may be a path, an open text stream, or the file content
    itself. Rows that cannot be turned into at least one record are listed in
    the result's ``skipped`` with a reason; they never abort the parse.

    Raises:
        SchemaError: the header lacks a required column.
        EmptyInputError: the source has no data rows at all.
    """
    schema = Schema(schema)
    spec = _SCHEMA_SPECS[schema]
    stream = _open_text(source)
    first = stream.readline()
    if not first.strip():
        raise EmptyInputError("input has no header row")
    delimiter = "\t" if "\t" in first else ","
    header = next(csv.reader([first], delimiter=delimiter))
    columns = {}
    for idx, name in enumerate(header):
        normalized = _normalize_header(name)
        normalized = spec.aliases.get(normalized, normalized)
        columns.setdefault(normalized, idx)
    missing = [c for c in spec.required if c not in columns]
    if missing:
        raise SchemaError(
            f"schema {schema.value!r} requires columns {missing}, header was {header}"
        )

    result = ParseResult(records=[])
    reader = csv.reader(stream, delimiter=delimiter)
    rows = 0
    for line, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        rows += 1
        cell = _CellReader(row, columns)
        try:
            records = _row_to_records(schema, cell, line, result.warnings)
        except ValueError as exc:
            result.skipped.append(SkippedRow(line=line, reason=str(exc)))
            continue
        result.records.extend(records)
    if rows == 0:
        raise EmptyInputError("input has a header but no data rows")
    return result


class _CellReader:
    def __init__(self, row: Sequence[str], columns: Mapping[str, int]):
        self._row = row
        self._columns = columns

    def get(self, name: str) -> str:
        idx = self._columns.get(name)
        if idx is None or idx >= len(self._row):
            return ""
        return self._row[idx].strip()


def _row_to_records(
    schema: Schema, cell: _CellReader, line: int, warnings: list[str]
) -> list[AnnotationRecord]:
    if schema is Schema.AGGREGATED_TRIPLETS:
        category = cell.get("category")
        unit = cell.get("unit")
        if not category or not unit:
            raise ValueError("category and unit must be non-empty")
        return [
            AnnotationRecord(
                category=category,
                unit=unit,
                weight=_parse_weight(cell.get("weight"), "weight"),
                subcategory=cell.get("subcategory") or None,
            )
        ]

    if schema is Schema.AIAAIC_RAW:
        category = cell.get("harm_category")
        if not category:
            raise ValueError("harm_category must be non-empty")
        stakeholders = [
            s.strip()
            for s in cell.get("stakeholders").split(STAKEHOLDER_SEPARATOR)
            if s.strip()
        ]
        if not stakeholders:
            raise ValueError("row names no stakeholders")
        kind = _parse_kind(cell.get("harm_type"), line, warnings)
        return [
            AnnotationRecord(
                category=category,
                unit=stakeholder,
                weight=1,
                subcategory=cell.get("harm_subcategory") or None,
                kind=kind,
                incident_id=cell.get("incident_id") or None,
                annotator_id=cell.get("annotator_id") or None,
                timestamp=cell.get("datetime") or None,
                notes=cell.get("notes") or None,
            )
            for stakeholder in stakeholders
        ]

    if schema is Schema.MIT_RATINGS:
        category = cell.get("category")
        rating = cell.get("rating")
        if not category or not rating:
            raise ValueError("category and rating must be non-empty")
        return [
            AnnotationRecord(
                category=category,
                unit=rating,
                weight=_parse_weight(cell.get("freq"), "freq"),
            )
        ]

    if schema is Schema.OECD_MONITOR:
        category = cell.get("harm_type")
        unit = cell.get("stakeholder")
        if not category or not unit:
            raise ValueError("harm_type and stakeholder must be non-empty")
        return [
            AnnotationRecord(
                category=category,
                unit=unit,
                weight=_parse_weight(cell.get("freq"), "freq"),
                incident_id=cell.get("incident_id") or None,
            )
        ]

    raise SchemaError(f"unsupported schema {schema!r}")


def category_label(record: AnnotationRecord, granularity: Granularity) -> str:
    """Row key of ``record`` at the requested granularity."""
    if granularity is Granularity.CATEGORY:
        return record.category
    sub = record.subcategory or UNSPECIFIED_SUBCATEGORY
    return f"{record.category}{SUBCATEGORY_SEPARATOR}{sub}"


def build_frequency_table(
    records: Iterable[AnnotationRecord],
    ordering: SeverityOrdering,
    granularity: Granularity | str = Granularity.CATEGORY,
    kinds: frozenset[Kind] | None = None,
) -> FrequencyTable:
    """Aggregate records into a frequency table aligned to ``ordering``.

    Records whose unit is not in the ordering are tallied into the table's
    ``unmapped`` report instead of being dropped silently. ``kinds`` filters
    annotations by actual/potential; the default keeps both.

    Raises:
        EmptyInputError: no records, or none map into the ordering.
    """
    granularity = Granularity(granularity)
    records = list(records)
    if not records:
        raise EmptyInputError("no annotation records to aggregate")

    totals: dict[tuple[str, str], int] = defaultdict(int)
    unmapped: dict[str, int] = defaultdict(int)
    for record in records:
        if kinds is not None and record.kind not in kinds:
            continue
        if record.unit not in ordering:
            unmapped[record.unit] += record.weight
            continue
        totals[(category_label(record, granularity), record.unit)] += record.weight
    if not totals:
        raise EmptyInputError("no records map into the severity ordering")

    categories = tuple(sorted({key[0] for key in totals}))
    counts = np.zeros((len(categories), ordering.m), dtype=np.int64)
    index = {c: i for i, c in enumerate(categories)}
    for (category, unit), weight in totals.items():
        counts[index[category], ordering.rank(unit) - 1] = weight

    row_totals = counts.sum(axis=1)
    freqs = np.full(counts.shape, np.nan, dtype=np.float64)
    positive = row_totals > 0
    freqs[positive] = counts[positive] / row_totals[positive, None]
    degenerate = tuple(categories[i] for i in np.flatnonzero(~positive))
    return FrequencyTable(
        categories=categories,
        units=ordering.units,
        counts=counts,
        freqs=freqs,
        degenerate=degenerate,
        unmapped=dict(sorted(unmapped.items())),
    )


def read_severity_ordering(source: str | Path | IO[str]) -> SeverityOrdering:
    """Read an ordering config: one unit per line, least severe first.

    Alternatively every line may be ``unit=rank``; the numeric ranks are used
    only to sort and are then discarded. Blank lines and ``#`` comments are
    ignored.
    """
    stream = _open_text(source)
    lines = []
    for raw in stream:
        text = raw.split("#", 1)[0].strip()
        if text:
            lines.append(text)
    if not lines:
        raise EmptyInputError("severity ordering file is empty")

    keyed = ["=" in line for line in lines]
    if any(keyed) and not all(keyed):
        raise ValidationError("severity ordering mixes plain lines with unit=rank lines")
    if all(keyed):
        pairs = []
        for line in lines:
            name, _, rank_text = line.partition("=")
            name = name.strip()
            try:
                rank = float(rank_text.strip())
            except ValueError:
                raise ValidationError(f"invalid rank in ordering line {line!r}") from None
            pairs.append((rank, name))
        ranks = [rank for rank, _ in pairs]
        if len(set(ranks)) != len(ranks):
            raise ValidationError("severity ordering has duplicate ranks")
        pairs.sort()
        return SeverityOrdering(tuple(name for _, name in pairs))
    return SeverityOrdering(tuple(lines))


def write_aggregated_triplets(records: Iterable[AnnotationRecord], stream: IO[str]) -> None:
    """Emit records in the normalized ``aggregated_triplets`` layout.

    Weights of identical (category, subcategory, unit) observations are
    merged; annotator-level fields are not representable in this layout and
    are dropped. Re-parsing the output reproduces the same frequency table.
    """
    totals: dict[tuple[str, str | None, str], int] = defaultdict(int)
    for record in records:
        totals[(record.category, record.subcategory, record.unit)] += record.weight
    if not totals:
        raise EmptyInputError("no annotation records to write")

    with_subcategory = any(sub is not None for _, sub, _ in totals)
    writer = csv.writer(stream, lineterminator="\n")
    header = ["category", "unit", "weight"]
    if with_subcategory:
        header.append("subcategory")
    writer.writerow(header)
    for (category, subcategory, unit), weight in sorted(
        totals.items(), key=lambda item: (item[0][0], item[0][1] or "", item[0][2])
    ):
        row = [category, unit, str(weight)]
        if with_subcategory:
            row.append(subcategory or "")
        writer.writerow(row)


def _data_text(name: str) -> str:
    return resources.files("harmrank.data").joinpath(name).read_text(encoding="utf-8")


def default_severity_ordering() -> SeverityOrdering:
    """The packaged stakeholder ordering, least to most severely harmed."""
    return read_severity_ordering(_data_text("severity_order_default.txt"))


def load_taxonomy() -> dict[str, tuple[str, ...]]:
    """Packaged harm category -> subcategory vocabulary."""
    raw = json.loads(_data_text("harm_taxonomy.json"))
    return {category: tuple(subs) for category, subs in raw.items()}


def benchmark_annotations_path() -> Path:
    """Path of the packaged benchmark fixture (aggregated_triplets layout)."""
    return Path(str(resources.files("harmrank.data").joinpath("benchmark_annotations.csv")))


def validate_against_taxonomy(
    records: Iterable[AnnotationRecord],
    taxonomy: Mapping[str, tuple[str, ...]] | None = None,
) -> list[str]:
    """Warnings for category/subcategory pairs outside the vocabulary."""
    if taxonomy is None:
        taxonomy = load_taxonomy()
    warnings: list[str] = []
    seen: set[tuple[str, str | None]] = set()
    for record in records:
        key = (record.category, record.subcategory)
        if key in seen:
            continue
        seen.add(key)
        subs = taxonomy.get(record.category)
        if subs is None:
            warnings.append(f"category {record.category!r} not in taxonomy")
        elif record.subcategory is not None and record.subcategory not in subs:
            warnings.append(
                f"subcategory {record.subcategory!r} not listed under {record.category!r}"
            )
    return sorted(warnings)
