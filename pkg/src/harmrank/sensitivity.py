"""Perturbation analyses for concentration metrics.

Four independent robustness probes over a frequency table and its severity
ordering:

* **Boundary**: per category, the lowest and highest concentration score any
  severity assignment could produce, obtained by sorting the category's
  frequency row descending (best case) or ascending (worst case).
* **Permutation**: repeatedly apply k random adjacent swaps to the severity
  ordering, recompute every category's scores, and report per-category
  spread plus rank-stability correlations against the unperturbed ranking.
* **Removal**: repeatedly delete a fixed fraction of the unit-weight
  annotation records, rebuild the table, recompute scores.
* **Clustering**: agglomerate categories over their raw count vectors with
  Ward's minimum-variance criterion for the dendrogram report.

All randomness flows through `numpy.random.default_rng` seeded per trial as
``base_seed + trial_index``, which makes every trial independent of
execution order: running trials in parallel, in reverse, or resuming half
way yields bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from harmrank.errors import ComputationError, ValidationError
from harmrank.ingest import (
    AnnotationRecord,
    FrequencyTable,
    Granularity,
    SeverityOrdering,
    category_label,
)
from harmrank.metrics import aih, criticality_index

BRACKET_TOL = 1e-9
MAX_SEED = 2**64 - 1


class ScenarioKind(str, Enum):
    BOUNDARY = "boundary"
    PERMUTATION = "permutation"
    REMOVAL = "removal"


@dataclass(frozen=True)
class ScenarioSpec:
    """Configuration of one perturbation experiment.

    Exactly the fields meaningful for ``kind`` may be set: permutation uses
    ``k_swaps`` + ``trials``, removal uses ``removal_fraction`` + ``trials``,
    boundary is deterministic and takes neither.
    """

    kind: ScenarioKind
    k_swaps: int | None = None
    removal_fraction: float | None = None
    trials: int | None = None
    base_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ScenarioKind(self.kind))
        if not isinstance(self.base_seed, int) or not 0 <= self.base_seed <= MAX_SEED:
            raise ValidationError("base_seed must be a 64-bit unsigned integer")
        if self.kind is ScenarioKind.BOUNDARY:
            if self.k_swaps is not None or self.removal_fraction is not None or self.trials is not None:
                raise ValidationError("boundary scenarios take no k_swaps/fraction/trials")
            return
        if self.trials is None or self.trials < 1:
            raise ValidationError(f"{self.kind.value} scenarios need trials >= 1")
        if self.kind is ScenarioKind.PERMUTATION:
            if self.removal_fraction is not None:
                raise ValidationError("permutation scenarios take no removal_fraction")
            if self.k_swaps is None or self.k_swaps < 1:
                raise ValidationError("permutation scenarios need k_swaps >= 1")
        else:  # removal
            if self.k_swaps is not None:
                raise ValidationError("removal scenarios take no k_swaps")
            if self.removal_fraction is None or not 0.0 <= self.removal_fraction < 1.0:
                raise ValidationError("removal_fraction must be in [0, 1)")


@dataclass(frozen=True)
class CategoryStats:
    """Aggregate of one category's score across a scenario's evaluations.

    ``lo``/``hi`` are the 2.5/97.5 percentiles over trials for randomized
    scenarios, and the attainable best/worst bounds for boundary analysis.
    ``n_trials`` counts the evaluations the category survived; trials that
    empty a category contribute nothing to its aggregate. A category absent
    from every trial carries NaN aggregates.
    """

    category: str
    mean_aih: float
    stddev: float
    lo: float
    hi: float
    mean_ci: float
    n_trials: int

    def __post_init__(self) -> None:
        if self.n_trials < 0:
            raise ValidationError("n_trials must be non-negative")
        if self.n_trials == 0:
            return
        if math.isnan(self.mean_aih) or math.isnan(self.lo) or math.isnan(self.hi):
            raise ValidationError(f"{self.category}: NaN stats with n_trials > 0")
        if not (self.lo - BRACKET_TOL <= self.mean_aih <= self.hi + BRACKET_TOL):
            raise ValidationError(
                f"{self.category}: interval [{self.lo}, {self.hi}] "
                f"does not bracket mean {self.mean_aih}"
            )


@dataclass(frozen=True)
class ScenarioResult:
    """A scenario's per-category aggregates and rank-stability matrix.

    ``rank_correlations[i][j]`` is Spearman's rho between the category
    score vectors of evaluations i and j, with index 0 the unperturbed
    baseline; the matrix is symmetric with a unit diagonal, and entries are
    NaN where a correlation is undefined (fewer than two shared categories
    or zero variance).
    """

    spec: ScenarioSpec
    stats: tuple[CategoryStats, ...]
    correlation_labels: tuple[str, ...]
    rank_correlations: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.ascontiguousarray(np.asarray(self.rank_correlations, dtype=np.float64))
        n = len(self.correlation_labels)
        if matrix.shape != (n, n):
            raise ValidationError(
                f"correlation matrix shape {matrix.shape} does not match {n} labels"
            )
        if not np.allclose(matrix, matrix.T, atol=1e-12, equal_nan=True):
            raise ValidationError("correlation matrix must be symmetric")
        if n and not np.allclose(np.diag(matrix), 1.0, atol=1e-12):
            raise ValidationError("correlation matrix diagonal must be 1")
        finite = matrix[~np.isnan(matrix)]
        if finite.size and (np.abs(finite) > 1.0 + 1e-12).any():
            raise ValidationError("correlations must lie in [-1, 1]")
        matrix.setflags(write=False)
        object.__setattr__(self, "rank_correlations", matrix)

    @property
    def per_category(self) -> dict[str, CategoryStats]:
        return {s.category: s for s in self.stats}


def boundary_aih(freqs: Sequence[float]) -> tuple[float, float]:
    """(best, worst) concentration attainable by reassigning severity ranks.

    Worst case puts the largest shares on the most severe ranks (frequencies
    sorted ascending); best case is the exact mirror, so the two always sum
    to 1. Every permutation of ``freqs`` scores between the two.
    """
    f = np.sort(np.asarray(freqs, dtype=np.float64))
    worst = aih(f)
    best = aih(f[::-1])
    return best, worst


def boundary_table(table: FrequencyTable) -> dict[str, tuple[float, float]]:
    """Per-category (best, worst) bounds for every non-degenerate row."""
    return {c: boundary_aih(table.row(c)) for c in table.active_categories}


def boundary_scenario(
    table: FrequencyTable, base_seed: int = 0, ci_convention: str = "survival"
) -> ScenarioResult:
    """Boundary analysis packaged as a scenario result.

    ``lo``/``hi`` carry the best/worst bounds around the baseline score;
    there is no randomness, hence a single baseline column in the
    correlation matrix.
    """
    stats = []
    for category in table.active_categories:
        row = table.row(category)
        best, worst = boundary_aih(row)
        stats.append(
            CategoryStats(
                category=category,
                mean_aih=aih(row),
                stddev=0.0,
                lo=best,
                hi=worst,
                mean_ci=criticality_index(row, ci_convention),
                n_trials=1,
            )
        )
    if not stats:
        raise ComputationError("boundary analysis needs at least one non-degenerate category")
    return ScenarioResult(
        spec=ScenarioSpec(kind=ScenarioKind.BOUNDARY, base_seed=base_seed),
        stats=tuple(stats),
        correlation_labels=("baseline",),
        rank_correlations=np.ones((1, 1)),
    )


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties replaced by their group average."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    ordered = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and ordered[j + 1] == ordered[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(values_a: Sequence[float], values_b: Sequence[float]) -> float:
    """Spearman rank correlation: Pearson correlation of average ranks.

    NaN when either side has zero rank variance (the correlation is
    undefined, not zero).
    """
    a = np.asarray(values_a, dtype=np.float64)
    b = np.asarray(values_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"rank lists differ in length: {a.shape} vs {b.shape}")
    if a.ndim != 1 or a.size < 2:
        raise ValidationError("rank correlation needs two lists of length >= 2")
    if np.isnan(a).any() or np.isnan(b).any():
        raise ValidationError("rank lists must not contain NaN")
    ra = _average_ranks(a) - (a.size + 1) / 2.0
    rb = _average_ranks(b) - (b.size + 1) / 2.0
    denom = math.sqrt(float(np.dot(ra, ra)) * float(np.dot(rb, rb)))
    if denom == 0.0:
        return math.nan
    rho = float(np.dot(ra, rb)) / denom
    return min(1.0, max(-1.0, rho))


def _correlation_matrix(score_maps: Sequence[Mapping[str, float]]) -> np.ndarray:
    """Pairwise Spearman matrix over per-evaluation category scores.

    Each pair is correlated over the categories present in both
    evaluations; pairs sharing fewer than two categories are NaN. The
    diagonal is 1 by definition.
    """
    n = len(score_maps)
    matrix = np.eye(n, dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            shared = sorted(score_maps[i].keys() & score_maps[j].keys())
            if len(shared) < 2:
                rho = math.nan
            else:
                rho = spearman_rho(
                    [score_maps[i][c] for c in shared],
                    [score_maps[j][c] for c in shared],
                )
            matrix[i, j] = matrix[j, i] = rho
    return matrix


def _aggregate(
    categories: Iterable[str],
    aih_values: Mapping[str, list[float]],
    ci_values: Mapping[str, list[float]],
) -> tuple[CategoryStats, ...]:
    stats = []
    for category in categories:
        values = np.asarray(aih_values.get(category, ()), dtype=np.float64)
        if values.size == 0:
            stats.append(
                CategoryStats(category, math.nan, math.nan, math.nan, math.nan, math.nan, 0)
            )
            continue
        lo, hi = np.percentile(values, [2.5, 97.5])
        if values.min() == values.max():
            # a constant sequence averages to itself; computing (n*x)/n can
            # drift one ulp, which would break "no removal == baseline"
            mean_aih, stddev = float(values[0]), 0.0
        else:
            mean_aih = float(values.mean())
            stddev = float(values.std(ddof=1)) if values.size > 1 else 0.0
        ci_arr = np.asarray(ci_values[category], dtype=np.float64)
        mean_ci = float(ci_arr[0]) if ci_arr.min() == ci_arr.max() else float(ci_arr.mean())
        stats.append(
            CategoryStats(
                category=category,
                mean_aih=mean_aih,
                stddev=stddev,
                lo=float(lo),
                hi=float(hi),
                mean_ci=mean_ci,
                n_trials=int(values.size),
            )
        )
    return tuple(stats)


def _baseline_scores(
    table: FrequencyTable, ci_convention: str
) -> tuple[dict[str, float], dict[str, float]]:
    aih_map = {c: aih(table.row(c)) for c in table.active_categories}
    ci_map = {c: criticality_index(table.row(c), ci_convention) for c in table.active_categories}
    return aih_map, ci_map


def permutation_scenarios(
    table: FrequencyTable,
    ordering: SeverityOrdering,
    k_swaps: int,
    trials: int,
    base_seed: int = 0,
    ci_convention: str = "survival",
) -> ScenarioResult:
    """Score stability under k random adjacent swaps of the severity order.

    Each trial draws ``k_swaps`` adjacent positions uniformly (repeats
    allowed), applies the swaps sequentially to the ordering, permutes the
    table's columns to match, and recomputes every category's scores. A
    single swap of ranks holding shares ``a`` and ``b`` moves a category's
    concentration score by exactly ``(a - b) / M``.
    """
    spec = ScenarioSpec(
        kind=ScenarioKind.PERMUTATION, k_swaps=k_swaps, trials=trials, base_seed=base_seed
    )
    if table.units != ordering.units:
        raise ValidationError("frequency table was built with a different severity ordering")
    if ordering.m < 2:
        raise ValidationError("permutation needs at least 2 severity units")

    baseline_aih, _ = _baseline_scores(table, ci_convention)
    score_maps: list[dict[str, float]] = [baseline_aih]
    aih_values: dict[str, list[float]] = {c: [] for c in table.active_categories}
    ci_values: dict[str, list[float]] = {c: [] for c in table.active_categories}

    base_rank = {unit: i for i, unit in enumerate(ordering.units)}
    for trial in range(trials):
        rng = np.random.default_rng(base_seed + trial)
        units = list(ordering.units)
        for _ in range(k_swaps):
            p = int(rng.integers(0, ordering.m - 1))
            units[p], units[p + 1] = units[p + 1], units[p]
        columns = np.asarray([base_rank[u] for u in units], dtype=np.intp)
        trial_scores: dict[str, float] = {}
        for category in table.active_categories:
            row = table.row(category)[columns]
            score = aih(row)
            trial_scores[category] = score
            aih_values[category].append(score)
            ci_values[category].append(criticality_index(row, ci_convention))
        score_maps.append(trial_scores)

    labels = ("baseline",) + tuple(f"scenario_{t + 1}" for t in range(trials))
    return ScenarioResult(
        spec=spec,
        stats=_aggregate(table.active_categories, aih_values, ci_values),
        correlation_labels=labels,
        rank_correlations=_correlation_matrix(score_maps),
    )


def _explode(
    records: Iterable[AnnotationRecord],
    ordering: SeverityOrdering,
    granularity: Granularity,
) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Unit-weight expansion of the records that map into the ordering.

    Returns (category labels, per-record category index, per-record unit
    column index); a record of weight w contributes w entries.
    """
    cat_of: list[str] = []
    unit_of: list[int] = []
    for record in records:
        if record.unit not in ordering:
            continue
        label = category_label(record, granularity)
        column = ordering.rank(record.unit) - 1
        cat_of.extend([label] * record.weight)
        unit_of.extend([column] * record.weight)
    if not cat_of:
        raise ValidationError("no records map into the severity ordering")
    categories = tuple(sorted(set(cat_of)))
    index = {c: i for i, c in enumerate(categories)}
    return (
        categories,
        np.asarray([index[c] for c in cat_of], dtype=np.intp),
        np.asarray(unit_of, dtype=np.intp),
    )


def removal_scenarios(
    records: Sequence[AnnotationRecord],
    fractions: Sequence[float],
    trials: int,
    base_seed: int = 0,
    ordering: SeverityOrdering | None = None,
    granularity: Granularity | str = Granularity.CATEGORY,
    ci_convention: str = "survival",
) -> list[ScenarioResult]:
    """Score stability under random annotation deletion, one result per fraction.

    Records are expanded to unit weight; trial t deletes
    ``floor(fraction * total)`` of them uniformly without replacement using
    seed ``base_seed + t``, rebuilds the table, and recomputes scores. A
    trial that empties a category excludes that category from its own
    aggregates (and from rank correlations involving that trial). Fraction 0
    reproduces the baseline exactly.
    """
    if ordering is None:
        raise ValidationError("removal scenarios need a severity ordering")
    granularity = Granularity(granularity)
    if trials < 1:
        raise ValidationError("removal scenarios need trials >= 1")
    for fraction in fractions:
        if not 0.0 <= fraction < 1.0:
            raise ValidationError(f"removal fraction {fraction!r} outside [0, 1)")

    categories, cat_idx, unit_idx = _explode(records, ordering, granularity)
    total = cat_idx.size
    m = ordering.m

    def scores_from_mask(keep: np.ndarray) -> dict[str, tuple[float, float]]:
        counts = np.zeros((len(categories), m), dtype=np.int64)
        np.add.at(counts, (cat_idx[keep], unit_idx[keep]), 1)
        out: dict[str, tuple[float, float]] = {}
        for i, category in enumerate(categories):
            row_total = counts[i].sum()
            if row_total == 0:
                continue
            row = counts[i] / row_total
            out[category] = (aih(row), criticality_index(row, ci_convention))
        return out

    baseline = scores_from_mask(np.ones(total, dtype=bool))
    results = []
    for fraction in fractions:
        delete = int(math.floor(fraction * total))
        score_maps: list[dict[str, float]] = [{c: v[0] for c, v in baseline.items()}]
        aih_values: dict[str, list[float]] = {c: [] for c in categories}
        ci_values: dict[str, list[float]] = {c: [] for c in categories}
        for trial in range(trials):
            if delete == 0:
                trial_scores = baseline
            else:
                rng = np.random.default_rng(base_seed + trial)
                doomed = rng.choice(total, size=delete, replace=False)
                keep = np.ones(total, dtype=bool)
                keep[doomed] = False
                trial_scores = scores_from_mask(keep)
            score_maps.append({c: v[0] for c, v in trial_scores.items()})
            for category, (aih_score, ci_score) in trial_scores.items():
                aih_values[category].append(aih_score)
                ci_values[category].append(ci_score)
        labels = ("baseline",) + tuple(f"trial_{t + 1}" for t in range(trials))
        results.append(
            ScenarioResult(
                spec=ScenarioSpec(
                    kind=ScenarioKind.REMOVAL,
                    removal_fraction=float(fraction),
                    trials=trials,
                    base_seed=base_seed,
                ),
                stats=_aggregate(categories, aih_values, ci_values),
                correlation_labels=labels,
                rank_correlations=_correlation_matrix(score_maps),
            )
        )
    return results


def run_scenario(
    spec: ScenarioSpec,
    table: FrequencyTable,
    ordering: SeverityOrdering,
    records: Sequence[AnnotationRecord] | None = None,
    granularity: Granularity | str = Granularity.CATEGORY,
    ci_convention: str = "survival",
) -> ScenarioResult:
    """Dispatch a ScenarioSpec to its implementation."""
    if spec.kind is ScenarioKind.BOUNDARY:
        return boundary_scenario(table, spec.base_seed, ci_convention)
    if spec.kind is ScenarioKind.PERMUTATION:
        return permutation_scenarios(
            table, ordering, spec.k_swaps, spec.trials, spec.base_seed, ci_convention
        )
    if records is None:
        raise ValidationError("removal scenarios need the raw annotation records")
    return removal_scenarios(
        records,
        [spec.removal_fraction],
        spec.trials,
        spec.base_seed,
        ordering,
        granularity,
        ci_convention,
    )[0]


@dataclass(frozen=True)
class Merge:
    """One agglomeration step: clusters ``left`` and ``right`` joined.

    Cluster ids follow the usual linkage convention: input rows are leaves
    0..N-1 in matrix order, and the cluster created by merge t (0-based)
    gets id N + t. ``members`` lists the category names inside the merged
    cluster, sorted.
    """

    left: int
    right: int
    distance: float
    size: int
    members: tuple[str, ...]


def ward_cluster(counts: np.ndarray, categories: Sequence[str]) -> list[Merge]:
    """Agglomerative clustering of count rows under Ward's criterion.

    Distances start as plain Euclidean between raw count vectors and grow by
    the minimum-variance update rule; reported linkage distances are
    therefore non-decreasing. Equal-distance candidates are broken
    deterministically by comparing the (sorted) member-name tuples of the
    two clusters, so the merge order never depends on dict or float
    vagaries.
    """
    matrix = np.asarray(counts, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValidationError("count matrix must be 2-D")
    n = matrix.shape[0]
    if n < 2:
        raise ValidationError("clustering needs at least 2 rows")
    if len(categories) != n:
        raise ValidationError("one category name per count row required")

    # Squared distances drive the update rule; sqrt only when reporting.
    size = 2 * n - 1
    d2 = np.full((size, size), np.inf, dtype=np.float64)
    diff = matrix[:, None, :] - matrix[None, :, :]
    d2[:n, :n] = (diff * diff).sum(axis=2)
    np.fill_diagonal(d2, np.inf)

    members: dict[int, tuple[str, ...]] = {i: (categories[i],) for i in range(n)}
    sizes: dict[int, int] = {i: 1 for i in range(n)}
    active: set[int] = set(range(n))
    merges: list[Merge] = []

    for step in range(n - 1):
        best: tuple[float, tuple[str, ...], tuple[str, ...], int, int] | None = None
        for i in sorted(active):
            for j in sorted(active):
                if j <= i:
                    continue
                key_i, key_j = sorted((members[i], members[j]))
                candidate = (d2[i, j], key_i, key_j, i, j)
                if best is None or candidate[:3] < best[:3]:
                    best = candidate
        assert best is not None
        _, _, _, i, j = best
        new = n + step
        new_size = sizes[i] + sizes[j]
        for k in active:
            if k in (i, j):
                continue
            d2[new, k] = d2[k, new] = (
                (sizes[i] + sizes[k]) * d2[i, k]
                + (sizes[j] + sizes[k]) * d2[j, k]
                - sizes[k] * d2[i, j]
            ) / (new_size + sizes[k])
        members[new] = tuple(sorted(members[i] + members[j]))
        sizes[new] = new_size
        merges.append(
            Merge(
                left=min(i, j),
                right=max(i, j),
                distance=math.sqrt(max(0.0, d2[i, j])),
                size=new_size,
                members=members[new],
            )
        )
        active.discard(i)
        active.discard(j)
        active.add(new)

    return merges
