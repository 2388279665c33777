"""Ordinal concentration metrics over severity-ranked frequency rows.

Everything here operates on one row of a frequency table: a vector ``f`` of
length M with ``f[j]`` the share of a category's annotations falling on the
unit at severity rank ``j + 1`` (1 = least severe, M = most severe).

Two curve constructions are provided:

* The rank-share polyline pairs the cumulative frequency mass (x) with the
  cumulative share of ranks covered (y = k / M). Its area is the
  concentration score ``aih``: 0.5 means severity-indifferent spread, above
  0.5 means mass sits on the severe end, 1 is the theoretical ceiling as all
  mass approaches the most severe rank.
* The value-weighted curve (``classic_lorenz``) treats the rank (or any
  numeric severity score) as a magnitude and yields the familiar Gini
  coefficient via the same trapezoid integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from harmrank.errors import ComputationError, ValidationError
from harmrank.ingest import FrequencyTable

SUM_TOL = 1e-9


@dataclass(frozen=True)
class Polyline:
    """Piecewise-linear curve through ``(x[i], y[i])``, both non-decreasing."""

    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.x) != len(self.y):
            raise ValidationError("polyline coordinate lists differ in length")
        if len(self.x) < 2:
            raise ValidationError("polyline needs at least 2 points")
        for name, values in (("x", self.x), ("y", self.y)):
            if any(b < a for a, b in zip(values, values[1:])):
                raise ValidationError(f"polyline {name} must be non-decreasing")

    def area(self) -> float:
        """Exact area under the curve by the trapezoid rule."""
        return math.fsum(
            (x1 - x0) * (y0 + y1) / 2.0
            for x0, x1, y0, y1 in zip(self.x, self.x[1:], self.y, self.y[1:])
        )


def _check_freqs(freqs: Sequence[float]) -> np.ndarray:
    f = np.asarray(freqs, dtype=np.float64)
    if f.ndim != 1 or f.size < 2:
        raise ValidationError("frequency vector must be 1-D with at least 2 entries")
    if np.isnan(f).any():
        raise ComputationError("frequency vector contains NaN (degenerate category row)")
    if (f < 0).any():
        raise ValidationError("frequencies must be non-negative")
    total = float(f.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise ValidationError(f"frequencies must sum to 1 (got {total!r})")
    return f


def derivative_lorenz(freqs: Sequence[float]) -> Polyline:
    """Rank-share polyline of a frequency row.

    Point ``k`` (0..M) is ``(sum of the k least severe shares, k / M)``. The
    cumulative x is clipped into [0, 1] and the final point pinned to exactly
    (1, 1) so downstream integration is immune to last-ulp drift.
    """
    f = _check_freqs(freqs)
    m = f.size
    x = np.concatenate(([0.0], np.clip(np.cumsum(f), 0.0, 1.0)))
    x[-1] = 1.0
    y = np.arange(m + 1, dtype=np.float64) / m
    return Polyline(tuple(float(v) for v in x), tuple(float(v) for v in y))


def aih(freqs: Sequence[float]) -> float:
    """Area under the rank-share polyline, in [1/(2M), 1 - 1/(2M)].

    Equal to ``(E - 0.5) / M`` with E the frequency-weighted mean severity
    rank; the polyline integral is kept as the defining computation and the
    closed form is exercised by tests.
    """
    return derivative_lorenz(freqs).area()


def mean_rank(freqs: Sequence[float]) -> float:
    """Frequency-weighted mean of the 1-based severity ranks."""
    f = _check_freqs(freqs)
    return float(np.dot(f, np.arange(1, f.size + 1)))


def criticality_index(freqs: Sequence[float], convention: str = "survival") -> float:
    """Mean severity rank rescaled to [0, 1].

    ``survival`` (default) maps rank 1 -> 0 and rank M -> 1, so larger means
    more mass on severe units and the index moves with ``aih``. ``ascending``
    is the mirror image ``1 - survival`` for consumers that count shares of
    at-most-rank bands from the severe end down.
    """
    f = _check_freqs(freqs)
    m = f.size
    expected = float(np.dot(f, np.arange(1, m + 1)))
    survival = (expected - 1.0) / (m - 1)
    if convention == "survival":
        return survival
    if convention == "ascending":
        return 1.0 - survival
    raise ValidationError(f"unknown criticality convention {convention!r}")


def aih_from_ci(ci: float, m: int, convention: str = "survival") -> float:
    """Recover the polyline area from a criticality index at M units."""
    if m < 2:
        raise ValidationError("m must be >= 2")
    if convention == "ascending":
        ci = 1.0 - ci
    elif convention != "survival":
        raise ValidationError(f"unknown criticality convention {convention!r}")
    if not 0.0 <= ci <= 1.0:
        raise ValidationError(f"criticality index must be in [0, 1], got {ci!r}")
    return ci * (m - 1) / m + 1.0 / (2 * m)


def ci_from_aih(value: float, m: int, convention: str = "survival") -> float:
    """Inverse of :func:`aih_from_ci`."""
    if m < 2:
        raise ValidationError("m must be >= 2")
    lo, hi = 1.0 / (2 * m), 1.0 - 1.0 / (2 * m)
    if not lo - SUM_TOL <= value <= hi + SUM_TOL:
        raise ValidationError(f"aih {value!r} outside attainable range [{lo}, {hi}]")
    ci = (value - 1.0 / (2 * m)) * m / (m - 1)
    ci = min(1.0, max(0.0, ci))
    if convention == "ascending":
        return 1.0 - ci
    if convention != "survival":
        raise ValidationError(f"unknown criticality convention {convention!r}")
    return ci


def _check_scores(f: np.ndarray, scores: Sequence[float] | None) -> np.ndarray:
    if scores is None:
        return np.arange(1, f.size + 1, dtype=np.float64)
    s = np.asarray(scores, dtype=np.float64)
    if s.shape != f.shape:
        raise ValidationError("scores must match the frequency vector length")
    if np.isnan(s).any():
        raise ComputationError("severity scores contain NaN")
    return s


def classic_lorenz(
    freqs: Sequence[float],
    scores: Sequence[float] | None = None,
    *,
    allow_ties: bool = False,
) -> Polyline:
    """Population-share vs. value-share curve for a frequency row.

    ``scores`` assigns a numeric severity magnitude to each rank; by default
    the 1-based rank itself is used. Scores must be positive and strictly
    increasing so the curve is convex (on or below the diagonal). With
    ``allow_ties`` the requirement relaxes to non-negative and non-decreasing,
    which keeps convexity and is what the Gini computation needs.
    """
    f = _check_freqs(freqs)
    s = _check_scores(f, scores)
    diffs = np.diff(s)
    if allow_ties:
        if (s < 0).any():
            raise ValidationError("severity scores must be non-negative")
        if (diffs < 0).any():
            raise ValidationError("severity scores must be non-decreasing")
    else:
        if (s <= 0).any():
            raise ValidationError("severity scores must be positive")
        if (diffs <= 0).any():
            raise ValidationError("severity scores must be strictly increasing")
    mass = f * s
    total = float(mass.sum())
    if total <= 0.0:
        raise ComputationError("value-weighted curve undefined: total severity mass is 0")
    x = np.concatenate(([0.0], np.clip(np.cumsum(f), 0.0, 1.0)))
    y = np.concatenate(([0.0], np.clip(np.cumsum(mass) / total, 0.0, 1.0)))
    x[-1] = 1.0
    y[-1] = 1.0
    return Polyline(tuple(float(v) for v in x), tuple(float(v) for v in y))


def numeric_gini(freqs: Sequence[float], scores: Sequence[float] | None = None) -> float:
    """Gini coefficient of severity mass: ``1 - 2 * area`` under the curve.

    Unlike :func:`classic_lorenz`, severities may arrive in any order and may
    repeat: units are sorted by score ascending before the curve is built, so
    the result matches the pairwise mean-absolute-difference Gini.
    """
    f = _check_freqs(freqs)
    s = _check_scores(f, scores)
    order = np.argsort(s, kind="stable")
    return 1.0 - 2.0 * classic_lorenz(f[order], s[order], allow_ties=True).area()


@dataclass(frozen=True)
class CategoryMetrics:
    """All per-category scores, plus the rank assigned across the table."""

    category: str
    aih: float
    ci: float
    gini: float
    mean_rank: float
    m: int
    rank: int = 0

    def as_dict(self) -> dict[str, float | int | str]:
        return {
            "category": self.category,
            "aih": self.aih,
            "ci": self.ci,
            "gini": self.gini,
            "mean_rank": self.mean_rank,
            "m": self.m,
            "rank": self.rank,
        }


def category_metrics(
    category: str, freqs: Sequence[float], ci_convention: str = "survival"
) -> CategoryMetrics:
    f = _check_freqs(freqs)
    return CategoryMetrics(
        category=category,
        aih=aih(f),
        ci=criticality_index(f, ci_convention),
        gini=numeric_gini(f),
        mean_rank=mean_rank(f),
        m=f.size,
    )


def rank_categories(metrics: Iterable[CategoryMetrics]) -> list[CategoryMetrics]:
    """Sort by descending concentration; rank 1 is the most concentrated.

    Exact ``aih`` ties share their order deterministically by category name,
    each still receiving a distinct consecutive rank.
    """
    ordered = sorted(metrics, key=lambda cm: (-cm.aih, cm.category))
    return [
        CategoryMetrics(
            category=cm.category,
            aih=cm.aih,
            ci=cm.ci,
            gini=cm.gini,
            mean_rank=cm.mean_rank,
            m=cm.m,
            rank=position,
        )
        for position, cm in enumerate(ordered, start=1)
    ]


def compute_table_metrics(
    table: FrequencyTable, ci_convention: str = "survival"
) -> list[CategoryMetrics]:
    """Ranked metrics for every non-degenerate category of a table."""
    per_category = [
        category_metrics(category, table.row(category), ci_convention)
        for category in table.active_categories
    ]
    if not per_category:
        raise ComputationError("frequency table has no category with annotations")
    return rank_categories(per_category)


def assert_close(actual: float, expected: float, tol: float, what: str = "value") -> None:
    """Raise ComputationError when two floats differ beyond ``tol``."""
    if math.isnan(actual) or math.isnan(expected) or abs(actual - expected) > tol:
        raise ComputationError(f"{what}: {actual!r} differs from {expected!r} by more than {tol}")
