import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmrank.errors import ComputationError, ValidationError
from harmrank.metrics import (
    CategoryMetrics,
    Polyline,
    aih,
    aih_from_ci,
    category_metrics,
    ci_from_aih,
    classic_lorenz,
    compute_table_metrics,
    criticality_index,
    derivative_lorenz,
    mean_rank,
    numeric_gini,
    rank_categories,
)
from harmrank.ingest import FrequencyTable

from conftest import random_freq_vector


def closed_form_aih(f) -> float:
    """Independent oracle: (sum f_j * j - 1/2) / M with 1-based ranks."""
    f = np.asarray(f, dtype=float)
    ranks = np.arange(1, f.size + 1)
    return (float(f @ ranks) - 0.5) / f.size


def pairwise_gini(f, s) -> float:
    """Independent oracle: mean absolute difference over twice the mean."""
    f = np.asarray(f, dtype=float)
    s = np.asarray(s, dtype=float)
    mu = float(f @ s)
    total = 0.0
    for i in range(f.size):
        for j in range(f.size):
            total += f[i] * f[j] * abs(s[i] - s[j])
    return total / (2.0 * mu)


freq_vectors = st.integers(2, 12).flatmap(
    lambda m: st.lists(
        st.floats(0.0, 1.0, allow_nan=False, exclude_min=False), min_size=m, max_size=m
    ).filter(lambda xs: sum(xs) > 1e-6)
).map(lambda xs: np.asarray(xs) / np.asarray(xs).sum())


class TestPolyline:
    def test_area_of_diagonal(self):
        assert Polyline((0.0, 1.0), (0.0, 1.0)).area() == 0.5

    def test_area_trapezoid(self):
        p = Polyline((0.0, 0.5, 1.0), (0.0, 0.25, 1.0))
        assert p.area() == pytest.approx(0.375)

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValidationError):
            Polyline((0.0, 1.0), (0.0, 0.5, 1.0))

    def test_rejects_single_point(self):
        with pytest.raises(ValidationError):
            Polyline((0.0,), (0.0,))

    def test_rejects_decreasing_coordinates(self):
        with pytest.raises(ValidationError):
            Polyline((0.0, 0.6, 0.5), (0.0, 0.5, 1.0))
        with pytest.raises(ValidationError):
            Polyline((0.0, 0.5, 1.0), (0.0, 0.8, 0.7))


class TestDerivativeCurve:
    def test_three_rank_example(self):
        curve = derivative_lorenz([0.2, 0.3, 0.5])
        assert curve.x == pytest.approx((0.0, 0.2, 0.5, 1.0))
        assert curve.y == pytest.approx((0.0, 1 / 3, 2 / 3, 1.0))

    def test_endpoints_pinned(self):
        curve = derivative_lorenz([0.1, 0.2, 0.3, 0.4])
        assert curve.x[0] == 0.0 and curve.x[-1] == 1.0
        assert curve.y[0] == 0.0 and curve.y[-1] == 1.0

    def test_all_mass_on_top_hugs_left_axis(self):
        curve = derivative_lorenz([0.0, 0.0, 1.0])
        assert curve.x == (0.0, 0.0, 0.0, 1.0)

    def test_rejects_negative(self):
        with pytest.raises(ValidationError):
            derivative_lorenz([-0.1, 0.6, 0.5])

    def test_rejects_bad_sum(self):
        with pytest.raises(ValidationError):
            derivative_lorenz([0.2, 0.2, 0.2])

    def test_rejects_nan(self):
        with pytest.raises(ComputationError):
            derivative_lorenz([math.nan, 0.5, 0.5])

    def test_rejects_short_vector(self):
        with pytest.raises(ValidationError):
            derivative_lorenz([1.0])


class TestAih:
    def test_example(self):
        assert aih([0.2, 0.3, 0.5]) == pytest.approx(0.6, abs=1e-12)

    def test_uniform_is_half(self):
        for m in range(2, 13):
            assert aih(np.ones(m) / m) == pytest.approx(0.5, abs=1e-15)

    def test_one_hot_extremes(self):
        for m in range(2, 13):
            bottom = np.zeros(m)
            bottom[0] = 1.0
            top = np.zeros(m)
            top[-1] = 1.0
            assert aih(bottom) == pytest.approx(1 / (2 * m), abs=1e-15)
            assert aih(top) == pytest.approx((2 * m - 1) / (2 * m), abs=1e-15)

    def test_matches_closed_form(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            m = int(rng.integers(2, 13))
            f = random_freq_vector(rng, m)
            assert abs(aih(f) - closed_form_aih(f)) < 1e-12

    @given(freq_vectors)
    @settings(max_examples=150, deadline=None)
    def test_bounded_by_one_hot_extremes(self, f):
        m = f.size
        value = aih(f)
        assert 1 / (2 * m) - 1e-12 <= value <= 1 - 1 / (2 * m) + 1e-12

    @given(freq_vectors)
    @settings(max_examples=150, deadline=None)
    def test_reversal_symmetry(self, f):
        assert aih(f) + aih(f[::-1]) == pytest.approx(1.0, abs=1e-12)


class TestCriticalityIndex:
    def test_example(self):
        assert criticality_index([0.2, 0.3, 0.5]) == pytest.approx(0.65, abs=1e-12)

    def test_ascending_is_mirror(self):
        f = [0.1, 0.2, 0.3, 0.4]
        survival = criticality_index(f, "survival")
        assert criticality_index(f, "ascending") == pytest.approx(1.0 - survival, abs=1e-15)

    def test_extremes(self):
        assert criticality_index([1.0, 0.0, 0.0]) == 0.0
        assert criticality_index([0.0, 0.0, 1.0]) == 1.0

    def test_rejects_unknown_convention(self):
        with pytest.raises(ValidationError):
            criticality_index([0.5, 0.5], "upside-down")

    @given(freq_vectors)
    @settings(max_examples=150, deadline=None)
    def test_linear_relation_to_aih(self, f):
        m = f.size
        lhs = aih(f)
        rhs = criticality_index(f) * (m - 1) / m + 1 / (2 * m)
        assert abs(lhs - rhs) < 1e-12


class TestConversions:
    def test_reported_top_pair(self):
        assert aih_from_ci(0.89, 9) == pytest.approx(0.8467, abs=5e-5)

    def test_round_trip(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            m = int(rng.integers(2, 13))
            ci = float(rng.uniform())
            assert ci_from_aih(aih_from_ci(ci, m), m) == pytest.approx(ci, abs=1e-12)

    def test_ascending_round_trip(self):
        value = aih_from_ci(0.25, 6, "ascending")
        assert ci_from_aih(value, 6, "ascending") == pytest.approx(0.25, abs=1e-12)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            aih_from_ci(1.2, 9)
        with pytest.raises(ValidationError):
            ci_from_aih(0.01, 9)  # below the attainable floor 1/18
        with pytest.raises(ValidationError):
            aih_from_ci(0.5, 1)


class TestClassicCurveAndGini:
    def test_worked_example(self):
        curve = classic_lorenz([0.5, 0.5], [1.0, 3.0])
        assert curve.area() == pytest.approx(0.375, abs=1e-12)
        assert numeric_gini([0.5, 0.5], [1.0, 3.0]) == pytest.approx(0.25, abs=1e-12)

    def test_default_scores_are_ranks(self):
        f = [0.25, 0.25, 0.5]
        assert numeric_gini(f) == pytest.approx(numeric_gini(f, [1, 2, 3]), abs=1e-15)

    def test_equal_scores_give_zero(self):
        assert numeric_gini([0.2, 0.3, 0.5], [4.0, 4.0, 4.0]) == pytest.approx(0.0, abs=1e-12)

    def test_curve_below_diagonal_for_increasing_scores(self):
        curve = classic_lorenz([0.4, 0.3, 0.3])
        assert all(y <= x + 1e-12 for x, y in zip(curve.x, curve.y))

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            m = int(rng.integers(2, 10))
            f = random_freq_vector(rng, m)
            s = rng.uniform(0.1, 10.0, size=m)
            assert abs(numeric_gini(f, s) - pairwise_gini(f, s)) < 1e-9

    def test_strict_mode_rejects_ties_and_nonpositive(self):
        with pytest.raises(ValidationError):
            classic_lorenz([0.5, 0.5], [2.0, 2.0])
        with pytest.raises(ValidationError):
            classic_lorenz([0.5, 0.5], [3.0, 1.0])
        with pytest.raises(ValidationError):
            classic_lorenz([0.5, 0.5], [0.0, 5.0])

    def test_relaxed_mode_accepts_ties(self):
        curve = classic_lorenz([0.5, 0.5], [2.0, 2.0], allow_ties=True)
        assert curve.y == pytest.approx(curve.x)

    def test_gini_zero_total_mass_is_a_computation_error(self):
        with pytest.raises(ComputationError):
            numeric_gini([1.0, 0.0], [0.0, 5.0])

    def test_gini_rejects_negative_scores(self):
        with pytest.raises(ValidationError):
            numeric_gini([0.5, 0.5], [-1.0, 2.0])

    def test_rejects_score_length_mismatch(self):
        with pytest.raises(ValidationError):
            classic_lorenz([0.5, 0.5], [1.0, 2.0, 3.0])

    def test_near_zero_severity_concentration(self):
        f = np.array([0.9, 0.1])
        s = np.array([0.0001, 1.0])
        assert abs(numeric_gini(f, s) - pairwise_gini(f, s)) < 1e-9


class TestRanking:
    def test_ranks_descend_by_score(self):
        rows = [
            category_metrics("low", [0.6, 0.3, 0.1]),
            category_metrics("high", [0.1, 0.3, 0.6]),
            category_metrics("mid", [1 / 3, 1 / 3, 1 / 3]),
        ]
        ranked = rank_categories(rows)
        assert [cm.category for cm in ranked] == ["high", "mid", "low"]
        assert [cm.rank for cm in ranked] == [1, 2, 3]

    def test_exact_ties_break_by_name(self):
        rows = [
            category_metrics("zebra", [0.2, 0.8]),
            category_metrics("aardvark", [0.2, 0.8]),
        ]
        ranked = rank_categories(rows)
        assert [cm.category for cm in ranked] == ["aardvark", "zebra"]
        assert [cm.rank for cm in ranked] == [1, 2]

    def test_table_metrics_skip_degenerate_rows(self):
        table = FrequencyTable(
            categories=("alive", "empty"),
            units=("u1", "u2"),
            counts=np.array([[1, 3], [0, 0]]),
            freqs=np.array([[0.25, 0.75], [math.nan, math.nan]]),
            degenerate=("empty",),
        )
        metrics = compute_table_metrics(table)
        assert [cm.category for cm in metrics] == ["alive"]

    def test_all_degenerate_is_an_error(self):
        table = FrequencyTable(
            categories=("empty",),
            units=("u1", "u2"),
            counts=np.array([[0, 0]]),
            freqs=np.array([[math.nan, math.nan]]),
            degenerate=("empty",),
        )
        with pytest.raises(ComputationError):
            compute_table_metrics(table)

    def test_category_metrics_fields(self):
        cm = category_metrics("x", [0.2, 0.3, 0.5])
        assert cm.m == 3
        assert cm.mean_rank == pytest.approx(mean_rank([0.2, 0.3, 0.5]))
        assert cm.as_dict()["category"] == "x"

    def test_benchmark_ranks_are_consecutive(self, benchmark_metrics):
        assert [cm.rank for cm in benchmark_metrics] == list(
            range(1, len(benchmark_metrics) + 1)
        )
        scores = [cm.aih for cm in benchmark_metrics]
        assert scores == sorted(scores, reverse=True)
