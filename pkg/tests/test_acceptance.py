"""Acceptance suite: one test (one pass/fail line under ``pytest -v``) per
shipped guarantee. Each test states its tolerance and, where promised, its
runtime budget. These are the checks a release must clear; the rest of the
test tree covers module-level behavior.
"""

import itertools
import time

import numpy as np
import pytest

from harmrank.ingest import (
    Schema,
    benchmark_annotations_path,
    build_frequency_table,
    parse_annotations,
    read_severity_ordering,
)
from harmrank.metrics import (
    aih,
    aih_from_ci,
    compute_table_metrics,
    criticality_index,
    numeric_gini,
)
from harmrank.pipeline import RunConfig, run_pipeline, write_result
from harmrank.sensitivity import boundary_aih, permutation_scenarios, removal_scenarios

# Reference two-decimal (aih, ci) pairs on a nine-rank severity scale. The
# affine identity aih = ci*(M-1)/M + 1/(2M) must reproduce each aih from its
# ci within the slack of two-decimal rounding.
REFERENCE_AIH_CI_PAIRS = {
    "Autonomy": (0.53, 0.54),
    "Emotional & psychological": (0.70, 0.72),
    "Financial & business": (0.51, 0.51),
    "Human rights & civil liberties": (0.67, 0.70),
    "Physical": (0.73, 0.76),
    "Political & economic": (0.85, 0.89),
    "Psychological": (0.73, 0.75),
    "Reputational": (0.67, 0.69),
    "Societal & cultural": (0.70, 0.73),
}

# Reference two-decimal (best, worst) aih bounds for the same nine
# categories. Rearrangement symmetry makes each pair sum to 1, up to the
# rounding already present in the reference values.
REFERENCE_BOUNDARY_PAIRS = {
    "Autonomy": (0.19, 0.80),
    "Physical": (0.13, 0.86),
    "Psychological": (0.19, 0.80),
    "Reputational": (0.23, 0.76),
    "Financial & business": (0.35, 0.67),
    "Human rights & civil liberties": (0.21, 0.78),
    "Societal & cultural": (0.24, 0.76),
    "Political & economic": (0.13, 0.86),
    "Emotional & psychological": (0.18, 0.81),
}

BENCHMARK_TOP = "Political & economic"
BENCHMARK_BOTTOM = "Financial & business"


def test_01_aih_ci_linear_identity():
    """|aih - (ci*(M-1)/M + 1/(2M))| < 1e-12 on 1,000 vectors per M in 2..12, under 1s."""
    rng = np.random.default_rng(0)
    cases = []
    for m in range(2, 13):
        cases.extend(rng.dirichlet(np.ones(m), size=1000))
    start = time.perf_counter()
    worst = 0.0
    for f in cases:
        m = f.size
        deviation = abs(aih(f) - aih_from_ci(criticality_index(f), m))
        if deviation > worst:
            worst = deviation
    elapsed = time.perf_counter() - start
    assert worst < 1e-12, f"worst deviation {worst:.3e}"
    assert elapsed < 1.0, f"took {elapsed:.2f}s for {len(cases)} vectors"


def test_02_reference_aih_recovered_from_ci():
    """aih_from_ci(ci, M=9) lands within +/-0.01 of each reference aih."""
    for category, (ref_aih, ref_ci) in REFERENCE_AIH_CI_PAIRS.items():
        recovered = aih_from_ci(ref_ci, 9)
        assert abs(recovered - ref_aih) <= 0.01 + 1e-12, (
            f"{category}: aih_from_ci({ref_ci}, 9) = {recovered:.4f}, "
            f"reference {ref_aih}"
        )


def test_03_extremes_and_boundary_symmetry():
    """Uniform -> 0.5; one-hot -> 1/(2M) and (2M-1)/(2M); best+worst = 1."""
    for m in range(2, 13):
        # "exact" up to one float ulp: the trapezoid sum rounds once per
        # segment, so equality holds to well under 1e-15 at every M
        assert abs(aih(np.full(m, 1.0 / m)) - 0.5) <= 1e-15
        bottom = np.zeros(m)
        bottom[0] = 1.0
        top = np.zeros(m)
        top[-1] = 1.0
        assert abs(aih(bottom) - 1.0 / (2 * m)) <= 1e-15
        assert abs(aih(top) - (2 * m - 1) / (2 * m)) <= 1e-15

    rng = np.random.default_rng(3)
    for _ in range(500):
        f = rng.dirichlet(np.ones(int(rng.integers(2, 13))))
        best, worst = boundary_aih(f)
        assert abs(best + worst - 1.0) < 1e-12

    for category, (best, worst) in REFERENCE_BOUNDARY_PAIRS.items():
        assert abs(best + worst - 1.0) <= 0.02 + 1e-12, (
            f"{category}: reference bounds {best}+{worst} stray from 1"
        )


def test_04_exhaustive_oracle_equivalence():
    """Boundary equals brute-force min/max over all M! orders; trapezoid aih
    equals the closed form (sum f_j*j - 1/2)/M within 1e-12; M <= 6, 200
    vectors each, under 30s."""
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    for m in range(2, 7):
        perm_idx = np.array(list(itertools.permutations(range(m))))
        ranks = np.arange(1, m + 1, dtype=np.float64)
        for _ in range(200):
            f = rng.dirichlet(np.ones(m))
            exhaustive = (f[perm_idx] @ ranks - 0.5) / m
            best, worst = boundary_aih(f)
            assert abs(best - exhaustive.min()) < 1e-12
            assert abs(worst - exhaustive.max()) < 1e-12
            assert abs(aih(f) - (float(f @ ranks) - 0.5) / m) < 1e-12
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"took {elapsed:.2f}s"


def test_05_adjacent_swap_delta_law():
    """Swapping ranks (r, r+1) moves each category's aih by (f_r - f_{r+1})/M:
    that magnitude, that sign."""
    rng = np.random.default_rng(5)
    for _ in range(100):
        m = int(rng.integers(2, 13))
        n_categories = int(rng.integers(1, 8))
        counts = rng.integers(0, 40, size=(n_categories, m))
        counts[:, rng.integers(0, m)] += 1  # no all-zero rows
        freqs = counts / counts.sum(axis=1, keepdims=True)
        r = int(rng.integers(0, m - 1))
        for row in freqs:
            swapped = row.copy()
            swapped[[r, r + 1]] = swapped[[r + 1, r]]
            delta = aih(swapped) - aih(row)
            expected = (row[r] - row[r + 1]) / m
            assert abs(delta - expected) < 1e-12
            if row[r] > row[r + 1]:
                assert delta > 0
            elif row[r] < row[r + 1]:
                assert delta < 0


def test_06_rank_only_invariance(tmp_path):
    """Severity labels never enter the math: rank files valued 1..9 and
    10..90 yield bit-identical metrics and rendered documents."""
    units = read_severity_ordering(
        (benchmark_annotations_path().parent / "severity_order_default.txt")
    ).units
    file_a = tmp_path / "labels_1_to_9.txt"
    file_b = tmp_path / "labels_10_to_90.txt"
    file_a.write_text(
        "".join(f"{u} = {i + 1}\n" for i, u in enumerate(units)), encoding="utf-8"
    )
    file_b.write_text(
        "".join(f"{u} = {(i + 1) * 10}\n" for i, u in enumerate(units)), encoding="utf-8"
    )

    outputs = {}
    for name, path in (("a", file_a), ("b", file_b)):
        config = RunConfig(
            input_path=benchmark_annotations_path(),
            schema=Schema.AGGREGATED_TRIPLETS,
            out_dir=tmp_path / name,
            severity_order_path=path,
            seed=0,
        )
        result = run_pipeline(config)
        outputs[name] = result

    metrics_a = {m.category: m for m in outputs["a"].metrics}
    metrics_b = {m.category: m for m in outputs["b"].metrics}
    assert set(metrics_a) == set(metrics_b)
    for category, cm_a in metrics_a.items():
        cm_b = metrics_b[category]
        # bit-identical floats, not merely close
        assert (cm_a.aih, cm_a.ci, cm_a.gini, cm_a.rank) == (
            cm_b.aih,
            cm_b.ci,
            cm_b.gini,
            cm_b.rank,
        )

    docs_a = outputs["a"].documents
    docs_b = outputs["b"].documents
    skip = {"manifest.json"}  # records the ordering file's own path/digest
    assert set(docs_a) == set(docs_b)
    for doc_name in sorted(set(docs_a) - skip):
        assert docs_a[doc_name] == docs_b[doc_name], f"{doc_name} differs"


def test_07_seeded_sensitivity_stability():
    """On the shipped benchmark fixture, seed 0: rho matrices symmetric with
    unit diagonal; 20 scenarios at k in {1,2,5} all keep rho >= 0.9 against
    baseline; zero removal reproduces baseline bit-identically; top and
    bottom categories survive every one of 100 trials at 10% and 20%
    removal. Under 60s."""
    start = time.perf_counter()
    parse = parse_annotations(benchmark_annotations_path(), Schema.AGGREGATED_TRIPLETS)
    ordering = read_severity_ordering(
        benchmark_annotations_path().parent / "severity_order_default.txt"
    )
    table = build_frequency_table(parse.records, ordering)
    baseline = {c: aih(table.row(c)) for c in table.active_categories}

    for k in (1, 2, 5):
        result = permutation_scenarios(table, ordering, k_swaps=k, trials=20, base_seed=0)
        rho = result.rank_correlations
        assert np.array_equal(rho, rho.T), f"k={k}: matrix not symmetric"
        assert np.all(np.diag(rho) == 1.0), f"k={k}: diagonal not 1"
        baseline_row = rho[0, 1:]
        assert baseline_row.min() >= 0.9, (
            f"k={k}: min rho vs baseline {baseline_row.min():.4f}"
        )

    zero = removal_scenarios(parse.records, [0.0], trials=5, base_seed=0, ordering=ordering)[0]
    for category, value in baseline.items():
        stats = zero.per_category[category]
        assert stats.mean_aih == value  # bit-identical
        assert stats.stddev == 0.0

    for fraction in (0.1, 0.2):
        for trial in range(100):
            # per-trial seeds are base_seed + trial index, so single-trial
            # runs replay exactly the trials of one 100-trial run
            result = removal_scenarios(
                parse.records, [fraction], trials=1, base_seed=trial, ordering=ordering
            )[0]
            values = {
                s.category: s.mean_aih for s in result.stats if s.n_trials > 0
            }
            ranked = sorted(values, key=values.get)
            assert ranked[-1] == BENCHMARK_TOP, (
                f"fraction {fraction}, trial {trial}: top became {ranked[-1]}"
            )
            assert ranked[0] == BENCHMARK_BOTTOM, (
                f"fraction {fraction}, trial {trial}: bottom became {ranked[0]}"
            )
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"took {elapsed:.2f}s"


def test_08_numeric_gini_oracle():
    """Equal severities -> 0; ((0.5,0.5),(1,3)) -> 0.25 within 1e-12; 500
    random instances match the pairwise mean-difference oracle within 1e-9."""
    assert abs(numeric_gini([0.2, 0.3, 0.5], [7.0, 7.0, 7.0])) <= 1e-12
    assert abs(numeric_gini([0.5, 0.5], [1.0, 3.0]) - 0.25) <= 1e-12

    rng = np.random.default_rng(8)
    for _ in range(500):
        m = int(rng.integers(2, 13))
        f = rng.dirichlet(np.ones(m))
        s = rng.uniform(0.001, 10.0, size=m)
        if rng.random() < 0.3:  # exercise ties
            s[rng.integers(0, m)] = s[rng.integers(0, m)]
        mu = float(f @ s)
        oracle = float(np.abs(s[:, None] - s[None, :]) @ f @ f) / (2.0 * mu)
        assert abs(numeric_gini(f, s) - oracle) < 1e-9


def test_09_byte_identical_report_tree(tmp_path):
    """The same RunConfig and seed write the same bytes twice, plots included."""
    trees = []
    for name in ("first", "second"):
        config = RunConfig(
            input_path=benchmark_annotations_path(),
            schema=Schema.AGGREGATED_TRIPLETS,
            out_dir=tmp_path / name,
            seed=42,
            permutation_swaps=(1, 2),
            permutation_trials=5,
            removal_fractions=(0.1, 0.5),
            removal_trials=20,
        )
        write_result(run_pipeline(config))
        trees.append(
            {p.name: p.read_bytes() for p in sorted((tmp_path / name).iterdir())}
        )
    first, second = trees
    assert set(first) == set(second)
    assert any(n.endswith(".svg") for n in first)  # plots are part of the claim
    for doc_name in sorted(first):
        assert first[doc_name] == second[doc_name], f"{doc_name} differs between runs"
