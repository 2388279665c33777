import numpy as np
import pytest

from harmrank.ingest import (
    Schema,
    benchmark_annotations_path,
    build_frequency_table,
    default_severity_ordering,
    parse_annotations,
)
from harmrank.metrics import compute_table_metrics


@pytest.fixture(scope="session")
def benchmark_parse():
    return parse_annotations(benchmark_annotations_path(), Schema.AGGREGATED_TRIPLETS)


@pytest.fixture(scope="session")
def ordering():
    return default_severity_ordering()


@pytest.fixture(scope="session")
def benchmark_table(benchmark_parse, ordering):
    return build_frequency_table(benchmark_parse.records, ordering)


@pytest.fixture(scope="session")
def benchmark_metrics(benchmark_table):
    return compute_table_metrics(benchmark_table)


def random_freq_vector(rng: np.random.Generator, m: int) -> np.ndarray:
    """A strictly valid frequency vector (non-negative, sums to 1)."""
    f = rng.dirichlet(np.ones(m))
    return f / f.sum()
