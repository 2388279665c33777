"""harmrank: concentration metrics and rank-stability analysis for AI-incident harm annotations."""

from harmrank.errors import (
    ComputationError,
    EmptyInputError,
    HarmRankError,
    SchemaError,
    ValidationError,
)
from harmrank.ingest import (
    AnnotationRecord,
    FrequencyTable,
    Granularity,
    Kind,
    Schema,
    SeverityOrdering,
    build_frequency_table,
    default_severity_ordering,
    parse_annotations,
    read_severity_ordering,
)
from harmrank.metrics import (
    CategoryMetrics,
    Polyline,
    aih,
    aih_from_ci,
    ci_from_aih,
    classic_lorenz,
    compute_table_metrics,
    criticality_index,
    derivative_lorenz,
    numeric_gini,
    rank_categories,
)
from harmrank.sensitivity import (
    CategoryStats,
    Merge,
    ScenarioKind,
    ScenarioResult,
    ScenarioSpec,
    boundary_aih,
    boundary_scenario,
    permutation_scenarios,
    removal_scenarios,
    run_scenario,
    spearman_rho,
    ward_cluster,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationRecord",
    "CategoryMetrics",
    "CategoryStats",
    "ComputationError",
    "EmptyInputError",
    "FrequencyTable",
    "Granularity",
    "HarmRankError",
    "Kind",
    "Merge",
    "Polyline",
    "Schema",
    "SchemaError",
    "ScenarioKind",
    "ScenarioResult",
    "ScenarioSpec",
    "SeverityOrdering",
    "ValidationError",
    "aih",
    "aih_from_ci",
    "boundary_aih",
    "boundary_scenario",
    "build_frequency_table",
    "ci_from_aih",
    "classic_lorenz",
    "compute_table_metrics",
    "criticality_index",
    "default_severity_ordering",
    "derivative_lorenz",
    "numeric_gini",
    "parse_annotations",
    "permutation_scenarios",
    "rank_categories",
    "read_severity_ordering",
    "removal_scenarios",
    "run_scenario",
    "spearman_rho",
    "ward_cluster",
    "__version__",
]
