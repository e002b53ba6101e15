"""Reconciliation of sample-based probabilistic forecasts over temporal
aggregation hierarchies: joint-sample assembly schemes, projection-matrix
reconciliation methods, cross-validated weight selection, and CRPS/MAE
evaluation."""

from .hierarchy import (
    HierarchySpec,
    NodeId,
    SummingMatrix,
    aggregate_to_level,
    build_hierarchy,
    build_summing_matrix,
    from_common_units,
    to_common_units,
)
from .sampling import (
    SCHEMES,
    JointSample,
    LevelSample,
    OriginData,
    assemble,
    permute,
    rank,
    stack,
)
from .reconcile import (
    FIXED_METHODS,
    CoherenceCheck,
    ReconciledSample,
    WeightMatrix,
    check_coherence,
    fixed_weights,
    reconcile,
    weights_from_levels,
    weights_from_nodes,
    wls_weights,
)
from .scoring import (
    ScoreTable,
    assemble_origins,
    crps_sample,
    cv_criterion,
    cv_objective,
    median_point,
    score_hierarchy,
)
from .cvopt import REGIMES, CvResult, NodeCvResult, optimize_node_weights, optimize_weights
from .simkit import (
    Dataset,
    LevelForecaster,
    SyntheticScenario,
    build_dataset,
    dataset_from_series,
    fit_level,
    sample_paths,
    simulate_truth,
)
from .cli import ReportRow, RunConfig, ingest_csv, load_config, run_experiment

__version__ = "0.1.0"

__all__ = [
    "HierarchySpec", "NodeId", "SummingMatrix", "build_hierarchy",
    "build_summing_matrix", "aggregate_to_level", "to_common_units",
    "from_common_units",
    "SCHEMES", "LevelSample", "JointSample", "OriginData", "stack", "rank",
    "permute", "assemble",
    "FIXED_METHODS", "WeightMatrix", "ReconciledSample", "CoherenceCheck",
    "fixed_weights", "wls_weights", "weights_from_levels", "weights_from_nodes",
    "reconcile", "check_coherence",
    "ScoreTable", "crps_sample", "median_point", "score_hierarchy",
    "assemble_origins", "cv_criterion", "cv_objective",
    "REGIMES", "CvResult", "NodeCvResult", "optimize_weights", "optimize_node_weights",
    "SyntheticScenario", "LevelForecaster", "Dataset", "simulate_truth",
    "fit_level", "sample_paths", "build_dataset", "dataset_from_series",
    "RunConfig", "ReportRow", "load_config", "ingest_csv", "run_experiment",
    "__version__",
]
