"""Alignment of noisy, subsampled random intersection graphs.

The package samples a hidden binary-feature graph, produces two independent
noisy observations of it related by an unknown vertex permutation, recovers
the permutation either by denoising features with a one-layer threshold GNN
and solving an assignment problem, or by matching the raw features directly,
and evaluates the closed-form recovery bounds governing when each route
works.
"""

from .params import (
    ModelParams,
    NoiseParams,
    ParameterError,
    binomial_tail,
    density_from_sparsity,
    edge_probability,
    expected_degree,
    pair_collision_probability,
    sparsity_from_density,
)
from .generate import (
    CorrelatedInstance,
    DegreeStats,
    FeatureMatrix,
    Graph,
    ObservedGraph,
    degree_stats,
    perturb,
    sample_correlated_pair,
    sample_rig,
)
from .denoise import denoise, message_pass, threshold
from .matching import (
    AlignmentResult,
    FeatureError,
    align_features,
    align_linear,
    alignment_error,
    count_swap_events,
    feature_error,
    invert_permutation,
    lap_solve,
)
from .bounds import (
    BoundReport,
    RecoveryReport,
    ValidationReport,
    degree_event_check,
    feat_failure_bound,
    gaussian_inner_tail_check,
    lazy_walk_tail_check,
    match_failure_bound,
    recovery_condition,
    uniqueness_check,
)
from .harness import (
    SweepSpec,
    TrialRecord,
    TrialSpec,
    emit_plot_data,
    phase_diagram,
    run_sweep,
    run_trial,
    write_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "NoiseParams",
    "ParameterError",
    "binomial_tail",
    "density_from_sparsity",
    "edge_probability",
    "expected_degree",
    "pair_collision_probability",
    "sparsity_from_density",
    "CorrelatedInstance",
    "DegreeStats",
    "FeatureMatrix",
    "Graph",
    "ObservedGraph",
    "degree_stats",
    "perturb",
    "sample_correlated_pair",
    "sample_rig",
    "denoise",
    "message_pass",
    "threshold",
    "AlignmentResult",
    "FeatureError",
    "align_features",
    "align_linear",
    "alignment_error",
    "count_swap_events",
    "feature_error",
    "invert_permutation",
    "lap_solve",
    "BoundReport",
    "RecoveryReport",
    "ValidationReport",
    "degree_event_check",
    "feat_failure_bound",
    "gaussian_inner_tail_check",
    "lazy_walk_tail_check",
    "match_failure_bound",
    "recovery_condition",
    "uniqueness_check",
    "SweepSpec",
    "TrialRecord",
    "TrialSpec",
    "emit_plot_data",
    "phase_diagram",
    "run_sweep",
    "run_trial",
    "write_csv",
]
