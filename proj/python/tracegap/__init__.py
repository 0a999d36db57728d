from ._tracegap import (
    AlignmentResult,
    GapSpec,
    ImputationResult,
    InfeasibleAlignment,
    MetricSeries,
    cost_matrix,
    dtw_distance,
    haversine,
    impute_dtwbmi,
    impute_mean,
    score_candidates,
)

__all__ = [
    "AlignmentResult",
    "GapSpec",
    "ImputationResult",
    "InfeasibleAlignment",
    "MetricSeries",
    "cost_matrix",
    "dtw_distance",
    "haversine",
    "impute_dtwbmi",
    "impute_mean",
    "score_candidates",
]
