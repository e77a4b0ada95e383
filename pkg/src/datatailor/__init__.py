"""Coreset selection for instruction-tuning data.

Scores every sample by informativeness (singular value entropy of its
token-feature matrix), uniqueness (informativeness-weighted distance to
intra-cluster neighbors) and representativeness (exponential-cosine
affinity between cluster centroids), combines them with round-adaptive
weights, and selects a k-fraction subset with per-task budgets driven by
spectral task difficulty.
"""

from .clustering import (
    ClusterSet,
    Dendrogram,
    Merge,
    cluster_task,
    cut_dendrogram,
    pairwise_distances,
    pairwise_sq_distances,
    ward_dendrogram,
)
from .dataset import (
    Dataset,
    Sample,
    ValidationReport,
    from_arrays,
    last_token_feature,
    load_container,
    validate,
    write_container,
)
from .errors import (
    BadMagicError,
    ConfigError,
    ContainerError,
    DataQualityError,
    DataTailorError,
    DimensionMismatchError,
    InvalidDatasetError,
    TruncatedPayloadError,
    UnknownSampleError,
    UnsupportedVersionError,
    ZeroMatrixError,
)
from .estimator import CoresetSelector
from .selection import (
    PrincipleMetrics,
    ScoredSample,
    SelectionConfig,
    SelectionResult,
    TaskBudget,
    cluster_dataset,
    evaluate_subset,
    select,
    synergistic_value,
    task_proportions,
)
from .spectral import informative_value, lsvr, singular_values, task_difficulty
from .synth import SynthSpec, TaskSpec, generate
from .valuation import (
    minmax_scale,
    normalize_per_task,
    representative_coefficients,
    representative_values,
    unique_values,
)

__version__ = "0.1.0"

__all__ = [
    "BadMagicError",
    "ClusterSet",
    "ConfigError",
    "ContainerError",
    "CoresetSelector",
    "DataQualityError",
    "DataTailorError",
    "Dataset",
    "Dendrogram",
    "DimensionMismatchError",
    "InvalidDatasetError",
    "Merge",
    "PrincipleMetrics",
    "Sample",
    "ScoredSample",
    "SelectionConfig",
    "SelectionResult",
    "SynthSpec",
    "TaskBudget",
    "TaskSpec",
    "TruncatedPayloadError",
    "UnknownSampleError",
    "UnsupportedVersionError",
    "ValidationReport",
    "ZeroMatrixError",
    "cluster_dataset",
    "cluster_task",
    "cut_dendrogram",
    "evaluate_subset",
    "from_arrays",
    "generate",
    "informative_value",
    "last_token_feature",
    "load_container",
    "lsvr",
    "minmax_scale",
    "normalize_per_task",
    "pairwise_distances",
    "pairwise_sq_distances",
    "representative_coefficients",
    "representative_values",
    "select",
    "singular_values",
    "synergistic_value",
    "task_difficulty",
    "task_proportions",
    "unique_values",
    "validate",
    "ward_dendrogram",
    "write_container",
]
