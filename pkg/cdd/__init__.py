"""cdd - weighted Chamfer distances and loss distillation by gradient matching.

Weighting functions drawn from eight probability densities are fitted to the
HyperCD gradient-weight curve, and the resulting losses train desk-scale point
cloud completion with a free-point model.
"""

from .api import compare_run_dirs, curves_table, evaluate_files, generate_clouds, run_distill, run_train
from .config import VERSION
from .distill import (
    build_reference_distribution,
    candidate_curve,
    distill_all,
    grid_search,
    objective,
    reference_curve,
    rescale,
)
from .exceptions import (
    CddError,
    CloudParseError,
    DivergenceError,
    InvalidArgumentError,
    UnknownWeightingError,
    UsageError,
    WeightDomainError,
)
from .losses import cloud_metrics, evaluate, evaluate_with_grad, f1_score, hypercd_weight
from .models import (
    CropSpec,
    DistillConfig,
    DistillResult,
    FreePointModel,
    GradientWeightCurve,
    LossGradient,
    LossSpec,
    NearestAssignment,
    PointCloud,
    ReferenceDistribution,
    RunManifest,
    ShapeSpec,
    TrainConfig,
    TrainLog,
)
from .neighbors import assign, assign_brute, assign_kdtree
from .pointcloud import crop, generate, read_cloud, read_xyz, write_xyz
from .trainer import TrainResult, compare_runs, run_training, train
from .weightfns import ParamGrid, WeightingFunction, default_grid, mode, pdf, pdf_prime

__version__ = VERSION

__all__ = [
    # Point clouds
    "PointCloud",
    "ShapeSpec",
    "CropSpec",
    "generate",
    "crop",
    "read_xyz",
    "read_cloud",
    "write_xyz",
    # Nearest neighbours
    "NearestAssignment",
    "assign",
    "assign_brute",
    "assign_kdtree",
    # Weighting functions
    "WeightingFunction",
    "ParamGrid",
    "pdf",
    "pdf_prime",
    "mode",
    "default_grid",
    # Losses
    "LossSpec",
    "LossGradient",
    "evaluate",
    "evaluate_with_grad",
    "f1_score",
    "cloud_metrics",
    "hypercd_weight",
    # Distillation
    "DistillConfig",
    "DistillResult",
    "GradientWeightCurve",
    "ReferenceDistribution",
    "reference_curve",
    "candidate_curve",
    "rescale",
    "objective",
    "grid_search",
    "distill_all",
    "build_reference_distribution",
    # Training
    "TrainConfig",
    "TrainLog",
    "TrainResult",
    "FreePointModel",
    "train",
    "run_training",
    "compare_runs",
    # Commands
    "RunManifest",
    "generate_clouds",
    "evaluate_files",
    "curves_table",
    "run_distill",
    "run_train",
    "compare_run_dirs",
    # Exceptions
    "CddError",
    "InvalidArgumentError",
    "CloudParseError",
    "WeightDomainError",
    "UnknownWeightingError",
    "DivergenceError",
    "UsageError",
]
