"""Ridge-voxel detection: derivative estimation, Taylor-model extreme
points, Condition One/Two tests, and the r-cube core expansion."""

from .detect import (
    CORE_ONLY,
    NON_RIDGE,
    RIDGE,
    RidgeMask,
    available_backends,
    default_backend,
    detect_ridge_voxels,
    detect_with_spacing,
)
from .local import (
    BoundaryError,
    ExtremeSet,
    LocalModel,
    build_local_model,
    estimate_gradient,
    estimate_hessian,
    is_ridge_point,
    model_from_hessian,
    solve_extreme_set,
    sym3_eigen,
    voxel_contains_extreme,
)
from .params import DetectionParams

__all__ = [
    "BoundaryError",
    "CORE_ONLY",
    "DetectionParams",
    "ExtremeSet",
    "LocalModel",
    "NON_RIDGE",
    "RIDGE",
    "RidgeMask",
    "available_backends",
    "build_local_model",
    "default_backend",
    "detect_ridge_voxels",
    "detect_with_spacing",
    "estimate_gradient",
    "estimate_hessian",
    "is_ridge_point",
    "model_from_hessian",
    "solve_extreme_set",
    "sym3_eigen",
    "voxel_contains_extreme",
]
