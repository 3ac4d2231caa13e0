"""fingerkit: detection, skeletonization and tracking of finger-like
features in time-varying 3D cell-centered scalar fields."""

__version__ = "0.1.0"

from .grid import FieldError, GridSpec, ScalarField, load_fields, save_fields
from .synthetic import generate_synthetic

__all__ = [
    "FieldError",
    "GridSpec",
    "ScalarField",
    "generate_synthetic",
    "load_fields",
    "save_fields",
    "__version__",
]
