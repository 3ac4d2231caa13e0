"""Whole-field ridge/core detection.

Per voxel the detector builds the local quadratic model, applies Condition
Two to the Lindeberg-ordered eigenvalues, solves the two-equation extreme
system, and intersects the solution set with two nested cubes: the voxel box
(side s) labels *ridge*, the expanded cube (side r*s) labels *core_only*.

Two backends implement the identical per-voxel loop: a compiled extension
(``fingerkit._ridge_kernel``) and a pure-Python fallback.  The compiled one
is picked automatically when importable; pass ``backend=`` or set
``FINGERKIT_BACKEND=python`` to override.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..grid import FieldError, GridSpec, ScalarField
from . import _pykernel
from .params import DetectionParams

NON_RIDGE, CORE_ONLY, RIDGE = 0, 1, 2

try:
    from .. import _ridge_kernel as _compiled
except ImportError:  # extension not built; pure-Python fallback
    _compiled = None


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _compiled is not None else ("python",)


def default_backend() -> str:
    env = os.environ.get("FINGERKIT_BACKEND")
    if env in ("compiled", "python"):
        if env == "compiled" and _compiled is None:
            raise RuntimeError("FINGERKIT_BACKEND=compiled but the extension is not built")
        return env
    return "compiled" if _compiled is not None else "python"


def _run_kernel(field: ScalarField, h: float, half_in: float, half_out: float,
                params: DetectionParams, backend: str | None) -> np.ndarray:
    backend = backend or default_backend()
    skip = params.boundary_policy == "skip"
    args = (
        field.values,
        field.spec.dims,
        field.spec.spacing,
        h,
        half_in,
        half_out,
        params.eigen_tolerance,
        params.rank_tolerance,
        skip,
    )
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled backend requested but extension not built")
        return _compiled.classify_field(*args)
    if backend == "python":
        return _pykernel.classify_field(*args)
    raise ValueError(f"unknown backend {backend!r}")


@dataclass(frozen=True)
class RidgeMask:
    """Per-voxel labels: 0 non_ridge, 1 core_only, 2 ridge (x-fastest)."""

    spec: GridSpec
    flags: np.ndarray
    params: DetectionParams

    def __post_init__(self):
        flags = np.ascontiguousarray(self.flags, dtype=np.uint8).ravel()
        if flags.size != self.spec.n_cells:
            raise FieldError("flag count does not match grid")
        object.__setattr__(self, "flags", flags)

    @property
    def grid(self) -> np.ndarray:
        nx, ny, nz = self.spec.dims
        return self.flags.reshape(nz, ny, nx).T

    def core_mask(self) -> np.ndarray:
        """Boolean x-fastest vector of core voxels (ridge or core_only)."""
        return self.flags != NON_RIDGE

    def counts(self) -> dict:
        return {
            "non_ridge": int(np.count_nonzero(self.flags == NON_RIDGE)),
            "core_only": int(np.count_nonzero(self.flags == CORE_ONLY)),
            "ridge": int(np.count_nonzero(self.flags == RIDGE)),
        }

    def save(self, path: str | Path) -> None:
        """Raw u8 brick next to a small JSON header."""
        path = Path(path)
        path.write_bytes(self.flags.tobytes())
        header = {
            "spec": self.spec.to_json(),
            "params": self.params.to_json(),
            "encoding": {"0": "non_ridge", "1": "core_only", "2": "ridge"},
        }
        path.with_suffix(path.suffix + ".json").write_text(
            json.dumps(header, sort_keys=True, indent=2) + "\n"
        )

    @classmethod
    def load(cls, path: str | Path) -> "RidgeMask":
        path = Path(path)
        header = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        spec = GridSpec.from_json(header["spec"])
        params = DetectionParams.from_json(header["params"])
        flags = np.frombuffer(path.read_bytes(), dtype=np.uint8)
        return cls(spec, flags.copy(), params)


def detect_ridge_voxels(field: ScalarField, params: DetectionParams | None = None,
                        backend: str | None = None) -> RidgeMask:
    """Label ridge voxels (own box contains an extreme that is a ridge
    point) and core_only voxels (the r*s cube does)."""
    params = params or DetectionParams()
    s = field.spec.spacing
    h = s if params.h is None else params.h
    if not (0.0 < h <= s):
        raise ValueError(f"h must lie in (0, s], got {h}")
    flags = _run_kernel(field, h, 0.5 * s, 0.5 * params.r * s, params, backend)
    return RidgeMask(field.spec, flags, params)


def detect_with_spacing(field: ScalarField, h: float,
                        params: DetectionParams | None = None,
                        backend: str | None = None) -> RidgeMask:
    """The spacing-h variant: identical mask to detect_ridge_voxels(r=s/h).

    With stencil spacing h the feature displacement shrinks by h/s, so the
    voxel box under the s-model maps to an inner cube of side h here, and
    the full voxel box plays the role of the expanded cube.
    """
    params = params or DetectionParams()
    s = field.spec.spacing
    if not (0.0 < h <= s):
        raise ValueError(f"h must lie in (0, s], got {h}")
    flags = _run_kernel(field, h, 0.5 * h, 0.5 * s, params, backend)
    eff = DetectionParams(
        r=s / h,
        h=h,
        boundary_policy=params.boundary_policy,
        eigen_tolerance=params.eigen_tolerance,
        rank_tolerance=params.rank_tolerance,
    )
    return RidgeMask(field.spec, flags, eff)
