"""Detection parameter block (JSON-facing)."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class DetectionParams:
    """Knobs of the ridge/core detector.

    r          side factor of the nearby cube (core voxels), >= 1
    h          stencil spacing; None means the voxel side s, otherwise (0, s]
    boundary_policy  'clamp' replicates edge cells for stencil reads,
                     'skip' marks boundary voxels non-ridge
    eigen_tolerance  relative factor: |eigenvalue| < tol*||H||_F counts as 0
    rank_tolerance   relative factor for the rank classification of the
                     extreme-point system
    """

    r: float = 1.0
    h: float | None = None
    boundary_policy: str = "clamp"
    eigen_tolerance: float = 1e-12
    rank_tolerance: float = 1e-9

    def __post_init__(self):
        if not (self.r >= 1.0):
            raise ValueError(f"r must be >= 1, got {self.r}")
        if self.h is not None and not (self.h > 0):
            raise ValueError(f"h must be positive, got {self.h}")
        if self.boundary_policy not in ("clamp", "skip"):
            raise ValueError(f"unknown boundary_policy {self.boundary_policy!r}")

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "h": self.h,
            "boundary_policy": self.boundary_policy,
            "eigen_tolerance": self.eigen_tolerance,
            "rank_tolerance": self.rank_tolerance,
        }

    @classmethod
    def from_json(cls, d: dict) -> "DetectionParams":
        return cls(**{k: d[k] for k in
                      ("r", "h", "boundary_policy", "eigen_tolerance", "rank_tolerance")
                      if k in d})
