"""Pure-Python detection kernel: the fallback backend.

A straight per-voxel loop over :func:`fingerkit.ridge.local.classify_voxel`.
Slow but dependency-free; the compiled extension replays exactly this logic.
"""

from __future__ import annotations

import numpy as np

from .local import classify_voxel


def classify_field(values, dims, spacing, h, half_in, half_out,
                   eigen_tolerance, rank_tolerance, skip_boundary):
    nx, ny, nz = dims
    flags = np.zeros(nx * ny * nz, dtype=np.uint8)
    vals = np.ascontiguousarray(values, dtype=np.float64)
    if skip_boundary:
        ib, jb, kb = range(1, nx - 1), range(1, ny - 1), range(1, nz - 1)
    else:
        ib, jb, kb = range(nx), range(ny), range(nz)
    for k in kb:
        for j in jb:
            base = nx * (j + ny * k)
            for i in ib:
                lab = classify_voxel(
                    vals, dims, i, j, k, spacing, h, half_in, half_out,
                    eigen_tolerance, rank_tolerance,
                )
                if lab:
                    flags[base + i] = lab
    return flags
