"""Seeded synthetic density sequences with analytically known structure.

Each generator returns ``(fields, truth)`` where ``truth`` is a
JSON-serializable dict describing the constructed geometry (ridge lines,
expected component counts, event timeline) so tests can assert against the
construction rather than against the code under test.

Profiles used:

* Gaussian tubes  — smooth, used where watershed saddles and overlap ratios
  matter (``twin_blob_merge``, ``blob_split``, ``gaussian_ridge_line``).
* Capped paraboloid tubes ``A * max(0, 1 - d^2/w^2)`` — the local quadratic
  model is exact inside the support, so detected extreme points coincide
  with the true centerline and the r-sweep saturates sharply
  (``branching_finger``).

All values are quantized through float32 so in-memory sequences equal a
save/load round trip byte for byte.
"""

from __future__ import annotations

import numpy as np

from .grid import FieldError, GridSpec, ScalarField, field_from_function

KINDS = ("gaussian_ridge_line", "twin_blob_merge", "blob_split", "branching_finger")


class SynthError(FieldError):
    """Invalid generator parameters."""


def _spec(params, default_dims):
    dims = tuple(params.get("dims", default_dims))
    spacing = float(params.get("spacing", 1.0))
    nz = dims[2]
    # injection face at k=0, world height running (nz-1)*s .. 0
    origin = params.get("origin", (0.0, 0.0, (nz - 1) * spacing))
    return GridSpec(dims=dims, spacing=spacing, origin=tuple(origin))


def gaussian_ridge_line(params=None, seed=0):
    """Vertical Gaussian ridge: f = A exp(-((x-cx)^2+(y-cy)^2) / 2 sigma^2).

    The ridge line is the vertical line (cx, cy); it is the maximum of every
    z-slice by construction.  ``n_timesteps`` > 1 repeats the same field,
    which doubles as the static-blob tracking case.
    """
    p = dict(params or {})
    spec = _spec(p, (32, 32, 32))
    s = spec.spacing
    nx, ny, _ = spec.dims
    sigma = float(p.get("sigma", 3.0 * s))
    amplitude = float(p.get("amplitude", 1.0))
    n_t = int(p.get("n_timesteps", 1))
    if sigma <= 0 or amplitude <= 0 or n_t < 1:
        raise SynthError("sigma, amplitude must be > 0 and n_timesteps >= 1")
    # strictly inside a voxel so the containing column is unambiguous
    ci, cj = nx // 2, ny // 2
    cx = float(p.get("cx", spec.origin[0] + (ci + 0.2) * s))
    cy = float(p.get("cy", spec.origin[1] + (cj + 0.3) * s))

    def f(X, Y, Z):
        return amplitude * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * sigma**2))

    fields = [field_from_function(spec, f, timestep=t) for t in range(n_t)]
    truth = {
        "kind": "gaussian_ridge_line",
        "ridge_xy": [cx, cy],
        "column": [int(round((cx - spec.origin[0]) / s)), int(round((cy - spec.origin[1]) / s))],
        "sigma": sigma,
        "amplitude": amplitude,
    }
    return fields, truth


def _twin_tube_field(spec, half_sep, sigma, amplitude):
    cx = spec.origin[0] + (spec.dims[0] // 2) * spec.spacing
    cy = spec.origin[1] + (spec.dims[1] // 2) * spec.spacing

    def f(X, Y, Z):
        r1 = (X - (cx - half_sep)) ** 2 + (Y - cy) ** 2
        r2 = (X - (cx + half_sep)) ** 2 + (Y - cy) ** 2
        return amplitude * (np.exp(-r1 / (2 * sigma**2)) + np.exp(-r2 / (2 * sigma**2)))

    return f, (cx, cy)


def twin_blob_merge(params=None, seed=0):
    """Two vertical Gaussian tubes that fatten until their sum has one peak.

    Centers stay fixed at +-half_sep; sigma grows per timestep, so every
    earlier above-floor voxel stays above floor later and the merged finger
    absorbs each predecessor completely (overlap ratio 1.0).
    Two density maxima (hence two finger cores) exist while
    half_sep*2 > 2*sigma; the last timestep crosses below that bound.
    """
    p = dict(params or {})
    spec = _spec(p, (32, 32, 48))
    s = spec.spacing
    half_sep = float(p.get("half_sep", 2.0 * s))
    sigmas = [float(v) for v in p.get("sigmas", (1.5 * s, 1.8 * s, 2.5 * s))]
    amplitude = float(p.get("amplitude", 1.0))
    if half_sep <= 0 or any(v <= 0 for v in sigmas):
        raise SynthError("half_sep and sigmas must be > 0")
    two_peaked = [2 * half_sep > 2 * sig for sig in sigmas]
    if not (all(two_peaked[:-1]) and not two_peaked[-1]):
        raise SynthError("sigmas must keep two peaks until the final timestep")
    fields = []
    centers = None
    for t, sig in enumerate(sigmas):
        f, (cx, cy) = _twin_tube_field(spec, half_sep, sig, amplitude)
        centers = (cx, cy)
        fields.append(field_from_function(spec, f, timestep=t))
    truth = {
        "kind": "twin_blob_merge",
        "components_per_t": [2 if tp else 1 for tp in two_peaked],
        "merge_step": len(sigmas) - 2,  # links t -> t+1 at this t are merges
        "tube_xy": [[centers[0] - half_sep, centers[1]], [centers[0] + half_sep, centers[1]]],
        "sigmas": sigmas,
    }
    return fields, truth


def blob_split(params=None, seed=0):
    """One fat twin-tube peak that narrows into two (a 50/50 split)."""
    p = dict(params or {})
    p.setdefault("sigmas", None)
    spec = _spec(p, (32, 32, 48))
    s = spec.spacing
    half_sep = float(p.get("half_sep", 2.0 * s))
    sigmas = p["sigmas"] or (2.5 * s, 1.5 * s)
    sigmas = [float(v) for v in sigmas]
    amplitude = float(p.get("amplitude", 1.0))
    two_peaked = [2 * half_sep > 2 * sig for sig in sigmas]
    if two_peaked[0] or not all(two_peaked[1:]):
        raise SynthError("first sigma must merge the peaks, later ones must split them")
    fields = []
    centers = None
    for t, sig in enumerate(sigmas):
        f, (cx, cy) = _twin_tube_field(spec, half_sep, sig, amplitude)
        centers = (cx, cy)
        fields.append(field_from_function(spec, f, timestep=t))
    truth = {
        "kind": "blob_split",
        "components_per_t": [2 if tp else 1 for tp in two_peaked],
        "split_step": 0,
        "tube_xy": [[centers[0] - half_sep, centers[1]], [centers[0] + half_sep, centers[1]]],
        "sigmas": sigmas,
    }
    return fields, truth


def branching_finger(params=None, seed=0):
    """A vertical trunk whose two capped-paraboloid tubes peel apart.

    The field is the *sum* of two tubes with profile
    ``A * max(0, 1 - d^2/w^2)`` whose centers sit at ``x = cx +- off(k)``
    with ``off(k) = slope * max(0, k - k_split)``.  Above the split the two
    caps coincide (one trunk of amplitude 2A); below, they separate at a
    fixed rate.  Wherever a stencil sees only cap interiors the field is an
    exact quadratic, so the local model recovers the true centerline and the
    detected core stops growing once r*s/2 exceeds ``w``.

    The per-layer support is one interval until the gap between the two
    supports (width ``2*(off - w)``, centered at cx) captures its first
    column of cell centers; since that gap is a nested increasing interval,
    the layer census switches from 1 to 2 exactly once.
    """
    p = dict(params or {})
    spec = _spec(p, (36, 36, 48))
    s = spec.spacing
    nx, ny, nz = spec.dims
    w = float(p.get("w", 3.5 * s))
    slope = float(p.get("slope", 0.4 * s))
    k_split = int(p.get("k_split", nz // 3))
    amplitude = float(p.get("amplitude", 0.5))
    if not (0 < k_split < nz - 4):
        raise SynthError(f"k_split must leave room for legs, got {k_split}")
    if slope <= 0 or w <= 0:
        raise SynthError("slope and w must be > 0")
    off_max = slope * (nz - 1 - k_split)
    if off_max <= w:
        raise SynthError("legs never separate; increase slope or depth")
    cx = spec.origin[0] + (nx // 2 + 0.3) * s
    cy = spec.origin[1] + (ny // 2 + 0.2) * s
    ha = spec.height_axis

    def cap(d2):
        return amplitude * np.maximum(0.0, 1.0 - d2 / w**2)

    def f(X, Y, Z):
        k = (spec.origin[ha] - Z) / s  # world height -> layer index
        off = slope * np.maximum(0.0, k - k_split)
        left = cap((X - (cx - off)) ** 2 + (Y - cy) ** 2)
        right = cap((X - (cx + off)) ** 2 + (Y - cy) ** 2)
        return left + right

    fields = [field_from_function(spec, f)]
    census = []
    margin = 0.05  # index units; borderline columns are rasterization-dependent
    for k in range(nz):
        off = slope * max(0, k - k_split)
        if off < w:
            census.append(1)
            continue
        gap = off - w  # zero-density band [cx - gap, cx + gap]
        lo = (cx - gap - spec.origin[0]) / s
        hi = (cx + gap - spec.origin[0]) / s
        if np.floor(hi - margin) >= np.ceil(lo + margin):
            census.append(2)  # a column sits well inside the gap
        elif np.floor(hi + margin) >= np.ceil(lo - margin):
            census.append(0)  # either
        else:
            census.append(1)  # gap too thin to capture a column
    truth = {
        "kind": "branching_finger",
        "trunk_xy": [cx, cy],
        "w": w,
        "slope": slope,
        "k_split": k_split,
        "leg_x_at": {str(k): [cx - slope * max(0, k - k_split), cx + slope * max(0, k - k_split)]
                     for k in range(nz)},
        "support_census": census,  # per layer: 1, 2, or 0 for either
    }
    return fields, truth


def random_smooth_field(spec: GridSpec, seed: int = 0, n_bumps: int = 12,
                        quantize: bool = False) -> ScalarField:
    """Sum of seeded anisotropic Gaussian bumps; generically curved everywhere.

    Used for derivative/scaling checks, where a smooth field with
    non-degenerate Hessians at random voxels is needed.  Left unquantized by
    default so derivative identities hold at full float64 precision.
    """
    rng = np.random.default_rng(seed)
    nx, ny, nz = spec.dims
    s = spec.spacing
    lo = np.array([spec.origin[a] + spec.axis_sign(a) * 0 for a in range(3)])
    hi = np.array([spec.origin[a] + spec.axis_sign(a) * (spec.dims[a] - 1) * s for a in range(3)])
    lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
    centers = rng.uniform(lo, hi, size=(n_bumps, 3))
    widths = rng.uniform(2.0 * s, 6.0 * s, size=(n_bumps, 3))
    amps = rng.uniform(0.3, 1.0, size=n_bumps)

    def f(X, Y, Z):
        total = np.zeros_like(X)
        for c, wd, a in zip(centers, widths, amps):
            total += a * np.exp(
                -((X - c[0]) ** 2 / (2 * wd[0] ** 2)
                  + (Y - c[1]) ** 2 / (2 * wd[1] ** 2)
                  + (Z - c[2]) ** 2 / (2 * wd[2] ** 2))
            )
        return total

    return field_from_function(spec, f, quantize=quantize)


_GENERATORS = {
    "gaussian_ridge_line": gaussian_ridge_line,
    "twin_blob_merge": twin_blob_merge,
    "blob_split": blob_split,
    "branching_finger": branching_finger,
}


def generate_synthetic(kind: str, params=None, seed: int = 0):
    """Dispatch to a generator by kind; returns ``(fields, truth)``."""
    if kind not in _GENERATORS:
        raise SynthError(f"unknown synthetic kind {kind!r}; choose from {KINDS}")
    return _GENERATORS[kind](params, seed=seed)
