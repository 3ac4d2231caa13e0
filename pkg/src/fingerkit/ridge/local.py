"""Per-voxel second-order models and the extreme-point solution set.

Everything the detector needs for one voxel lives here as scalar float
functions: central-difference stencils with an adjustable spacing h, a
closed-form symmetric 3x3 eigensolver with a Jacobi fallback for clustered
roots, the affine solution set of the two directional-derivative equations,
and the cube-intersection tests.  The compiled kernel is a line-for-line
transliteration of these routines; keep the two in sync.

Key conventions:

* Eigenpairs follow the Lindeberg ordering |l1| >= |l2| >= |l3|; exact
  absolute-value ties break by signed value ascending, then by how
  axis-aligned the eigenvector is, so masks are reproducible.
* Every eigenvector is sign-normalized (largest-magnitude component made
  positive).
* For h < s, stencil samples at offset h along an axis or a cell diagonal
  are linear interpolations between the center value and that neighbor's
  value.  This is what makes the estimated gradient independent of h and
  the estimated Hessian scale exactly by s/h.
* Coordinates are the index-aligned frame (axis a coordinate = index * s);
  detection is reflection-invariant, so a flipped height axis changes
  nothing in the mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import acos, cos, pi, sqrt
from typing import Optional, Sequence

import numpy as np

from ..grid import FieldError, ScalarField

_TINY = 1e-300


class BoundaryError(FieldError):
    """Stencil would leave the grid under the 'skip' boundary policy."""


# ---------------------------------------------------------------------------
# symmetric 3x3 eigensolver
# ---------------------------------------------------------------------------

def _cross(ax, ay, az, bx, by, bz):
    return (ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx)


def _eigvec_cross(a11, a12, a13, a22, a23, a33, lam):
    """Eigenvector of a symmetric matrix for a well-separated eigenvalue.

    Rows of (A - lam I) span the orthogonal complement of the eigenspace;
    the largest pairwise cross product is the most stable representative.
    """
    r0 = (a11 - lam, a12, a13)
    r1 = (a12, a22 - lam, a23)
    r2 = (a13, a23, a33 - lam)
    best = (1.0, 0.0, 0.0)
    best_n2 = 0.0
    for (u, v) in ((r0, r1), (r0, r2), (r1, r2)):
        cx, cy, cz = _cross(u[0], u[1], u[2], v[0], v[1], v[2])
        n2 = cx * cx + cy * cy + cz * cz
        if n2 > best_n2:
            best_n2 = n2
            best = (cx, cy, cz)
    if best_n2 <= 0.0:
        return (1.0, 0.0, 0.0)
    n = sqrt(best_n2)
    return (best[0] / n, best[1] / n, best[2] / n)


def _jacobi3(a11, a12, a13, a22, a23, a33):
    """Cyclic Jacobi diagonalization; deterministic pivot order."""
    a = [[a11, a12, a13], [a12, a22, a23], [a13, a23, a33]]
    v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    fro2 = a11 * a11 + a22 * a22 + a33 * a33 + 2.0 * (a12 * a12 + a13 * a13 + a23 * a23)
    for _ in range(64):
        off2 = a[0][1] ** 2 + a[0][2] ** 2 + a[1][2] ** 2
        if off2 <= fro2 * 1e-32 or off2 == 0.0:
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = a[p][q]
            if apq == 0.0:
                continue
            tau = (a[q][q] - a[p][p]) / (2.0 * apq)
            if tau >= 0.0:
                t = 1.0 / (tau + sqrt(1.0 + tau * tau))
            else:
                t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
            c = 1.0 / sqrt(1.0 + t * t)
            s = t * c
            for r in range(3):
                arp, arq = a[r][p], a[r][q]
                a[r][p] = c * arp - s * arq
                a[r][q] = s * arp + c * arq
            for r in range(3):
                arp, arq = a[p][r], a[q][r]
                a[p][r] = c * arp - s * arq
                a[q][r] = s * arp + c * arq
            for r in range(3):
                vrp, vrq = v[r][p], v[r][q]
                v[r][p] = c * vrp - s * vrq
                v[r][q] = s * vrp + c * vrq
    eigs = (a[0][0], a[1][1], a[2][2])
    vecs = tuple((v[0][i], v[1][i], v[2][i]) for i in range(3))
    return eigs, vecs


def _sign_fix(vec):
    vx, vy, vz = vec
    ax, ay, az = abs(vx), abs(vy), abs(vz)
    m = vx
    if ay > abs(m):
        m = vy
    if az > abs(m):
        m = vz
    if m < 0.0:
        return (-vx, -vy, -vz)
    return (vx, vy, vz)


def _alignment(vec):
    return max(abs(vec[0]), abs(vec[1]), abs(vec[2]))


def _lindeberg_order(eigs, vecs):
    """Sort eigenpairs by |l| descending; ties by signed value ascending,
    then by eigenvector axis alignment descending (stable)."""
    idx = [0, 1, 2]
    for i in range(1, 3):
        j = i
        while j > 0:
            a, b = idx[j - 1], idx[j]
            la, lb = eigs[a], eigs[b]
            swap = False
            if abs(lb) > abs(la):
                swap = True
            elif abs(lb) == abs(la):
                if lb < la:
                    swap = True
                elif lb == la and _alignment(vecs[b]) > _alignment(vecs[a]):
                    swap = True
            if swap:
                idx[j - 1], idx[j] = idx[j], idx[j - 1]
                j -= 1
            else:
                break
    out_e = tuple(eigs[i] for i in idx)
    out_v = tuple(_sign_fix(vecs[i]) for i in idx)
    return out_e, out_v


def sym3_eigen(a11, a12, a13, a22, a23, a33):
    """Lindeberg-ordered eigendecomposition of a symmetric 3x3 matrix.

    Returns ``(eigs, vecs)`` as tuples; ``vecs[i]`` is the unit eigenvector
    for ``eigs[i]``.  Closed-form trigonometric solution (characteristic
    cubic), with a Jacobi fallback when roots cluster within 1e-9 * ||A||_F.
    """
    fro2 = a11 * a11 + a22 * a22 + a33 * a33 + 2.0 * (a12 * a12 + a13 * a13 + a23 * a23)
    axes = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    if fro2 == 0.0:
        return (0.0, 0.0, 0.0), axes
    p1 = a12 * a12 + a13 * a13 + a23 * a23
    if p1 == 0.0:
        return _lindeberg_order((a11, a22, a33), axes)
    q = (a11 + a22 + a33) / 3.0
    p2 = (a11 - q) * (a11 - q) + (a22 - q) * (a22 - q) + (a33 - q) * (a33 - q) + 2.0 * p1
    p = sqrt(p2 / 6.0)
    b11, b22, b33 = (a11 - q) / p, (a22 - q) / p, (a33 - q) / p
    b12, b13, b23 = a12 / p, a13 / p, a23 / p
    detb = (
        b11 * (b22 * b33 - b23 * b23)
        - b12 * (b12 * b33 - b23 * b13)
        + b13 * (b12 * b23 - b22 * b13)
    )
    r = detb / 2.0
    if r <= -1.0:
        phi = pi / 3.0
    elif r >= 1.0:
        phi = 0.0
    else:
        phi = acos(r) / 3.0
    e1 = q + 2.0 * p * cos(phi)
    e3 = q + 2.0 * p * cos(phi + 2.0 * pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    fro = sqrt(fro2)
    if min(e1 - e2, e2 - e3) < 1e-9 * fro:
        eigs, vecs = _jacobi3(a11, a12, a13, a22, a23, a33)
        return _lindeberg_order(eigs, vecs)
    v1 = _eigvec_cross(a11, a12, a13, a22, a23, a33, e1)
    v3 = _eigvec_cross(a11, a12, a13, a22, a23, a33, e3)
    v2 = _cross(v3[0], v3[1], v3[2], v1[0], v1[1], v1[2])
    n = sqrt(v2[0] ** 2 + v2[1] ** 2 + v2[2] ** 2)
    if n <= 0.0:
        eigs, vecs = _jacobi3(a11, a12, a13, a22, a23, a33)
        return _lindeberg_order(eigs, vecs)
    v2 = (v2[0] / n, v2[1] / n, v2[2] / n)
    return _lindeberg_order((e1, e2, e3), (v1, v2, v3))


# ---------------------------------------------------------------------------
# stencils
# ---------------------------------------------------------------------------

def _value_clamped(values, nx, ny, nz, i, j, k):
    if i < 0:
        i = 0
    elif i > nx - 1:
        i = nx - 1
    if j < 0:
        j = 0
    elif j > ny - 1:
        j = ny - 1
    if k < 0:
        k = 0
    elif k > nz - 1:
        k = nz - 1
    return values[i + nx * (j + ny * k)]


def _ray_sample(values, nx, ny, nz, i, j, k, di, dj, dk, t, f0):
    """Value at center + t*s*(di,dj,dk), t in (0,1]: linear interpolation
    between the center value and the stepped neighbor's value."""
    fn = _value_clamped(values, nx, ny, nz, i + di, j + dj, k + dk)
    return (1.0 - t) * f0 + t * fn


def derivatives_at(values, dims, i, j, k, spacing, h):
    """Gradient and Hessian entries at voxel (i,j,k) with stencil spacing h.

    Returns ``(g1, g2, g3, a11, a12, a13, a22, a23, a33)``.  Out-of-grid
    reads are edge-clamped; callers enforce the 'skip' policy themselves.
    """
    nx, ny, nz = dims
    t = h / spacing
    f0 = values[i + nx * (j + ny * k)]
    fxp = _ray_sample(values, nx, ny, nz, i, j, k, 1, 0, 0, t, f0)
    fxm = _ray_sample(values, nx, ny, nz, i, j, k, -1, 0, 0, t, f0)
    fyp = _ray_sample(values, nx, ny, nz, i, j, k, 0, 1, 0, t, f0)
    fym = _ray_sample(values, nx, ny, nz, i, j, k, 0, -1, 0, t, f0)
    fzp = _ray_sample(values, nx, ny, nz, i, j, k, 0, 0, 1, t, f0)
    fzm = _ray_sample(values, nx, ny, nz, i, j, k, 0, 0, -1, t, f0)
    g1 = (fxp - fxm) / (2.0 * h)
    g2 = (fyp - fym) / (2.0 * h)
    g3 = (fzp - fzm) / (2.0 * h)
    h2 = h * h
    a11 = (fxp - 2.0 * f0 + fxm) / h2
    a22 = (fyp - 2.0 * f0 + fym) / h2
    a33 = (fzp - 2.0 * f0 + fzm) / h2
    fpp = _ray_sample(values, nx, ny, nz, i, j, k, 1, 1, 0, t, f0)
    fpm = _ray_sample(values, nx, ny, nz, i, j, k, 1, -1, 0, t, f0)
    fmp = _ray_sample(values, nx, ny, nz, i, j, k, -1, 1, 0, t, f0)
    fmm = _ray_sample(values, nx, ny, nz, i, j, k, -1, -1, 0, t, f0)
    a12 = (fpp - fpm - fmp + fmm) / (4.0 * h2)
    fpp = _ray_sample(values, nx, ny, nz, i, j, k, 1, 0, 1, t, f0)
    fpm = _ray_sample(values, nx, ny, nz, i, j, k, 1, 0, -1, t, f0)
    fmp = _ray_sample(values, nx, ny, nz, i, j, k, -1, 0, 1, t, f0)
    fmm = _ray_sample(values, nx, ny, nz, i, j, k, -1, 0, -1, t, f0)
    a13 = (fpp - fpm - fmp + fmm) / (4.0 * h2)
    fpp = _ray_sample(values, nx, ny, nz, i, j, k, 0, 1, 1, t, f0)
    fpm = _ray_sample(values, nx, ny, nz, i, j, k, 0, 1, -1, t, f0)
    fmp = _ray_sample(values, nx, ny, nz, i, j, k, 0, -1, 1, t, f0)
    fmm = _ray_sample(values, nx, ny, nz, i, j, k, 0, -1, -1, t, f0)
    a23 = (fpp - fpm - fmp + fmm) / (4.0 * h2)
    return g1, g2, g3, a11, a12, a13, a22, a23, a33


# ---------------------------------------------------------------------------
# extreme-point solution set and cube tests
# ---------------------------------------------------------------------------

def line_box_interval(qx, qy, qz, dx, dy, dz, half):
    """Parameter interval of {q + t d} inside the closed cube |x_a| <= half.

    Returns ``(lo, hi)`` with lo > hi when the intersection is empty.
    """
    lo, hi = -np.inf, np.inf
    for qa, da in ((qx, dx), (qy, dy), (qz, dz)):
        if abs(da) > _TINY:
            t0 = (-half - qa) / da
            t1 = (half - qa) / da
            if t0 > t1:
                t0, t1 = t1, t0
            if t0 > lo:
                lo = t0
            if t1 < hi:
                hi = t1
        elif abs(qa) > half:
            return 1.0, 0.0
    return lo, hi


def plane_hits_box(offset, normal, half):
    """Does the plane {x : normal . x = offset} meet the closed cube?"""
    reach = half * (abs(normal[0]) + abs(normal[1]) + abs(normal[2]))
    return abs(offset) <= reach


@dataclass(frozen=True)
class ExtremeSet:
    """Affine solution set of v_i . (grad + H dp) = 0, i = 1, 2.

    ``kind`` is one of 'empty', 'line', 'plane', 'all'.  ``point`` is the
    minimum-norm particular solution (displacement from the voxel center);
    ``direction`` spans a line, ``basis`` spans a plane.
    """

    kind: str
    point: Optional[np.ndarray] = None
    direction: Optional[np.ndarray] = None
    basis: Optional[np.ndarray] = None

    def contains(self, dp: np.ndarray, tol: float = 1e-9) -> bool:
        if self.kind == "empty":
            return False
        if self.kind == "all":
            return True
        rel = np.asarray(dp, dtype=float) - self.point
        if self.kind == "line":
            resid = rel - np.dot(rel, self.direction) * self.direction
        else:
            resid = rel - self.basis.T @ (self.basis @ rel)
        return float(np.linalg.norm(resid)) <= tol


def solve_extreme_set(model: "LocalModel", rank_tolerance: float = 1e-9) -> ExtremeSet:
    """Classify the 2x3 linear system by numerical rank.

    Both equations live in the Hessian eigenbasis: l_i c_i = -g_i for the
    first two Lindeberg eigenpairs.  An equation with |l_i| below
    rank_tolerance * ||H||_F is degenerate: consistent (free direction) when
    |g_i| is below rank_tolerance * |grad|, otherwise unsatisfiable.
    """
    l1, l2 = float(model.eigvals[0]), float(model.eigvals[1])
    v1, v2, v3 = model.eigvecs
    g = model.grad
    lam_tol = rank_tolerance * model.hess_norm
    g_tol = rank_tolerance * float(np.linalg.norm(g))
    g1 = float(np.dot(v1, g))
    g2 = float(np.dot(v2, g))
    det1 = abs(l1) > lam_tol
    det2 = abs(l2) > lam_tol
    if det1 and det2:
        point = (-g1 / l1) * v1 + (-g2 / l2) * v2
        return ExtremeSet("line", point=point, direction=np.asarray(v3, dtype=float))
    if det1 and not det2:
        if abs(g2) > g_tol:
            return ExtremeSet("empty")
        point = (-g1 / l1) * v1
        return ExtremeSet(
            "plane",
            point=point,
            basis=np.vstack([np.asarray(v2, dtype=float), np.asarray(v3, dtype=float)]),
        )
    # |l1| >= |l2|, so l1 degenerate implies l2 degenerate
    if abs(g1) <= g_tol and abs(g2) <= g_tol:
        return ExtremeSet("all", point=np.zeros(3))
    return ExtremeSet("empty")


def voxel_contains_extreme(model: "LocalModel", extreme: ExtremeSet, r: float) -> Optional[np.ndarray]:
    """Witness displacement inside the cube of side r*s, or None.

    For a line the witness is the feasible parameter closest to the voxel
    center; for a plane it lies on the cube diagonal most aligned with the
    plane normal; 'all' yields the center itself.
    """
    if r < 1.0:
        raise ValueError(f"r must be >= 1, got {r}")
    half = 0.5 * r * model.spacing
    return _box_witness(extreme, half)


def _box_witness(extreme: ExtremeSet, half: float) -> Optional[np.ndarray]:
    if extreme.kind == "empty":
        return None
    if extreme.kind == "all":
        return np.zeros(3)
    q = extreme.point
    if extreme.kind == "line":
        d = extreme.direction
        lo, hi = line_box_interval(q[0], q[1], q[2], d[0], d[1], d[2], half)
        if lo > hi:
            return None
        tc = -float(np.dot(q, d))  # parameter of the min-norm point
        t = min(max(tc, lo), hi)
        return q + t * d
    # plane {x : n . x = c}; walk the diagonal t * half * sign(n)
    n = np.cross(extreme.basis[0], extreme.basis[1])
    nn = float(np.linalg.norm(n))
    n = n / nn
    c = float(np.dot(n, q))
    l1norm = abs(n[0]) + abs(n[1]) + abs(n[2])
    if abs(c) > half * l1norm:
        return None
    sig = np.where(n >= 0.0, 1.0, -1.0)
    t = c / (half * l1norm)
    return t * half * sig


def is_ridge_point(model: "LocalModel", point=None, eigen_tolerance: float = 1e-12) -> bool:
    """Condition Two: first two Lindeberg eigenvalues strictly negative.

    Eigenvalues within eigen_tolerance * ||H||_F of zero count as zero and
    fail.  The Taylor model's Hessian is constant, so the witness point does
    not influence the answer; it is accepted for interface symmetry.
    """
    tol = eigen_tolerance * model.hess_norm
    l1, l2 = float(model.eigvals[0]), float(model.eigvals[1])
    if abs(l1) < tol:
        l1 = 0.0
    if abs(l2) < tol:
        l2 = 0.0
    return l1 < 0.0 and l2 < 0.0


# ---------------------------------------------------------------------------
# assembled per-voxel model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalModel:
    """Second-order Taylor data of one voxel in the index-aligned frame."""

    voxel: tuple[int, int, int]
    position: np.ndarray
    f0: float
    grad: np.ndarray
    hess: np.ndarray
    eigvals: np.ndarray
    eigvecs: tuple
    hess_norm: float
    spacing: float


def _check_interior(spec, v, policy):
    if policy == "skip" and any(
        not (1 <= v[a] <= spec.dims[a] - 2) for a in range(3)
    ):
        raise BoundaryError(f"voxel {tuple(v)} is on the boundary (policy='skip')")
    if not spec.in_bounds(v):
        raise FieldError(f"voxel {tuple(v)} out of bounds for dims {spec.dims}")


def estimate_gradient(field: ScalarField, v: Sequence[int], h: float | None = None,
                      boundary_policy: str = "clamp") -> np.ndarray:
    """Central-difference gradient; h < s samples by ray interpolation."""
    s = field.spec.spacing
    h = s if h is None else float(h)
    if not (0.0 < h <= s):
        raise ValueError(f"h must lie in (0, s], got {h}")
    _check_interior(field.spec, v, boundary_policy)
    res = derivatives_at(field.values, field.spec.dims, v[0], v[1], v[2], s, h)
    return np.array(res[:3])


def estimate_hessian(field: ScalarField, v: Sequence[int], h: float | None = None,
                     boundary_policy: str = "clamp") -> np.ndarray:
    """Central-difference Hessian, symmetric by construction."""
    s = field.spec.spacing
    h = s if h is None else float(h)
    if not (0.0 < h <= s):
        raise ValueError(f"h must lie in (0, s], got {h}")
    _check_interior(field.spec, v, boundary_policy)
    g1, g2, g3, a11, a12, a13, a22, a23, a33 = derivatives_at(
        field.values, field.spec.dims, v[0], v[1], v[2], s, h
    )
    return np.array([[a11, a12, a13], [a12, a22, a23], [a13, a23, a33]])


def model_from_hessian(hess, grad=None, f0=0.0, spacing=1.0,
                       voxel=(0, 0, 0), position=None) -> LocalModel:
    """Build a LocalModel from explicit derivative data (test/analysis aid)."""
    hess = np.asarray(hess, dtype=float)
    grad = np.zeros(3) if grad is None else np.asarray(grad, dtype=float)
    eigs, vecs = sym3_eigen(
        hess[0, 0], hess[0, 1], hess[0, 2], hess[1, 1], hess[1, 2], hess[2, 2]
    )
    fro = float(np.sqrt(np.sum(hess * hess)))
    return LocalModel(
        voxel=tuple(int(x) for x in voxel),
        position=np.zeros(3) if position is None else np.asarray(position, float),
        f0=float(f0),
        grad=grad,
        hess=hess,
        eigvals=np.array(eigs),
        eigvecs=tuple(np.array(v) for v in vecs),
        hess_norm=fro,
        spacing=float(spacing),
    )


def build_local_model(field: ScalarField, v: Sequence[int], params=None,
                      h: float | None = None,
                      boundary_policy: str | None = None) -> LocalModel:
    """Estimate derivatives at v and eigendecompose the Hessian."""
    if params is not None:
        h = params.h if h is None else h
        boundary_policy = params.boundary_policy if boundary_policy is None else boundary_policy
    boundary_policy = boundary_policy or "clamp"
    s = field.spec.spacing
    h = s if h is None else float(h)
    if not (0.0 < h <= s):
        raise ValueError(f"h must lie in (0, s], got {h}")
    _check_interior(field.spec, v, boundary_policy)
    g1, g2, g3, a11, a12, a13, a22, a23, a33 = derivatives_at(
        field.values, field.spec.dims, v[0], v[1], v[2], s, h
    )
    eigs, vecs = sym3_eigen(a11, a12, a13, a22, a23, a33)
    hess = np.array([[a11, a12, a13], [a12, a22, a23], [a13, a23, a33]])
    fro = sqrt(
        a11 * a11 + a22 * a22 + a33 * a33 + 2.0 * (a12 * a12 + a13 * a13 + a23 * a23)
    )
    return LocalModel(
        voxel=(int(v[0]), int(v[1]), int(v[2])),
        position=field.spec.position(v),
        f0=float(field.values[field.spec.linear_index(*v)]),
        grad=np.array([g1, g2, g3]),
        hess=hess,
        eigvals=np.array(eigs),
        eigvecs=tuple(np.array(w) for w in vecs),
        hess_norm=fro,
        spacing=s,
    )


# ---------------------------------------------------------------------------
# scalar classifier (the kernel's single-voxel step)
# ---------------------------------------------------------------------------

def classify_voxel(values, dims, i, j, k, spacing, h, half_in, half_out,
                   eigen_tolerance, rank_tolerance):
    """Label one voxel: 0 non-ridge, 1 core-only, 2 ridge.

    half_in / half_out are the half-extents of the nested cubes that define
    the ridge and core labels (r*s/2 in the standard parametrization).
    Boundary reads are edge-clamped; 'skip' is applied by the caller.
    """
    g1, g2, g3, a11, a12, a13, a22, a23, a33 = derivatives_at(
        values, dims, i, j, k, spacing, h
    )
    fro2 = a11 * a11 + a22 * a22 + a33 * a33 + 2.0 * (a12 * a12 + a13 * a13 + a23 * a23)
    if fro2 == 0.0:
        return 0
    fro = sqrt(fro2)
    eigs, vecs = sym3_eigen(a11, a12, a13, a22, a23, a33)
    l1, l2 = eigs[0], eigs[1]
    etol = eigen_tolerance * fro
    cl1 = 0.0 if abs(l1) < etol else l1
    cl2 = 0.0 if abs(l2) < etol else l2
    if not (cl1 < 0.0 and cl2 < 0.0):
        return 0
    v1, v2, v3 = vecs
    p1 = v1[0] * g1 + v1[1] * g2 + v1[2] * g3
    p2 = v2[0] * g1 + v2[1] * g2 + v2[2] * g3
    lam_tol = rank_tolerance * fro
    gnorm = sqrt(g1 * g1 + g2 * g2 + g3 * g3)
    g_tol = rank_tolerance * gnorm
    det1 = abs(l1) > lam_tol
    det2 = abs(l2) > lam_tol
    if det1 and det2:
        c1 = -p1 / l1
        c2 = -p2 / l2
        qx = c1 * v1[0] + c2 * v2[0]
        qy = c1 * v1[1] + c2 * v2[1]
        qz = c1 * v1[2] + c2 * v2[2]
        lo, hi = line_box_interval(qx, qy, qz, v3[0], v3[1], v3[2], half_in)
        if lo <= hi:
            return 2
        lo, hi = line_box_interval(qx, qy, qz, v3[0], v3[1], v3[2], half_out)
        return 1 if lo <= hi else 0
    if det1:
        if abs(p2) > g_tol:
            return 0
        c1 = -p1 / l1
        if abs(c1) <= half_in * (abs(v1[0]) + abs(v1[1]) + abs(v1[2])):
            return 2
        if abs(c1) <= half_out * (abs(v1[0]) + abs(v1[1]) + abs(v1[2])):
            return 1
        return 0
    if abs(p1) <= g_tol and abs(p2) <= g_tol:
        return 2
    return 0
