import numpy as np
import pytest

from fingerkit.grid import GridSpec, field_from_function
from fingerkit.ridge import (
    BoundaryError,
    build_local_model,
    estimate_gradient,
    estimate_hessian,
    is_ridge_point,
    model_from_hessian,
    solve_extreme_set,
    voxel_contains_extreme,
)


def _field(fn, dims=(9, 9, 9), spacing=1.0):
    nz = dims[2]
    spec = GridSpec(dims, spacing=spacing, origin=(0, 0, (nz - 1) * spacing))
    # allow negative analytic test functions by shifting; derivatives unchanged
    return field_from_function(spec, lambda X, Y, Z: fn(X, Y, Z) + 100.0, quantize=False)


def test_gradient_constant_and_affine():
    f = _field(lambda X, Y, Z: 0.0 * X)
    assert np.allclose(estimate_gradient(f, (4, 4, 4)), 0.0)
    f = _field(lambda X, Y, Z: 2.0 * X)
    for h in (None, 0.5, 0.1):
        g = estimate_gradient(f, (4, 4, 4), h=h)
        assert np.allclose(g, [2.0, 0.0, 0.0], atol=1e-12)


def test_gradient_quadratic_exact():
    # f = x^2 at x=1 (s=1): derivative 2; central difference exact on quadratics
    f = _field(lambda X, Y, Z: X**2)
    g = estimate_gradient(f, (1, 4, 4))
    assert g[0] == pytest.approx(2.0, abs=1e-12)


def test_hessian_affine_zero_and_quadratic():
    f = _field(lambda X, Y, Z: 1.0 + 2 * X + 3 * Y - Z)
    assert np.allclose(estimate_hessian(f, (4, 4, 4)), 0.0, atol=1e-12)
    f = _field(lambda X, Y, Z: X**2 + 3 * X * Y)
    H = estimate_hessian(f, (4, 4, 4))
    assert H[0, 0] == pytest.approx(2.0, abs=1e-10)
    assert H[0, 1] == pytest.approx(3.0, abs=1e-10)
    assert H[1, 0] == H[0, 1]
    assert np.allclose(H, H.T)


def test_degree2_fields_exact_derivatives():
    rng = np.random.default_rng(9)
    for _ in range(20):
        a = rng.normal(size=10)
        def poly(X, Y, Z):
            return (
                a[0] + a[1] * X + a[2] * Y + a[3] * Z
                + a[4] * X * Y + a[5] * X * Z + a[6] * Y * Z
                + a[7] * X**2 + a[8] * Y**2 + a[9] * Z**2
            )
        f = _field(lambda X, Y, Z: poly(X, Y, Z) + 200.0, dims=(7, 7, 7))
        v = (3, 3, 3)
        x, y, z = f.spec.position(v)
        g = estimate_gradient(f, v)
        want_g = [
            a[1] + a[4] * y + a[5] * z + 2 * a[7] * x,
            a[2] + a[4] * x + a[6] * z + 2 * a[8] * y,
            a[3] + a[5] * x + a[6] * y + 2 * a[9] * z,
        ]
        # index frame: height axis flips the z component
        want_g[2] *= f.spec.axis_sign(2)
        assert np.allclose(g, want_g, atol=1e-10)
        H = estimate_hessian(f, v)
        want_H = np.array(
            [
                [2 * a[7], a[4], a[5] * f.spec.axis_sign(2)],
                [a[4], 2 * a[8], a[6] * f.spec.axis_sign(2)],
                [a[5] * f.spec.axis_sign(2), a[6] * f.spec.axis_sign(2), 2 * a[9]],
            ]
        )
        assert np.allclose(H, want_H, atol=1e-10)


def test_smooth_field_matches_fd_oracle(smooth_field):
    # independent dense central differences on the trilinear interpolant
    f = smooth_field
    s = f.spec.spacing
    v = (11, 12, 10)
    g = estimate_gradient(f, v)
    H = estimate_hessian(f, v)
    p0 = f.spec.position(v)
    eps = s
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = eps
        fd = (f.trilinear_sample(p0 + e) - f.trilinear_sample(p0 - e)) / (2 * eps)
        # index frame flips the height-axis derivative
        fd *= f.spec.axis_sign(axis)
        assert abs(fd - g[axis]) <= 1e-9 + 5e-2 * abs(g[axis]) + 1e-3


def test_boundary_policies():
    f = _field(lambda X, Y, Z: X * 0.0)
    estimate_gradient(f, (0, 0, 0), boundary_policy="clamp")
    with pytest.raises(BoundaryError):
        estimate_gradient(f, (0, 4, 4), boundary_policy="skip")


def test_h_validation():
    f = _field(lambda X, Y, Z: X * 0.0)
    with pytest.raises(ValueError):
        estimate_gradient(f, (4, 4, 4), h=0.0)
    with pytest.raises(ValueError):
        estimate_gradient(f, (4, 4, 4), h=2.0)


# -- extreme set -------------------------------------------------------------

def test_extreme_set_line_through_center():
    m = model_from_hessian(np.diag([-2.0, -1.0, -0.5]))
    es = solve_extreme_set(m)
    assert es.kind == "line"
    assert np.allclose(es.point, 0.0)
    assert abs(abs(es.direction[2]) - 1.0) < 1e-12


def test_extreme_set_inconsistent_empty():
    m = model_from_hessian(np.zeros((3, 3)), grad=[1.0, 0, 0])
    es = solve_extreme_set(m)
    assert es.kind == "empty"


def test_extreme_set_all_space():
    m = model_from_hessian(np.zeros((3, 3)), grad=[0.0, 0, 0])
    es = solve_extreme_set(m)
    assert es.kind == "all"


def test_extreme_set_plane():
    m = model_from_hessian(np.diag([-3.0, 0.0, 0.0]), grad=[1.5, 0, 0])
    es = solve_extreme_set(m)
    assert es.kind == "plane"
    assert np.allclose(es.point, [0.5, 0, 0])


def test_extreme_set_substitution_oracle():
    rng = np.random.default_rng(21)
    for _ in range(200):
        A = rng.normal(size=(3, 3))
        A = (A + A.T) / 2
        grad = rng.normal(size=3)
        m = model_from_hessian(A, grad=grad)
        es = solve_extreme_set(m)
        if es.kind != "line":
            continue
        # every point of the line zeroes both directional derivatives
        for t in (-2.0, 0.0, 1.3):
            dp = es.point + t * es.direction
            gp = grad + A @ dp
            scale = max(1.0, np.abs(gp).max(), np.abs(grad).max())
            for v in m.eigvecs[:2]:
                assert abs(np.dot(v, gp)) <= 1e-9 * scale


# -- cube intersection -------------------------------------------------------

def test_witness_center_line():
    m = model_from_hessian(np.diag([-2.0, -1.0, -0.5]))
    es = solve_extreme_set(m)
    w = voxel_contains_extreme(m, es, r=1.0)
    assert np.allclose(w, 0.0)


def test_box_arithmetic_r_sweep():
    # line dp = (0.6, 0, 0) + t (0,0,1): misses the unit box, hit at r=2
    m = model_from_hessian(np.diag([-2.0, -1.0, 0.0]), grad=[1.2, 0.0, 0.0])
    es = solve_extreme_set(m)
    assert es.kind == "line"
    assert np.allclose(es.point, [0.6, 0, 0])
    assert voxel_contains_extreme(m, es, r=1.0) is None
    w = voxel_contains_extreme(m, es, r=2.0)
    assert w is not None and abs(w[0] - 0.6) < 1e-12


def test_box_containment_matches_dense_sampling():
    rng = np.random.default_rng(3)
    for _ in range(200):
        q = rng.normal(scale=1.5, size=3)
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        m = model_from_hessian(np.diag([-2.0, -1.0, -0.5]))
        es = type(solve_extreme_set(m))("line", point=q - np.dot(q, d) * d, direction=d)
        r = float(rng.uniform(1.0, 4.0))
        got = voxel_contains_extreme(m, es, r) is not None
        ts = np.linspace(-50, 50, 10001)
        pts = es.point[None, :] + ts[:, None] * d[None, :]
        dense = bool((np.abs(pts) <= r * 0.5 + 1e-12).all(axis=1).any())
        assert got == dense


def test_witness_displacement_is_min_norm():
    rng = np.random.default_rng(17)
    for _ in range(100):
        A = rng.normal(size=(3, 3))
        A = (A + A.T) / 2 - 2 * np.eye(3)
        grad = rng.normal(scale=0.1, size=3)
        m = model_from_hessian(A, grad=grad)
        es = solve_extreme_set(m)
        if es.kind != "line":
            continue
        # point is the minimum-norm solution: orthogonal to the direction
        assert abs(np.dot(es.point, es.direction)) < 1e-9


# -- ridge condition ---------------------------------------------------------

def test_condition_two():
    m = model_from_hessian(np.diag([-4.0, -1.0, 0.0]))
    assert is_ridge_point(m, None)
    m = model_from_hessian(np.diag([-4.0, 1.0, 0.5]))
    assert not is_ridge_point(m, None)


def test_condition_two_tolerance():
    m = model_from_hessian(np.diag([-4.0, -1e-14, 0.0]))
    # |l2| is far below 1e-12 * ||H|| -> treated as zero -> fails
    assert not is_ridge_point(m, None, eigen_tolerance=1e-12)
