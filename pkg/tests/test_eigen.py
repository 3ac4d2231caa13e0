import numpy as np
import pytest

from fingerkit.ridge import model_from_hessian, sym3_eigen
from oracles import eig_char_poly


def test_diagonal_cases():
    eigs, vecs = sym3_eigen(-4.0, 0, 0, -1.0, 0, 0.0)
    assert eigs == (-4.0, -1.0, 0.0)
    assert np.allclose(vecs, np.eye(3))
    # Lindeberg order |l1| >= |l2| >= |l3|
    eigs, _ = sym3_eigen(1.0, 0, 0, -3.0, 0, 2.0)
    assert eigs == (-3.0, 2.0, 1.0)


def test_zero_matrix():
    eigs, vecs = sym3_eigen(0, 0, 0, 0, 0, 0)
    assert eigs == (0.0, 0.0, 0.0)
    assert np.allclose(vecs, np.eye(3))


def test_abs_tie_breaks_by_signed_value():
    eigs, _ = sym3_eigen(2.0, 0, 0, -2.0, 0, 1.0)
    assert eigs == (-2.0, 2.0, 1.0)


def test_random_matches_char_poly_oracle():
    rng = np.random.default_rng(11)
    for _ in range(300):
        A = rng.normal(size=(3, 3))
        A = (A + A.T) / 2
        eigs, vecs = sym3_eigen(A[0, 0], A[0, 1], A[0, 2], A[1, 1], A[1, 2], A[2, 2])
        want, wvecs = eig_char_poly(A)
        assert np.allclose(sorted(eigs), sorted(want), atol=1e-8 * max(1, np.abs(want).max()))
        # eigen equations hold and vectors are orthonormal
        V = np.array(vecs)
        assert np.allclose(V @ V.T, np.eye(3), atol=1e-8)
        for lam, v in zip(eigs, vecs):
            assert np.allclose(A @ np.array(v), lam * np.array(v), atol=1e-7 * max(1, abs(lam)))


def test_clustered_roots_jacobi_path():
    rng = np.random.default_rng(2)
    for _ in range(100):
        # nearly degenerate pair of eigenvalues
        Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        lam = np.array([1.0, 1.0 + 1e-12, -2.0])
        A = Q @ np.diag(lam) @ Q.T
        A = (A + A.T) / 2
        eigs, vecs = sym3_eigen(A[0, 0], A[0, 1], A[0, 2], A[1, 1], A[1, 2], A[2, 2])
        V = np.array(vecs)
        assert np.allclose(V @ V.T, np.eye(3), atol=1e-8)
        for lamv, v in zip(eigs, vecs):
            assert np.allclose(A @ np.array(v), lamv * np.array(v), atol=1e-6)


def test_model_invariants():
    rng = np.random.default_rng(5)
    for _ in range(50):
        A = rng.normal(size=(3, 3))
        A = (A + A.T) / 2
        m = model_from_hessian(A)
        assert np.allclose(m.hess, m.hess.T, atol=1e-10)
        l = np.abs(m.eigvals)
        assert l[0] >= l[1] >= l[2]
        V = np.array(m.eigvecs)
        assert np.abs(V @ V.T - np.eye(3)).max() < 1e-8
