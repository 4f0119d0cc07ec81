import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

import oracles
from spectral_gcn.errors import ConvergenceFailure, InvalidMatrix, ShapeError
from spectral_gcn.linalg import (
    LinearOperator,
    lanczos_smallest,
    normalize_signs,
    power_iteration_max,
    sym_eig_dense,
    thin_svd,
)

S2 = 1 / np.sqrt(2)
PATH3 = np.array([[1, -S2, 0], [-S2, 1, -S2], [0, -S2, 1]])


def orthonormality_error(u):
    return np.max(np.abs(u.T @ u - np.eye(u.shape[1])), initial=0.0)


class TestSymEigDense:
    def test_two_by_two(self):
        res = sym_eig_dense(np.array([[0.5, -0.5], [-0.5, 0.5]]))
        assert_allclose(res.eigenvalues, [0, 1], atol=1e-14)

    def test_identity(self):
        res = sym_eig_dense(np.eye(3))
        assert_allclose(res.eigenvalues, [1, 1, 1])
        assert orthonormality_error(res.eigenvectors) < 1e-12

    def test_path3_laplacian(self):
        assert_allclose(sym_eig_dense(PATH3).eigenvalues, [0, 1, 2], atol=1e-14)

    def test_rejects_asymmetric(self):
        with pytest.raises(InvalidMatrix):
            sym_eig_dense(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(InvalidMatrix):
            sym_eig_dense(np.ones((2, 3)))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 50), st.integers(0, 2**32 - 1))
    def test_reconstruction_and_residuals(self, n, seed):
        a = oracles.random_symmetric(np.random.default_rng(seed), n)
        res = sym_eig_dense(a)
        u, lam = res.eigenvectors, res.eigenvalues
        assert np.all(np.diff(lam) >= 0)
        assert orthonormality_error(u) <= 1e-8
        assert np.max(np.abs((u * lam) @ u.T - a)) <= 1e-8 * np.max(np.abs(a))
        resid = np.linalg.norm(a @ u - u * lam, axis=0)
        assert np.all(resid <= 1e-6 * np.maximum(1, np.abs(lam)))
        assert_allclose(lam, oracles.eigh(a)[0], atol=1e-10)

    def test_sign_convention(self):
        v = normalize_signs(np.array([[0.6, -0.8], [-0.8, 0.6]]))
        assert v[1, 0] == 0.8 and v[0, 1] == 0.8

    def test_sign_tie_goes_to_first_index(self):
        v = normalize_signs(np.array([[-S2], [S2]]))
        assert v[0, 0] > 0


class TestLanczos:
    def test_path3(self):
        res = lanczos_smallest(LinearOperator.from_matrix(PATH3), 2, shift=2.0)
        assert_allclose(res.eigenvalues, [0, 1], atol=1e-10)

    def test_identity_multiplicity(self):
        res = lanczos_smallest(LinearOperator.from_matrix(np.eye(5)), 3, shift=2.0)
        assert_allclose(res.eigenvalues, [1, 1, 1], atol=1e-12)
        assert orthonormality_error(res.eigenvectors) < 1e-10

    def test_repeated_eigenvalues_recovered(self):
        a = np.diag([0.0, 0.3, 0.3, 0.3, 0.9] + [1.5] * 20)
        q, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((25, 25)))
        res = lanczos_smallest(LinearOperator.from_matrix(q @ a @ q.T), 4, shift=2.0)
        assert_allclose(res.eigenvalues, [0, 0.3, 0.3, 0.3], atol=1e-9)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(20, 200), st.integers(1, 8), st.integers(0, 2**32 - 1))
    def test_matches_dense_on_separated_spectrum(self, n, k, seed):
        rng = np.random.default_rng(seed)
        # well separated: gaps of at least 1/(2n) in [0, 1.9]
        lam = np.sort(rng.permutation(np.linspace(0, 1.9, 2 * n))[:n])
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        a = (q * lam) @ q.T
        res = lanczos_smallest(LinearOperator.from_matrix(a), k, shift=2.0, tol=1e-10)
        assert_allclose(res.eigenvalues, oracles.eigh(a)[0][:k], atol=1e-8)
        u = res.eigenvectors
        assert orthonormality_error(u) <= 1e-8
        resid = np.linalg.norm(a @ u - u * res.eigenvalues, axis=0)
        assert np.all(resid <= 1e-6)

    def test_deterministic_per_seed(self):
        a = oracles.random_symmetric(np.random.default_rng(1), 40)
        a = a - np.eye(40) * np.linalg.eigvalsh(a)[0]
        op = LinearOperator.from_matrix(a)
        shift = float(np.abs(a).sum(axis=1).max())
        r1 = lanczos_smallest(op, 3, shift=shift, seed=7)
        r2 = lanczos_smallest(op, 3, shift=shift, seed=7)
        assert np.array_equal(r1.eigenvalues, r2.eigenvalues)
        assert np.array_equal(r1.eigenvectors, r2.eigenvectors)

    def test_convergence_failure_carries_residuals(self):
        a = np.diag(np.linspace(0, 1, 200))
        with pytest.raises(ConvergenceFailure) as exc:
            lanczos_smallest(LinearOperator.from_matrix(a), 5, shift=2.0, tol=1e-14, max_iter=10)
        assert exc.value.residuals is not None and len(exc.value.residuals) == 5

    def test_k_must_be_below_dimension(self):
        with pytest.raises(ValueError):
            lanczos_smallest(LinearOperator.from_matrix(np.eye(3)), 3)


class TestThinSvd:
    def test_unit_column(self):
        res = thin_svd(np.array([[S2], [S2]]))
        assert_allclose(res.singular_values, [1.0])

    def test_zero_matrix(self):
        assert thin_svd(np.zeros((3, 2))).rank == 0

    def test_rejects_wide(self):
        with pytest.raises(ShapeError):
            thin_svd(np.ones((2, 3)))

    def test_detects_rank_deficiency(self):
        b = np.random.default_rng(0).standard_normal((30, 3))
        b = np.hstack([b, b[:, :1] + b[:, 1:2]])
        assert thin_svd(b).rank == 3

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 10), st.integers(0, 40), st.integers(0, 2**32 - 1))
    def test_reconstruction(self, cols, extra_rows, seed):
        b = np.random.default_rng(seed).standard_normal((cols + extra_rows, cols))
        res = thin_svd(b)
        u, s, v = res.left_vectors, res.singular_values, res.right_vectors
        assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
        assert orthonormality_error(u) <= 1e-8 and orthonormality_error(v) <= 1e-8
        assert np.max(np.abs((u * s) @ v.T - b)) <= 1e-8 * np.max(np.abs(b))
        assert_allclose(s, np.linalg.svd(b, compute_uv=False)[: res.rank], rtol=1e-10)


class TestPowerIteration:
    def test_path3(self):
        assert power_iteration_max(LinearOperator.from_matrix(PATH3)) == pytest.approx(2.0, rel=1e-8)

    def test_single_hyperedge_laplacian(self):
        lap = np.eye(3) - np.ones((3, 3)) / 3
        assert power_iteration_max(LinearOperator.from_matrix(lap)) == pytest.approx(1.0, rel=1e-8)

    def test_random_psd(self, rng):
        b = rng.standard_normal((30, 30))
        a = b @ b.T
        top = oracles.eigh(a)[0][-1]
        assert power_iteration_max(LinearOperator.from_matrix(a), tol=1e-14) == pytest.approx(top, rel=1e-6)


class TestLinearOperator:
    def test_row_check(self):
        op = LinearOperator.from_matrix(np.eye(3))
        with pytest.raises(ShapeError):
            op(np.ones((2, 1)))

    def test_linearity_and_symmetry(self, rng):
        a = oracles.random_symmetric(rng, 12)
        op = LinearOperator.from_matrix(a)
        x, y = rng.standard_normal((12, 2)), rng.standard_normal((12, 2))
        assert_allclose(op(2 * x - 3 * y), 2 * op(x) - 3 * op(y), rtol=1e-10, atol=1e-12)
        assert x[:, 0] @ op(y)[:, 0] == pytest.approx(y[:, 0] @ op(x)[:, 0], rel=1e-10)
