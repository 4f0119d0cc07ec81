"""Dense and Krylov eigensolvers used throughout the package.

Matrices are plain ``numpy`` arrays. Anything that only needs products with
a symmetric matrix takes a :class:`LinearOperator` instead, so Gaussian-kernel
Laplacians and structured hypergraph operators can be fed to the same solvers
as assembled matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceFailure, InvalidMatrix, ShapeError

ZERO_EIGENVALUE_TOL = 1e-8
SVD_RANK_TOL = 1e-10


@dataclass(frozen=True)
class LinearOperator:
    """A symmetric linear map given only through its action on blocks of vectors."""

    dim: int
    apply: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.dim:
            raise ShapeError(f"operator of dim {self.dim} applied to {x.shape[0]} rows")
        return self.apply(x)

    @classmethod
    def from_matrix(cls, a: np.ndarray) -> "LinearOperator":
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidMatrix(f"expected a square matrix, got shape {a.shape}")
        return cls(a.shape[0], lambda x: a @ x)

    def to_dense(self) -> np.ndarray:
        """Assemble the matrix column by column (test oracle only)."""
        return self(np.eye(self.dim))


@dataclass(frozen=True)
class SymEigResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __len__(self):
        return len(self.eigenvalues)


@dataclass(frozen=True)
class ThinSvdResult:
    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.singular_values)


def normalize_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so that the entry of largest magnitude is positive.

    Ties go to the lowest row index (``argmax`` picks the first maximum).
    """
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _check_symmetric(a: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidMatrix("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if a.size and np.max(np.abs(a - a.T)) > tol * scale:
        raise InvalidMatrix("matrix is not symmetric")
    return a


def sym_eig_dense(a: np.ndarray) -> SymEigResult:
    """Full eigendecomposition of a symmetric matrix, eigenvalues ascending."""
    a = _check_symmetric(a)
    vals, vecs = np.linalg.eigh(0.5 * (a + a.T))
    return SymEigResult(vals, normalize_signs(vecs))


def lanczos_smallest(
    op: LinearOperator,
    k: int,
    shift: float = 2.0,
    tol: float = 1e-8,
    *,
    seed: int = 0,
    max_iter: int | None = None,
    check_every: int = 5,
) -> SymEigResult:
    """The ``k`` smallest eigenpairs of a symmetric operator.

    Runs Lanczos with full reorthogonalization on ``shift*I - op`` so that the
    wanted eigenvalues become the largest ones, then maps back via
    ``lambda = shift - mu``. ``shift`` must bound the spectrum from above.
    On an invariant subspace the recursion restarts with a fresh random vector
    orthogonal to the basis, which recovers repeated eigenvalues.
    """
    n = op.dim
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < dim, got k={k}, dim={n}")
    if max_iter is None:
        max_iter = max(300, 20 * k)
    max_iter = min(max_iter, n)

    rng = np.random.default_rng(seed)
    basis = np.zeros((n, max_iter))
    alphas = np.zeros(max_iter)
    betas = np.zeros(max_iter)
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    scale = 1.0
    residuals = None

    for j in range(max_iter):
        basis[:, j] = q
        w = shift * q - op(q[:, None])[:, 0]
        alphas[j] = q @ w
        w -= alphas[j] * q
        if j > 0:
            w -= betas[j - 1] * basis[:, j - 1]
        for _ in range(2):
            w -= basis[:, : j + 1] @ (basis[:, : j + 1].T @ w)
        beta = np.linalg.norm(w)
        scale = max(scale, abs(alphas[j]), beta)
        breakdown = beta <= 1e-12 * scale
        m = j + 1

        # an invariant subspace reached at breakdown may still miss copies of
        # repeated eigenvalues, so convergence is only accepted after a restart
        if m >= k and ((m % check_every == 0 and not breakdown) or m == max_iter):
            theta, s = eigh_tridiagonal(alphas[:m], betas[: m - 1])
            top = np.argsort(theta)[::-1][:k]
            residuals = np.abs((0.0 if breakdown else beta) * s[-1, top])
            if np.all(residuals <= tol) or m == n:
                mu = theta[top]
                vecs = basis[:, :m] @ s[:, top]
                order = np.argsort(shift - mu, kind="stable")
                return SymEigResult((shift - mu)[order], normalize_signs(vecs[:, order]))

        if m == max_iter:
            break
        if breakdown:
            betas[j] = 0.0
            q = rng.standard_normal(n)
            for _ in range(2):
                q -= basis[:, :m] @ (basis[:, :m].T @ q)
            q /= np.linalg.norm(q)
        else:
            betas[j] = beta
            q = w / beta

    raise ConvergenceFailure(
        f"Lanczos did not reach tolerance {tol} within {max_iter} iterations",
        residuals=residuals,
    )


def thin_svd(b: np.ndarray, rank_tol: float = SVD_RANK_TOL) -> ThinSvdResult:
    """Thin SVD of a tall matrix through the eigendecomposition of ``B^T B``.

    Singular values are taken as ``||B v_i||`` rather than ``sqrt(mu_i)``;
    this keeps null directions at roundoff level so that ``rank_tol`` (relative
    to the largest singular value) separates them cleanly.
    """
    b = np.asarray(b, dtype=float)
    rows, cols = b.shape
    if cols > rows:
        raise ShapeError(f"thin_svd expects cols <= rows, got {b.shape}")
    gram = b.T @ b
    mu, v = np.linalg.eigh(0.5 * (gram + gram.T))
    order = np.argsort(mu)[::-1]
    v = v[:, order]
    bv = b @ v
    sigma = np.linalg.norm(bv, axis=0)
    if sigma.size == 0 or sigma[0] == 0.0:
        return ThinSvdResult(np.zeros(0), np.zeros((rows, 0)), np.zeros((cols, 0)))
    keep = sigma > rank_tol * sigma[0]
    # eigh ordering by mu can disagree with ||Bv|| ordering only at roundoff
    sigma, v, bv = sigma[keep], v[:, keep], bv[:, keep]
    order = np.argsort(sigma, kind="stable")[::-1]
    sigma, v, bv = sigma[order], v[:, order], bv[:, order]
    u = bv / sigma
    signs = np.sign(u[np.argmax(np.abs(u), axis=0), np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return ThinSvdResult(sigma, u * signs, v * signs)


def power_iteration_max(
    op: LinearOperator, tol: float = 1e-10, *, seed: int = 0, max_iter: int = 10000
) -> float:
    """Largest eigenvalue of a symmetric positive semi-definite operator.

    Stops once the squared residual of the Rayleigh quotient drops below
    ``tol * theta**2``, which bounds the eigenvalue error at about ``tol``
    relative for a non-degenerate top eigenvalue.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.dim)
    x /= np.linalg.norm(x)
    theta = 0.0
    for _ in range(max_iter):
        y = op(x[:, None])[:, 0]
        theta = float(x @ y)
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        res = np.linalg.norm(y - theta * x)
        if res * res <= tol * theta * theta:
            return theta
        x = y / norm
    raise ConvergenceFailure(f"power iteration did not converge in {max_iter} steps")
