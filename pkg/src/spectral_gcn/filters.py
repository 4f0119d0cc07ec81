"""Spectral filters, low-rank truncation and kernel operators.

A kernel is ``U phi(Lambda) U^T`` for a Laplacian ``U Lambda U^T``. Which
representation is used depends on what is known about the Laplacian:

* :class:`DenseKernel`: explicit ``n x n`` matrix (the naive path).
* :class:`DiagonalPlusLowRankKernel`: ``diag(d) + F C F^T``; covers linear
  and polynomial filters on hypergraph Laplacians and full-rank spectral
  filters computed from the incidence SVD.
* :class:`PolynomialKernel`: repeated products with a Laplacian operator,
  for polynomial filters under arbitrary smoothers.
* :class:`LowRankKernel`: ``U_r phi(Lambda_r) U_r^T`` from ``r`` dominant pairs.
* :class:`ReducedDiagonalKernel`: the same pairs, consumed in the spectral
  domain by the reduced-order network.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from math import comb

import numpy as np

from .errors import DenseCapExceeded, InsufficientRank, InvalidParameter
from .hypergraph import Hypergraph, StructuredOperator, incidence_svd, normalized_incidence
from .linalg import (
    ZERO_EIGENVALUE_TOL,
    LinearOperator,
    SymEigResult,
    power_iteration_max,
    sym_eig_dense,
)

log = logging.getLogger(__name__)

DEFAULT_DENSE_CAP = 10_000


class FilterKind(str, Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    PSEUDOINVERSE = "pinv"
    POLYNOMIAL = "poly"


@dataclass(frozen=True)
class FilterSpec:
    kind: FilterKind
    coefficients: tuple = ()
    rank: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", FilterKind(self.kind))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.kind is FilterKind.POLYNOMIAL:
            if not self.coefficients or self.coefficients[-1] == 0.0:
                raise InvalidParameter("polynomial filter needs a nonzero leading coefficient")
        if self.rank is not None and self.rank < 1:
            raise InvalidParameter(f"rank must be at least 1, got {self.rank}")

    @classmethod
    def parse(cls, text: str, rank: int | None = None) -> "FilterSpec":
        text = text.strip()
        if text.startswith("poly:"):
            coeffs = tuple(float(c) for c in text[5:].split(",") if c.strip())
            return cls(FilterKind.POLYNOMIAL, coeffs, rank)
        try:
            return cls(FilterKind(text), (), rank)
        except ValueError:
            raise InvalidParameter(f"unknown filter {text!r}") from None

    def __str__(self):
        if self.kind is FilterKind.POLYNOMIAL:
            return "poly:" + ",".join(repr(c) for c in self.coefficients)
        return self.kind.value

    @property
    def is_polynomial(self) -> bool:
        return self.kind is not FilterKind.PSEUDOINVERSE

    def polynomial_coefficients(self, lambda_n: float) -> tuple:
        """Coefficients ``a_0..a_p`` of ``phi(lambda) = sum_j a_j lambda^j``."""
        if self.kind is FilterKind.LINEAR:
            return (1.0, -1.0 / lambda_n)
        if self.kind is FilterKind.QUADRATIC:
            return (1.0, -2.0 / lambda_n, 1.0 / lambda_n**2)
        if self.kind is FilterKind.POLYNOMIAL:
            return self.coefficients
        raise InvalidParameter("the pseudoinverse filter is not a polynomial")

    def with_rank(self, rank):
        return FilterSpec(self.kind, self.coefficients, rank)


def eval_filter(f: FilterSpec, lam, lambda_2: float = 1.0, lambda_n: float = 1.0):
    """Filter values; named filters are scaled so that their maximum is 1."""
    lam = np.asarray(lam, dtype=float)
    if f.kind is FilterKind.PSEUDOINVERSE:
        nonzero = lam > ZERO_EIGENVALUE_TOL
        safe = np.where(nonzero, lam, 1.0)
        return np.where(nonzero, lambda_2 / safe, 0.0)
    coeffs = f.polynomial_coefficients(lambda_n)
    return np.polynomial.polynomial.polyval(lam, coeffs)


def smallest_nonzero(eigenvalues) -> float:
    vals = np.asarray(eigenvalues)
    nonzero = vals[vals > ZERO_EIGENVALUE_TOL]
    if nonzero.size == 0:
        raise InsufficientRank(1, 0, "no eigenvalue above the zero threshold")
    return float(nonzero.min())


def pinv_scale(spectrum) -> float:
    """``lambda_2`` for the pseudoinverse filter over a complete spectrum.

    A zero Laplacian has no nonzero eigenvalue; its pseudoinverse kernel is
    zero whatever the scale, so 1 is returned.
    """
    try:
        return smallest_nonzero(spectrum)
    except InsufficientRank:
        return 1.0


@dataclass(frozen=True)
class SpectralBasis:
    """Computed eigenpairs plus the spectrum bounds the named filters need."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    lambda_2: float
    lambda_n: float

    def __post_init__(self):
        if self.lambda_2 <= ZERO_EIGENVALUE_TOL:
            raise InvalidParameter("lambda_2 must exceed the zero-eigenvalue threshold")
        if self.eigenvectors.shape[1] != len(self.eigenvalues):
            raise InvalidParameter("eigenvector count does not match eigenvalue count")

    @classmethod
    def from_eig(cls, eig: SymEigResult, lambda_n: float, lambda_2: float | None = None):
        if lambda_2 is None:
            lambda_2 = smallest_nonzero(eig.eigenvalues)
        return cls(np.asarray(eig.eigenvalues), np.asarray(eig.eigenvectors), lambda_2, lambda_n)

    @property
    def n(self) -> int:
        return self.eigenvectors.shape[0]

    def __len__(self):
        return len(self.eigenvalues)

    def filter_values(self, f: FilterSpec) -> np.ndarray:
        return eval_filter(f, self.eigenvalues, self.lambda_2, self.lambda_n)


def eigenpairs_needed(f: FilterSpec, r: int) -> int:
    """Smallest eigenpairs to compute for a rank-``r`` filter (one more for pinv)."""
    return r + 1 if f.kind is FilterKind.PSEUDOINVERSE else r


def select_dominant(eigenvalues, f: FilterSpec, r: int, lambda_2=None, lambda_n=None) -> np.ndarray:
    """Indices of the ``r`` eigenvalues with largest ``|phi|``, ascending by eigenvalue.

    Ties in ``|phi|`` go to the smaller eigenvalue. For the pseudoinverse
    filter eigenvalues below the zero threshold are never candidates.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lambda_n is None:
        lambda_n = float(lam.max())
    if lambda_2 is None and f.kind is FilterKind.PSEUDOINVERSE:
        lambda_2 = smallest_nonzero(lam)
    candidates = np.arange(lam.size)
    if f.kind is FilterKind.PSEUDOINVERSE:
        candidates = candidates[lam > ZERO_EIGENVALUE_TOL]
    if candidates.size < r:
        raise InsufficientRank(r, candidates.size)
    mag = np.abs(eval_filter(f, lam[candidates], lambda_2 or 1.0, lambda_n))
    order = np.lexsort((lam[candidates], -mag))
    chosen = candidates[order[:r]]
    return np.sort(chosen)


class KernelOperator:
    """Common surface: ``apply`` (``X -> K X``) and ``to_dense`` for checks."""

    n: int

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        return self.apply(x)

    def to_dense(self) -> np.ndarray:
        return self.apply(np.eye(self.n))

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(self.n, self.apply)


@dataclass(frozen=True, eq=False)
class DenseKernel(KernelOperator):
    matrix: np.ndarray

    @property
    def n(self):
        return self.matrix.shape[0]

    def apply(self, x):
        return self.matrix @ x

    def to_dense(self):
        return self.matrix.copy()


@dataclass(frozen=True, eq=False)
class DiagonalPlusLowRankKernel(KernelOperator):
    operator: StructuredOperator
    rank: int | None = None

    @property
    def n(self):
        return self.operator.n

    def apply(self, x):
        return self.operator.apply(x)

    def to_dense(self):
        return self.operator.to_dense()


@dataclass(frozen=True, eq=False)
class PolynomialKernel(KernelOperator):
    """``sum_j a_j L^j X`` by Horner's rule, needing only products with ``L``."""

    laplacian: LinearOperator
    coefficients: tuple

    @property
    def n(self):
        return self.laplacian.dim

    def apply(self, x):
        out = self.coefficients[-1] * x
        for a in reversed(self.coefficients[:-1]):
            out = self.laplacian(out) + a * x
        return out


@dataclass(frozen=True, eq=False)
class LowRankKernel(KernelOperator):
    vectors: np.ndarray
    phi: np.ndarray
    eigenvalues: np.ndarray = field(default=None)

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def rank(self):
        return self.vectors.shape[1]

    def apply(self, x):
        return self.vectors @ (self.phi[:, None] * (self.vectors.T @ x))


@dataclass(frozen=True, eq=False)
class ReducedDiagonalKernel(LowRankKernel):
    """Dominant pairs for the reduced-order network.

    ``apply`` still gives the low-rank kernel so the operator can be checked
    against the others; the network uses ``vectors`` and ``phi`` directly.
    """


def _dominant(basis: SpectralBasis, f: FilterSpec, r: int):
    idx = select_dominant(basis.eigenvalues, f, r, basis.lambda_2, basis.lambda_n)
    phi = eval_filter(f, basis.eigenvalues[idx], basis.lambda_2, basis.lambda_n)
    return basis.eigenvectors[:, idx], phi, basis.eigenvalues[idx]


def truncate_dominant(basis: SpectralBasis, f: FilterSpec, r: int) -> LowRankKernel:
    """Best rank-``r`` approximation of the filter kernel from its dominant pairs."""
    vecs, phi, lam = _dominant(basis, f, r)
    return LowRankKernel(vecs, phi, lam)


def reduce_dominant(basis: SpectralBasis, f: FilterSpec, r: int) -> ReducedDiagonalKernel:
    vecs, phi, lam = _dominant(basis, f, r)
    return ReducedDiagonalKernel(vecs, phi, lam)


def build_kernel_linear_structured(laplacian: StructuredOperator, a0: float, a1: float):
    """``a0 I + a1 L`` for a Laplacian given as diagonal plus low rank."""
    op = StructuredOperator(a0 + a1 * laplacian.diag, laplacian.factor, a1 * laplacian.core)
    return DiagonalPlusLowRankKernel(op, laplacian.factor.shape[1])


def taylor_coefficients_at_one(coeffs) -> np.ndarray:
    """``b_j = sum_{i>=j} C(i, j) a_i``, the expansion of the polynomial around 1."""
    p = len(coeffs) - 1
    return np.array([sum(comb(i, j) * coeffs[i] for i in range(j, p + 1)) for j in range(p + 1)])


def build_kernel_polynomial_structured(hg: Hypergraph, coeffs) -> DiagonalPlusLowRankKernel:
    """``sum_j a_j L^j = b_0 I + Ht M Ht^T`` for the hypergraph Laplacian ``I - Ht Ht^T``.

    ``M = sum_{j>=1} (-1)^j b_j (Ht^T Ht)^{j-1}`` is ``|E| x |E|`` and built once.
    """
    b = taylor_coefficients_at_one(list(coeffs))
    ht = normalized_incidence(hg)
    gram = ht.T @ ht
    m = np.zeros_like(gram)
    power = np.eye(gram.shape[0])
    for j in range(1, len(b)):
        m += (-1) ** j * b[j] * power
        power = power @ gram
    op = StructuredOperator(np.full(hg.n, b[0]), ht, m)
    return DiagonalPlusLowRankKernel(op, hg.num_edges)


def build_kernel_fullrank_spectral(hg: Hypergraph, f: FilterSpec, svd=None) -> DiagonalPlusLowRankKernel:
    """``phi(1) I + U_R (phi(Lambda_R) - phi(1)) U_R^T`` from the incidence SVD.

    All eigenvalues outside the ``R`` singular directions equal 1, so the
    kernel is exact. A rank-deficient incidence is logged and the actual ``R``
    is used.
    """
    if svd is None:
        svd = incidence_svd(hg)
    if svd.rank < hg.num_edges:
        log.info("normalized incidence has rank %d < %d hyperedges", svd.rank, hg.num_edges)
    lam = 1.0 - svd.singular_values**2
    spectrum = lam if svd.rank == hg.n else np.append(lam, 1.0)
    lambda_2 = pinv_scale(spectrum)
    phi = eval_filter(f, lam, lambda_2, 1.0)
    phi_one = float(eval_filter(f, np.array([1.0]), lambda_2, 1.0)[0])
    op = StructuredOperator(np.full(hg.n, phi_one), svd.left_vectors, np.diag(phi - phi_one))
    return DiagonalPlusLowRankKernel(op, svd.rank)


def build_kernel_polynomial_iterated(laplacian, f: FilterSpec, lambda_n: float):
    """Polynomial filter on a Laplacian known only through products.

    Degree one keeps the diagonal-plus-low-rank form when ``laplacian`` has
    it; higher degrees apply ``L`` once per degree.
    """
    coeffs = f.polynomial_coefficients(lambda_n)
    if isinstance(laplacian, StructuredOperator):
        if len(coeffs) <= 2:
            a1 = coeffs[1] if len(coeffs) == 2 else 0.0
            return build_kernel_linear_structured(laplacian, coeffs[0], a1)
        laplacian = laplacian.as_linear_operator()
    return PolynomialKernel(laplacian, tuple(coeffs))


def build_kernel_dense(
    laplacian: np.ndarray,
    f: FilterSpec,
    lambda_n: float | None = None,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> DenseKernel:
    """Explicit kernel matrix (the naive path).

    Polynomial filters are assembled by matrix products; the pseudoinverse
    needs a full dense eigendecomposition.
    """
    laplacian = np.asarray(laplacian, dtype=float)
    n = laplacian.shape[0]
    if n > dense_cap:
        raise DenseCapExceeded(f"dense kernel of size {n} exceeds the cap of {dense_cap}")
    if f.kind is FilterKind.PSEUDOINVERSE:
        eig = sym_eig_dense(laplacian)
        lambda_2 = pinv_scale(eig.eigenvalues)
        phi = eval_filter(f, eig.eigenvalues, lambda_2, lambda_n or eig.eigenvalues[-1])
        return DenseKernel((eig.eigenvectors * phi) @ eig.eigenvectors.T)
    if lambda_n is None:
        lambda_n = power_iteration_max(LinearOperator.from_matrix(laplacian))
    coeffs = f.polynomial_coefficients(lambda_n)
    k = coeffs[-1] * np.eye(n)
    for a in reversed(coeffs[:-1]):
        k = laplacian @ k
        k[np.diag_indices(n)] += a
    return DenseKernel(k)
