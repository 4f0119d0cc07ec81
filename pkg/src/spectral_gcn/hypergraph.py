"""Hypergraphs, their Laplacian, and structured operators built from the incidence.

With few hyperedges the Laplacian is the identity minus a rank-``|E|``
matrix, so everything here is expressed through the ``n x |E|`` incidence
and never through an ``n x n`` array, except for the ``*_dense`` helpers that
exist for small instances and test oracles.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InsufficientRank, InvalidParameter, IsolatedNode
from .graph import Graph, Smoother, SmootherKind, build_smoothed_laplacian
from .linalg import LinearOperator, SymEigResult, ThinSvdResult, normalize_signs, thin_svd


class Hypergraph:
    """Node count, hyperedges as node-index arrays, positive edge weights.

    Duplicate and singleton hyperedges are allowed. Instances are treated as
    immutable once built.
    """

    def __init__(self, n: int, edges: Sequence[Sequence[int]], weights=None):
        self.n = int(n)
        self.edges = tuple(np.unique(np.asarray(e, dtype=np.int64)) for e in edges)
        for k, e in enumerate(self.edges):
            if e.size == 0:
                raise InvalidParameter(f"hyperedge {k} is empty")
            if e[0] < 0 or e[-1] >= self.n:
                raise InvalidParameter(f"hyperedge {k} has node indices outside [0, {self.n})")
        if weights is None:
            weights = np.ones(len(self.edges))
        self.edge_weights = np.asarray(weights, dtype=float)
        if self.edge_weights.shape != (len(self.edges),):
            raise InvalidParameter("need exactly one weight per hyperedge")
        if np.any(self.edge_weights <= 0):
            raise InvalidParameter("hyperedge weights must be positive")

        h = np.zeros((self.n, len(self.edges)))
        for k, e in enumerate(self.edges):
            h[e, k] = 1.0
        self.incidence = h
        self.edge_degrees = h.sum(axis=0)
        self.node_degrees = h @ self.edge_weights

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @classmethod
    def from_incidence(cls, h, weights=None) -> "Hypergraph":
        h = np.asarray(h)
        return cls(h.shape[0], [np.flatnonzero(h[:, k]) for k in range(h.shape[1])], weights)

    def subhypergraph(self, nodes) -> "Hypergraph":
        """Induced hypergraph on ``nodes``; hyperedges left empty are dropped."""
        nodes = np.asarray(nodes)
        sub = self.incidence[nodes]
        keep = sub.sum(axis=0) > 0
        return Hypergraph.from_incidence(sub[:, keep], self.edge_weights[keep])


def _inv_sqrt_positive(d: np.ndarray) -> np.ndarray:
    bad = np.flatnonzero(~(d > 0))
    if bad.size:
        raise IsolatedNode(bad[0])
    return 1.0 / np.sqrt(d)


def loop_weights(hg: Hypergraph) -> np.ndarray:
    """Self-loop weight of each node in the clique expansion, ``sum_e h_ie w_e / |e|``."""
    return hg.incidence @ (hg.edge_weights / hg.edge_degrees)


def normalized_incidence(hg: Hypergraph) -> np.ndarray:
    """``D_V^{-1/2} H W_E^{1/2} D_E^{-1/2}``, so that the Laplacian is ``I - Ht Ht^T``."""
    s = _inv_sqrt_positive(hg.node_degrees)
    return s[:, None] * hg.incidence * np.sqrt(hg.edge_weights / hg.edge_degrees)[None, :]


def laplacian_dense(hg: Hypergraph) -> np.ndarray:
    ht = normalized_incidence(hg)
    lap = -(ht @ ht.T)
    lap[np.diag_indices_from(lap)] += 1.0
    return lap


def make_smoother(hg: Hypergraph, kind) -> Smoother:
    kind = SmootherKind(kind)
    if kind is SmootherKind.NONE:
        return Smoother.none(hg.n)
    if kind is SmootherKind.IDENTITY:
        return Smoother.identity(hg.n)
    s_h = loop_weights(hg)
    if kind is SmootherKind.HYPERGRAPH:
        return Smoother(kind, s_h)
    return Smoother(kind, s_h + 1.0)


def as_smoothed_graph(hg: Hypergraph) -> tuple[Graph, Smoother]:
    """Split the clique expansion into a loop-free graph plus its loop smoother."""
    _inv_sqrt_positive(hg.node_degrees)
    w_h = (hg.incidence * (hg.edge_weights / hg.edge_degrees)) @ hg.incidence.T
    s_h = np.diag(w_h).copy()
    np.fill_diagonal(w_h, 0.0)
    return Graph(w_h, w_h.sum(axis=1)), Smoother(SmootherKind.HYPERGRAPH, s_h)


@dataclass(frozen=True)
class StructuredOperator:
    """``diag(d) + F C F^T`` with a thin factor ``F`` and a small signed core ``C``."""

    diag: np.ndarray
    factor: np.ndarray
    core: np.ndarray

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        vec = x.ndim == 1
        if vec:
            x = x[:, None]
        out = self.diag[:, None] * x + self.factor @ (self.core @ (self.factor.T @ x))
        return out[:, 0] if vec else out

    __call__ = apply

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + self.factor @ self.core @ self.factor.T

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(self.n, self.apply)


def smoothed_operator(hg: Hypergraph, smoother: Smoother) -> StructuredOperator:
    """The smoothed Laplacian of the clique expansion as diagonal minus ``Z Z^T``.

    With normalizer ``N = D_V + S - S_H`` the diagonal part is
    ``1 - (S - S_H) / N`` and ``Z = N^{-1/2} H (W_E D_E^{-1})^{1/2}``.
    """
    s_h = loop_weights(hg)
    if smoother.kind is SmootherKind.HYPERGRAPH:
        extra = np.zeros(hg.n)
    else:
        extra = smoother.diagonal - s_h
    normalizer = hg.node_degrees + extra
    inv_sqrt = _inv_sqrt_positive(normalizer)
    z = inv_sqrt[:, None] * hg.incidence * np.sqrt(hg.edge_weights / hg.edge_degrees)[None, :]
    return StructuredOperator(1.0 - extra / normalizer, z, -np.eye(hg.num_edges))


def smoothed_laplacian_dense(hg: Hypergraph, smoother: Smoother) -> np.ndarray:
    g, _ = as_smoothed_graph(hg)
    return build_smoothed_laplacian(g, smoother)


def _eigenvalue_one_completion(basis: np.ndarray, count: int, seed: int) -> np.ndarray:
    """Orthonormal vectors orthogonal to ``basis``; all are eigenvectors for eigenvalue 1."""
    rng = np.random.default_rng(seed)
    block = rng.standard_normal((basis.shape[0], count))
    for _ in range(2):
        block -= basis @ (basis.T @ block)
    q, _ = np.linalg.qr(block)
    for _ in range(2):
        q -= basis @ (basis.T @ q)
        q, _ = np.linalg.qr(q)
    return normalize_signs(q)


def incidence_svd(hg: Hypergraph) -> ThinSvdResult:
    """Thin SVD of the normalized incidence, also when there are more edges than nodes."""
    ht = normalized_incidence(hg)
    if ht.shape[1] <= ht.shape[0]:
        return thin_svd(ht)
    svd = thin_svd(ht.T)
    return ThinSvdResult(svd.singular_values, svd.right_vectors, svd.left_vectors)


def eig_via_svd(hg: Hypergraph, k: int, *, complete: bool = False, seed: int = 0) -> SymEigResult:
    """The ``k`` smallest Laplacian eigenpairs from the thin SVD of the normalized incidence.

    Each nonzero singular value gives ``lambda = 1 - sigma^2``. If ``k`` exceeds
    the incidence rank ``R`` this raises :class:`InsufficientRank`, unless
    ``complete`` is set: then the remaining ``k - R`` pairs are taken from the
    eigenvalue-1 eigenspace (the orthogonal complement of the left singular
    vectors), drawn deterministically from ``seed``.
    """
    svd = incidence_svd(hg)
    rank = svd.rank
    if k > rank and not (complete and k <= hg.n):
        raise InsufficientRank(k, rank)
    take = min(k, rank)
    vals = 1.0 - svd.singular_values[:take] ** 2
    vecs = svd.left_vectors[:, :take]
    if k > take:
        extra = _eigenvalue_one_completion(svd.left_vectors, k - take, seed)
        vals = np.concatenate([vals, np.ones(k - take)])
        vecs = np.hstack([vecs, extra])
    return SymEigResult(np.clip(vals, 0.0, 1.0), vecs)
