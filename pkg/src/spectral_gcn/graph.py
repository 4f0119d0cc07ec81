"""Weighted graphs, normalized and smoothed Laplacians, Gaussian-kernel graphs."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidMatrix, InvalidParameter, IsolatedNode
from .linalg import LinearOperator


class SmootherKind(str, Enum):
    NONE = "none"
    IDENTITY = "identity"
    HYPERGRAPH = "hypergraph"
    COMBINED = "combined"


@dataclass(frozen=True)
class Graph:
    adjacency: np.ndarray
    degrees: np.ndarray

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def from_adjacency(cls, w) -> "Graph":
        w = np.asarray(w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InvalidMatrix(f"adjacency must be square, got {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidMatrix("adjacency entries must be finite and non-negative")
        if not np.allclose(w, w.T, rtol=0, atol=1e-12 * max(1.0, np.abs(w).max(initial=0))):
            raise InvalidMatrix("adjacency must be symmetric")
        return cls(w, w.sum(axis=1))


@dataclass(frozen=True)
class Smoother:
    """Diagonal matrix of loop weights added to adjacency and degree."""

    kind: SmootherKind
    diagonal: np.ndarray

    def __post_init__(self):
        if np.any(self.diagonal < 0):
            raise InvalidParameter("smoother entries must be non-negative")
        if self.kind is not SmootherKind.NONE and np.any(self.diagonal <= 0):
            raise InvalidParameter(f"{self.kind.value} smoother needs positive entries")

    @classmethod
    def none(cls, n: int) -> "Smoother":
        return cls(SmootherKind.NONE, np.zeros(n))

    @classmethod
    def identity(cls, n: int) -> "Smoother":
        return cls(SmootherKind.IDENTITY, np.ones(n))


def _inv_sqrt_degrees(d: np.ndarray) -> np.ndarray:
    bad = np.flatnonzero(~(d > 0))
    if bad.size:
        raise IsolatedNode(bad[0])
    return 1.0 / np.sqrt(d)


def build_laplacian(g: Graph) -> np.ndarray:
    """``I - D^{-1/2} W D^{-1/2}``."""
    s = _inv_sqrt_degrees(g.degrees)
    lap = -(s[:, None] * g.adjacency * s[None, :])
    lap[np.diag_indices_from(lap)] += 1.0
    return lap


def build_smoothed_laplacian(g: Graph, smoother: Smoother) -> np.ndarray:
    """``(D+S)^{-1/2} (D-W) (D+S)^{-1/2}``; the zero smoother gives the plain Laplacian."""
    if not np.any(smoother.diagonal):
        return build_laplacian(g)
    s = _inv_sqrt_degrees(g.degrees + smoother.diagonal)
    lap = -(s[:, None] * g.adjacency * s[None, :])
    lap[np.diag_indices_from(lap)] += g.degrees * s * s
    return lap


def _check_points(points, sigma):
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if sigma <= 0:
        raise InvalidParameter(f"sigma must be positive, got {sigma}")
    if points.shape[0] < 2:
        raise InvalidParameter("need at least two points")
    return points


def _kernel_block(points, sq_norms, rows, sigma):
    block = points[rows] @ points.T
    block *= -2.0
    block += sq_norms[rows, None]
    block += sq_norms[None, :]
    np.maximum(block, 0.0, out=block)
    block *= -1.0 / (sigma * sigma)
    np.exp(block, out=block)
    return block


def gaussian_graph(points, sigma: float) -> Graph:
    """Fully connected loop-free graph with ``W_ij = exp(-|x_i - x_j|^2 / sigma^2)``."""
    points = _check_points(points, sigma)
    diff = points[:, None, :] - points[None, :, :]
    w = np.exp(-np.einsum("ijk,ijk->ij", diff, diff) / sigma**2)
    np.fill_diagonal(w, 0.0)
    return Graph(w, w.sum(axis=1))


@dataclass(frozen=True)
class GaussianLaplacian(LinearOperator):
    degrees: np.ndarray = None


def gaussian_laplacian_operator(points, sigma: float, block_rows: int = 1000) -> GaussianLaplacian:
    """Products with the Gaussian-graph Laplacian without storing ``W``.

    Kernel entries are recomputed on the fly in row blocks, so memory stays
    ``O(block_rows * n)`` while each product costs ``O(n^2 d)``.
    """
    points = _check_points(points, sigma)
    n = points.shape[0]
    sq = np.einsum("ij,ij->i", points, points)
    starts = range(0, n, block_rows)

    def adjacency_times(x):
        out = np.empty((n, x.shape[1]))
        for start in starts:
            rows = slice(start, min(start + block_rows, n))
            out[rows] = _kernel_block(points, sq, rows, sigma) @ x
        # the kernel block has exp(0) = 1 on the diagonal; W does not
        out -= x
        return out

    degrees = adjacency_times(np.ones((n, 1)))[:, 0]
    inv_sqrt = _inv_sqrt_degrees(degrees)

    def apply(x):
        return x - inv_sqrt[:, None] * adjacency_times(inv_sqrt[:, None] * x)

    return GaussianLaplacian(n, apply, degrees)
