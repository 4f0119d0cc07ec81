"""Two-layer spectral GCN forward passes and softmax prediction."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidParameter, ShapeError
from .filters import FilterSpec, KernelOperator


class Variant(str, Enum):
    FULL = "full"
    LOW_RANK = "low-rank"
    REDUCED = "reduced"


@dataclass
class ModelParams:
    theta1: np.ndarray
    theta2: np.ndarray

    def __post_init__(self):
        self.theta1 = np.asarray(self.theta1, dtype=float)
        self.theta2 = np.asarray(self.theta2, dtype=float)
        if self.theta1.ndim != 2 or self.theta2.ndim != 2:
            raise ShapeError("weights must be matrices")
        if self.theta1.shape[1] != self.theta2.shape[0]:
            raise ShapeError(
                f"hidden widths disagree: {self.theta1.shape} and {self.theta2.shape}"
            )
        if not (np.all(np.isfinite(self.theta1)) and np.all(np.isfinite(self.theta2))):
            raise InvalidParameter("weights must be finite")

    def copy(self) -> "ModelParams":
        return ModelParams(self.theta1.copy(), self.theta2.copy())


@dataclass(frozen=True)
class ArchitectureConfig:
    variant: Variant
    n_in: int
    n_hidden: int
    n_out: int
    filter: FilterSpec

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if min(self.n_in, self.n_hidden, self.n_out) < 1:
            raise InvalidParameter("layer widths must be positive")
        if self.variant is not Variant.FULL and self.filter.rank is None:
            raise InvalidParameter(f"{self.variant.value} architecture needs a rank")


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _check_shapes(n: int, x: np.ndarray, params: ModelParams):
    if x.ndim != 2 or x.shape[0] != n:
        raise ShapeError(f"input has shape {x.shape}, operator expects {n} rows")
    if x.shape[1] != params.theta1.shape[0]:
        raise ShapeError(
            f"input width {x.shape[1]} does not match first weight {params.theta1.shape}"
        )


def forward_full(kernel: KernelOperator, x, params: ModelParams, activation=relu) -> np.ndarray:
    """``K act(K X T1) T2``; used for both full-rank and low-rank kernels."""
    x = np.asarray(x, dtype=float)
    _check_shapes(kernel.n, x, params)
    hidden = activation(kernel.apply(x) @ params.theta1)
    return kernel.apply(hidden) @ params.theta2


def forward_reduced(vectors, phi, x, params: ModelParams, activation=relu) -> np.ndarray:
    """``U phi act(phi U^T X T1) T2``: hidden layers live on ``r`` rows.

    ``activation`` can be swapped for the identity, in which case the result
    equals :func:`forward_full` with the matching low-rank kernel.
    """
    vectors = np.asarray(vectors, dtype=float)
    phi = np.asarray(phi, dtype=float)
    x = np.asarray(x, dtype=float)
    if phi.shape != (vectors.shape[1],):
        raise ShapeError(f"{phi.shape[0]} filter values for {vectors.shape[1]} eigenvectors")
    _check_shapes(vectors.shape[0], x, params)
    hidden = activation(phi[:, None] * (vectors.T @ x) @ params.theta1)
    return vectors @ (phi[:, None] * hidden @ params.theta2)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def predict(logits) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise class probabilities and labels; ties go to the lowest class."""
    logits = np.asarray(logits, dtype=float)
    return softmax(logits), np.argmax(logits, axis=1)
