"""Gradient-descent training of the two-layer networks and the multi-run harness.

Gradients are derived by hand for each architecture. ``K X`` (or its reduced
counterpart) is formed once per run, which is the only product with the full
input; every iteration then costs two kernel applications on ``N_1`` and
``m`` columns.
"""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DivergedRun, InvalidDataset, InvalidParameter, ShapeError
from .filters import KernelOperator, ReducedDiagonalKernel
from .network import ModelParams, relu

log = logging.getLogger(__name__)

THREADS_ENV = "SPECTRAL_GCN_THREADS"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.2
    iterations: int = 1000
    rho: float = 0.0005
    runs: int = 100
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidParameter("learning rate must be positive")
        # zero iterations is allowed: it evaluates the random initialization
        if self.iterations < 0:
            raise InvalidParameter("iterations must be non-negative")
        if self.rho < 0:
            raise InvalidParameter("rho must be non-negative")
        if self.runs < 1:
            raise InvalidParameter("need at least one run")


class LabeledDataset:
    """Inputs, 0-based class labels and 0-based training node indices."""

    def __init__(self, x, labels, train_indices, num_classes: int | None = None):
        self.x = np.asarray(x, dtype=float)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.train_indices = np.asarray(train_indices, dtype=np.int64)
        n = self.x.shape[0]
        if self.labels.shape != (n,):
            raise InvalidDataset(f"{self.labels.size} labels for {n} nodes")
        if num_classes is None:
            num_classes = int(self.labels.max()) + 1
        self.num_classes = int(num_classes)
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise InvalidDataset(f"labels must lie in [0, {self.num_classes})")
        if self.train_indices.size == 0:
            raise InvalidDataset("training set is empty")
        if np.unique(self.train_indices).size != self.train_indices.size:
            raise InvalidDataset("training indices contain duplicates")
        if self.train_indices.min() < 0 or self.train_indices.max() >= n:
            raise InvalidDataset(f"training indices must lie in [0, {n})")
        mask = np.ones(n, dtype=bool)
        mask[self.train_indices] = False
        self.test_mask = mask

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @classmethod
    def from_one_based(cls, x, labels, train_indices, num_classes=None) -> "LabeledDataset":
        return cls(x, np.asarray(labels) - 1, np.asarray(train_indices) - 1, num_classes)


def run_seed(base_seed: int, run_index: int) -> int:
    """64-bit seed of one run, derived from the experiment seed and run index."""
    seq = np.random.SeedSequence([int(base_seed), int(run_index)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def run_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def glorot_init(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    if rows < 1 or cols < 1:
        raise InvalidParameter("weight shape must be positive")
    bound = np.sqrt(6.0 / (rows + cols))
    return (2.0 * rng.random((rows, cols)) - 1.0) * bound


def init_params(n_in: int, n_hidden: int, n_out: int, rng) -> ModelParams:
    theta1 = glorot_init(n_in, n_hidden, rng)
    theta2 = glorot_init(n_hidden, n_out, rng)
    return ModelParams(theta1, theta2)


def _train_rows(logits, dataset):
    rows = logits[dataset.train_indices]
    shifted = rows - rows.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    return shifted, log_norm


def loss(logits, dataset: LabeledDataset, params: ModelParams, rho: float) -> float:
    """Mean cross-entropy over training nodes plus ``rho/2 ||T1||_F^2``."""
    logits = np.asarray(logits, dtype=float)
    if logits.shape != (dataset.n, dataset.num_classes):
        raise ShapeError(f"logits {logits.shape} vs {dataset.n} nodes, {dataset.num_classes} classes")
    shifted, log_norm = _train_rows(logits, dataset)
    picked = shifted[np.arange(shifted.shape[0]), dataset.labels[dataset.train_indices]]
    ce = float(np.mean(log_norm - picked))
    return ce + 0.5 * rho * float(np.sum(params.theta1**2))


def _logit_gradient(logits, dataset):
    shifted, log_norm = _train_rows(logits, dataset)
    probs = np.exp(shifted - log_norm[:, None])
    probs[np.arange(probs.shape[0]), dataset.labels[dataset.train_indices]] -= 1.0
    grad = np.zeros_like(logits)
    # dense over all rows on purpose: timings should not depend on how
    # sparse the training set is
    grad[dataset.train_indices] = probs / dataset.train_indices.size
    return grad


class SpatialPropagation:
    """Forward and backward passes of ``K relu(K X T1) T2`` with ``K X`` cached."""

    def __init__(self, kernel: KernelOperator, x, activation=relu):
        self.kernel = kernel
        self.activation = activation
        self.kx = kernel.apply(np.asarray(x, dtype=float))

    def forward(self, params):
        z1 = self.kx @ params.theta1
        g = self.kernel.apply(self.activation(z1))
        return g @ params.theta2, (z1, g)

    def backward(self, params, cache, dlogits):
        z1, g = cache
        d2 = g.T @ dlogits
        dh = self.kernel.apply(dlogits @ params.theta2.T)
        d1 = self.kx.T @ (dh * _activation_slope(self.activation, z1))
        return d1, d2


class SpectralPropagation:
    """Forward and backward passes of ``U phi relu(phi U^T X T1) T2``."""

    def __init__(self, vectors, phi, x, activation=relu):
        self.vectors = np.asarray(vectors, dtype=float)
        self.phi = np.asarray(phi, dtype=float)[:, None]
        self.activation = activation
        self.reduced_x = self.phi * (self.vectors.T @ np.asarray(x, dtype=float))

    def forward(self, params):
        z1 = self.reduced_x @ params.theta1
        g = self.phi * self.activation(z1)
        return self.vectors @ (g @ params.theta2), (z1, g)

    def backward(self, params, cache, dlogits):
        z1, g = cache
        reduced = self.vectors.T @ dlogits
        d2 = g.T @ reduced
        dh = self.phi * (reduced @ params.theta2.T)
        d1 = self.reduced_x.T @ (dh * _activation_slope(self.activation, z1))
        return d1, d2


def _activation_slope(activation, z):
    if activation is relu:
        # subgradient 0 at exactly 0
        return (z > 0).astype(float)
    return np.ones_like(z)


def propagation(model, x, activation=relu):
    """Pick the pass for a kernel; reduced kernels run in the spectral domain."""
    if isinstance(model, ReducedDiagonalKernel):
        return SpectralPropagation(model.vectors, model.phi, x, activation)
    return SpatialPropagation(model, x, activation)


def gradients(model, x, dataset: LabeledDataset, params: ModelParams, rho: float, activation=relu):
    """Loss gradients with respect to both weight matrices."""
    prop = propagation(model, x, activation)
    logits, cache = prop.forward(params)
    d1, d2 = prop.backward(params, cache, _logit_gradient(logits, dataset))
    return d1 + rho * params.theta1, d2


def evaluate_accuracy(logits, dataset: LabeledDataset) -> float:
    """Percentage of correctly classified non-training nodes."""
    if not dataset.test_mask.any():
        raise InvalidDataset("no non-training nodes to evaluate")
    predicted = np.argmax(np.asarray(logits), axis=1)
    correct = predicted[dataset.test_mask] == dataset.labels[dataset.test_mask]
    return 100.0 * float(correct.mean())


@dataclass
class RunResult:
    params: ModelParams
    accuracy: float
    train_s: float
    losses: np.ndarray


def train_run(model, dataset: LabeledDataset, n_hidden: int, config: TrainConfig, seed: int) -> RunResult:
    """One full-batch gradient-descent run from a Glorot initialization."""
    rng = run_generator(seed)
    params = init_params(dataset.x.shape[1], n_hidden, dataset.num_classes, rng)
    losses = np.empty(config.iterations)
    start = time.perf_counter()
    prop = propagation(model, dataset.x)
    lr, rho = config.learning_rate, config.rho
    for it in range(config.iterations):
        logits, cache = prop.forward(params)
        value = loss(logits, dataset, params, rho)
        if not np.isfinite(value):
            raise DivergedRun(it)
        losses[it] = value
        d1, d2 = prop.backward(params, cache, _logit_gradient(logits, dataset))
        params.theta1 -= lr * (d1 + rho * params.theta1)
        params.theta2 -= lr * d2
    train_s = time.perf_counter() - start
    logits, _ = prop.forward(params)
    if not np.all(np.isfinite(logits)):
        raise DivergedRun(config.iterations)
    return RunResult(params, evaluate_accuracy(logits, dataset), train_s, losses)


@dataclass(frozen=True)
class RunRecord:
    run: int
    seed: int
    accuracy: float
    setup_s: float
    train_s: float


def thread_count(runs: int) -> int:
    cap = os.environ.get(THREADS_ENV)
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(limit, runs))


def run_many(model, dataset, n_hidden, config: TrainConfig, setup_s: float = 0.0) -> list[RunRecord]:
    """All runs of one experiment, sorted by run index.

    The kernel is shared read-only, so runs may execute on several threads.
    Diverged runs are logged and left out.
    """

    def one(run):
        seed = run_seed(config.seed, run)
        try:
            result = train_run(model, dataset, n_hidden, config, seed)
        except DivergedRun as exc:
            log.warning("run %d diverged at iteration %d; excluded", run, exc.iteration)
            return None
        return RunRecord(run, seed, result.accuracy, setup_s, result.train_s)

    workers = thread_count(config.runs)
    if workers == 1:
        records = [one(r) for r in range(config.runs)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            records = list(pool.map(one, range(config.runs)))
    return sorted((r for r in records if r is not None), key=lambda r: r.run)


@dataclass(frozen=True)
class Summary:
    runs: int
    accuracy: float
    setup_s: float
    train_s: float


def summarize(records) -> Summary:
    if not records:
        raise InvalidDataset("no completed runs to summarize")
    ordered = sorted(records, key=lambda r: r.run)
    return Summary(
        len(ordered),
        float(np.mean([r.accuracy for r in ordered])),
        float(np.mean([r.setup_s for r in ordered])),
        float(np.mean([r.train_s for r in ordered])),
    )
