"""Experiment pipeline: dataset, Laplacian, spectral basis, kernel, training runs."""
from __future__ import annotations

import time
from dataclasses import dataclass, fields, replace

import numpy as np

from . import data
from .errors import InsufficientRank, InvalidParameter
from .filters import (
    DEFAULT_DENSE_CAP,
    FilterKind,
    FilterSpec,
    SpectralBasis,
    build_kernel_dense,
    build_kernel_fullrank_spectral,
    build_kernel_polynomial_iterated,
    build_kernel_polynomial_structured,
    eigenpairs_needed,
    reduce_dominant,
    smallest_nonzero,
    truncate_dominant,
)
from .graph import SmootherKind, build_laplacian, gaussian_graph, gaussian_laplacian_operator
from .hypergraph import (
    Hypergraph,
    eig_via_svd,
    make_smoother,
    smoothed_laplacian_dense,
    smoothed_operator,
)
from .linalg import lanczos_smallest, power_iteration_max
from .training import LabeledDataset, RunRecord, TrainConfig, run_many, summarize

ARCHS = ("gcn", "gcn-naive", "lgcn", "rgcn")
HYPERGRAPH_DATASETS = ("cars", "mushrooms")
DEFAULT_HIDDEN = {"cars": 8, "mushrooms": 16, "spiral": 4}
NAIVE_RUNS = 20


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "cars"
    data_path: str | None = None
    arch: str = "gcn"
    filter: str = "pinv"
    rank: int | None = None
    smoother: str | None = None
    hidden: int | None = None
    runs: int | None = None
    seed: int = 0
    lr: float = 0.2
    iters: int = 1000
    rho: float = 0.0005
    train_indices: str | None = None
    sigma: float = 3.5
    points_per_orb: int = 2000
    lambda_n: float | None = None
    dense_cap: int = DEFAULT_DENSE_CAP
    out: str | None = None

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise InvalidParameter(f"unknown architecture {self.arch!r}")
        FilterSpec.parse(self.filter)
        if self.arch in ("lgcn", "rgcn") and self.rank is None:
            raise InvalidParameter(f"{self.arch} needs --rank")
        if not (self.dataset in HYPERGRAPH_DATASETS or self.dataset == "spiral"
                or self.dataset.startswith("csv:")):
            raise InvalidParameter(f"unknown dataset {self.dataset!r}")
        if self.smoother is not None:
            kind = SmootherKind(self.smoother)
            if not self.is_hypergraph and kind is not SmootherKind.NONE:
                raise InvalidParameter("smoothers other than none need a hypergraph dataset")

    @property
    def is_hypergraph(self) -> bool:
        return self.dataset != "spiral"

    @property
    def smoother_kind(self) -> SmootherKind:
        if self.smoother is not None:
            return SmootherKind(self.smoother)
        return SmootherKind.HYPERGRAPH if self.is_hypergraph else SmootherKind.NONE

    @property
    def filter_spec(self) -> FilterSpec:
        return FilterSpec.parse(self.filter, self.rank)

    @property
    def hidden_width(self) -> int:
        if self.hidden is not None:
            return self.hidden
        return DEFAULT_HIDDEN.get(self.dataset, 16)

    @property
    def run_count(self) -> int:
        if self.runs is not None:
            return self.runs
        return NAIVE_RUNS if self.arch == "gcn-naive" else 100

    def train_config(self) -> TrainConfig:
        return TrainConfig(self.lr, self.iters, self.rho, self.run_count, self.seed)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is not None:
                lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in types:
                raise InvalidParameter(f"unknown config key {key!r}")
            kwargs[key] = _convert(types[key], raw)
        return cls(**kwargs)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        return cls.from_mapping(parse_key_values(text))

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def _convert(type_name: str, raw):
    if raw is None or not isinstance(raw, str):
        return raw
    base = type_name.split("|")[0].strip()
    if base == "int":
        return int(raw)
    if base == "float":
        return float(raw)
    return raw


def parse_key_values(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameter(f"config line {line_no}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


@dataclass
class Problem:
    """A loaded dataset: labeled inputs plus the structure the kernel is built on."""

    labeled: LabeledDataset
    hypergraph: Hypergraph | None = None
    points: np.ndarray | None = None
    sigma: float = 3.5  # Gaussian kernel width, spiral only


def load_problem(cfg: ExperimentConfig) -> Problem:
    train = data.load_train_indices(cfg.train_indices) if cfg.train_indices else None
    if cfg.dataset == "spiral":
        points, labels = data.generate_spiral(
            data.SpiralConfig(points_per_orb=cfg.points_per_orb, seed=cfg.seed)
        )
        if train is None:
            idx = data.stratified_train_indices(labels, 2, cfg.seed)
        else:
            idx = data.bind_train_indices(train, len(labels))
        return Problem(LabeledDataset(points, labels, idx), points=points, sigma=cfg.sigma)
    if cfg.dataset.startswith("csv:"):
        table = data.load_categorical(cfg.dataset[4:], "csv")
        if train is None:
            raise InvalidParameter("csv datasets need --train-indices")
        ds = data.hypergraph_dataset(table, train)
    else:
        ds = data.load_uci(cfg.dataset, cfg.data_path, train)
    return Problem(ds.labeled, hypergraph=ds.hypergraph)


def _laplacian_operator(problem: Problem, smoother: SmootherKind):
    if problem.hypergraph is not None:
        hg = problem.hypergraph
        return smoothed_operator(hg, make_smoother(hg, smoother))
    return gaussian_laplacian_operator(problem.points, problem.sigma)


def _lambda_n(cfg, problem, smoother, op=None) -> float:
    if cfg.lambda_n is not None:
        return cfg.lambda_n
    if problem.hypergraph is not None and smoother is SmootherKind.HYPERGRAPH:
        return 1.0
    op = op if op is not None else _laplacian_operator(problem, smoother)
    if hasattr(op, "as_linear_operator"):
        op = op.as_linear_operator()
    return power_iteration_max(op)


def spectral_basis(cfg: ExperimentConfig, problem: Problem, count: int) -> SpectralBasis:
    """The ``count`` smallest eigenpairs of the configured Laplacian."""
    smoother = cfg.smoother_kind
    f = cfg.filter_spec
    if problem.hypergraph is not None and smoother is SmootherKind.HYPERGRAPH:
        eig = eig_via_svd(problem.hypergraph, count, complete=True, seed=cfg.seed)
        lambda_n = 1.0 if cfg.lambda_n is None else cfg.lambda_n
    else:
        op = _laplacian_operator(problem, smoother)
        linear = op.as_linear_operator() if hasattr(op, "as_linear_operator") else op
        eig = lanczos_smallest(linear, count, shift=2.0, seed=cfg.seed)
        # pinv ignores lambda_n; 2 bounds every normalized Laplacian spectrum
        lambda_n = _lambda_n(cfg, problem, smoother, linear) if f.is_polynomial else 2.0
    try:
        lambda_2 = smallest_nonzero(eig.eigenvalues)
    except InsufficientRank:
        lambda_2 = lambda_n
    return SpectralBasis(eig.eigenvalues, eig.eigenvectors, lambda_2, lambda_n)


def build_model(cfg: ExperimentConfig, problem: Problem, basis: SpectralBasis | None = None):
    """Kernel operator for the configured architecture.

    ``basis`` lets a sweep reuse one eigendecomposition across ranks.
    """
    f = cfg.filter_spec
    smoother = cfg.smoother_kind
    hg = problem.hypergraph
    if cfg.arch in ("lgcn", "rgcn"):
        if basis is None:
            basis = spectral_basis(cfg, problem, eigenpairs_needed(f, f.rank))
        reduce = reduce_dominant if cfg.arch == "rgcn" else truncate_dominant
        return reduce(basis, f, f.rank)
    if cfg.arch == "gcn-naive":
        if hg is not None:
            lap = smoothed_laplacian_dense(hg, make_smoother(hg, smoother))
        else:
            lap = build_laplacian(gaussian_graph(problem.points, problem.sigma))
        lambda_n = cfg.lambda_n
        if lambda_n is None and hg is not None and smoother is SmootherKind.HYPERGRAPH:
            lambda_n = 1.0
        return build_kernel_dense(lap, f, lambda_n, cfg.dense_cap)
    # efficient full-rank
    if hg is not None and smoother is SmootherKind.HYPERGRAPH:
        if f.kind is FilterKind.PSEUDOINVERSE:
            return build_kernel_fullrank_spectral(hg, f)
        lambda_n = 1.0 if cfg.lambda_n is None else cfg.lambda_n
        return build_kernel_polynomial_structured(hg, f.polynomial_coefficients(lambda_n))
    if f.kind is FilterKind.PSEUDOINVERSE:
        # no structure to exploit: fall back to the dense eigendecomposition
        return build_model(cfg.with_(arch="gcn-naive"), problem)
    op = _laplacian_operator(problem, smoother)
    return build_kernel_polynomial_iterated(op, f, _lambda_n(cfg, problem, smoother, op))


def timed_model(cfg, problem, basis=None):
    start = time.perf_counter()
    model = build_model(cfg, problem, basis)
    return model, time.perf_counter() - start


def run_experiment(cfg: ExperimentConfig, problem: Problem | None = None) -> list[RunRecord]:
    problem = problem if problem is not None else load_problem(cfg)
    model, setup_s = timed_model(cfg, problem)
    return run_many(model, problem.labeled, cfg.hidden_width, cfg.train_config(), setup_s)


@dataclass(frozen=True)
class SweepRow:
    arch: str
    label: str
    runs: int
    accuracy: float
    setup_s: float
    train_s: float


def _sweep_row(arch, label, records):
    s = summarize(records)
    return SweepRow(arch, str(label), s.runs, s.accuracy, s.setup_s, s.train_s)


def rank_sweep(cfg: ExperimentConfig, ranks, archs=("lgcn", "rgcn"), problem=None) -> list[SweepRow]:
    """Accuracy per rank; one eigendecomposition at the largest rank is reused."""
    ranks = sorted(int(r) for r in ranks)
    problem = problem if problem is not None else load_problem(cfg)
    top = cfg.with_(rank=ranks[-1], arch="lgcn")
    start = time.perf_counter()
    basis = spectral_basis(top, problem, eigenpairs_needed(top.filter_spec, ranks[-1]))
    setup_s = time.perf_counter() - start
    rows = []
    for arch in archs:
        for r in ranks:
            run_cfg = cfg.with_(arch=arch, rank=r)
            model, extra = timed_model(run_cfg, problem, basis)
            records = run_many(
                model, problem.labeled, run_cfg.hidden_width, run_cfg.train_config(), setup_s + extra
            )
            rows.append(_sweep_row(arch, r, records))
    return rows


def smoother_sweep(cfg: ExperimentConfig, smoothers, archs=None, problem=None) -> list[SweepRow]:
    if not cfg.is_hypergraph:
        raise InvalidParameter("the smoother sweep needs a hypergraph dataset")
    archs = archs or (cfg.arch,)
    problem = problem if problem is not None else load_problem(cfg)
    rows = []
    for arch in archs:
        for s in smoothers:
            run_cfg = cfg.with_(arch=arch, smoother=SmootherKind(s).value)
            records = run_experiment(run_cfg, problem)
            rows.append(_sweep_row(arch, run_cfg.smoother, records))
    return rows


@dataclass(frozen=True)
class TimingRow:
    path: str
    runs: int
    accuracy: float
    setup_s: float
    train_s: float

    @property
    def total_s(self) -> float:
        return self.setup_s + self.train_s


def timing_report(cfg: ExperimentConfig, problem=None) -> tuple[TimingRow, TimingRow]:
    """Naive dense kernel against the structured full-rank kernel, same runs."""
    problem = problem if problem is not None else load_problem(cfg)
    out = []
    for arch in ("gcn-naive", "gcn"):
        run_cfg = cfg.with_(arch=arch, rank=None)
        records = run_experiment(run_cfg, problem)
        s = _sweep_row(arch, arch, records)
        out.append(TimingRow(arch, s.runs, s.accuracy, s.setup_s, s.train_s))
    return out[0], out[1]
