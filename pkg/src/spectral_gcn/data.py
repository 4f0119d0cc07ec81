"""Datasets: the synthetic spiral, categorical tables turned into hypergraphs,
and fixed training-index lists.

External files always use 1-based node indices; everything returned from
here is 0-based.
"""
from __future__ import annotations

import csv
import itertools
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvalidDataset, InvalidParameter, MissingValue, ParseError
from .hypergraph import Hypergraph
from .training import LabeledDataset

DATA_ENV = "SPECTRAL_GCN_DATA"
MISSING = "?"

# column layouts of the two UCI files; drop columns are 1-based file columns
FORMATS = {
    "cars": {"columns": 7, "class_column": 7, "drop": ()},
    "mushrooms": {"columns": 23, "class_column": 1, "drop": (12,)},
    "csv": {"columns": None, "class_column": -1, "drop": ()},
}
FILENAMES = {"cars": "car.data", "mushrooms": "agaricus-lepiota.data"}
EXPECTED_EDGES = {"cars": 21, "mushrooms": 112}

# value sets of the six car attributes, in file order
CAR_ATTRIBUTE_VALUES = (
    ("vhigh", "high", "med", "low"),
    ("vhigh", "high", "med", "low"),
    ("2", "3", "4", "5more"),
    ("2", "4", "more"),
    ("small", "med", "big"),
    ("low", "med", "high"),
)


@dataclass(frozen=True)
class SpiralConfig:
    orbs: int = 5
    points_per_orb: int = 2000
    height: float = 10.0
    radius: float = 2.0
    seed: int = 0
    spread: float = 1.0  # 0 places every point on its center

    def __post_init__(self):
        if self.orbs < 1 or self.points_per_orb < 1:
            raise InvalidParameter("orb and point counts must be positive")
        if self.height <= 0 or self.radius <= 0 or self.spread < 0:
            raise InvalidParameter("height and radius must be positive")


def spiral_centers(cfg: SpiralConfig) -> np.ndarray:
    k = np.arange(cfg.orbs)
    angle = 2.0 * np.pi * k / cfg.orbs
    z = cfg.height * k / max(cfg.orbs - 1, 1)
    return np.column_stack([cfg.radius * np.cos(angle), cfg.radius * np.sin(angle), z])


def box_muller(rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` standard normals, consumed in pairs from uniform draws."""
    pairs = (count + 1) // 2
    u1 = 1.0 - rng.random(pairs)  # in (0, 1], keeps the log finite
    u2 = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(2.0 * np.pi * u2)
    out[1::2] = radius * np.sin(2.0 * np.pi * u2)
    return out[:count]


def nearest_center(points, centers) -> np.ndarray:
    d = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d, axis=1)


def generate_spiral(cfg: SpiralConfig) -> tuple[np.ndarray, np.ndarray]:
    """Points from unit-covariance normals around each orb center.

    Draw order: points in orb order, x then y then z per point. Labels are
    the nearest center, ties to the lowest orb index.
    """
    centers = spiral_centers(cfg)
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    n = cfg.orbs * cfg.points_per_orb
    noise = box_muller(rng, 3 * n).reshape(n, 3)
    points = np.repeat(centers, cfg.points_per_orb, axis=0) + cfg.spread * noise
    return points, nearest_center(points, centers)


def stratified_train_indices(labels, per_class: int, seed: int) -> np.ndarray:
    """``per_class`` random nodes from every class, sorted."""
    labels = np.asarray(labels)
    rng = np.random.Generator(np.random.Philox(seed))
    picks = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if members.size < per_class:
            raise InvalidDataset(f"class {c} has only {members.size} nodes")
        picks.append(rng.choice(members, per_class, replace=False))
    return np.sort(np.concatenate(picks))


def write_spiral_csv(path, points, labels):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for p, c in zip(points, labels):
            w.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(p[2])), int(c) + 1])


def read_spiral_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows = []
    with open(path, newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(line_no, f"expected 4 fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ParseError(line_no, str(exc)) from None
    if not rows:
        raise InvalidDataset(f"{path} contains no points")
    arr = np.array(rows)
    return arr[:, :3], arr[:, 3].astype(np.int64) - 1


@dataclass(frozen=True)
class CategoricalTable:
    """Attribute values per row (strings) and the class value per row."""

    attributes: tuple
    classes: tuple

    @property
    def n(self) -> int:
        return len(self.classes)

    @property
    def num_attributes(self) -> int:
        return len(self.attributes[0]) if self.attributes else 0

    def class_indices(self) -> tuple[np.ndarray, tuple]:
        """0-based class labels, classes numbered in first-appearance order."""
        names = tuple(dict.fromkeys(self.classes))
        lookup = {c: i for i, c in enumerate(names)}
        return np.array([lookup[c] for c in self.classes], dtype=np.int64), names


def parse_categorical(lines, fmt: str = "cars", drop_columns=None) -> CategoricalTable:
    layout = FORMATS[fmt]
    drop = set(layout["drop"] if drop_columns is None else drop_columns)
    expected = layout["columns"]
    attributes, classes = [], []
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if expected is None:
            expected = len(fields)
        if len(fields) != expected:
            raise ParseError(line_no, f"expected {expected} columns, got {len(fields)}")
        class_col = layout["class_column"] if layout["class_column"] > 0 else expected
        row = []
        for col, value in enumerate(fields, start=1):
            if col in drop:
                continue
            if value == MISSING or value == "":
                raise MissingValue(line_no, col)
            if col != class_col:
                row.append(value)
        attributes.append(tuple(row))
        classes.append(fields[class_col - 1])
    if not classes:
        raise InvalidDataset("table has no rows")
    return CategoricalTable(tuple(attributes), tuple(classes))


def load_categorical(path, fmt: str = "cars", drop_columns=None) -> CategoricalTable:
    with open(path) as fh:
        return parse_categorical(fh, fmt, drop_columns)


def attributes_to_hypergraph(rows) -> Hypergraph:
    """One unit-weight hyperedge per (attribute, observed value).

    Attributes are taken in column order and values in order of first
    appearance.
    """
    rows = list(rows)
    edges = []
    for a in range(len(rows[0]) if rows else 0):
        groups: dict[str, list[int]] = {}
        for i, row in enumerate(rows):
            groups.setdefault(row[a], []).append(i)
        edges.extend(groups.values())
    return Hypergraph(len(rows), edges)


def table_to_hypergraph(table: CategoricalTable) -> Hypergraph:
    return attributes_to_hypergraph(table.attributes)


def cars_attribute_rows() -> list:
    """All 1728 attribute combinations of the car data, last attribute fastest.

    The car file lists exactly these combinations, so its hypergraph can be
    built without the file; only the class labels need it.
    """
    return list(itertools.product(*CAR_ATTRIBUTE_VALUES))


def incidence_as_input(hg: Hypergraph) -> np.ndarray:
    return hg.incidence.copy()


def parse_train_indices(lines) -> np.ndarray:
    """1-based indices, one per line."""
    values = []
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(int(line))
        except ValueError:
            raise ParseError(line_no, f"not an integer: {line!r}") from None
    idx = np.array(values, dtype=np.int64)
    if idx.size == 0:
        raise InvalidDataset("training index list is empty")
    if idx.min() < 1:
        raise InvalidDataset("training indices are 1-based and must be positive")
    if np.unique(idx).size != idx.size:
        raise InvalidDataset("training index list contains duplicates")
    return idx


def load_train_indices(path) -> np.ndarray:
    with open(path) as fh:
        return parse_train_indices(fh)


def bundled_train_indices(name: str) -> np.ndarray:
    text = resources.files("spectral_gcn.resources").joinpath(f"{name}_train.txt").read_text()
    return parse_train_indices(text.splitlines())


def bind_train_indices(indices, n: int) -> np.ndarray:
    """Check 1-based indices against a dataset of ``n`` nodes; returns 0-based."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.max() > n:
        raise InvalidDataset(f"training index {indices.max()} exceeds node count {n}")
    return indices - 1


def find_dataset_file(name: str) -> Path:
    """Locate a UCI file in ``$SPECTRAL_GCN_DATA`` or ``./data``."""
    filename = FILENAMES[name]
    dirs = [os.environ.get(DATA_ENV), "data"]
    for d in dirs:
        if d and (Path(d) / filename).is_file():
            return Path(d) / filename
    raise FileNotFoundError(
        f"{filename} not found; download it from the UCI repository and place it in "
        f"./data or in the directory named by ${DATA_ENV}"
    )


@dataclass
class HypergraphDataset:
    table: CategoricalTable
    hypergraph: Hypergraph
    labeled: LabeledDataset
    class_names: tuple


def hypergraph_dataset(table: CategoricalTable, train_indices, expected_edges=None) -> HypergraphDataset:
    hg = table_to_hypergraph(table)
    if expected_edges is not None and hg.num_edges != expected_edges:
        raise InvalidDataset(f"expected {expected_edges} hyperedges, built {hg.num_edges}")
    labels, names = table.class_indices()
    train = bind_train_indices(train_indices, table.n)
    labeled = LabeledDataset(incidence_as_input(hg), labels, train, len(names))
    return HypergraphDataset(table, hg, labeled, names)


def load_uci(name: str, path=None, train_indices=None) -> HypergraphDataset:
    """Cars or mushrooms with the bundled training list unless one is given."""
    path = find_dataset_file(name) if path is None else path
    table = load_categorical(path, name)
    if train_indices is None:
        train_indices = bundled_train_indices(name)
    return hypergraph_dataset(table, train_indices, EXPECTED_EDGES[name])
