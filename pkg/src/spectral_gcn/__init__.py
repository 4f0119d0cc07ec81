"""Spectral graph convolutional networks on graph and hypergraph Laplacians.

Full-rank, low-rank and reduced-order two-layer networks with structured
kernel operators, dedicated eigensolvers and a plain gradient-descent trainer.
"""
from .errors import SpectralGCNError
from .filters import FilterKind, FilterSpec, SpectralBasis, eval_filter
from .graph import Graph, Smoother, SmootherKind
from .hypergraph import Hypergraph
from .network import ModelParams, forward_full, forward_reduced, predict
from .training import LabeledDataset, TrainConfig, train_run

__all__ = [
    "FilterKind",
    "FilterSpec",
    "Graph",
    "Hypergraph",
    "LabeledDataset",
    "ModelParams",
    "Smoother",
    "SmootherKind",
    "SpectralBasis",
    "SpectralGCNError",
    "TrainConfig",
    "eval_filter",
    "forward_full",
    "forward_reduced",
    "predict",
    "train_run",
]
