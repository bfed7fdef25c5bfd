"""Dependency-graph claim classification with Euclidean and hyperbolic
relational message-passing networks."""

from .data import Dataset, GraphBatch, SentenceGraph, batch, load_bundle, unbatch, validate_bundle
from .estimator import GraphClaimClassifier
from .manifolds import Euclidean, Lorentz, PoincareBall, get_manifold
from .metrics import Metrics, auc_roc, compute_metrics, inverse_freq_weights
from .model import ModelConfig, ParamSet, count_params, param_breakdown
from .training import TrainConfig, evaluate, grid_search, train

__all__ = [
    "Dataset", "GraphBatch", "SentenceGraph", "batch", "load_bundle", "unbatch",
    "validate_bundle", "GraphClaimClassifier", "Euclidean", "Lorentz",
    "PoincareBall", "get_manifold", "Metrics", "auc_roc", "compute_metrics",
    "inverse_freq_weights", "ModelConfig", "ParamSet", "count_params",
    "param_breakdown", "TrainConfig", "evaluate", "grid_search", "train",
]

__version__ = "0.1.0"
