"""Scikit-learn style estimator wrapping the graph classifier, so the model
composes with pipelines, grid-search utilities, and metric helpers from the
wider ecosystem."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from . import model as M
from .data import Dataset, SentenceGraph, batch as make_batch
from .model import ModelConfig
from .training import TrainConfig, train


def _check_graphs(X) -> list[SentenceGraph]:
    graphs = list(X)
    if not graphs:
        raise ValueError("X must contain at least one SentenceGraph")
    for g in graphs:
        if not isinstance(g, SentenceGraph):
            raise TypeError(f"expected SentenceGraph, got {type(g).__name__}")
    return graphs


def _check_table(table) -> np.ndarray:
    table = np.asarray(table, dtype=np.float64)
    if table.ndim != 2:
        raise ValueError("embedding table must be 2-D (token types x dims)")
    return table


class GraphClaimClassifier(BaseEstimator, ClassifierMixin):
    """Relational (H)GNN claim classifier with a fit/predict interface.

    X is a list of :class:`~graphclaim.data.SentenceGraph`; labels are taken
    from ``y`` when given, else from the graphs themselves. The frozen word
    embedding table is passed at construction.
    """

    def __init__(self, embedding_table=None, manifold="euclidean", layers=4,
                 hidden=256, pos_dim=0, num_relations=45, num_pos=18,
                 dropout=0.0, class_weights=None, readout="meanpool",
                 centroids=30, reverse_edges=True, lr=0.001, max_epochs=30,
                 patience=8, batch_size=32, seed=0, validation_fraction=0.2):
        self.embedding_table = embedding_table
        self.manifold = manifold
        self.layers = layers
        self.hidden = hidden
        self.pos_dim = pos_dim
        self.num_relations = num_relations
        self.num_pos = num_pos
        self.dropout = dropout
        self.class_weights = class_weights
        self.readout = readout
        self.centroids = centroids
        self.reverse_edges = reverse_edges
        self.lr = lr
        self.max_epochs = max_epochs
        self.patience = patience
        self.batch_size = batch_size
        self.seed = seed
        self.validation_fraction = validation_fraction

    def _model_config(self, table: np.ndarray) -> ModelConfig:
        return ModelConfig(
            manifold=self.manifold, layers=self.layers, hidden=self.hidden,
            word_dim=table.shape[1], pos_dim=self.pos_dim,
            num_relations=self.num_relations, num_pos=self.num_pos,
            dropout=self.dropout,
            class_weights=tuple(self.class_weights) if self.class_weights else None,
            readout=self.readout, centroids=self.centroids,
            reverse_edges=self.reverse_edges,
        )

    def fit(self, X, y=None, X_val=None):
        """Train with early stopping; ``X_val`` (or a seeded holdout of
        ``validation_fraction``) drives model selection."""
        graphs = _check_graphs(X)
        table = _check_table(self.embedding_table)
        if y is not None:
            y = np.asarray(y, dtype=np.int64)
            if len(y) != len(graphs):
                raise ValueError("X and y length mismatch")
            for g, label in zip(graphs, y):
                g.label = int(label)

        if X_val is not None:
            dev = _check_graphs(X_val)
            train_graphs = graphs
        else:
            rng = np.random.default_rng(self.seed)
            order = rng.permutation(len(graphs))
            n_dev = max(1, int(len(graphs) * self.validation_fraction))
            dev = [graphs[i] for i in order[:n_dev]]
            train_graphs = [graphs[i] for i in order[n_dev:]] or dev

        tc = TrainConfig(model=self._model_config(table), lr=self.lr,
                         max_epochs=self.max_epochs, patience=self.patience,
                         batch_size=self.batch_size, seed=self.seed)
        dataset = Dataset({"train": train_graphs, "dev": dev, "test": []})
        self.params_, self.history_ = train(tc, dataset, table)
        self.config_ = tc.model
        self.table_ = table
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        graphs = _check_graphs(X)
        _, probs = M.forward(self.params_, self.config_, make_batch(graphs),
                             self.table_, train=False)
        return probs.data

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(np.int64)

    def decision_function(self, X) -> np.ndarray:
        return self.predict_proba(X)[:, 1]

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise RuntimeError("estimator is not fitted; call fit() first")
