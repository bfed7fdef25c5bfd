"""Synthetic corpora for smoke tests and self-checks."""

from __future__ import annotations

import numpy as np

from .data import Dataset, SentenceGraph


def random_graph(rng: np.random.Generator, num_tokens: int, num_pos: int,
                 num_relations: int, n_nodes: int | None = None,
                 label: int | None = None, graph_id: str = "g",
                 reverse_edges: bool = False) -> SentenceGraph:
    """A random dependency-like tree: node i > 0 hangs off a random earlier
    node, node 0 carries the root self-loop."""
    n = n_nodes or int(rng.integers(2, 9))
    token_ids = rng.integers(0, num_tokens, size=n).tolist()
    pos_ids = rng.integers(0, num_pos, size=n).tolist()
    edges = [(0, 0, int(rng.integers(0, num_relations)))]
    for i in range(1, n):
        head = int(rng.integers(0, i))
        rel = int(rng.integers(0, num_relations))
        edges.append((head, i, rel))
        if reverse_edges:
            edges.append((i, head, rel))
    return SentenceGraph(id=graph_id, label=int(label if label is not None else rng.integers(0, 2)),
                         token_ids=token_ids, pos_ids=pos_ids, edges=edges)


def separable_corpus(n_graphs: int = 100, seed: int = 0,
                     num_tokens: int = 20, num_pos: int = 4,
                     num_relations: int = 3, word_dim: int = 16):
    """A linearly separable toy corpus: positive graphs contain the signal
    token (id 1), whose embedding points far from everything else.

    Returns (dataset with train == dev, embedding table, vocab sizes).
    """
    rng = np.random.default_rng(seed)
    table = rng.normal(0.0, 0.2, size=(num_tokens, word_dim))
    table[:, 0] = 0.0         # coordinate 0 is reserved for the signal
    table[0] = 0.0            # reserved OOV row
    table[1] = 0.0
    table[1, 0] = 2.0         # signal direction

    graphs = []
    for i in range(n_graphs):
        label = i % 2
        g = random_graph(rng, num_tokens, num_pos, num_relations,
                         n_nodes=int(rng.integers(2, 5)), graph_id=f"syn{i}",
                         label=label, reverse_edges=True)
        ids = [t if t > 1 else 2 + (t % (num_tokens - 2)) for t in g.token_ids]
        if label == 1:
            ids[int(rng.integers(0, len(ids)))] = 1
        g.token_ids = ids
        graphs.append(g)
    dataset = Dataset({"train": graphs, "dev": graphs, "test": []})
    return dataset, table, {"num_tokens": num_tokens, "num_pos": num_pos,
                            "num_relations": num_relations, "word_dim": word_dim}
