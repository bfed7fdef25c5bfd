"""Corpus-bundle loading, sentence-graph construction, and batching.

The on-disk bundle is the interchange format produced by the preprocessing
component:

* ``graphs.jsonl`` — one record per sentence:
  ``{"id", "split", "label", "tokens": [{"i", "t", "pos", "head", "dep"}]}``
* ``vocab.json`` — ``{"tokens": [...], "deps": [...], "pos": [...],
  "embedding_dim": int}`` with list index = integer id; token id 0 is the
  reserved OOV/padding row.
* ``embeddings.bin`` — row-major little-endian float32, one row per token
  type, ``embedding_dim`` columns, no header.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPLITS = ("train", "dev", "test")


class BundleError(ValueError):
    """Raised when a corpus bundle fails schema or consistency validation."""


@dataclass
class SentenceGraph:
    """One claim sentence as a directed labeled graph."""

    id: str
    label: int
    token_ids: list[int]
    pos_ids: list[int]
    edges: list[tuple[int, int, int]]  # (src=head, dst=dependent, relation id)

    @property
    def num_nodes(self) -> int:
        return len(self.token_ids)


@dataclass
class GraphBatch:
    """Disjoint union of graphs with per-graph membership for pooling."""

    node_token_ids: np.ndarray
    node_pos_ids: np.ndarray
    edge_src: np.ndarray
    edge_dst: np.ndarray
    edge_rel: np.ndarray
    graph_of_node: np.ndarray
    labels: np.ndarray
    graph_count: int

    @property
    def num_nodes(self) -> int:
        return len(self.node_token_ids)


@dataclass
class Vocab:
    tokens: list[str]
    deps: list[str]
    pos: list[str]
    embedding_dim: int

    @property
    def num_relations(self) -> int:
        return len(self.deps)

    @property
    def num_pos(self) -> int:
        return len(self.pos)


@dataclass
class Dataset:
    splits: dict[str, list[SentenceGraph]] = field(default_factory=dict)

    def __getitem__(self, split: str) -> list[SentenceGraph]:
        return self.splits.get(split, [])


def make_edges(tokens: list[dict], dep_ids: dict[str, int],
               reverse_edges: bool) -> list[tuple[int, int, int]]:
    """Edge list from parsed tokens: head -> dependent, root as a self-loop.

    With ``reverse_edges`` every non-root edge also gets a dependent -> head
    twin reusing the same relation id, so no extra parameters are implied.
    """
    n = len(tokens)
    edges: list[tuple[int, int, int]] = []
    for tok in tokens:
        head, i = tok["head"], tok["i"]
        if not (0 <= head < n):
            raise BundleError(f"head index {head} out of range for {n} tokens")
        rel = dep_ids[tok["dep"]]
        edges.append((head, i, rel))
        if reverse_edges and head != i:
            edges.append((i, head, rel))
    return edges


def validate_tree(graph: SentenceGraph) -> None:
    """Check the tree property on forward (head -> dependent) edges: one root
    self-loop, in-degree 1 elsewhere, no cycles. Reversed twin edges, when
    present, are recognized pairwise and excluded from the check."""
    n = graph.num_nodes
    roots = {s for s, d, _ in graph.edges if s == d}
    if len(roots) != 1:
        raise BundleError(f"graph {graph.id}: expected exactly 1 root self-loop, found {len(roots)}")
    root = next(iter(roots))

    directed = {}
    for s, d, r in graph.edges:
        if s != d:
            directed[(s, d)] = r
    forward = {}
    for (s, d), r in directed.items():
        twin = directed.get((d, s))
        if twin is not None and twin == r and (d, s) in forward:
            continue  # reverse twin of an edge already kept
        forward[(s, d)] = r

    parent = {}
    for s, d in forward:
        if d in parent:
            raise BundleError(f"graph {graph.id}: node {d} has multiple heads")
        parent[d] = s
    for node in range(n):
        if node == root:
            continue
        seen = set()
        cur = node
        while cur != root:
            if cur in seen or cur not in parent:
                raise BundleError(f"graph {graph.id}: not a tree rooted at {root}")
            seen.add(cur)
            cur = parent[cur]


def _graph_from_record(record: dict, vocab: Vocab, token_ids: dict[str, int],
                       dep_ids: dict[str, int], pos_ids: dict[str, int],
                       reverse_edges: bool) -> SentenceGraph:
    tokens = record["tokens"]
    if not tokens:
        raise BundleError(f"record {record.get('id')}: empty token list")
    for tok in tokens:
        if tok["pos"] not in pos_ids:
            raise BundleError(f"record {record['id']}: unknown POS tag {tok['pos']!r}")
        if tok["dep"] not in dep_ids:
            raise BundleError(f"record {record['id']}: unknown relation {tok['dep']!r}")
    return SentenceGraph(
        id=str(record["id"]),
        label=int(record["label"]),
        token_ids=[token_ids.get(t["t"], 0) for t in tokens],
        pos_ids=[pos_ids[t["pos"]] for t in tokens],
        edges=make_edges(tokens, dep_ids, reverse_edges),
    )


def load_vocab(bundle_dir: str | Path) -> Vocab:
    path = Path(bundle_dir) / "vocab.json"
    if not path.exists():
        raise BundleError(f"missing bundle file: {path}")
    raw = json.loads(path.read_text(encoding="utf-8"))
    return Vocab(
        tokens=raw["tokens"],
        deps=raw["deps"],
        pos=raw["pos"],
        embedding_dim=int(raw.get("embedding_dim", 300)),
    )


def load_embeddings(bundle_dir: str | Path, vocab: Vocab) -> np.ndarray:
    path = Path(bundle_dir) / "embeddings.bin"
    if not path.exists():
        raise BundleError(f"missing bundle file: {path}")
    flat = np.fromfile(path, dtype="<f4")
    expected = len(vocab.tokens) * vocab.embedding_dim
    if flat.size != expected:
        raise BundleError(
            f"embeddings.bin holds {flat.size // max(vocab.embedding_dim, 1)} rows, "
            f"expected {len(vocab.tokens)} (vocab size)"
        )
    table = flat.reshape(len(vocab.tokens), vocab.embedding_dim).astype(np.float64)
    table.setflags(write=False)
    return table


def load_bundle(bundle_dir: str | Path, reverse_edges: bool = True,
                validate: bool = True) -> tuple[Dataset, Vocab, np.ndarray]:
    """Load a corpus bundle into per-split SentenceGraph lists.

    Non-tree parses are rejected with a BundleError naming the record when
    ``validate`` is on.
    """
    bundle_dir = Path(bundle_dir)
    vocab = load_vocab(bundle_dir)
    table = load_embeddings(bundle_dir, vocab)

    graphs_path = bundle_dir / "graphs.jsonl"
    if not graphs_path.exists():
        raise BundleError(f"missing bundle file: {graphs_path}")

    token_ids = {t: i for i, t in enumerate(vocab.tokens)}
    dep_ids = {d: i for i, d in enumerate(vocab.deps)}
    pos_ids = {p: i for i, p in enumerate(vocab.pos)}

    dataset = Dataset({s: [] for s in SPLITS})
    with graphs_path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BundleError(f"{graphs_path}:{lineno}: malformed JSON ({exc})") from None
            split = record.get("split")
            if split not in SPLITS:
                raise BundleError(f"{graphs_path}:{lineno}: unknown split {split!r}")
            if record.get("label") not in (0, 1):
                raise BundleError(f"{graphs_path}:{lineno}: label must be 0 or 1")
            graph = _graph_from_record(record, vocab, token_ids, dep_ids, pos_ids, reverse_edges)
            if validate:
                validate_tree(graph)
            dataset.splits[split].append(graph)
    return dataset, vocab, table


def batch(graphs: list[SentenceGraph]) -> GraphBatch:
    """Disjoint union with node indices offset per graph."""
    if not graphs:
        raise ValueError("cannot batch an empty graph list")
    token_ids, pos_ids, membership = [], [], []
    src, dst, rel = [], [], []
    offset = 0
    for gi, g in enumerate(graphs):
        token_ids.extend(g.token_ids)
        pos_ids.extend(g.pos_ids)
        membership.extend([gi] * g.num_nodes)
        for s, d, r in g.edges:
            src.append(s + offset)
            dst.append(d + offset)
            rel.append(r)
        offset += g.num_nodes
    return GraphBatch(
        node_token_ids=np.asarray(token_ids, dtype=np.int64),
        node_pos_ids=np.asarray(pos_ids, dtype=np.int64),
        edge_src=np.asarray(src, dtype=np.int64),
        edge_dst=np.asarray(dst, dtype=np.int64),
        edge_rel=np.asarray(rel, dtype=np.int64),
        graph_of_node=np.asarray(membership, dtype=np.int64),
        labels=np.asarray([g.label for g in graphs], dtype=np.int64),
        graph_count=len(graphs),
    )


def unbatch(b: GraphBatch) -> list[SentenceGraph]:
    """Inverse of :func:`batch` (ids are synthesized positionally)."""
    graphs = []
    starts = np.searchsorted(b.graph_of_node, np.arange(b.graph_count))
    ends = np.append(starts[1:], b.num_nodes)
    for gi in range(b.graph_count):
        lo, hi = int(starts[gi]), int(ends[gi])
        mask = (b.edge_src >= lo) & (b.edge_src < hi)
        edges = [(int(s - lo), int(d - lo), int(r))
                 for s, d, r in zip(b.edge_src[mask], b.edge_dst[mask], b.edge_rel[mask])]
        graphs.append(SentenceGraph(
            id=str(gi),
            label=int(b.labels[gi]),
            token_ids=[int(t) for t in b.node_token_ids[lo:hi]],
            pos_ids=[int(p) for p in b.node_pos_ids[lo:hi]],
            edges=edges,
        ))
    return graphs


@dataclass
class VocabReport:
    num_relations: int
    num_pos: int
    num_tokens: int
    class_counts: dict[str, dict[int, int]]
    tree_violations: int

    def as_dict(self) -> dict:
        return {
            "num_relations": self.num_relations,
            "num_pos": self.num_pos,
            "num_tokens": self.num_tokens,
            "class_counts": {s: dict(c) for s, c in self.class_counts.items()},
            "tree_violations": self.tree_violations,
        }


def validate_bundle(bundle_dir: str | Path) -> VocabReport:
    """Full-bundle audit: schema, vocab/embedding consistency, tree property."""
    dataset, vocab, _ = load_bundle(bundle_dir, reverse_edges=False, validate=False)
    violations = 0
    counts: dict[str, dict[int, int]] = {s: {0: 0, 1: 0} for s in SPLITS}
    for split in SPLITS:
        for g in dataset[split]:
            counts[split][g.label] += 1
            try:
                validate_tree(g)
            except BundleError:
                violations += 1
    return VocabReport(
        num_relations=vocab.num_relations,
        num_pos=vocab.num_pos,
        num_tokens=len(vocab.tokens),
        class_counts=counts,
        tree_violations=violations,
    )
