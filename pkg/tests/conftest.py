import json
from pathlib import Path

import numpy as np
import pytest

from graphclaim.synthetic import random_graph

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def example_bundle() -> Path:
    return FIXTURES / "example_bundle"


def write_bundle(out_dir: Path, records: list[dict], vocab: dict,
                 table: np.ndarray) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "graphs.jsonl").open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    (out_dir / "vocab.json").write_text(json.dumps(vocab))
    np.asarray(table, dtype="<f4").tofile(out_dir / "embeddings.bin")
    return out_dir


def make_tiny_bundle(out_dir: Path, n_graphs: int = 12, seed: int = 7) -> Path:
    """Write a small random but valid bundle with all three splits."""
    rng = np.random.default_rng(seed)
    num_tokens, num_pos, num_relations, word_dim = 20, 4, 3, 8
    tokens = ["<unk>"] + [f"tok{t}" for t in range(1, num_tokens)]
    deps = [f"rel{r}" for r in range(num_relations)]
    pos = [f"P{p}" for p in range(num_pos)]
    table = rng.normal(0.0, 0.3, size=(num_tokens, word_dim))
    table[0] = 0.0

    records = []
    for i in range(n_graphs):
        g = random_graph(rng, num_tokens, num_pos, num_relations,
                         graph_id=f"g{i}", label=i % 2, reverse_edges=False)
        head_of = {d: (s, r) for s, d, r in g.edges}
        toks = [{"i": n, "t": tokens[g.token_ids[n]], "pos": pos[g.pos_ids[n]],
                 "head": head_of[n][0], "dep": deps[head_of[n][1]]}
                for n in range(g.num_nodes)]
        split = "train" if i < n_graphs - 4 else ("dev" if i < n_graphs - 2 else "test")
        records.append({"id": g.id, "split": split, "label": g.label, "tokens": toks})
    vocab = {"tokens": tokens, "deps": deps, "pos": pos, "embedding_dim": word_dim}
    return write_bundle(out_dir, records, vocab, table)


@pytest.fixture
def tiny_bundle(tmp_path: Path) -> Path:
    return make_tiny_bundle(tmp_path / "bundle")
