"""Pretrained word-vector loaders (word2vec text and binary formats) and
embedding-table assembly."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

log = logging.getLogger("corpusprep")


def load_text_vectors(path: str | Path) -> dict[str, np.ndarray]:
    """word2vec/GloVe text format: one ``word v1 .. vd`` line per word,
    with an optional ``count dim`` header line."""
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8", errors="replace") as fh:
        first = fh.readline().split()
        if len(first) != 2 or not all(p.lstrip("-").isdigit() for p in first):
            if first:
                vectors[first[0]] = np.asarray(first[1:], dtype=np.float32)
        for line in fh:
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            vectors[parts[0]] = np.asarray(parts[1:], dtype=np.float32)
    return vectors


def load_binary_vectors(path: str | Path) -> dict[str, np.ndarray]:
    """word2vec binary format: ascii ``count dim`` header, then per word the
    space-terminated name followed by dim little-endian float32s."""
    vectors: dict[str, np.ndarray] = {}
    with open(path, "rb") as fh:
        header = fh.readline().split()
        count, dim = int(header[0]), int(header[1])
        for _ in range(count):
            chars = []
            while True:
                c = fh.read(1)
                if c in (b" ", b""):
                    break
                if c != b"\n":
                    chars.append(c)
            word = b"".join(chars).decode("utf-8", errors="replace")
            vec = np.frombuffer(fh.read(4 * dim), dtype="<f4")
            vectors[word] = vec
    return vectors


def load_vectors(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    if path.suffix == ".bin":
        return load_binary_vectors(path)
    return load_text_vectors(path)


def build_table(tokens: list[str], vectors: dict[str, np.ndarray] | None,
                dim: int) -> np.ndarray:
    """One float32 row per token type in vocab order. Row 0 (the reserved
    OOV id) and rows for tokens missing from the vector model are zeros."""
    table = np.zeros((len(tokens), dim), dtype=np.float32)
    misses = 0
    for i, tok in enumerate(tokens[1:], start=1):
        vec = None if vectors is None else vectors.get(tok)
        if vec is None:
            misses += 1
            continue
        if len(vec) != dim:
            raise ValueError(f"vector for {tok!r} has {len(vec)} dims, expected {dim}")
        table[i] = vec
    if vectors is not None and misses:
        log.info("%d of %d token types had no pretrained vector", misses, len(tokens) - 1)
    return table
