"""Corpus-to-bundle conversion and bundle statistics.

The output bundle is the interchange format consumed downstream:
``graphs.jsonl`` (one parsed sentence per line), ``vocab.json`` (token,
relation, and POS inventories; list index = integer id; token id 0 reserved
for OOV), and ``embeddings.bin`` (row-major little-endian float32, one row
per token type, no header).
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import numpy as np

from .embeddings import build_table, load_vectors
from .parser import ParsedToken, ParserError

log = logging.getLogger("corpusprep")

SPLITS = ("train", "dev", "test")
OOV_TOKEN = "<unk>"

REQUIRED_COLUMNS = ("id", "split", "text", "label")


class CorpusError(ValueError):
    """Raised for malformed input corpora."""


def read_raw_corpus(path: str | Path) -> list[dict]:
    """Read a delimited corpus file with id, split, text, label columns.

    The delimiter is sniffed from the header (tab beats comma). Bad labels
    are a hard failure; empty text rows too.
    """
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        head = fh.readline()
        if not head:
            raise CorpusError(f"{path}: empty corpus file")
        delimiter = "\t" if "\t" in head else ","
        fh.seek(0)
        reader = csv.DictReader(fh, delimiter=delimiter)
        missing = set(REQUIRED_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise CorpusError(f"{path}: missing columns {sorted(missing)}")
        records = []
        seen_ids = set()
        for lineno, row in enumerate(reader, start=2):
            rid = (row["id"] or "").strip()
            if rid in seen_ids:
                raise CorpusError(f"{path}:{lineno}: duplicate id {rid!r}")
            seen_ids.add(rid)
            split = (row["split"] or "").strip()
            if split not in SPLITS:
                raise CorpusError(f"{path}:{lineno}: unknown split {split!r}")
            try:
                label = int(row["label"])
            except (TypeError, ValueError):
                label = -1
            if label not in (0, 1):
                raise CorpusError(f"{path}:{lineno}: label must be 0 or 1")
            text = (row["text"] or "").strip()
            if not text:
                raise CorpusError(f"{path}:{lineno}: empty text")
            records.append({"id": rid, "split": split, "text": text, "label": label})
    return records


def _validate_parse(tokens: list[ParsedToken]) -> None:
    n = len(tokens)
    roots = [t for t in tokens if t.head == t.index]
    if len(roots) != 1:
        raise ParserError(f"expected one root, got {len(roots)}")
    for t in tokens:
        if not 0 <= t.head < n:
            raise ParserError(f"head {t.head} out of range")
    # acyclicity: every token must reach the root
    root = roots[0].index
    for t in tokens:
        cur, hops = t.index, 0
        while cur != root:
            cur = tokens[cur].head
            hops += 1
            if hops > n:
                raise ParserError("parse contains a cycle")


def parse_corpus(input_path: str | Path, out_dir: str | Path, parser,
                 embeddings_path: str | Path | None = None,
                 dim: int = 300) -> dict:
    """Parse every sentence and write the three bundle files.

    Unparseable sentences are skipped and logged by id. Returns a summary
    dict (records written/skipped, inventory sizes).
    """
    records = read_raw_corpus(input_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    parsed: list[tuple[dict, list[ParsedToken]]] = []
    skipped = 0
    for rec in records:
        try:
            tokens = parser.parse(rec["text"])
            _validate_parse(tokens)
        except ParserError as exc:
            log.warning("skipping record %s: %s", rec["id"], exc)
            skipped += 1
            continue
        parsed.append((rec, tokens))

    token_types: set[str] = set()
    deps: set[str] = set()
    pos_tags: set[str] = set()
    for _, tokens in parsed:
        for t in tokens:
            token_types.add(t.text)
            deps.add(t.dep)
            pos_tags.add(t.pos)

    vocab = {
        "tokens": [OOV_TOKEN] + sorted(token_types - {OOV_TOKEN}),
        "deps": sorted(deps),
        "pos": sorted(pos_tags),
        "embedding_dim": dim,
    }

    with (out_dir / "graphs.jsonl").open("w", encoding="utf-8") as fh:
        for rec, tokens in parsed:
            fh.write(json.dumps({
                "id": rec["id"], "split": rec["split"], "label": rec["label"],
                "tokens": [t.as_json() for t in tokens],
            }, ensure_ascii=False) + "\n")

    (out_dir / "vocab.json").write_text(
        json.dumps(vocab, ensure_ascii=False, indent=2), encoding="utf-8")

    vectors = load_vectors(embeddings_path) if embeddings_path else None
    if vectors and embeddings_path:
        sample = next(iter(vectors.values()))
        if len(sample) != dim:
            raise CorpusError(
                f"embedding model has {len(sample)}-dim vectors, expected {dim}")
    table = build_table(vocab["tokens"], vectors, dim)
    np.ascontiguousarray(table, dtype="<f4").tofile(out_dir / "embeddings.bin")

    summary = {
        "records": len(parsed), "skipped": skipped,
        "tokens": len(vocab["tokens"]), "relations": len(vocab["deps"]),
        "pos_tags": len(vocab["pos"]),
    }
    log.info("bundle written to %s: %s", out_dir, summary)
    return summary


def report_vocab_stats(bundle_dir: str | Path) -> dict:
    """Inventory and label-balance summary of an existing bundle."""
    bundle_dir = Path(bundle_dir)
    for name in ("graphs.jsonl", "vocab.json", "embeddings.bin"):
        if not (bundle_dir / name).exists():
            raise CorpusError(f"missing bundle file: {bundle_dir / name}")

    vocab = json.loads((bundle_dir / "vocab.json").read_text(encoding="utf-8"))
    counts = {s: {0: 0, 1: 0} for s in SPLITS}
    total = 0
    with (bundle_dir / "graphs.jsonl").open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            counts[rec["split"]][int(rec["label"])] += 1
            total += 1

    positives = sum(c[1] for c in counts.values())
    stats = {
        "records": total,
        "num_relations": len(vocab["deps"]),
        "num_pos": len(vocab["pos"]),
        "num_tokens": len(vocab["tokens"]),
        "embedding_dim": int(vocab.get("embedding_dim", 300)),
        "class_counts": {s: {str(k): v for k, v in c.items()} for s, c in counts.items()},
        "positive_fraction": round(positives / total, 4) if total else 0.0,
    }
    if stats["num_relations"] != 45:
        log.warning("expected 45 dependency relations, found %d", stats["num_relations"])
    if stats["num_pos"] != 18:
        log.warning("expected 18 POS tags, found %d", stats["num_pos"])
    return stats
