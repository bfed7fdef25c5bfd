"""Training loop with early stopping, split evaluation, and the
hyperparameter grid-search harness."""

from __future__ import annotations

import csv
import itertools
import json
import logging
import os
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import model as M
from .data import Dataset, SentenceGraph, batch as make_batch
from .metrics import Metrics, compute_metrics, inverse_freq_weights
from .model import ModelConfig, ParamSet
from .optim import AMSGrad

log = logging.getLogger("graphclaim")

MAX_GRAD_NORM = 1.0


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    lr: float = 0.001
    max_epochs: int = 30
    patience: int = 8
    batch_size: int = 32
    seed: int = 0
    select_on: str = "dev"  # "test" reproduces selection on the test split

    def __post_init__(self):
        if self.patience > self.max_epochs:
            raise ValueError("patience must not exceed max_epochs")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.select_on not in ("dev", "test"):
            raise ValueError("select_on must be 'dev' or 'test'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["model"] = ModelConfig.from_dict(d.get("model", {}))
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    select_f1: float
    select_metrics: dict

    def as_dict(self) -> dict:
        return {"epoch": self.epoch, "train_loss": self.train_loss,
                "dev_f1": self.select_f1, "dev": self.select_metrics}


def _iter_batches(graphs: list[SentenceGraph], batch_size: int, order: np.ndarray):
    for start in range(0, len(order), batch_size):
        yield make_batch([graphs[i] for i in order[start:start + batch_size]])


def evaluate(params: ParamSet, config: ModelConfig, graphs: list[SentenceGraph],
             table: np.ndarray, batch_size: int = 256) -> Metrics:
    """Deterministic evaluation (dropout off) of one split."""
    if not graphs:
        raise ValueError("cannot evaluate an empty split")
    labels, preds, scores = [], [], []
    order = np.arange(len(graphs))
    for b in _iter_batches(graphs, batch_size, order):
        _, probs = M.forward(params, config, b, table, train=False)
        p1 = probs.data[:, 1]
        labels.extend(b.labels.tolist())
        scores.extend(p1.tolist())
        preds.extend((p1 >= 0.5).astype(int).tolist())
    return compute_metrics(labels, preds, scores)


def train(tc: TrainConfig, dataset: Dataset, table: np.ndarray,
          out_dir: str | Path | None = None) -> tuple[ParamSet, list[EpochRecord]]:
    """Mini-batch training with patience-based early stopping.

    Model selection is by F1 on the ``select_on`` split; the returned
    parameters are those of the best epoch. Fully reproducible from the
    seed: init draws and per-batch dropout masks come from one generator
    in a fixed order.
    """
    train_graphs = dataset["train"]
    select_graphs = dataset[tc.select_on]
    if not train_graphs:
        raise ValueError("dataset has no train split")
    if not select_graphs:
        raise ValueError(f"dataset has no {tc.select_on} split for model selection")

    rng = np.random.default_rng(tc.seed)
    params = M.init_params(tc.model, rng)
    opt = AMSGrad(params.named(), lr=tc.lr, manifold_kind=tc.model.manifold,
                  manifold_param_names=M.manifold_params(params))

    best_f1 = -1.0
    best_arrays = params.copy_arrays()
    best_epoch = 0
    stale = 0
    history: list[EpochRecord] = []

    for epoch in range(1, tc.max_epochs + 1):
        order = rng.permutation(len(train_graphs))
        losses = []
        for bi, b in enumerate(_iter_batches(train_graphs, tc.batch_size, order)):
            ad.zero_grads(params.tensors())
            loss = M.batch_loss(params, tc.model, b, table, train=True, rng=rng)
            if not np.isfinite(loss.data):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}, batch {bi}")
            ad.backward(loss)
            opt.step(clip=MAX_GRAD_NORM)
            losses.append(loss.item())

        metrics = evaluate(params, tc.model, select_graphs, table)
        record = EpochRecord(epoch=epoch, train_loss=float(np.mean(losses)),
                             select_f1=metrics.f1, select_metrics=metrics.as_dict())
        history.append(record)
        log.info("epoch %d: train_loss=%.4f select_f1=%.4f", epoch,
                 record.train_loss, record.select_f1)

        if metrics.f1 > best_f1:
            best_f1 = metrics.f1
            best_arrays = params.copy_arrays()
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= tc.patience:
                break

    params.load_arrays(best_arrays)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with (out_dir / "history.jsonl").open("w", encoding="utf-8") as fh:
            for record in history:
                fh.write(json.dumps(record.as_dict()) + "\n")
        M.save_checkpoint(out_dir / "model.ckpt", tc.model, params,
                          extra={"train_config": tc.to_dict(), "best_epoch": best_epoch})
    return params, history


# ---------------------------------------------------------------------------
# grid search
# ---------------------------------------------------------------------------

DEFAULT_GRID = {
    "dropout": [0.0, 0.1, 0.2, 0.25, 0.3],
    "pos_dim": [0, 16, 32, 64, 128],
    "class_weights": [None, "inverse", [0.8, 1.6], [1.0, 1.5]],
}

RESULT_COLUMNS = ["model", "manifold", "dropout", "pos_dim", "weights", "split",
                  "pr", "rc", "f1", "acc", "auc", "epoch", "seed", "params"]


@dataclass
class GridResult:
    dropout: float
    pos_dim: int
    weights: str
    dev: Metrics | None
    test: Metrics | None
    best_epoch: int
    param_count: int
    error: str | None = None


def _resolve_weights(spec, train_labels) -> tuple[float, float] | None:
    if spec is None:
        return None
    if spec == "inverse":
        return inverse_freq_weights(train_labels)
    return float(spec[0]), float(spec[1])


def _model_name(manifold: str, pos_dim: int, weights) -> str:
    base = {"euclidean": "GNN", "poincare": "P-HGNN", "lorentz": "L-HGNN"}[manifold]
    if pos_dim:
        base += "-POS"
    if weights is not None:
        base = "Balanced-" + base
    return base


def _grid_worker(args):
    base_tc, dataset, table, dropout, pos_dim, weights_spec = args
    weights_label = "none" if weights_spec is None else str(weights_spec)
    try:
        train_labels = [g.label for g in dataset["train"]]
        weights = _resolve_weights(weights_spec, train_labels)
        model_cfg = ModelConfig.from_dict({
            **base_tc.model.to_dict(),
            "dropout": dropout,
            "pos_dim": pos_dim,
            "class_weights": list(weights) if weights else None,
        })
        tc = TrainConfig.from_dict({**base_tc.to_dict(), "model": model_cfg.to_dict()})
        weights_label = "none" if weights_spec is None else (
            "inverse" if weights_spec == "inverse" else f"[{weights[0]:.4g},{weights[1]:.4g}]")
        params, history = train(tc, dataset, table)
        best_epoch = int(np.argmax([h.select_f1 for h in history])) + 1
        dev = evaluate(params, model_cfg, dataset["dev"], table) if dataset["dev"] else None
        test = evaluate(params, model_cfg, dataset["test"], table) if dataset["test"] else None
        return GridResult(dropout, pos_dim, weights_label, dev, test,
                          best_epoch, params.num_params())
    except Exception:
        log.warning("grid point (%s, %s, %s) failed", dropout, pos_dim, weights_label)
        return GridResult(dropout, pos_dim, weights_label, None, None, 0, 0,
                          error=traceback.format_exc(limit=3))


def grid_search(grid: dict, base_tc: TrainConfig, dataset: Dataset,
                table: np.ndarray, out_dir: str | Path | None = None) -> list[GridResult]:
    """Train every combination in the grid; partial failures are recorded
    per row and the run continues. Worker parallelism is capped by the
    ECD_THREADS environment variable (default: sequential)."""
    grid = {**DEFAULT_GRID, **grid}
    combos = list(itertools.product(grid["dropout"], grid["pos_dim"], grid["class_weights"]))
    jobs = [(base_tc, dataset, table, d, p, w) for d, p, w in combos]

    workers = max(1, int(os.environ.get("ECD_THREADS", "1")))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_grid_worker, jobs))
    else:
        results = [_grid_worker(j) for j in jobs]

    if out_dir is not None:
        write_results(results, base_tc, Path(out_dir))
    return results


def _result_rows(results: list[GridResult], base_tc: TrainConfig) -> list[dict]:
    rows = []
    for r in results:
        for split, m in (("dev", r.dev), ("test", r.test)):
            if m is None:
                continue
            rows.append({
                "model": _model_name(base_tc.model.manifold, r.pos_dim,
                                     None if r.weights == "none" else r.weights),
                "manifold": base_tc.model.manifold,
                "dropout": r.dropout, "pos_dim": r.pos_dim, "weights": r.weights,
                "split": split,
                "pr": round(m.precision, 4), "rc": round(m.recall, 4),
                "f1": round(m.f1, 4), "acc": round(m.accuracy, 4),
                "auc": round(m.auc_roc, 4),
                "epoch": r.best_epoch, "seed": base_tc.seed, "params": r.param_count,
            })
    return rows


def write_results(results: list[GridResult], base_tc: TrainConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = _result_rows(results, base_tc)
    rows.sort(key=lambda r: (-(r["f1"] if r["split"] == "dev" else 0), r["split"]))

    with (out_dir / "results.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)

    md = ["| " + " | ".join(RESULT_COLUMNS) + " |",
          "|" + "---|" * len(RESULT_COLUMNS)]
    best_f1 = {split: max((r["f1"] for r in rows if r["split"] == split), default=None)
               for split in ("dev", "test")}
    for r in rows:
        cells = []
        for c in RESULT_COLUMNS:
            val = r[c]
            if c == "f1" and val == best_f1[r["split"]]:
                cells.append(f"**{val}**")
            else:
                cells.append(str(val))
        md.append("| " + " | ".join(cells) + " |")
    failures = [r for r in results if r.error]
    if failures:
        md.append("")
        md.append(f"{len(failures)} grid point(s) failed; see results.csv for the completed rows.")
    (out_dir / "results.md").write_text("\n".join(md) + "\n", encoding="utf-8")
