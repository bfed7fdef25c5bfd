"""Binary-classification metrics: confusion-based scores at threshold 0.5
and a rank-based AUC-ROC."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


@dataclass
class Metrics:
    precision: float
    recall: float
    f1: float
    accuracy: float
    auc_roc: float
    tp: int
    fp: int
    tn: int
    fn: int
    degenerate: bool = False  # a zero denominator forced a metric to 0
    auc_defined: bool = True

    def as_dict(self) -> dict:
        return {
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "accuracy": self.accuracy, "auc_roc": self.auc_roc,
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "degenerate": self.degenerate, "auc_defined": self.auc_defined,
        }


def _safe_div(num: float, den: float) -> tuple[float, bool]:
    if den == 0:
        return 0.0, True
    return num / den, False


def auc_roc(labels, scores) -> tuple[float, bool]:
    """Mann-Whitney AUC: (concordant pairs + 0.5 * ties) / (n_pos * n_neg).

    Returns (auc, defined); undefined (and flagged) when a class is absent.
    """
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        return 0.5, False
    ranks = rankdata(scores)
    auc = (ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    return float(auc), True


def compute_metrics(labels, predictions, scores) -> Metrics:
    """Confusion counts at the fixed 0.5 decision threshold plus AUC.

    Metrics with a zero denominator are reported as 0 with the
    ``degenerate`` flag set.
    """
    labels = np.asarray(labels)
    predictions = np.asarray(predictions)
    if labels.size == 0:
        raise ValueError("cannot compute metrics on an empty split")
    if labels.shape != predictions.shape:
        raise ValueError("labels and predictions must have equal length")

    tp = int(((predictions == 1) & (labels == 1)).sum())
    fp = int(((predictions == 1) & (labels == 0)).sum())
    tn = int(((predictions == 0) & (labels == 0)).sum())
    fn = int(((predictions == 0) & (labels == 1)).sum())

    precision, d1 = _safe_div(tp, tp + fp)
    recall, d2 = _safe_div(tp, tp + fn)
    f1, d3 = _safe_div(2.0 * precision * recall, precision + recall)
    accuracy = (tp + tn) / labels.size
    auc, defined = auc_roc(labels, scores)
    return Metrics(
        precision=precision, recall=recall, f1=f1, accuracy=accuracy,
        auc_roc=auc, tp=tp, fp=fp, tn=tn, fn=fn,
        degenerate=d1 or d2 or d3, auc_defined=defined,
    )


def inverse_freq_weights(train_labels) -> tuple[float, float]:
    """Normalized inverse-frequency class weights w_k = N / (2 * n_k)."""
    labels = np.asarray(train_labels)
    n0 = int((labels == 0).sum())
    n1 = int((labels == 1).sum())
    if n0 == 0 or n1 == 0:
        raise ValueError("both classes must be present to derive weights")
    n = labels.size
    return n / (2.0 * n0), n / (2.0 * n1)
