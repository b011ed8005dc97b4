"""Multi-label recognition metrics: mAP, per-class and overall precision/recall/F1.

AP uses all-point interpolation: precision is averaged at the rank of every
positive. Tied scores keep input order. Classes with no positive labels are
left out of mAP, CP and CR. A class (or the whole set) with no predicted
positives has precision 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

import config


@dataclass(frozen=True)
class MultiLabelMetrics:
    mAP: float  # all values are fractions in [0, 1]
    CP: float
    CR: float
    CF1: float
    OP: float
    OR: float
    OF1: float
    num_classes_evaluated: int

    def as_percentages(self) -> dict[str, float]:
        return {
            name: 100.0 * getattr(self, name)
            for name in ("mAP", "CP", "CR", "CF1", "OP", "OR", "OF1")
        }


def f1(precision: float, recall: float) -> float:
    if precision + recall <= 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """All-point AP of one class; NaN when the class has no positives."""
    labels = np.asarray(labels) > 0
    n_pos = int(labels.sum())
    if n_pos == 0:
        return float("nan")
    order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")
    hits = labels[order]
    ranks = np.flatnonzero(hits) + 1
    precision_at_hits = np.arange(1, n_pos + 1) / ranks
    return float(precision_at_hits.mean())


def multilabel_metrics(probs, ground_truth, threshold: float = config.DEFAULT_THRESHOLD) -> MultiLabelMetrics:
    """Metric suite for N x C scores against N x C binary ground truth.

    Scores >= threshold count as predicted positives.
    """
    probs = np.asarray(probs, dtype=np.float64)
    truth = np.asarray(ground_truth)
    if probs.shape != truth.shape or probs.ndim != 2:
        raise ValueError(f"Scores {probs.shape} and ground truth {truth.shape} must be matching N x C arrays")
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    truth = truth > 0
    if not truth.any():
        raise ValueError("metrics undefined: ground truth has no positive labels")

    evaluated = np.flatnonzero(truth.any(axis=0))
    aps = [average_precision(probs[:, c], truth[:, c]) for c in evaluated]

    predicted = probs >= threshold
    tp = (predicted & truth).sum(axis=0).astype(np.float64)
    n_pred = predicted.sum(axis=0).astype(np.float64)
    n_pos = truth.sum(axis=0).astype(np.float64)

    per_class_p = np.divide(tp, n_pred, out=np.zeros_like(tp), where=n_pred > 0)[evaluated]
    per_class_r = (tp / np.maximum(n_pos, 1.0))[evaluated]
    cp, cr = float(per_class_p.mean()), float(per_class_r.mean())

    total_pred = n_pred.sum()
    op = float(tp.sum() / total_pred) if total_pred > 0 else 0.0
    o_r = float(tp.sum() / n_pos.sum())

    return MultiLabelMetrics(
        mAP=float(np.mean(aps)),
        CP=cp,
        CR=cr,
        CF1=f1(cp, cr),
        OP=op,
        OR=o_r,
        OF1=f1(op, o_r),
        num_classes_evaluated=len(evaluated),
    )
