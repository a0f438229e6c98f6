"""Confusion-matrix metrics and rank-statistic AUROC."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class SingleClass(Exception):
    """Raised internally when AUROC is requested with one label present."""


@dataclass
class MetricsReport:
    tp: int
    fp: int
    fn: int
    tn: int
    accuracy: float
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    auroc: Optional[float] = None

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_json(self, recall_only: bool = False) -> dict:
        if recall_only:
            return {"tp": self.tp, "fn": self.fn, "recall": self.recall,
                    "recall_pct": None if self.recall is None else round(100 * self.recall, 2)}
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auroc": self.auroc,
        }


def auroc_rank(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUROC with midranks for ties; exact and deterministic."""
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUROC needs both classes")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=float)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0  # average of 1-based ranks
        i = j + 1
    rank_sum_pos = float(ranks[labels == 1].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def compute_metrics(predictions: list[tuple[float, int]], threshold: float = 0.5) -> MetricsReport:
    """Counts at the threshold; AUROC by the rank statistic when both
    classes are present (absent otherwise, never zero)."""
    if not predictions:
        raise ValueError("predictions must be non-empty")
    scores = np.asarray([s for s, _ in predictions], dtype=float)
    labels = np.asarray([int(y) for _, y in predictions])
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    if not set(np.unique(labels)) <= {0, 1}:
        raise ValueError("labels must be binary")

    pred = (scores >= threshold).astype(int)
    tp = int(((pred == 1) & (labels == 1)).sum())
    fp = int(((pred == 1) & (labels == 0)).sum())
    fn = int(((pred == 0) & (labels == 1)).sum())
    tn = int(((pred == 0) & (labels == 0)).sum())

    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    accuracy = (tp + tn) / len(labels)
    try:
        auroc = auroc_rank(scores, labels)
    except SingleClass:
        auroc = None
    return MetricsReport(tp, fp, fn, tn, accuracy, precision, recall, f1, auroc)


def metrics_from_confusion(tp: int, fp: int, fn: int, tn: int) -> MetricsReport:
    """Metrics from raw counts (no scores, so no AUROC)."""
    total = tp + fp + fn + tn
    if total == 0:
        raise ValueError("empty confusion matrix")
    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricsReport(tp, fp, fn, tn, (tp + tn) / total, precision, recall, f1, None)
