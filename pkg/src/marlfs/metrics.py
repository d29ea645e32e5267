"""Confusion counts and the four classification measures (class 1 is positive)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

METRICS = ("accuracy", "precision", "recall", "f_score")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class PerformanceReport:
    accuracy: float
    precision: float
    recall: float
    f_score: float

    @property
    def empirical_error(self) -> float:
        return 1.0 - self.accuracy

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def confusion(predicted, actual) -> ConfusionCounts:
    p = np.asarray(predicted).astype(np.int64).ravel()
    a = np.asarray(actual).astype(np.int64).ravel()
    if p.shape != a.shape:
        raise ValueError(f"length mismatch: {p.size} predictions vs {a.size} labels")
    if p.size == 0:
        raise ValueError("no examples to score")
    if not (np.isin(p, (0, 1)).all() and np.isin(a, (0, 1)).all()):
        raise ValueError("labels must be 0 or 1")
    tp = int(np.sum((p == 1) & (a == 1)))
    fp = int(np.sum((p == 1) & (a == 0)))
    tn = int(np.sum((p == 0) & (a == 0)))
    return ConfusionCounts(tp, fp, tn, p.size - tp - fp - tn)


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def compute_metrics(c: ConfusionCounts) -> PerformanceReport:
    """Accuracy, precision, recall and F-score; any 0/0 ratio is taken as 0."""
    if c.total <= 0:
        raise ValueError("confusion counts are all zero")
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    return PerformanceReport(
        accuracy=(c.tp + c.tn) / c.total,
        precision=precision,
        recall=recall,
        f_score=_ratio(2 * precision * recall, precision + recall),
    )


def score(predicted, actual) -> PerformanceReport:
    return compute_metrics(confusion(predicted, actual))
