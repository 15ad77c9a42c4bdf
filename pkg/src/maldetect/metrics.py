"""Confusion counts and the detection metrics: DR, FPR and OA, in percent."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import UndefinedMetric
from .features import BENIGN, MALICIOUS


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.tn + other.tn,
                               self.fp + other.fp, self.fn + other.fn)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


def confusion(y_true, y_pred) -> ConfusionCounts:
    """Malicious is the positive class."""
    tp = tn = fp = fn = 0
    for t, p in zip(y_true, y_pred, strict=True):
        if t == MALICIOUS:
            if p == MALICIOUS:
                tp += 1
            else:
                fn += 1
        elif t == BENIGN:
            if p == MALICIOUS:
                fp += 1
            else:
                tn += 1
        else:
            raise ValueError(f"cannot score against label {t!r}")
    return ConfusionCounts(tp, tn, fp, fn)


def detection_rate(c: ConfusionCounts) -> float:
    if c.tp + c.fn == 0:
        raise UndefinedMetric("detection rate undefined without malicious samples")
    return c.tp / (c.tp + c.fn) * 100.0


def false_positive_rate(c: ConfusionCounts) -> float:
    if c.tn + c.fp == 0:
        raise UndefinedMetric("false positive rate undefined without benign samples")
    return c.fp / (c.tn + c.fp) * 100.0


def overall_accuracy(c: ConfusionCounts) -> float:
    if c.total == 0:
        raise UndefinedMetric("overall accuracy undefined for an empty evaluation")
    return (c.tp + c.tn) / c.total * 100.0


def _maybe(fn, c):
    try:
        return fn(c)
    except UndefinedMetric:
        return None


@dataclass(frozen=True)
class MetricsReport:
    """Percentages computed from ``counts``; ``None`` marks an undefined metric."""
    counts: ConfusionCounts
    dr: float | None
    fpr: float | None
    oa: float | None

    @classmethod
    def from_counts(cls, counts: ConfusionCounts) -> "MetricsReport":
        return cls(counts, _maybe(detection_rate, counts),
                   _maybe(false_positive_rate, counts), _maybe(overall_accuracy, counts))

    def to_dict(self) -> dict:
        return {"counts": self.counts.to_dict(), "dr": self.dr, "fpr": self.fpr, "oa": self.oa}

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls.from_counts(ConfusionCounts(**{k: int(v) for k, v in d["counts"].items()}))
