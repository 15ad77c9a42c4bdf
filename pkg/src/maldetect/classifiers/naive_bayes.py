"""Gaussian naive Bayes over continuous (post-PCA) features."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import LABEL_ORDER, NAIVE_BAYES, Prediction, check_input, check_training_data, label_for

DEFAULT_VARIANCE_FLOOR = 1e-9


@dataclass(frozen=True, eq=False)
class NaiveBayesModel:
    """Per-class priors plus per-dimension Gaussian mean and variance.

    Rows of ``means``/``variances`` follow ``LABEL_ORDER`` (benign, malicious).
    The prediction score is the malicious-minus-benign log-posterior margin;
    the label is malicious iff the margin is strictly positive.
    """
    priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    variance_floor: float = DEFAULT_VARIANCE_FLOOR
    kind: str = NAIVE_BAYES

    @property
    def dim_in(self) -> int:
        return self.means.shape[1]

    def joint_log_likelihood(self, x) -> np.ndarray:
        """log P(class) + sum_d log N(x_d; mean, var) for each class."""
        x = check_input(x, self.dim_in)
        diff = x - self.means
        log_density = -0.5 * (np.log(2.0 * math.pi * self.variances) + diff * diff / self.variances)
        return np.log(self.priors) + log_density.sum(axis=1)

    def log_posteriors(self, x) -> dict:
        jll = self.joint_log_likelihood(x)
        top = jll.max()
        norm = top + math.log(float(np.exp(jll - top).sum()))
        return {label: float(v - norm) for label, v in zip(LABEL_ORDER, jll)}

    def predict(self, x) -> Prediction:
        jll = self.joint_log_likelihood(x)
        margin = float(jll[1] - jll[0])
        return Prediction(label_for(margin), margin)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dim_in": self.dim_in, "labels": list(LABEL_ORDER),
                "priors": self.priors.tolist(), "means": self.means.tolist(),
                "variances": self.variances.tolist(), "variance_floor": self.variance_floor}

    @classmethod
    def from_dict(cls, d: dict) -> "NaiveBayesModel":
        dim = int(d["dim_in"])
        return cls(np.array(d["priors"], dtype=np.float64),
                   np.array(d["means"], dtype=np.float64).reshape(2, dim),
                   np.array(d["variances"], dtype=np.float64).reshape(2, dim),
                   float(d["variance_floor"]))

    def __eq__(self, other):
        return isinstance(other, NaiveBayesModel) and self.to_dict() == other.to_dict()


def train_naive_bayes(x, y, variance_floor: float = DEFAULT_VARIANCE_FLOOR) -> NaiveBayesModel:
    x, yi = check_training_data(x, y)
    if len(x) < 2:
        raise ValueError("naive Bayes needs at least two samples")
    priors, means, variances = [], [], []
    for cls in (0, 1):
        rows = x[yi == cls]
        priors.append(len(rows) / len(x))
        means.append(rows.mean(axis=0))
        variances.append(np.maximum(rows.var(axis=0), variance_floor))
    return NaiveBayesModel(np.array(priors), np.array(means), np.array(variances),
                           variance_floor)
