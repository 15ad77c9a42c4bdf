"""Linear SVM trained in the primal by Pegasos stochastic sub-gradient steps."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import LINEAR_SVM, Prediction, check_input, check_training_data, label_for

STD_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class LinearSvmModel:
    """``score = w . ((x - mean) / std) + b``; malicious iff score > 0.

    Dimensions whose training std was below the floor are ignored.
    """
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    std: np.ndarray
    lam: float = 1e-4
    kind: str = LINEAR_SVM

    @property
    def dim_in(self) -> int:
        return self.weights.shape[0]

    def scale(self, x: np.ndarray) -> np.ndarray:
        z = (x - self.mean) / self.std
        return np.where(self.std <= STD_FLOOR, 0.0, z)

    def decision(self, x) -> float:
        x = check_input(x, self.dim_in)
        return float(self.scale(x) @ self.weights + self.bias)

    def predict(self, x) -> Prediction:
        score = self.decision(x)
        return Prediction(label_for(score), score)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dim_in": self.dim_in, "weights": self.weights.tolist(),
                "bias": self.bias, "mean": self.mean.tolist(), "std": self.std.tolist(),
                "lambda": self.lam}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearSvmModel":
        return cls(np.array(d["weights"], dtype=np.float64), float(d["bias"]),
                   np.array(d["mean"], dtype=np.float64),
                   np.array(d["std"], dtype=np.float64), float(d["lambda"]))

    def __eq__(self, other):
        return isinstance(other, LinearSvmModel) and self.to_dict() == other.to_dict()


def svm_objective(model: LinearSvmModel, x, y) -> float:
    """Regularised mean hinge loss of ``model`` on labelled data."""
    x, yi = check_training_data(x, y, need_both=False)
    signs = np.where(yi == 1, 1.0, -1.0)
    margins = signs * (model.scale(x) @ model.weights + model.bias)
    w = np.append(model.weights, model.bias)
    return float(0.5 * model.lam * (w @ w) + np.maximum(0.0, 1.0 - margins).mean())


def train_linear_svm(x, y, lam: float = 1e-4, epochs: int = 50, seed: int = 0,
                     project: bool = True) -> LinearSvmModel:
    """Pegasos with step ``1/(lam*t)``, one sample per step, seeded epoch shuffles.

    The bias is learned as the weight of a constant input and is regularised
    with the rest. ``project`` applies the optional ball projection of radius
    ``1/sqrt(lam)``.
    """
    x, yi = check_training_data(x, y)
    if lam <= 0:
        raise ValueError("lam must be positive")
    mean = x.mean(axis=0)
    raw_std = x.std(axis=0)
    std = np.maximum(raw_std, STD_FLOOR)
    z = np.where(raw_std <= STD_FLOOR, 0.0, (x - mean) / std)
    z = np.hstack([z, np.ones((len(z), 1))])
    signs = np.where(yi == 1, 1.0, -1.0)

    rng = np.random.Generator(np.random.PCG64(seed))
    w = np.zeros(z.shape[1])
    radius = 1.0 / math.sqrt(lam)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(len(z)):
            t += 1
            eta = 1.0 / (lam * t)
            violated = signs[i] * (z[i] @ w) < 1.0
            w *= 1.0 - eta * lam
            if violated:
                w += eta * signs[i] * z[i]
            if project:
                norm = math.sqrt(w @ w)
                if norm > radius:
                    w *= radius / norm
    return LinearSvmModel(w[:-1].copy(), float(w[-1]), mean, std, lam)
