"""Naive Bayes, C4.5-style decision tree and linear SVM behind one contract."""
from __future__ import annotations

from .base import (ALIASES, DECISION_TREE, KINDS, LABEL_ORDER, LINEAR_SVM, NAIVE_BAYES,
                   Prediction, canonical_kind)
from .decision_tree import DecisionTreeModel, best_split, train_decision_tree
from .linear_svm import LinearSvmModel, svm_objective, train_linear_svm
from .naive_bayes import NaiveBayesModel, train_naive_bayes

_MODEL_TYPES = {
    NAIVE_BAYES: NaiveBayesModel,
    DECISION_TREE: DecisionTreeModel,
    LINEAR_SVM: LinearSvmModel,
}


def train(kind: str, x, y, **params):
    """Dispatch to the trainer for ``kind``; unknown params are rejected."""
    kind = canonical_kind(kind)
    if kind == NAIVE_BAYES:
        return train_naive_bayes(x, y, **params)
    if kind == DECISION_TREE:
        return train_decision_tree(x, y, **params)
    return train_linear_svm(x, y, **params)


def predict(model, x) -> Prediction:
    return model.predict(x)


def predict_many(model, x) -> list:
    return [model.predict(row) for row in x]


def model_from_dict(d: dict):
    kind = d.get("kind")
    if kind not in _MODEL_TYPES:
        raise ValueError(f"unknown classifier kind {kind!r}")
    return _MODEL_TYPES[kind].from_dict(d)


__all__ = [
    "ALIASES", "DECISION_TREE", "KINDS", "LABEL_ORDER", "LINEAR_SVM", "NAIVE_BAYES",
    "DecisionTreeModel", "LinearSvmModel", "NaiveBayesModel", "Prediction",
    "best_split", "canonical_kind", "model_from_dict", "predict", "predict_many",
    "svm_objective", "train", "train_decision_tree", "train_linear_svm",
    "train_naive_bayes",
]
