"""Labels, predictions and the uniform prediction entry point."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, LengthMismatch, SingleClass
from ..features import BENIGN, MALICIOUS

LABEL_ORDER = (BENIGN, MALICIOUS)

NAIVE_BAYES = "naive_bayes"
DECISION_TREE = "decision_tree"
LINEAR_SVM = "linear_svm"
KINDS = (NAIVE_BAYES, LINEAR_SVM, DECISION_TREE)
# short names accepted on the command line
ALIASES = {"nb": NAIVE_BAYES, "tree": DECISION_TREE, "j48": DECISION_TREE,
           "svm": LINEAR_SVM}


def canonical_kind(kind: str) -> str:
    kind = ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}")
    return kind


@dataclass(frozen=True)
class Prediction:
    label: str
    score: float


def encode_labels(y) -> np.ndarray:
    """malicious -> 1, benign -> 0."""
    out = np.empty(len(y), dtype=np.int64)
    for i, label in enumerate(y):
        if label == MALICIOUS:
            out[i] = 1
        elif label == BENIGN:
            out[i] = 0
        else:
            raise ValueError(f"training label must be malicious or benign, got {label!r}")
    return out


def check_training_data(x, y, need_both: bool = True):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} samples but {len(y)} labels")
    yi = encode_labels(y)
    if need_both and len(set(yi.tolist())) < 2:
        raise SingleClass("training data must contain both classes")
    return x, yi


def check_input(x, dim_in: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != dim_in:
        raise DimensionMismatch(f"expected a vector of length {dim_in}, got shape {x.shape}")
    return x


def label_for(score: float, threshold: float = 0.0) -> str:
    # exact ties resolve to benign
    return MALICIOUS if score > threshold else BENIGN
