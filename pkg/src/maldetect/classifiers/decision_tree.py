"""C4.5-style binary decision tree for continuous features.

Splits maximise gain ratio over midpoints between consecutive distinct
values; the grown tree is pruned bottom-up by pessimistic error estimates
(upper confidence bound of the binomial leaf error rate).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betaincinv

from .base import DECISION_TREE, Prediction, check_input, check_training_data, label_for

MIN_GAIN = 1e-12
# gain ratios closer than this count as tied
TIE_TOLERANCE = 1e-12
# C4.5 keeps a subtree unless collapsing it costs at most this many extra errors
PRUNE_SLACK = 0.1


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float
    gain_ratio: float


def _binary_entropy(pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        p = pos / n
        q = 1.0 - p
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(q > 0, q * np.log2(q), 0.0))
    return np.where(n > 0, h, 0.0)


def best_split(x: np.ndarray, y: np.ndarray, min_leaf: int = 2) -> Split | None:
    """Highest gain-ratio split among candidates with positive gain.

    Ties go to the lowest feature index, then the lowest threshold. When no
    candidate has positive gain but some valid split exists, the first valid
    candidate is returned with gain 0 (this lets the tree fit parity-like
    structure such as XOR, where every single split is uninformative).
    """
    n = len(y)
    total_pos = float(y.sum())
    parent = float(_binary_entropy(np.array(total_pos), np.array(float(n))))
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    size_ok = (n_left >= min_leaf) & (n_right >= min_leaf)
    best, fallback = None, None
    for d in range(x.shape[1]):
        order = np.argsort(x[:, d], kind="stable")
        xs = x[order, d]
        valid = size_ok & (xs[:-1] < xs[1:])
        if not valid.any():
            continue
        pos_left = np.cumsum(y[order])[:-1].astype(np.float64)
        pos_right = total_pos - pos_left
        gain = parent - (n_left / n * _binary_entropy(pos_left, n_left)
                         + n_right / n * _binary_entropy(pos_right, n_right))
        split_info = _binary_entropy(n_left, np.full_like(n_left, n))
        if fallback is None:
            i = int(np.argmax(valid))
            fallback = Split(d, _midpoint(xs[i], xs[i + 1]), 0.0, 0.0)
        ok = valid & (gain > MIN_GAIN)
        if not ok.any():
            continue
        ratio = np.where(ok, gain / np.where(ok, split_info, 1.0), -np.inf)
        i = int(np.argmax(ratio >= ratio.max() - TIE_TOLERANCE))
        if best is None or ratio[i] > best.gain_ratio + TIE_TOLERANCE:
            best = Split(d, _midpoint(xs[i], xs[i + 1]), float(gain[i]), float(ratio[i]))
    return best if best is not None else fallback


def _midpoint(a: float, b: float) -> float:
    mid = (a + b) / 2.0
    # adjacent floats: keep a <= mid < b
    return float(mid if a <= mid < b else a)


def pessimistic_errors(n: int, errors: int, confidence: float) -> float:
    """Upper confidence bound on the error count of a leaf holding ``n`` cases."""
    if n == 0:
        return 0.0
    if errors >= n:
        return float(n)
    return float(n * betaincinv(errors + 1, n - errors, 1.0 - confidence))


@dataclass(frozen=True, eq=False)
class DecisionTreeModel:
    """Flat node list. Node 0 is the root.

    Each node is ``(feature, threshold, left, right, benign_count,
    malicious_count)``; leaves have feature -1. Samples with
    ``x[feature] <= threshold`` go left. The score is the leaf's malicious
    fraction and the label is malicious iff that fraction exceeds 0.5.
    """
    nodes: tuple
    dim_in: int
    kind: str = DECISION_TREE

    def leaf_for(self, x) -> int:
        x = check_input(x, self.dim_in)
        i = 0
        for _ in range(len(self.nodes)):
            feature, threshold, left, right, _, _ = self.nodes[i]
            if feature < 0:
                return i
            i = left if x[feature] <= threshold else right
        raise RuntimeError("tree contains a cycle")

    def predict(self, x) -> Prediction:
        _, _, _, _, ben, mal = self.nodes[self.leaf_for(x)]
        score = mal / (ben + mal) if ben + mal else 0.0
        return Prediction(label_for(score, 0.5), float(score))

    @property
    def depth(self) -> int:
        def walk(i):
            feature, _, left, right, _, _ = self.nodes[i]
            return 0 if feature < 0 else 1 + max(walk(left), walk(right))
        return walk(0)

    @property
    def n_leaves(self) -> int:
        return sum(1 for node in self.nodes if node[0] < 0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dim_in": self.dim_in,
                "nodes": [list(node) for node in self.nodes]}

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTreeModel":
        nodes = tuple((int(f), float(t), int(lo), int(hi), int(b), int(m))
                      for f, t, lo, hi, b, m in d["nodes"])
        return cls(nodes, int(d["dim_in"]))

    def __eq__(self, other):
        return isinstance(other, DecisionTreeModel) and self.to_dict() == other.to_dict()


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "ben", "mal")

    def __init__(self, ben, mal):
        self.feature, self.threshold = -1, 0.0
        self.left = self.right = None
        self.ben, self.mal = ben, mal

    @property
    def errors(self) -> int:
        # majority label; ties predict benign
        return self.ben if self.mal > self.ben else self.mal


def _grow(x, y, depth, min_leaf, max_depth) -> _Node:
    mal = int(y.sum())
    node = _Node(len(y) - mal, mal)
    if mal == 0 or mal == len(y) or depth >= max_depth or len(y) < 2 * min_leaf:
        return node
    split = best_split(x, y, min_leaf)
    if split is None:
        return node
    go_left = x[:, split.feature] <= split.threshold
    node.feature, node.threshold = split.feature, split.threshold
    node.left = _grow(x[go_left], y[go_left], depth + 1, min_leaf, max_depth)
    node.right = _grow(x[~go_left], y[~go_left], depth + 1, min_leaf, max_depth)
    return node


def _prune(node: _Node, confidence: float) -> float:
    """Prune in place; returns the estimated error count of the result."""
    as_leaf = pessimistic_errors(node.ben + node.mal, node.errors, confidence)
    if node.feature < 0:
        return as_leaf
    subtree = _prune(node.left, confidence) + _prune(node.right, confidence)
    if as_leaf <= subtree + PRUNE_SLACK:
        node.feature, node.threshold, node.left, node.right = -1, 0.0, None, None
        return as_leaf
    return subtree


def _flatten(root: _Node) -> tuple:
    nodes = []

    def emit(node):
        i = len(nodes)
        nodes.append(None)
        if node.feature < 0:
            nodes[i] = (-1, 0.0, -1, -1, node.ben, node.mal)
        else:
            left = emit(node.left)
            right = emit(node.right)
            nodes[i] = (node.feature, node.threshold, left, right, node.ben, node.mal)
        return i

    emit(root)
    return tuple(nodes)


def train_decision_tree(x, y, min_leaf: int = 2, max_depth: int = 64,
                        confidence: float | None = 0.25) -> DecisionTreeModel:
    """Grow and prune a tree. ``confidence=None`` disables pruning."""
    x, yi = check_training_data(x, y, need_both=False)
    if len(x) < 1:
        raise ValueError("decision tree needs at least one sample")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    root = _grow(x, yi, 0, min_leaf, max_depth)
    if confidence is not None:
        if not 0 < confidence < 1:
            raise ValueError("confidence must be in (0, 1)")
        _prune(root, confidence)
    return DecisionTreeModel(_flatten(root), x.shape[1])
