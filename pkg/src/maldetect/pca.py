"""Standardised principal component analysis.

The covariance eigendecomposition uses cyclic Jacobi rotations. Pairs are
visited in round-robin tournament order, so every round applies up to n/2
disjoint rotations at once as whole-row and whole-column updates.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SchemaMismatch, TooFewSamples
from .selection import FeatureVector

STD_FLOOR = 1e-12
JACOBI_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100
DEFAULT_VARIANCE_FRACTION = 0.95


def _round_robin(n: int):
    """Rounds of disjoint (p, q) pairs covering every pair exactly once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def off_diagonal_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_eigh(matrix: np.ndarray, tol: float = JACOBI_TOL,
                max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigenvalues and eigenvectors (as columns) of a symmetric matrix.

    Sweeps until the off-diagonal Frobenius norm drops below
    ``tol * max(1, ||A||_F)`` or ``max_sweeps`` is reached. Output is in
    diagonal order, unsorted.
    """
    a = np.array(matrix, dtype=np.float64, copy=True)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    a = (a + a.T) / 2.0
    v = np.eye(n)
    if n < 2:
        return np.diag(a).copy(), v
    threshold = tol * max(1.0, float(np.linalg.norm(a)))
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        if off_diagonal_norm(a) < threshold:
            break
        for p, q in rounds:
            apq = a[p, q]
            active = apq != 0.0
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            big = np.abs(theta) > 1e150
            safe = np.where(big, 1.0, theta)
            t = np.sign(safe) / (np.abs(safe) + np.sqrt(safe * safe + 1.0))
            # theta^2 would overflow; t ~ 1/(2 theta) there
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # A <- A J, V <- V J
            ap, aq = a[:, p].copy(), a[:, q]
            a[:, p] = c * ap - s * aq
            a[:, q] = s * ap + c * aq
            vp, vq = v[:, p].copy(), v[:, q]
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
            # A <- J^T A
            rp, rq = a[p, :].copy(), a[q, :]
            a[p, :] = c[:, None] * rp - s[:, None] * rq
            a[q, :] = s[:, None] * rp + c[:, None] * rq
            a[p, q] = 0.0
            a[q, p] = 0.0
    return np.diag(a).copy(), v


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude entry is positive."""
    out = vectors.copy()
    for i, row in enumerate(out):
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            out[i] = -row
    return out


@dataclass(frozen=True, eq=False)
class PcaModel:
    dim_in: int
    dim_out: int
    feature_means: np.ndarray
    feature_stds: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    schema_id: str = ""
    degenerate: bool = False

    @property
    def constant_mask(self) -> np.ndarray:
        return self.feature_stds <= STD_FLOOR

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        total = float(np.sum(self.explained_variance))
        if total == 0:
            return np.zeros_like(self.explained_variance)
        return self.explained_variance / total

    def standardize(self, x: np.ndarray) -> np.ndarray:
        z = (x - self.feature_means) / self.feature_stds
        return np.where(self.constant_mask, 0.0, z)

    def to_dict(self) -> dict:
        return {
            "dim_in": self.dim_in,
            "dim_out": self.dim_out,
            "feature_means": self.feature_means.tolist(),
            "feature_stds": self.feature_stds.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "schema_id": self.schema_id,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        dim_in, dim_out = int(d["dim_in"]), int(d["dim_out"])
        comps = np.array(d["components"], dtype=np.float64).reshape(dim_out, dim_in)
        return cls(dim_in, dim_out,
                   np.array(d["feature_means"], dtype=np.float64),
                   np.array(d["feature_stds"], dtype=np.float64),
                   comps,
                   np.array(d["explained_variance"], dtype=np.float64),
                   str(d.get("schema_id", "")), bool(d.get("degenerate", False)))

    def __eq__(self, other):
        return isinstance(other, PcaModel) and self.to_dict() == other.to_dict()


def _as_matrix(vectors, schema_id: str):
    if isinstance(vectors, np.ndarray):
        return np.atleast_2d(np.asarray(vectors, dtype=np.float64)), schema_id
    vectors = list(vectors)
    if vectors and isinstance(vectors[0], FeatureVector):
        ids = {v.schema_id for v in vectors}
        if len(ids) > 1:
            raise SchemaMismatch(f"vectors come from {len(ids)} different schemas")
        if schema_id and ids != {schema_id}:
            raise SchemaMismatch("vectors do not match the requested schema")
        return np.vstack([v.values for v in vectors]), ids.pop()
    return np.atleast_2d(np.asarray(vectors, dtype=np.float64)), schema_id


def pca_fit(vectors: Sequence | np.ndarray, components: int | None = None,
            variance_fraction: float | None = None, schema_id: str = "") -> PcaModel:
    """Fit a standardised PCA.

    Give either a fixed number of ``components`` or a ``variance_fraction``
    (the smallest k whose cumulative explained variance reaches it). With
    neither, 95% of the variance is kept.
    """
    x, schema_id = _as_matrix(vectors, schema_id)
    n, d = x.shape
    if n < 2:
        raise TooFewSamples(f"PCA needs at least 2 samples, got {n}")
    if components is not None and variance_fraction is not None:
        raise ValueError("give components or variance_fraction, not both")
    if components is not None and not 1 <= components <= d:
        raise ValueError(f"components must be in [1, {d}], got {components}")
    if variance_fraction is None and components is None:
        variance_fraction = DEFAULT_VARIANCE_FRACTION
    if variance_fraction is not None and not 0 < variance_fraction <= 1:
        raise ValueError("variance_fraction must be in (0, 1]")

    means = x.mean(axis=0)
    raw_std = x.std(axis=0, ddof=1)
    stds = np.maximum(raw_std, STD_FLOOR)
    z = np.where(raw_std <= STD_FLOOR, 0.0, (x - means) / stds)
    cov = z.T @ z / (n - 1)

    eigvals, eigvecs = jacobi_eigh(cov)
    order = np.argsort(-eigvals, kind="stable")
    eigvals = np.maximum(eigvals[order], 0.0)
    eigvecs = _fix_signs(eigvecs[:, order].T)

    total = float(eigvals.sum())
    degenerate = total == 0.0
    if components is None:
        if degenerate:
            k = 1
        else:
            cumulative = np.cumsum(eigvals) / total
            k = int(np.searchsorted(cumulative, variance_fraction - 1e-12) + 1)
            k = min(k, d)
    else:
        k = components
    return PcaModel(d, k, means, stds, eigvecs[:k].copy(), eigvals[:k].copy(),
                    schema_id, degenerate)


def pca_transform(model: PcaModel, v) -> np.ndarray:
    """Project one vector (or a batch of rows) onto the model's components."""
    if isinstance(v, FeatureVector):
        if model.schema_id and v.schema_id != model.schema_id:
            raise SchemaMismatch(f"vector schema {v.schema_id} != model schema "
                                 f"{model.schema_id}")
        v = v.values
    x = np.asarray(v, dtype=np.float64)
    if x.shape[-1] != model.dim_in:
        raise SchemaMismatch(f"expected {model.dim_in} inputs, got {x.shape[-1]}")
    return model.standardize(x) @ model.components.T
