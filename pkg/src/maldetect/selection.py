"""Feature ranking, top-k selection and vectorisation.

Header integers are ranked by information gain over equal-frequency bins;
DLL and API names are ranked by how many records contain them.
"""
from __future__ import annotations

import hashlib
import math
import warnings
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateCorpusWarning, EmptyInput, LengthMismatch
from .features import BENIGN, HEADER_FEATURE_NAMES, MALICIOUS, RawFeatureRecord

HEADER, DLL, API = "header", "dll", "api"
FAMILIES = (HEADER, DLL, API)

DEFAULT_K_HEADER = 88
DEFAULT_K_DLL = 130
DEFAULT_K_API = 2453
DEFAULT_BINS = 10


def _entropy_of_counts(counts) -> float:
    total = sum(counts)
    h = 0.0
    for c in counts:
        if c:
            p = c / total
            h -= p * math.log2(p)
    return h


def entropy(labels: Sequence) -> float:
    """Shannon entropy of a label sequence, in bits."""
    if len(labels) == 0:
        raise EmptyInput("entropy of an empty label list")
    counts = Counter(labels)
    return _entropy_of_counts([counts[k] for k in sorted(counts)])


def discretize_fit(column: Sequence[int], n_bins: int = DEFAULT_BINS) -> list:
    """Equal-frequency cut points for ``column``.

    Bin ``b`` is the half-open interval ``[edges[b-1], edges[b])``; the first
    and last bins are open towards the outside. Repeated cut points collapse,
    so a constant column yields no edges and one bin.
    """
    if len(column) == 0:
        raise EmptyInput("cannot discretize an empty column")
    if n_bins < 2:
        raise ValueError("n_bins must be at least 2")
    values = sorted(column)
    n = len(values)
    lo = values[0]
    cuts = {values[i * n // n_bins] for i in range(1, n_bins)}
    return sorted(c for c in cuts if c > lo)


def discretize_apply(column: Sequence, edges: Sequence) -> list:
    return [bisect_right(edges, v) for v in column]


def information_gain(feature_bins: Sequence, labels: Sequence) -> float:
    """H(labels) minus the bin-weighted conditional entropy, in bits."""
    n = len(labels)
    if len(feature_bins) != n:
        raise LengthMismatch(f"{len(feature_bins)} bins for {n} labels")
    if n == 0:
        raise EmptyInput("information gain of an empty column")
    by_bin: dict = {}
    for b, y in zip(feature_bins, labels):
        by_bin.setdefault(b, Counter())[y] += 1
    classes = sorted(set(labels))
    conditional = 0.0
    for b in sorted(by_bin):
        counts = [by_bin[b][c] for c in classes]
        conditional += sum(counts) / n * _entropy_of_counts(counts)
    gain = entropy(labels) - conditional
    return max(gain, 0.0)


@dataclass(frozen=True)
class RankedFeature:
    name: str
    family: str
    score: float
    rank: int


def _rank(scores: dict, family: str) -> list:
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return [RankedFeature(name, family, score, i + 1)
            for i, (name, score) in enumerate(ordered)]


def _training_labels(records: Sequence[RawFeatureRecord]) -> list:
    labels = [r.label for r in records]
    bad = set(labels) - {MALICIOUS, BENIGN}
    if bad:
        raise ValueError(f"ranking needs labelled records, got {sorted(bad)}")
    return labels


def header_bin_edges(records: Sequence[RawFeatureRecord], n_bins: int = DEFAULT_BINS) -> dict:
    return {name: discretize_fit([r.header_features[name] for r in records], n_bins)
            for name in HEADER_FEATURE_NAMES}


def rank_header_features(records: Sequence[RawFeatureRecord], n_bins: int = DEFAULT_BINS,
                         bin_edges: dict | None = None) -> list:
    """Rank the 138 header features by information gain.

    Warns with DegenerateCorpusWarning (and returns all-zero scores) when
    the records carry a single label.
    """
    records = list(records)
    if len(records) < 2:
        raise EmptyInput("header ranking needs at least two records")
    labels = _training_labels(records)
    if bin_edges is None:
        bin_edges = header_bin_edges(records, n_bins)
    if len(set(labels)) < 2:
        warnings.warn("single-class corpus: all information gains are 0",
                      DegenerateCorpusWarning, stacklevel=2)
        return _rank({name: 0.0 for name in HEADER_FEATURE_NAMES}, HEADER)
    scores = {}
    for name in HEADER_FEATURE_NAMES:
        column = [r.header_features[name] for r in records]
        scores[name] = information_gain(discretize_apply(column, bin_edges[name]), labels)
    return _rank(scores, HEADER)


def rank_call_frequency(records: Sequence[RawFeatureRecord], family: str) -> list:
    """Rank DLL or qualified API names by the number of records containing them."""
    if family == DLL:
        counts = Counter(name for r in records for name in r.dll_names)
    elif family == API:
        counts = Counter(name for r in records for name in r.api_names)
    else:
        raise ValueError(f"family must be {DLL!r} or {API!r}, got {family!r}")
    return _rank({k: float(v) for k, v in counts.items()}, family)


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered vector layout: header names, then DLL names, then API names."""
    names: tuple
    families: tuple

    def __post_init__(self):
        if len(self.names) != len(self.families):
            raise LengthMismatch("names and families differ in length")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate feature names in schema")

    @property
    def dimension(self) -> int:
        return len(self.names)

    @property
    def schema_id(self) -> str:
        h = hashlib.sha256()
        for fam, name in zip(self.families, self.names):
            h.update(f"{fam}\t{name}\n".encode("utf-8"))
        return h.hexdigest()[:16]

    def to_dict(self) -> dict:
        return {"names": list(self.names), "families": list(self.families)}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        return cls(tuple(d["names"]), tuple(d["families"]))


@dataclass(frozen=True)
class SelectionModel:
    k_header: int
    k_dll: int
    k_api: int
    discretizer_bins: int
    selected: dict
    bin_edges: dict = field(default_factory=dict)

    @property
    def schema(self) -> FeatureSchema:
        names, fams = [], []
        for fam in FAMILIES:
            names += self.selected[fam]
            fams += [fam] * len(self.selected[fam])
        return FeatureSchema(tuple(names), tuple(fams))

    def to_dict(self) -> dict:
        return {
            "k_header": self.k_header, "k_dll": self.k_dll, "k_api": self.k_api,
            "discretizer_bins": self.discretizer_bins,
            "selected": {f: list(self.selected[f]) for f in FAMILIES},
            "bin_edges": {k: list(v) for k, v in sorted(self.bin_edges.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionModel":
        return cls(int(d["k_header"]), int(d["k_dll"]), int(d["k_api"]),
                   int(d["discretizer_bins"]),
                   {f: list(d["selected"][f]) for f in FAMILIES},
                   {k: list(v) for k, v in d.get("bin_edges", {}).items()})


def select(rank_header: Sequence[RankedFeature], rank_dll: Sequence[RankedFeature],
           rank_api: Sequence[RankedFeature], k_header: int = DEFAULT_K_HEADER,
           k_dll: int = DEFAULT_K_DLL, k_api: int = DEFAULT_K_API,
           n_bins: int = DEFAULT_BINS, bin_edges: dict | None = None) -> SelectionModel:
    """Keep the top ``k`` names of each ranking (fewer when fewer exist)."""
    if min(k_header, k_dll, k_api) < 0:
        raise ValueError("k must be non-negative")
    selected = {
        HEADER: [f.name for f in rank_header[:k_header]],
        DLL: [f.name for f in rank_dll[:k_dll]],
        API: [f.name for f in rank_api[:k_api]],
    }
    edges = {}
    if bin_edges:
        edges = {n: list(bin_edges[n]) for n in selected[HEADER] if n in bin_edges}
    return SelectionModel(k_header, k_dll, k_api, n_bins, selected, edges)


def fit_selection(records: Sequence[RawFeatureRecord], k_header: int = DEFAULT_K_HEADER,
                  k_dll: int = DEFAULT_K_DLL, k_api: int = DEFAULT_K_API,
                  n_bins: int = DEFAULT_BINS) -> SelectionModel:
    """Rank all three families over ``records`` and select the top-k of each."""
    records = list(records)
    edges = header_bin_edges(records, n_bins) if k_header else {}
    rh = rank_header_features(records, n_bins, edges) if k_header else []
    rd = rank_call_frequency(records, DLL) if k_dll else []
    ra = rank_call_frequency(records, API) if k_api else []
    return select(rh, rd, ra, k_header, k_dll, k_api, n_bins, edges)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    schema_id: str


def vectorize_many(records: Sequence[RawFeatureRecord], schema: FeatureSchema) -> np.ndarray:
    """Project records onto ``schema``: raw header values, 0/1 name presence."""
    out = np.zeros((len(records), schema.dimension), dtype=np.float64)
    for i, r in enumerate(records):
        for j, (fam, name) in enumerate(zip(schema.families, schema.names)):
            if fam == HEADER:
                out[i, j] = r.header_features[name]
            elif fam == DLL:
                out[i, j] = name in r.dll_names
            else:
                out[i, j] = name in r.api_names
    return out


def vectorize(record: RawFeatureRecord, schema: FeatureSchema) -> FeatureVector:
    return FeatureVector(vectorize_many([record], schema)[0], schema.schema_id)


def format_ranking(ranking: Sequence[RankedFeature], top: int | None = None) -> str:
    """Render a ranking as a (rank, name, score) text table."""
    rows = list(ranking[:top] if top else ranking)
    width = max([len(f.name) for f in rows] + [7])
    lines = [f"{'No':>4}  {'Feature':<{width}}  Score"]
    for f in rows:
        score = f"{f.score:.6f}" if f.family == HEADER else f"{int(f.score):,}"
        lines.append(f"{f.rank:>4}  {f.name:<{width}}  {score}")
    return "\n".join(lines)
