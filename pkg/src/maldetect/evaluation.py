"""Stratified k-fold cross-validation and the family x classifier experiment matrix."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .classifiers import KINDS, canonical_kind
from .errors import FoldTooSmall, FormatError, SingleClass, StageError, VersionError
from .features import BENIGN, MALICIOUS, Corpus, RawFeatureRecord
from .metrics import ConfusionCounts, MetricsReport, confusion
from .pipeline import (FAMILY_MASKS, PipelineConfig, PipelineModel, _training_metadata,
                       fit_reduction, reduce_records, train_classifier)

# row order of the results table
FAMILIES = ("header", "api", "dll", "header+dll", "header+api", "all")
DEFAULT_FOLDS = 10
RESULTS_FORMAT = "maldetect-results"
RESULTS_VERSION = 1

LEAK_FREE = "leak-free"
PAPER_PROTOCOL = "paper"


def stratified_folds(labels: Sequence, k: int = DEFAULT_FOLDS, seed: int = 0) -> list:
    """Fold id per sample index.

    Each class is shuffled with a seeded generator and dealt round-robin. The
    dealing position carries over from one class to the next (classes in
    sorted order) so overall fold sizes also differ by at most one.
    """
    labels = list(labels)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    classes = sorted(set(labels))
    by_class = {c: [i for i, lab in enumerate(labels) if lab == c] for c in classes}
    for c, idx in by_class.items():
        if len(idx) < k:
            raise FoldTooSmall(f"class {c!r} has {len(idx)} samples, fewer than k={k}")
    rng = np.random.default_rng(seed)
    folds = [0] * len(labels)
    offset = 0
    for c in classes:
        idx = by_class[c]
        for pos, j in enumerate(rng.permutation(len(idx))):
            folds[idx[j]] = (offset + pos) % k
        offset = (offset + len(idx)) % k
    return folds


@dataclass
class ExperimentResult:
    feature_family: str
    classifier: str
    fold_reports: list
    aggregate: MetricsReport
    protocol: str = LEAK_FREE
    fold_models: list = field(default_factory=list, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "feature_family": self.feature_family,
            "classifier": self.classifier,
            "protocol": self.protocol,
            "folds": [r.to_dict() for r in self.fold_reports],
            "aggregate": self.aggregate.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentResult":
        return cls(d["feature_family"], d["classifier"],
                   [MetricsReport.from_dict(r) for r in d["folds"]],
                   MetricsReport.from_dict(d["aggregate"]), d.get("protocol", LEAK_FREE))


def _records(corpus) -> list:
    records = list(corpus.records if isinstance(corpus, Corpus) else corpus)
    labels = {r.label for r in records}
    if labels - {MALICIOUS, BENIGN}:
        raise ValueError("cross-validation needs every record labelled")
    if len(labels) < 2:
        raise SingleClass("cross-validation needs both labels")
    return records


def _evaluate(records, configs: dict, folds, k, paper_protocol, reference, keep_models):
    """Run every config in ``configs`` (kind -> config, one shared family) over the folds.

    Selection and PCA depend only on the family, so they are fitted once per
    fold and shared by all classifier kinds.
    """
    truth = [r.label for r in records] if reference is None else list(reference)
    base = next(iter(configs.values()))
    reports = {kind: [] for kind in configs}
    models = {kind: [] for kind in configs}
    protocol = PAPER_PROTOCOL if paper_protocol else LEAK_FREE
    if paper_protocol:
        # global fit before splitting; held-out rows influence selection and PCA
        global_sel, global_pca, global_z = fit_reduction(records, base)
    for f in range(k):
        train_idx = [i for i, fold in enumerate(folds) if fold != f]
        test_idx = [i for i, fold in enumerate(folds) if fold == f]
        train = [records[i] for i in train_idx]
        test = [records[i] for i in test_idx]
        if paper_protocol:
            selection, pca = global_sel, global_pca
            z_train, z_test = global_z[train_idx], global_z[test_idx]
        else:
            selection, pca, z_train = fit_reduction(train, base, fold=f)
            z_test = reduce_records(test, selection.schema, pca)
        y_train = [r.label for r in train]
        for kind, config in configs.items():
            model = train_classifier(config, z_train, y_train, fold=f)
            predicted = [model.predict(row).label for row in z_test]
            counts = confusion([truth[i] for i in test_idx], predicted)
            reports[kind].append(MetricsReport.from_counts(counts))
            if keep_models:
                meta = _training_metadata(Corpus(train).digest(), train, config, protocol, None)
                meta["fold"] = f
                models[kind].append(PipelineModel(selection.schema, selection, pca, model,
                                                  config, meta))
    results = {}
    for kind in configs:
        total = sum((r.counts for r in reports[kind]), ConfusionCounts(0, 0, 0, 0))
        results[kind] = ExperimentResult(base.family, kind, reports[kind],
                                         MetricsReport.from_counts(total), protocol,
                                         models[kind])
    return results


def _check_folds(folds, n, k):
    if len(folds) != n:
        raise ValueError(f"fold assignment has {len(folds)} entries for {n} samples")
    if not set(folds) <= set(range(k)):
        raise ValueError("fold ids must lie in [0, k)")


def cross_validate(corpus, config: PipelineConfig | None = None, k: int = DEFAULT_FOLDS,
                   seed: int | None = None, folds: Sequence[int] | None = None,
                   reference_labels: Sequence | None = None, keep_models: bool = False,
                   paper_protocol: bool = False) -> ExperimentResult:
    """k-fold CV of one pipeline config; aggregate counts pool every fold.

    Models are always trained on the records' own labels. ``reference_labels``
    (one per record) replaces them only when scoring held-out predictions,
    which lets a run train on noisy labels and be judged against clean ones.
    """
    config = config or PipelineConfig()
    records = _records(corpus)
    if reference_labels is not None and len(reference_labels) != len(records):
        raise ValueError("reference_labels must have one entry per record")
    if folds is None:
        folds = stratified_folds([r.label for r in records], k,
                                 config.seed if seed is None else seed)
    else:
        folds = list(folds)
        _check_folds(folds, len(records), k)
    result = _evaluate(records, {config.classifier: config}, folds, k, paper_protocol,
                       reference_labels, keep_models)
    return result[config.classifier]


def run_experiment_matrix(corpus, families: Sequence[str] = FAMILIES,
                          classifier_kinds: Sequence[str] = KINDS, k: int = DEFAULT_FOLDS,
                          seed: int = 0, config: PipelineConfig | None = None,
                          paper_protocol: bool = False) -> list:
    """One ExperimentResult per (family, kind), family-major, on shared folds."""
    config = config or PipelineConfig(seed=seed)
    records = _records(corpus)
    folds = stratified_folds([r.label for r in records], k, seed)
    kinds = [canonical_kind(c) for c in classifier_kinds]
    out = []
    for family in families:
        if family not in FAMILY_MASKS:
            raise ValueError(f"unknown feature family {family!r}")
        configs = {kind: replace(config, family=family, classifier=kind) for kind in kinds}
        try:
            results = _evaluate(records, configs, folds, k, paper_protocol, None, False)
        except StageError as exc:
            raise StageError(f"{family}/{exc.stage}", exc.cause, exc.fold) from exc
        out += [results[kind] for kind in kinds]
    return out


def write_results(results: Sequence[ExperimentResult], path) -> None:
    lines = [json.dumps({"format": RESULTS_FORMAT, "version": RESULTS_VERSION})]
    lines += [json.dumps(r.to_dict(), sort_keys=True, allow_nan=False) for r in results]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_results(path) -> list:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError("results file is empty")
    out = []
    for n, line in enumerate(lines, 1):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", n) from None
        if n == 1:
            if not isinstance(obj, dict) or obj.get("format") != RESULTS_FORMAT:
                raise FormatError("not a maldetect results file", n)
            if obj.get("version") != RESULTS_VERSION:
                raise VersionError(f"results version {obj.get('version')!r} is not supported "
                                   f"(this build reads version {RESULTS_VERSION})", n)
            continue
        try:
            out.append(ExperimentResult.from_dict(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed result record: {exc!r}", n) from None
    return out
