"""Selection -> vectorisation -> PCA -> classifier, persisted as one JSON document.

Also hosts the directory scan that applies a saved model to every file under
a root.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import classifiers as clf
from .behaviors import CATEGORIES, BehaviorCategoryMap, categorize_behaviors, load_behavior_map
from .errors import FormatError, MaldetectError, PeError, SingleClass, StageError, VersionError
from .features import (BENIGN, MALICIOUS, UNLABELED, Corpus, RawFeatureRecord, content_hash,
                       extract_raw)
from .metrics import confusion, overall_accuracy
from .pca import PcaModel, pca_fit, pca_transform
from .pe_parser import detect_packer, is_pe, parse_pe
from .selection import (DEFAULT_BINS, DEFAULT_K_API, DEFAULT_K_DLL, DEFAULT_K_HEADER,
                        FeatureSchema, SelectionModel, fit_selection, vectorize_many)

FORMAT_VERSION = 1
MODEL_FORMAT = "maldetect-model"

FAMILY_MASKS = {
    "header": (True, False, False),
    "api": (False, False, True),
    "dll": (False, True, False),
    "header+dll": (True, True, False),
    "header+api": (True, False, True),
    "all": (True, True, True),
}


@dataclass(frozen=True)
class PipelineConfig:
    k_header: int = DEFAULT_K_HEADER
    k_dll: int = DEFAULT_K_DLL
    k_api: int = DEFAULT_K_API
    n_bins: int = DEFAULT_BINS
    family: str = "all"
    pca_components: int | None = None
    pca_variance: float | None = None
    classifier: str = clf.DECISION_TREE
    seed: int = 0
    min_leaf: int = 2
    max_depth: int = 64
    confidence: float | None = 0.25
    svm_lambda: float = 1e-4
    svm_epochs: int = 50
    nb_variance_floor: float = 1e-9

    def __post_init__(self):
        if self.family not in FAMILY_MASKS:
            raise ValueError(f"unknown feature family {self.family!r}")
        object.__setattr__(self, "classifier", clf.canonical_kind(self.classifier))

    def effective_k(self) -> tuple:
        mask = FAMILY_MASKS[self.family]
        return tuple(k if on else 0 for k, on in zip((self.k_header, self.k_dll, self.k_api), mask))

    def classifier_params(self) -> dict:
        if self.classifier == clf.NAIVE_BAYES:
            return {"variance_floor": self.nb_variance_floor}
        if self.classifier == clf.DECISION_TREE:
            return {"min_leaf": self.min_leaf, "max_depth": self.max_depth,
                    "confidence": self.confidence}
        return {"lam": self.svm_lambda, "epochs": self.svm_epochs, "seed": self.seed}

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        return cls(**d)


def _stage(name, fn, *args, fold=None, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (MaldetectError, ValueError) as exc:
        raise StageError(name, exc, fold) from exc


def fit_reduction(records: Sequence[RawFeatureRecord], config: PipelineConfig, fold=None):
    """Fit selection and PCA on ``records``; returns (selection, pca, reduced matrix)."""
    k_header, k_dll, k_api = config.effective_k()
    selection = _stage("selection", fit_selection, records, k_header, k_dll, k_api,
                       config.n_bins, fold=fold)
    schema = selection.schema
    if schema.dimension == 0:
        raise StageError("selection", ValueError("selected feature schema is empty"), fold)
    x = vectorize_many(records, schema)
    components = config.pca_components
    if components is not None:
        components = min(components, schema.dimension)
    pca = _stage("pca", pca_fit, x, components=components,
                 variance_fraction=config.pca_variance, schema_id=schema.schema_id, fold=fold)
    return selection, pca, pca_transform(pca, x)


def reduce_records(records: Sequence[RawFeatureRecord], schema: FeatureSchema,
                   pca: PcaModel) -> np.ndarray:
    x = vectorize_many(records, schema)
    return pca_transform(pca, x) if len(records) else np.zeros((0, pca.dim_out))


def train_classifier(config: PipelineConfig, z: np.ndarray, labels: Sequence, fold=None):
    return _stage("classifier", clf.train, config.classifier, z, list(labels),
                  fold=fold, **config.classifier_params())


@dataclass(frozen=True, eq=False)
class PipelineModel:
    schema: FeatureSchema
    selection: SelectionModel
    pca: PcaModel
    classifier: object
    config: PipelineConfig
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def reduce(self, records: Sequence[RawFeatureRecord]) -> np.ndarray:
        return reduce_records(records, self.schema, self.pca)

    def predict_record(self, record: RawFeatureRecord) -> clf.Prediction:
        return self.classifier.predict(self.reduce([record])[0])

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "format_version": self.format_version,
            "feature_schema": self.schema.to_dict(),
            "schema_id": self.schema.schema_id,
            "selection_model": self.selection.to_dict(),
            "pca_model": self.pca.to_dict(),
            "classifier_model": self.classifier.to_dict(),
            "config": self.config.to_dict(),
            "metadata": self.metadata,
        }

    def __eq__(self, other):
        return isinstance(other, PipelineModel) and self.to_dict() == other.to_dict()


def _training_metadata(corpus_hash: str, records, config: PipelineConfig, protocol: str,
                       training_accuracy: float | None) -> dict:
    labels = [r.label for r in records]
    return {
        "corpus_hash": corpus_hash,
        "n_samples": len(records),
        "n_malicious": labels.count(MALICIOUS),
        "n_benign": labels.count(BENIGN),
        "seed": config.seed,
        "protocol": protocol,
        "training_accuracy": training_accuracy,
        # wall-clock time would break byte-identical rebuilds
        "created": os.environ.get("SOURCE_DATE_EPOCH"),
    }


def build_pipeline(corpus: Corpus | Sequence[RawFeatureRecord],
                   config: PipelineConfig | None = None,
                   protocol: str = "full-corpus") -> PipelineModel:
    """Fit every stage on the full corpus and record provenance in the metadata."""
    config = config or PipelineConfig()
    if not isinstance(corpus, Corpus):
        corpus = Corpus(list(corpus))
    records = corpus.records
    labels = [r.label for r in records]
    if set(labels) - {MALICIOUS, BENIGN}:
        raise StageError("input", ValueError("every training record must be labelled"))
    if len(set(labels)) < 2:
        raise StageError("input", SingleClass("corpus must contain both labels"))
    selection, pca, z = fit_reduction(records, config)
    model = train_classifier(config, z, labels)
    predicted = [model.predict(row).label for row in z]
    accuracy = overall_accuracy(confusion(labels, predicted))
    meta = _training_metadata(corpus.digest(), records, config, protocol, accuracy)
    return PipelineModel(selection.schema, selection, pca, model, config, meta)


def model_to_text(model: PipelineModel) -> str:
    return json.dumps(model.to_dict(), sort_keys=True, allow_nan=False,
                      separators=(",", ":")) + "\n"


def model_from_text(text: str) -> PipelineModel:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file is not valid JSON: {exc.msg}") from None
    if not isinstance(d, dict) or d.get("format") != MODEL_FORMAT:
        raise FormatError("not a maldetect model file")
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(f"model format version {version!r} is not supported "
                           f"(this build reads version {FORMAT_VERSION})")
    try:
        schema = FeatureSchema.from_dict(d["feature_schema"])
        selection = SelectionModel.from_dict(d["selection_model"])
        pca = PcaModel.from_dict(d["pca_model"])
        classifier = clf.model_from_dict(d["classifier_model"])
        config = PipelineConfig.from_dict(d["config"])
        metadata = d["metadata"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"model file is incomplete: {exc!r}") from None
    if selection.schema != schema or pca.schema_id != schema.schema_id:
        raise FormatError("schema ids do not chain: selection -> PCA")
    if pca.dim_in != schema.dimension or classifier.dim_in != pca.dim_out:
        raise FormatError("stage dimensions do not chain: PCA -> classifier")
    return PipelineModel(schema, selection, pca, classifier, config, metadata, version)


def save_model(model: PipelineModel, path) -> None:
    Path(path).write_text(model_to_text(model), encoding="utf-8")


def load_model(path) -> PipelineModel:
    return model_from_text(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# scanning

CLASSIFIED = "classified"
SKIPPED_NOT_PE = "skipped_not_pe"
SKIPPED_PACKED = "skipped_packed"
ERROR = "error"


@dataclass(frozen=True)
class ScanEntry:
    path: str
    status: str
    prediction: clf.Prediction | None = None
    behavior_category_counts: dict = field(default_factory=lambda: dict.fromkeys(CATEGORIES, 0))
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "status": self.status,
            "label": self.prediction.label if self.prediction else None,
            "score": self.prediction.score if self.prediction else None,
            "categories": self.behavior_category_counts,
            "message": self.message,
        }


def iter_files(root, recursive: bool = True) -> list:
    """Regular files under ``root`` in lexicographic path order."""
    root = Path(root)
    if root.is_file():
        return [str(root)]
    found = []
    if recursive:
        for dirpath, dirnames, filenames in os.walk(root):
            dirnames.sort()
            found += [os.path.join(dirpath, f) for f in filenames]
    else:
        found = [str(p) for p in root.iterdir() if p.is_file()]
    return sorted(p for p in found if os.path.isfile(p))


def scan_file(path: str, model: PipelineModel, skip_packed: bool = True,
              behavior_map: BehaviorCategoryMap | None = None) -> ScanEntry:
    """Classify one file; every failure becomes an ``error`` entry."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        return ScanEntry(path, ERROR, message=f"unreadable: {exc.strerror or exc}")
    if not is_pe(data):
        return ScanEntry(path, SKIPPED_NOT_PE)
    try:
        pe = parse_pe(data)
    except PeError as exc:
        return ScanEntry(path, ERROR, message=f"{type(exc).__name__}: {exc}")
    record = extract_raw(pe, UNLABELED, path, content_hash(data))
    categories = categorize_behaviors(record.api_names, behavior_map)
    hint = detect_packer(pe)
    if skip_packed and hint.likely_packed:
        return ScanEntry(path, SKIPPED_PACKED, None, categories,
                         "; ".join(hint.evidence))
    try:
        prediction = model.predict_record(record)
    except MaldetectError as exc:
        return ScanEntry(path, ERROR, None, categories, f"{type(exc).__name__}: {exc}")
    return ScanEntry(path, CLASSIFIED, prediction, categories)


def scan_directory(root, model: PipelineModel, recursive: bool = True,
                   skip_packed: bool = True, workers: int = 1,
                   behavior_map: BehaviorCategoryMap | None = None) -> list:
    """Scan every file under ``root``; entries come back in path order."""
    behavior_map = behavior_map or load_behavior_map()
    paths = iter_files(root, recursive)

    def one(path):
        return scan_file(path, model, skip_packed, behavior_map)

    if workers <= 1:
        entries = [one(p) for p in paths]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(one, paths))
    return sorted(entries, key=lambda e: e.path)
