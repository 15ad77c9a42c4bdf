"""Raw feature records mined from parsed PE files, and the corpus file format.

A record carries 138 named header integers, the set of imported DLL names and
the set of qualified ``dll!api`` names. Corpora are stored one JSON record
per line behind a header line naming the format version and hash algorithm.
"""
from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from . import pe_parser as pp
from .errors import FormatError
from .pe_parser import PeFile

MALICIOUS = "malicious"
BENIGN = "benign"
UNLABELED = "unlabeled"
LABELS = (MALICIOUS, BENIGN, UNLABELED)

CORPUS_FORMAT = "maldetect-corpus"
CORPUS_VERSION = 1
HASH_ALGORITHM = "sha256"

SECTION_FEATURES = (
    "SectionCount", "VirtualSize", "SizeOfRawData", "NumberOfRelocations",
    "NumberOfLineNumbers", "SectionsWithRelocations", "ExecutableSections",
    "WritableSections", "MaxVirtualSize", "RawToVirtualRatio",
)
IMPORT_FEATURES = (
    "ImportDescriptorCount", "ImportedFunctionCount", "ImportedDllCount",
    "BoundImportFlag", "MaxFunctionsPerDll",
)
DIRECTORY_FEATURES = tuple(f"{n}Size" for n in pp.DATA_DIRECTORY_NAMES)
EXPORT_FEATURES = tuple(f"Export{n}" for n, _ in pp.EXPORT_FIELDS)
RESOURCE_FEATURES = tuple(f"Resource{n}" for n, _ in pp.RESOURCE_FIELDS)
DEBUG_FEATURES = tuple(f"Debug{n}" for n, _ in pp.DEBUG_FIELDS)
DELAY_IMPORT_FEATURES = tuple(f"DelayImport{n}" for n, _ in pp.DELAY_IMPORT_FIELDS)
TLS_FEATURES = tuple(f"Tls{n}" for n, _ in pp.TLS32_FIELDS)

HEADER_FEATURE_NAMES: tuple[str, ...] = (
    tuple(n for n, _ in pp.DOS_FIELDS)
    + tuple(n for n, _ in pp.COFF_FIELDS)
    + pp.OPTIONAL_FIELD_NAMES
    + DIRECTORY_FEATURES
    + SECTION_FEATURES
    + IMPORT_FEATURES
    + EXPORT_FEATURES
    + RESOURCE_FEATURES
    + DEBUG_FEATURES
    + DELAY_IMPORT_FEATURES
    + TLS_FEATURES
)
N_HEADER_FEATURES = 138
assert len(HEADER_FEATURE_NAMES) == N_HEADER_FEATURES
assert len(set(HEADER_FEATURE_NAMES)) == N_HEADER_FEATURES


def qualified_api(dll: str, api: str) -> str:
    return f"{dll}!{api}"


def content_hash(data: bytes) -> str:
    return hashlib.new(HASH_ALGORITHM, data).hexdigest()


@dataclass(frozen=True)
class RawFeatureRecord:
    header_features: dict
    dll_names: frozenset
    api_names: frozenset
    label: str
    content_hash: str
    source_path: str = ""

    def with_label(self, label: str) -> "RawFeatureRecord":
        return RawFeatureRecord(self.header_features, self.dll_names, self.api_names,
                                label, self.content_hash, self.source_path)


def section_features(pe: PeFile) -> dict:
    secs = pe.sections
    total_virtual = sum(s.virtual_size for s in secs)
    total_raw = sum(s.size_of_raw_data for s in secs)
    return {
        "SectionCount": len(secs),
        "VirtualSize": total_virtual,
        "SizeOfRawData": total_raw,
        "NumberOfRelocations": sum(s.number_of_relocations for s in secs),
        "NumberOfLineNumbers": sum(s.number_of_line_numbers for s in secs),
        "SectionsWithRelocations": sum(1 for s in secs if s.pointer_to_relocations),
        "ExecutableSections": sum(1 for s in secs if s.executable),
        "WritableSections": sum(1 for s in secs if s.writable),
        "MaxVirtualSize": max((s.virtual_size for s in secs), default=0),
        "RawToVirtualRatio": total_raw * 1000 // total_virtual if total_virtual else 0,
    }


def import_features(pe: PeFile) -> dict:
    per_dll = Counter()
    for entry in pe.imports:
        per_dll[entry.dll_name] += len(entry.api_names)
    bound = pe.data_directories[pp.DIR_BOUND_IMPORT].size > 0 or any(
        e.time_date_stamp for e in pe.imports)
    return {
        "ImportDescriptorCount": len(pe.imports),
        "ImportedFunctionCount": sum(len(e.api_names) for e in pe.imports),
        "ImportedDllCount": len(per_dll),
        "BoundImportFlag": int(bound),
        "MaxFunctionsPerDll": max(per_dll.values(), default=0),
    }


def extract_raw(pe: PeFile, label: str = UNLABELED, source_path: str = "",
                content_hash: str = "") -> RawFeatureRecord:
    if label not in LABELS:
        raise ValueError(f"unknown label {label!r}")
    values = {}
    values.update(pe.dos_header)
    values.update(pe.coff_header)
    values.update(pe.optional_header)
    values.update(zip(DIRECTORY_FEATURES, (d.size for d in pe.data_directories)))
    values.update(section_features(pe))
    values.update(import_features(pe))
    for prefix, table in (("Export", pe.exports), ("Resource", pe.resource_summary),
                          ("Debug", pe.debug_info), ("DelayImport", pe.delay_imports),
                          ("Tls", pe.tls_table)):
        values.update((prefix + k, v) for k, v in table.items())
    header = {name: int(values[name]) for name in HEADER_FEATURE_NAMES}

    dlls = frozenset(e.dll_name for e in pe.imports)
    apis = frozenset(qualified_api(e.dll_name, a) for e in pe.imports for a in e.api_names)
    return RawFeatureRecord(header, dlls, apis, label, content_hash, source_path)


@dataclass
class Corpus:
    """Labelled records, unique by content hash."""
    records: list = field(default_factory=list)
    hash_algorithm: str = HASH_ALGORITHM
    _hashes: set = field(default_factory=set, init=False, repr=False, compare=False)

    def __post_init__(self):
        records, self.records = list(self.records), []
        for r in records:
            if not self.add(r):
                raise ValueError(f"duplicate content hash {r.content_hash}")

    def add(self, record: RawFeatureRecord) -> bool:
        """Append ``record``; returns False (and does nothing) for a duplicate."""
        if record.content_hash in self._hashes:
            return False
        self._hashes.add(record.content_hash)
        self.records.append(record)
        return True

    def __len__(self):
        return len(self.records)

    def __iter__(self) -> Iterator[RawFeatureRecord]:
        return iter(self.records)

    @property
    def label_counts(self) -> dict:
        counts = Counter(r.label for r in self.records)
        return {label: counts.get(label, 0) for label in LABELS}

    def labels(self) -> list:
        return [r.label for r in self.records]

    def digest(self) -> str:
        """Order-sensitive digest of hashes and labels; identifies a training set."""
        h = hashlib.sha256()
        for r in self.records:
            h.update(f"{r.content_hash}\t{r.label}\n".encode())
        return h.hexdigest()


def append_corpus(corpus: Corpus, record: RawFeatureRecord) -> bool:
    return corpus.add(record)


def _header_line(hash_algorithm: str) -> str:
    return json.dumps({
        "format": CORPUS_FORMAT,
        "version": CORPUS_VERSION,
        "hash_algorithm": hash_algorithm,
        "header_features": list(HEADER_FEATURE_NAMES),
    })


def record_to_json(record: RawFeatureRecord) -> str:
    return json.dumps({
        "content_hash": record.content_hash,
        "label": record.label,
        "source_path": record.source_path,
        "header_features": [record.header_features[n] for n in HEADER_FEATURE_NAMES],
        "dll_names": sorted(record.dll_names),
        "api_names": sorted(record.api_names),
    }, ensure_ascii=False)


def record_from_json(obj, line: int | None = None) -> RawFeatureRecord:
    if not isinstance(obj, dict):
        raise FormatError("record is not an object", line)
    for key in ("content_hash", "label", "header_features", "dll_names", "api_names"):
        if key not in obj:
            raise FormatError(f"record missing {key!r}", line)
    values = obj["header_features"]
    if (not isinstance(values, list) or len(values) != N_HEADER_FEATURES
            or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0
                       for v in values)):
        raise FormatError(f"header_features must be {N_HEADER_FEATURES} "
                          "non-negative integers", line)
    if obj["label"] not in LABELS:
        raise FormatError(f"unknown label {obj['label']!r}", line)
    dlls, apis = obj["dll_names"], obj["api_names"]
    if not (isinstance(dlls, list) and all(isinstance(d, str) and d for d in dlls)):
        raise FormatError("dll_names must be a list of non-empty strings", line)
    if not (isinstance(apis, list) and all(isinstance(a, str) for a in apis)):
        raise FormatError("api_names must be a list of strings", line)
    for a in apis:
        if not any(a.startswith(d + "!") and len(a) > len(d) + 1 for d in dlls):
            raise FormatError(f"api {a!r} has no matching dll", line)
    if not isinstance(obj["content_hash"], str) or not obj["content_hash"]:
        raise FormatError("content_hash must be a non-empty string", line)
    return RawFeatureRecord(
        header_features=dict(zip(HEADER_FEATURE_NAMES, values)),
        dll_names=frozenset(dlls), api_names=frozenset(apis),
        label=obj["label"], content_hash=obj["content_hash"],
        source_path=str(obj.get("source_path", "")),
    )


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_header_line(corpus.hash_algorithm) + "\n")
        for r in corpus.records:
            fh.write(record_to_json(r) + "\n")


def _parse_lines(lines: Iterable[str]) -> Corpus:
    it = iter(enumerate(lines, start=1))
    corpus = None
    for lineno, text in it:
        if not text.strip():
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", lineno) from None
        if corpus is None:
            if not isinstance(obj, dict) or obj.get("format") != CORPUS_FORMAT:
                raise FormatError("missing corpus header line", lineno)
            if obj.get("version") != CORPUS_VERSION:
                raise FormatError(f"unsupported corpus version {obj.get('version')!r}",
                                  lineno)
            if obj.get("header_features") != list(HEADER_FEATURE_NAMES):
                raise FormatError("header feature layout differs from this build", lineno)
            corpus = Corpus(hash_algorithm=str(obj.get("hash_algorithm", HASH_ALGORITHM)))
            continue
        if not corpus.add(record_from_json(obj, lineno)):
            raise FormatError("duplicate content_hash", lineno)
    return corpus if corpus is not None else Corpus()


def read_corpus(path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return _parse_lines(fh)


def extract_file(path, label: str = UNLABELED) -> RawFeatureRecord:
    """Read, parse and extract one file. Parser errors propagate."""
    data = Path(path).read_bytes()
    pe = pp.parse_pe(data)
    return extract_raw(pe, label, str(path), content_hash(data))
