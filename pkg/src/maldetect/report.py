"""Text tables and JSON-lines records for experiment results and scan entries."""
from __future__ import annotations

import json
from typing import Sequence

from .behaviors import CATEGORIES
from .errors import EmptyInput
from .evaluation import ExperimentResult
from .pipeline import ScanEntry

FAMILY_TITLES = {
    "header": "PE header",
    "api": "API functions",
    "dll": "DLLs",
    "header+dll": "PE header & DLLs",
    "header+api": "PE header & API functions",
    "all": "All",
}
CLASSIFIER_TITLES = {
    "naive_bayes": "Naive Bayes",
    "linear_svm": "SVM",
    "decision_tree": "Decision tree",
}
RESULT_COLUMNS = ("Feature type", "Classifier", "DR (%)", "FPR (%)", "OA (%)")
SCAN_COLUMNS = ("Path", "Status", "Label", "Score", "Behaviors")


def pct(value: float | None) -> str:
    return "-" if value is None else f"{value:.1f}"


def _table(header: Sequence[str], rows: list, numeric_from: int) -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]

    def line(cells):
        out = []
        for i, cell in enumerate(cells):
            out.append(str(cell).rjust(widths[i]) if i >= numeric_from
                       else str(cell).ljust(widths[i]))
        return "  ".join(out).rstrip()

    rule = "  ".join("-" * w for w in widths)
    return "\n".join([line(header), rule, *(line(r) for r in rows)]) + "\n"


def results_table(results: Sequence[ExperimentResult]) -> str:
    if not results:
        raise EmptyInput("no experiment results to tabulate")
    rows = [(FAMILY_TITLES.get(r.feature_family, r.feature_family),
             CLASSIFIER_TITLES.get(r.classifier, r.classifier),
             pct(r.aggregate.dr), pct(r.aggregate.fpr), pct(r.aggregate.oa))
            for r in results]
    return _table(RESULT_COLUMNS, rows, numeric_from=2)


def results_records(results: Sequence[ExperimentResult]) -> str:
    lines = []
    for r in results:
        a = r.aggregate
        lines.append(json.dumps({"feature_family": r.feature_family,
                                 "classifier": r.classifier, "protocol": r.protocol,
                                 "dr": a.dr, "fpr": a.fpr, "oa": a.oa,
                                 "counts": a.counts.to_dict()}, sort_keys=True))
    return "".join(line + "\n" for line in lines)


def _behavior_summary(counts: dict) -> str:
    return ",".join(f"{c}={counts[c]}" for c in CATEGORIES if counts.get(c))


def scan_table(entries: Sequence[ScanEntry]) -> str:
    if not entries:
        raise EmptyInput("no scan entries to tabulate")
    rows = []
    for e in entries:
        label = e.prediction.label if e.prediction else "-"
        score = f"{e.prediction.score:.4f}" if e.prediction else "-"
        rows.append((e.path, e.status, label, score,
                     _behavior_summary(e.behavior_category_counts) or "-"))
    return _table(SCAN_COLUMNS, rows, numeric_from=99)


def scan_records(entries: Sequence[ScanEntry]) -> str:
    return "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in entries)


def report(items: Sequence, fmt: str = "table") -> str:
    """Render experiment results or scan entries as ``table`` or ``records``."""
    items = list(items)
    if fmt not in ("table", "records"):
        raise ValueError(f"unknown report format {fmt!r}")
    is_scan = bool(items) and isinstance(items[0], ScanEntry)
    if fmt == "table":
        return scan_table(items) if is_scan else results_table(items)
    return scan_records(items) if is_scan else results_records(items)
