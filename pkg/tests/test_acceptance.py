"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; conftest prints them at the end of
the session. Run directly (``python tests/test_acceptance.py``) to execute
the criteria without pytest.
"""
from __future__ import annotations

import json
import random
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from support import fuzz_inputs, make_corpus, random_spec, spec_mismatches  # noqa: E402

from maldetect.classifiers import best_split, train_decision_tree, train_linear_svm, train_naive_bayes  # noqa: E402
from maldetect.cli import main as cli_main  # noqa: E402
from maldetect.errors import Malformed, NotPeFile, Unsupported  # noqa: E402
from maldetect.evaluation import cross_validate, stratified_folds  # noqa: E402
from maldetect.features import BENIGN, MALICIOUS, Corpus  # noqa: E402
from maldetect.metrics import ConfusionCounts, MetricsReport  # noqa: E402
from maldetect.pca import pca_fit, pca_transform  # noqa: E402
from maldetect.pe_parser import PeFile, parse_pe  # noqa: E402
from maldetect.pipeline import PipelineConfig, model_to_text  # noqa: E402
from maldetect.selection import entropy, information_gain  # noqa: E402
from maldetect.synth import build_pe  # noqa: E402

M, B = MALICIOUS, BENIGN
LINES: list = []


def record(criterion: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


# 1 -------------------------------------------------------------------------

def test_criterion_1_parser_round_trip():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    mismatched = 0
    for _ in range(1000):
        spec = random_spec(rng)
        if spec_mismatches(spec, parse_pe(build_pe(spec))):
            mismatched += 1
    elapsed = time.perf_counter() - start
    record("1", mismatched == 0 and elapsed < 10,
           f"1000 random specs, {mismatched} mismatches, {elapsed:.1f}s (limit 10s)")


# 2 -------------------------------------------------------------------------

def test_criterion_2_parser_fuzz_totality():
    rng = np.random.default_rng(77)
    seeds = [build_pe(random_spec(rng)) for _ in range(64)]
    outcomes = {"PeFile": 0, "NotPeFile": 0, "Malformed": 0, "Unsupported": 0}
    crashes = []
    start = time.perf_counter()
    for data in fuzz_inputs(rng, seeds, 100_000):
        try:
            result = parse_pe(data)
        except (NotPeFile, Malformed, Unsupported) as exc:
            outcomes[type(exc).__name__] += 1
            continue
        except Exception as exc:  # any other exception is a crash
            crashes.append(repr(exc))
            continue
        if isinstance(result, PeFile):
            outcomes["PeFile"] += 1
        else:
            crashes.append(f"returned {type(result).__name__}")
    elapsed = time.perf_counter() - start
    record("2", not crashes and elapsed < 60,
           f"100000 inputs, {len(crashes)} crashes, outcomes {outcomes}, "
           f"{elapsed:.1f}s (limit 60s)")


# 3 -------------------------------------------------------------------------

def test_criterion_3_information_gain_oracle():
    rng = np.random.default_rng(3)
    worst, bound_violations = 0.0, 0
    for _ in range(500):
        n = int(rng.integers(1, 60))
        bins = rng.integers(0, int(rng.integers(1, 8)), size=n).tolist()
        labels = [M if v else B for v in rng.random(n) < rng.random()]
        ig = information_gain(bins, labels)
        worst = max(worst, abs(ig - oracles.information_gain(bins, labels)))
        if not 0.0 <= ig <= entropy(labels) + 1e-12:
            bound_violations += 1
    record("3", worst <= 1e-9 and bound_violations == 0,
           f"500 datasets, max |IG - oracle| = {worst:.2e} (tol 1e-9), "
           f"{bound_violations} bound violations")


# 4 -------------------------------------------------------------------------

def test_criterion_4_pca_numerics():
    rng = np.random.default_rng(4)
    ortho = recon = eig = centre = 0.0
    shapes = [(200, 64), (150, 32)] + [(int(rng.integers(3, 201)), int(rng.integers(1, 65)))
                                      for _ in range(18)]
    for n, d in shapes:
        x = rng.normal(size=(n, d)) @ rng.normal(size=(d, d)) + rng.normal(size=d) * 5
        full = pca_fit(x, components=d)
        c = full.components
        ortho = max(ortho, float(np.max(np.abs(c @ c.T - np.eye(d)))))
        back = full.feature_means + full.feature_stds * (pca_transform(full, x) @ c)
        recon = max(recon, float(np.max(np.abs(back - x) / np.maximum(np.abs(x), 1.0))))
        expected = oracles.jacobi_eigenvalues(oracles.standardized_covariance(x.tolist())
                                              if d <= 8 else _np_covariance(x))
        eig = max(eig, float(np.max(np.abs(full.explained_variance - expected))))
        reduced = pca_fit(x)
        centre = max(centre, float(np.max(np.abs(pca_transform(reduced, x.mean(axis=0))))))
    ok = ortho <= 1e-8 and recon <= 1e-6 and eig <= 1e-8 and centre <= 1e-9
    record("4", ok, f"{len(shapes)} datasets (n<=200, d<=64): orthonormality {ortho:.1e} "
                    f"(tol 1e-8), reconstruction {recon:.1e} (tol 1e-6), eigenvalues vs "
                    f"oracle {eig:.1e} (tol 1e-8), transform(mean) {centre:.1e} (tol 1e-9)")


def _np_covariance(x):
    # plain formula, independent of the library's standardisation code
    z = (x - x.mean(axis=0)) / x.std(axis=0, ddof=1)
    return (z.T @ z) / (len(x) - 1)


# 5 -------------------------------------------------------------------------

def test_criterion_5_classifier_oracles():
    rng = np.random.default_rng(5)
    nb_worst = 0.0
    for _ in range(20):
        x = rng.normal(size=(int(rng.integers(4, 30)), int(rng.integers(1, 5))))
        y = [M, B] * (len(x) // 2) + [M] * (len(x) % 2)
        model = train_naive_bayes(x, y)
        mal = [r.tolist() for r, lab in zip(x, y) if lab == M]
        ben = [r.tolist() for r, lab in zip(x, y) if lab == B]
        for point in rng.normal(size=(5, x.shape[1])):
            got, want = model.log_posteriors(point), oracles.nb_log_posteriors(point.tolist(),
                                                                               mal, ben)
            nb_worst = max(nb_worst, abs(got[M] - want[M]), abs(got[B] - want[B]))

    split_bad = compared = 0
    for _ in range(300):
        n = int(rng.integers(4, 21))
        x = rng.integers(0, 8, size=(n, int(rng.integers(1, 4)))).astype(float)
        y = [M if v else B for v in rng.integers(0, 2, size=n)]
        want = oracles.best_gain_ratio_split(x.tolist(), y)
        if want is None:
            continue
        compared += 1
        got = best_split(x, np.array([lab == M for lab in y], dtype=np.int64))
        if (got.feature, got.threshold) != want[:2]:
            split_bad += 1

    xor_x = [[0, 0], [1, 1], [0, 1], [1, 0]]
    xor_y = [B, B, M, M]
    xor = train_decision_tree(xor_x, xor_y, min_leaf=1, confidence=None)
    xor_acc = np.mean([xor.predict(p).label == lab for p, lab in zip(xor_x, xor_y)])

    blob_x = np.vstack([rng.normal(size=(50, 2)) + 5, rng.normal(size=(50, 2)) - 5])
    blob_y = [M] * 50 + [B] * 50
    svm = train_linear_svm(blob_x, blob_y, seed=7)
    svm2 = train_linear_svm(blob_x, blob_y, seed=7)
    svm_acc = np.mean([svm.predict(p).label == lab for p, lab in zip(blob_x, blob_y)])
    identical = svm.weights.tobytes() == svm2.weights.tobytes() and svm.bias == svm2.bias

    ok = (nb_worst <= 1e-9 and split_bad == 0 and compared > 100 and xor.depth >= 2
          and xor_acc == 1.0 and svm_acc == 1.0 and identical)
    record("5", ok, f"NB log-posterior error {nb_worst:.1e} (tol 1e-9); root split "
                    f"{compared - split_bad}/{compared} match enumeration; XOR depth "
                    f"{xor.depth}, accuracy {xor_acc:.0%}; SVM blobs accuracy {svm_acc:.0%}, "
                    f"bit-identical rerun {identical}")


# 6 -------------------------------------------------------------------------

def test_criterion_6_cv_harness(tmp_path):
    rng = np.random.default_rng(6)
    partition_ok = True
    for _ in range(100):
        k = int(rng.integers(2, 11))
        n_m, n_b = int(rng.integers(k, 60)), int(rng.integers(k, 60))
        labels = [M] * n_m + [B] * n_b
        rng.shuffle(labels)
        folds = stratified_folds(labels, k, int(rng.integers(1000)))
        partition_ok &= len(folds) == len(labels) and set(folds) <= set(range(k))
        for cls in (M, B):
            sizes = np.bincount([f for f, lab in zip(folds, labels) if lab == cls], minlength=k)
            partition_ok &= int(sizes.max() - sizes.min()) <= 1

    corpus = make_corpus("separable", 30, 30, 9, tmp_path)
    config = PipelineConfig(classifier="tree", k_header=20, k_dll=20, k_api=40)
    folds = stratified_folds(corpus.labels(), 5, 0)
    clean = cross_validate(corpus, config, k=5, folds=folds, keep_models=True)
    leak_free = True
    for f in range(5):
        dirty = Corpus([r.with_label(B if r.label == M else M) if g == f else r
                        for r, g in zip(corpus.records, folds)])
        result = cross_validate(dirty, config, k=5, folds=folds, keep_models=True)
        leak_free &= model_to_text(result.fold_models[f]) == model_to_text(clean.fold_models[f])

    report = MetricsReport.from_counts(ConfusionCounts(tp=996, tn=973, fp=27, fn=4))
    metrics_ok = (abs(report.dr - 99.6) < 1e-9 and abs(report.fpr - 2.7) < 1e-9
                  and f"{report.dr:.1f}/{report.fpr:.1f}" == "99.6/2.7")
    record("6", partition_ok and leak_free and metrics_ok,
           f"100 random fold assignments partition with imbalance <= 1: {partition_ok}; "
           f"corrupted held-out labels leave fold models unchanged: {leak_free}; "
           f"counts 996/4/27/973 give DR={report.dr:.1f} FPR={report.fpr:.1f}")


# 7 -------------------------------------------------------------------------

def test_criterion_7_end_to_end_sanity(tmp_path):
    start = time.perf_counter()
    tree = PipelineConfig(classifier="tree")

    separable = make_corpus("separable", 500, 500, 0, tmp_path / "sep")
    sep_oa = cross_validate(separable, tree, k=10, seed=0).aggregate.oa
    rng = random.Random(0)
    flip = set(rng.sample(range(len(separable)), len(separable) // 50))
    noisy = Corpus([r.with_label(B if r.label == M else M) if i in flip else r
                    for i, r in enumerate(separable.records)])
    noisy_oa = cross_validate(noisy, tree, k=10, seed=0,
                              reference_labels=separable.labels()).aggregate.oa

    null = make_corpus("null", 100, 100, 0, tmp_path / "null")
    null_oa = cross_validate(null, tree, k=10, seed=0).aggregate.oa

    signal = make_corpus("header-signal", 100, 100, 0, tmp_path / "hdr")
    header = cross_validate(signal, PipelineConfig(classifier="tree", family="header"),
                            k=10, seed=0).aggregate
    dll = cross_validate(signal, PipelineConfig(classifier="tree", family="dll"),
                         k=10, seed=0).aggregate
    elapsed = time.perf_counter() - start
    ok = (sep_oa == 100.0 and noisy_oa >= 99.0 and 40.0 <= null_oa <= 60.0
          and header.oa > dll.oa and header.dr > dll.dr and elapsed < 300)
    record("7", ok, f"(a) separable 1000 samples OA={sep_oa:.2f}, with 2% training-label "
                    f"noise OA={noisy_oa:.2f} (>= 99); (b) null OA={null_oa:.1f} in [40, 60]; "
                    f"(c) header family OA={header.oa:.1f}/DR={header.dr:.1f} vs DLL family "
                    f"OA={dll.oa:.1f}/DR={dll.dr:.1f}; {elapsed:.0f}s (limit 300s)")


# 8 -------------------------------------------------------------------------

def test_criterion_8_determinism(tmp_path, capsys):
    files = tmp_path / "files"
    cli_main(["gen-corpus", "-o", str(files), "--n-malicious", "40", "--n-benign", "40",
              "--seed", "8"])
    cli_main(["extract", str(files), "--manifest", str(files / "manifest.tsv"),
              "-o", str(tmp_path / "corpus.jsonl")])
    models = [tmp_path / "m1.json", tmp_path / "m2.json"]
    for m in models:
        cli_main(["train", "-c", str(tmp_path / "corpus.jsonl"), "--classifier", "svm",
                  "--seed", "3", "-o", str(m)])
    same_model = models[0].read_bytes() == models[1].read_bytes()
    (files / "readme.txt").write_text("not an executable")
    capsys.readouterr()
    scans = []
    for workers in ("1", "4", "1"):
        cli_main(["scan", str(files), "-m", str(models[0]), "--format", "records",
                  "--workers", workers])
        scans.append(capsys.readouterr().out)
    paths = [json.loads(line)["path"] for line in scans[0].splitlines()]
    same_scan = scans[0] == scans[1] == scans[2]
    ordered = paths == sorted(paths) and len(paths) == 82
    record("8", same_model and same_scan and ordered,
           f"repeated train byte-identical: {same_model}; scan identical across 1/4 "
           f"threads: {same_scan}; {len(paths)} entries path-ordered: {ordered}")


# 9 -------------------------------------------------------------------------

def test_criterion_9_experiment_matrix(tmp_path, capsys):
    files = tmp_path / "files"
    cli_main(["gen-corpus", "-o", str(files), "--n-malicious", "60", "--n-benign", "60",
              "--seed", "9"])
    cli_main(["extract", str(files), "--manifest", str(files / "manifest.tsv"),
              "-o", str(tmp_path / "corpus.jsonl")])
    capsys.readouterr()
    rc = cli_main(["evaluate", "-c", str(tmp_path / "corpus.jsonl"), "--seed", "0",
                   "-o", str(tmp_path / "results.jsonl")])
    lines = capsys.readouterr().out.splitlines()
    header, rows = lines[0], lines[2:]
    columns = ["Feature type", "Classifier", "DR (%)", "FPR (%)", "OA (%)"]
    layout_ok = [c for c in columns if c in header] == columns
    cells_ok = all(len(r.split()) >= 5 and all(
        cell == "-" or (len(cell.split(".")) == 2 and len(cell.split(".")[1]) == 1)
        for cell in r.split()[-3:]) for r in rows)
    record("9", rc == 0 and len(rows) == 18 and layout_ok and cells_ok,
           f"evaluate emitted {len(rows)} rows (want 18), columns {columns} present: "
           f"{layout_ok}, metrics at 1 decimal: {cells_ok}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
