import json

import numpy as np
import pytest

from maldetect.behaviors import CATEGORIES, categorize_behaviors, load_behavior_map, parse_behavior_map
from maldetect.errors import EmptyInput, FormatError, StageError, VersionError
from maldetect.features import BENIGN, MALICIOUS, Corpus
from maldetect.pipeline import (CLASSIFIED, ERROR, SKIPPED_NOT_PE, SKIPPED_PACKED,
                                PipelineConfig, build_pipeline, load_model, model_from_text,
                                model_to_text, save_model, scan_directory)
from maldetect.report import report
from maldetect.selection import vectorize_many
from maldetect.synth import PeFileSpec, SectionSpec, build_pe

FAST = dict(k_header=20, k_dll=20, k_api=40)


@pytest.fixture(scope="module")
def tree_model(small_separable):
    corpus, _ = small_separable
    return build_pipeline(corpus, PipelineConfig(classifier="tree", **FAST))


def test_default_dimensions(small_separable):
    corpus, _ = small_separable
    model = build_pipeline(corpus, PipelineConfig(classifier="nb"))
    n_dll = len({d for r in corpus for d in r.dll_names})
    n_api = len({a for r in corpus for a in r.api_names})
    assert model.schema.dimension == 88 + min(130, n_dll) + min(2453, n_api)
    assert model.pca.dim_in == model.schema.dimension
    assert model.classifier.dim_in == model.pca.dim_out


def test_training_accuracy_recorded(tree_model, small_separable):
    corpus, _ = small_separable
    meta = tree_model.metadata
    assert meta["training_accuracy"] == 100.0
    assert meta["corpus_hash"] == corpus.digest()
    assert meta["n_malicious"] == meta["n_benign"] == 40
    assert tree_model.config.classifier == "decision_tree"


def test_rebuild_is_byte_identical(small_separable, tree_model):
    corpus, _ = small_separable
    again = build_pipeline(corpus, PipelineConfig(classifier="tree", **FAST))
    assert model_to_text(again) == model_to_text(tree_model)


def test_timestamp_only_from_source_date_epoch(small_separable, monkeypatch):
    corpus, _ = small_separable
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    model = build_pipeline(corpus, PipelineConfig(classifier="nb", **FAST))
    assert model.metadata["created"] == "1700000000"


def test_save_load_round_trip(tmp_path, tree_model):
    path = tmp_path / "m.json"
    save_model(tree_model, path)
    assert load_model(path) == tree_model


def test_truncated_model(tmp_path, tree_model):
    path = tmp_path / "m.json"
    path.write_text(model_to_text(tree_model)[:500])
    with pytest.raises(FormatError):
        load_model(path)


def test_version_mismatch_names_both(tree_model):
    d = json.loads(model_to_text(tree_model))
    d["format_version"] = 999
    with pytest.raises(VersionError, match="999") as info:
        model_from_text(json.dumps(d))
    assert "version 1" in str(info.value)


def test_broken_schema_chain(tree_model):
    d = json.loads(model_to_text(tree_model))
    d["pca_model"]["schema_id"] = "0" * 16
    with pytest.raises(FormatError):
        model_from_text(json.dumps(d))


def test_single_class_corpus(small_separable):
    corpus, _ = small_separable
    with pytest.raises(StageError, match="both labels"):
        build_pipeline(Corpus([r for r in corpus if r.label == MALICIOUS]))


def test_scan_time_vector_equals_training_vector(tmp_path, tree_model, small_separable):
    corpus, root = small_separable
    record = corpus.records[0]
    entries = scan_directory(record.source_path, tree_model)
    assert entries[0].status == CLASSIFIED
    training = vectorize_many([record], tree_model.schema)
    from maldetect.features import extract_file
    scanned = vectorize_many([extract_file(record.source_path)], tree_model.schema)
    assert np.array_equal(training, scanned)


def _scan_dir(tmp_path):
    d = tmp_path / "scan"
    (d / "sub").mkdir(parents=True)
    (d / "a.exe").write_bytes(build_pe(PeFileSpec(
        imports={"wininet.dll": ["InternetOpenA"], "advapi32.dll": ["RegSetValueExA"]})))
    (d / "sub" / "b.exe").write_bytes(build_pe(PeFileSpec(imports={"kernel32.dll": ["ReadFile"]})))
    (d / "notes.txt").write_text("hello world")
    return d


def test_scan_mixed_directory(tmp_path, tree_model):
    d = _scan_dir(tmp_path)
    entries = scan_directory(d, tree_model)
    assert [e.path for e in entries] == sorted(e.path for e in entries)
    status = {e.path.rsplit("/", 1)[-1]: e.status for e in entries}
    assert status == {"a.exe": CLASSIFIED, "b.exe": CLASSIFIED, "notes.txt": SKIPPED_NOT_PE}
    for e in entries:
        assert (e.prediction is not None) == (e.status == CLASSIFIED)
    a = next(e for e in entries if e.path.endswith("a.exe"))
    assert a.behavior_category_counts["registry"] == 1
    assert a.behavior_category_counts["network"] == 1


def test_scan_non_recursive(tmp_path, tree_model):
    d = _scan_dir(tmp_path)
    entries = scan_directory(d, tree_model, recursive=False)
    assert not any(e.path.endswith("b.exe") for e in entries)


def test_scan_packed(tmp_path, tree_model):
    d = tmp_path / "packed"
    d.mkdir()
    (d / "p.exe").write_bytes(build_pe(PeFileSpec(
        sections=[SectionSpec("UPX0", 0x8000, 0), SectionSpec("UPX1")],
        imports={"kernel32.dll": ["LoadLibraryA"]})))
    assert scan_directory(d, tree_model)[0].status == SKIPPED_PACKED
    assert scan_directory(d, tree_model, skip_packed=False)[0].status == CLASSIFIED


def test_scan_empty_directory(tmp_path, tree_model):
    (tmp_path / "empty").mkdir()
    assert scan_directory(tmp_path / "empty", tree_model) == []


def test_garbage_only_changes_its_own_entry(tmp_path, tree_model):
    d = _scan_dir(tmp_path)
    before = scan_directory(d, tree_model)
    good = build_pe(PeFileSpec(imports={"kernel32.dll": ["ReadFile"]}))
    (d / "broken.exe").write_bytes(good[:0x180])
    (d / "zz.bin").write_bytes(b"MZ" + bytes(100))
    after = scan_directory(d, tree_model)
    extra = {e.path: e for e in after}
    for e in before:
        assert extra.pop(e.path) == e
    assert sorted(e.status for e in extra.values()) == [ERROR, SKIPPED_NOT_PE]


def test_scan_is_identical_across_thread_counts(small_separable, tree_model):
    _, root = small_separable
    one = scan_directory(root, tree_model, workers=1)
    four = scan_directory(root, tree_model, workers=4)
    assert one == four
    assert sum(e.status == CLASSIFIED for e in one) == 80


def test_behavior_examples():
    assert categorize_behaviors({"advapi32.dll!RegSetValueExA"})["registry"] == 1
    net = categorize_behaviors({"wsock32.dll!recv", "wsock32.dll!send"})
    assert net["network"] == 2 and sum(net.values()) == 2
    assert categorize_behaviors(set()) == dict.fromkeys(CATEGORIES, 0)


def test_behavior_unmatched_is_other():
    counts = categorize_behaviors({"foo.dll!Frobnicate", "user32.dll!RegisterClassA"})
    assert counts["other"] == 2


def test_behavior_first_match_wins():
    m = parse_behavior_map("file: Create*\nprocess: CreateProcess*\n")
    assert m.category_of("kernel32.dll!CreateProcessA") == "file"


def test_behavior_map_from_env(tmp_path, monkeypatch):
    cfg = tmp_path / "map.cfg"
    cfg.write_text("network: Frob*\n")
    monkeypatch.setenv("MALDETECT_BEHAVIOR_MAP", str(cfg))
    assert load_behavior_map().category_of("x.dll!Frobnicate") == "network"


def test_behavior_map_validation():
    with pytest.raises(ValueError):
        parse_behavior_map("crypto: Crypt*\n")
    with pytest.raises(ValueError):
        parse_behavior_map("file:\n")


def test_report_formats(tmp_path, tree_model):
    entries = scan_directory(_scan_dir(tmp_path), tree_model)
    table = report(entries, "table")
    assert table.splitlines()[0].split()[:3] == ["Path", "Status", "Label"]
    one = report(entries[:1], "records").splitlines()
    assert len(one) == 1
    obj = json.loads(one[0])
    assert {"path", "label", "score", "categories"} <= set(obj)
    with pytest.raises(EmptyInput):
        report([], "table")
    assert report([], "records") == ""
