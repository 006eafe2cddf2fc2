import json

import pytest

from bintruth import forge, interchange
from bintruth.cli import main
from bintruth.scoring import ToolReport


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_binary(tmp_path, name):
    path = tmp_path / f"{name}.bin"
    path.write_bytes(forge.emit(forge.preset(name)))
    return path


def write_truth(tmp_path, doc, stem):
    path = tmp_path / f"{stem}.truth.json"
    path.write_text(interchange.document_to_json(doc))
    return path


def write_report(tmp_path, doc, stem, predictions=None):
    if predictions is None:
        predictions = tuple(
            (fn.start, fn.end_exclusive_trimmed - fn.start) for fn in doc.functions
        )
    report = ToolReport("finder", "1.0", doc.binary.content_digest, tuple(predictions))
    path = tmp_path / f"{stem}.report.json"
    path.write_text(interchange.report_to_json(report))
    return path


# --- top level ------------------------------------------------------------


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_missing_subcommand_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_bad_choice_is_a_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["score", "a.json", "b.json", "--policy", "vibes"])
    assert exc.value.code == 1


# --- extract ----------------------------------------------------------------


def test_extract_writes_to_stdout(tmp_path, capsys):
    binary = write_binary(tmp_path, "listing1")
    code, out, _err = run(capsys, "extract", str(binary))
    assert code == 0
    doc = interchange.document_from_json(out)
    assert doc.complete is True
    assert [fn.canonical_name for fn in doc.functions] == ["fix_syms"]
    assert doc.functions[0].entry_points == (0x080B41C0, 0x080B41C8)


def test_extract_writes_to_a_file(tmp_path, capsys):
    binary = write_binary(tmp_path, "listing1")
    out_path = tmp_path / "truth.json"
    code, out, _err = run(capsys, "extract", str(binary), "-o", str(out_path))
    assert code == 0
    assert out == ""
    assert interchange.document_from_json(out_path.read_text()).complete


def test_extract_no_merge_keeps_the_continuation(tmp_path, capsys):
    binary = write_binary(tmp_path, "listing1")
    code, out, _err = run(capsys, "extract", "--no-merge-multi-entry", str(binary))
    assert code == 0
    doc = interchange.document_from_json(out)
    assert [fn.canonical_name for fn in doc.functions] == ["fix_syms", "fix_syms."]


def test_extract_many_binaries_into_a_directory(tmp_path, capsys):
    first = write_binary(tmp_path, "listing1")
    second = write_binary(tmp_path, "listing2")
    out_dir = tmp_path / "truths"
    out_dir.mkdir()
    code, _out, _err = run(
        capsys, "extract", str(first), str(second), "-o", str(out_dir)
    )
    assert code == 0
    assert sorted(p.name for p in out_dir.iterdir()) == [
        "listing1.truth.json",
        "listing2.truth.json",
    ]


def test_extract_many_binaries_need_a_directory(tmp_path, capsys):
    first = write_binary(tmp_path, "listing1")
    second = write_binary(tmp_path, "listing2")
    code, _out, err = run(capsys, "extract", str(first), str(second))
    assert code == 1
    assert "directory" in err


def test_extract_incomplete_binary_exits_3_but_still_writes(tmp_path, capsys):
    binary = write_binary(tmp_path, "stripped")
    out_path = tmp_path / "truth.json"
    code, _out, err = run(capsys, "extract", str(binary), "-o", str(out_path))
    assert code == 3
    assert "incomplete" in err
    doc = interchange.document_from_json(out_path.read_text())
    assert doc.complete is False
    assert doc.functions == ()


def test_extract_missing_file_is_an_input_error(tmp_path, capsys):
    code, _out, err = run(capsys, "extract", str(tmp_path / "nope.bin"))
    assert code == 2
    assert "extract" in err


def test_extract_garbage_is_an_input_error(tmp_path, capsys):
    path = tmp_path / "garbage.bin"
    path.write_bytes(b"not an object file, not even close")
    code, _out, _err = run(capsys, "extract", str(path))
    assert code == 2


# --- score -------------------------------------------------------------------


def test_score_perfect_report_json(tmp_path, capsys, preset_docs):
    doc = preset_docs["listing2"]
    truth = write_truth(tmp_path, doc, "l2")
    report = write_report(tmp_path, doc, "l2")
    code, out, _err = run(capsys, "score", str(truth), str(report))
    assert code == 0
    payload = json.loads(out)
    assert payload["metrics"]["f1"]["exact"] == "1"
    assert payload["counts"]["true_positives"] == 9


def test_score_table_format(tmp_path, capsys, preset_docs):
    doc = preset_docs["listing1"]
    truth = write_truth(tmp_path, doc, "l1")
    report = write_report(tmp_path, doc, "l1")
    code, out, _err = run(
        capsys, "score", str(truth), str(report), "--format", "table"
    )
    assert code == 0
    assert "true positives   1" in out
    assert "f1               1 (1.0000)" in out


def test_score_policy_changes_the_verdict(tmp_path, capsys, preset_docs):
    doc = preset_docs["padding-icc-vs-gcc"]
    truth = write_truth(tmp_path, doc, "pad")
    raw_sizes = tuple(
        (fn.start, fn.end_exclusive_raw - fn.start) for fn in doc.functions
    )
    report = write_report(tmp_path, doc, "pad", raw_sizes)
    code, out, _err = run(capsys, "score", str(truth), str(report))
    assert code == 0
    assert json.loads(out)["counts"]["true_positives"] == 2
    code, out, _err = run(
        capsys, "score", str(truth), str(report), "--policy", "strict"
    )
    assert code == 0
    payload = json.loads(out)
    # One function has trailing padding inside its raw span; under the strict
    # preset its raw-size prediction no longer matches.
    assert payload["counts"]["true_positives"] == 1
    assert payload["counts"]["false_positives"] == 1


def test_score_boundary_rule_override(tmp_path, capsys, preset_docs):
    doc = preset_docs["listing1"]
    truth = write_truth(tmp_path, doc, "l1")
    report = write_report(tmp_path, doc, "l1", ((doc.functions[0].start, 4),))
    code, out, _err = run(
        capsys,
        "score",
        str(truth),
        str(report),
        "--boundary-rule",
        "legacy_lenient",
        "--format",
        "table",
    )
    assert code == 0
    assert "true positives   1" in out
    assert "LEGACY_LENIENT_POLICY" in out


def test_score_refuses_incomplete_truth(tmp_path, capsys, preset_docs):
    doc = preset_docs["stripped"]
    truth = write_truth(tmp_path, doc, "s")
    report = write_report(tmp_path, doc, "s", ())
    code, _out, err = run(capsys, "score", str(truth), str(report))
    assert code == 3
    assert "incomplete" in err.lower()
    code, out, _err = run(
        capsys, "score", str(truth), str(report), "--accept-incomplete"
    )
    assert code == 0
    assert "INCOMPLETE_TRUTH_ACCEPTED" in json.loads(out)["warnings"]


def test_score_digest_mismatch_is_an_input_error(tmp_path, capsys, preset_docs):
    truth = write_truth(tmp_path, preset_docs["listing1"], "l1")
    other = preset_docs["listing2"]
    report = write_report(tmp_path, other, "l1", ())
    code, _out, err = run(capsys, "score", str(truth), str(report))
    assert code == 2
    assert "digest" in err.lower()


# --- diff ----------------------------------------------------------------------


def test_diff_identical_documents(tmp_path, capsys, preset_docs):
    doc = preset_docs["listing1"]
    left = write_truth(tmp_path, doc, "a")
    right = write_truth(tmp_path, doc, "b")
    code, out, _err = run(capsys, "diff", str(left), str(right))
    assert code == 0
    assert "identical" in out


def test_diff_reports_what_changed(tmp_path, capsys, preset_bytes, build_doc):
    from bintruth.normalize import RunConfig

    merged = build_doc(preset_bytes["listing1"])
    split = build_doc(preset_bytes["listing1"], RunConfig(merge_multi_entry=False))
    left = write_truth(tmp_path, merged, "a")
    right = write_truth(tmp_path, split, "b")
    code, out, _err = run(capsys, "diff", str(left), str(right))
    assert code == 4
    assert "fix_syms." in out
    code, out, _err = run(
        capsys, "diff", str(left), str(right), "--format", "json"
    )
    assert code == 4
    payload = json.loads(out)
    assert payload["identical"] is False
    assert payload["functions"]["added"][0]["name"] == "fix_syms."
    assert payload["functions"]["changed"][0]["fields"] == [
        "entries",
        "end_raw",
        "end_trimmed",
        "aliases",
        "flags",
    ]


# --- corpus ---------------------------------------------------------------------


def _corpus_dir(tmp_path, preset_docs, stems=("listing1", "listing2")):
    directory = tmp_path / "corpus"
    directory.mkdir()
    for stem in stems:
        doc = preset_docs[stem]
        write_truth(directory, doc, stem)
        write_report(directory, doc, stem)
    return directory


def test_corpus_aggregates_pairs(tmp_path, capsys, preset_docs):
    directory = _corpus_dir(tmp_path, preset_docs)
    code, out, _err = run(capsys, "corpus", str(directory))
    assert code == 0
    payload = json.loads(out)
    assert payload["n"] == 2
    assert payload["fraction_perfect"]["exact"] == "1"


def test_corpus_threshold_and_table(tmp_path, capsys, preset_docs):
    directory = _corpus_dir(tmp_path, preset_docs)
    code, out, _err = run(
        capsys,
        "corpus",
        str(directory),
        "--threshold",
        "0.96",
        "--format",
        "table",
    )
    assert code == 0
    assert "binaries        2" in out
    assert "f1 < 0.96" in out


def test_corpus_parallel_matches_serial(tmp_path, capsys, preset_docs):
    directory = _corpus_dir(tmp_path, preset_docs)
    _code, serial, _err = run(capsys, "corpus", str(directory))
    code, parallel, _err = run(capsys, "corpus", str(directory), "--jobs", "2")
    assert code == 0
    assert parallel == serial


def test_corpus_missing_report_is_an_input_error(tmp_path, capsys, preset_docs):
    directory = _corpus_dir(tmp_path, preset_docs)
    (directory / "listing2.report.json").unlink()
    code, _out, err = run(capsys, "corpus", str(directory))
    assert code == 2
    assert "no report" in err


# --- fixtures --------------------------------------------------------------------


def test_fixtures_writes_all_presets(tmp_path, capsys):
    out_dir = tmp_path / "fixtures"
    code, out, _err = run(capsys, "fixtures", "-o", str(out_dir))
    assert code == 0
    names = sorted(p.name for p in out_dir.iterdir())
    assert names == sorted(f"{n}.bin" for n in forge.PRESETS)
    assert "wrote listing1.bin" in out


def test_fixtures_single_preset(tmp_path, capsys):
    out_dir = tmp_path / "one"
    code, _out, _err = run(
        capsys, "fixtures", "-o", str(out_dir), "--preset", "scaffold"
    )
    assert code == 0
    assert [p.name for p in out_dir.iterdir()] == ["scaffold.bin"]


def test_fixtures_randomized_corpus(tmp_path, capsys):
    out_dir = tmp_path / "corpus"
    code, _out, _err = run(
        capsys, "fixtures", "-o", str(out_dir), "--seed", "3", "--count", "4"
    )
    assert code == 0
    written = list(out_dir.iterdir())
    assert len(written) == 4
    for path in written:
        assert path.read_bytes()[:4] == b"\x7fELF"


def test_fixtures_unknown_preset_is_an_input_error(tmp_path, capsys):
    code, _out, err = run(
        capsys, "fixtures", "-o", str(tmp_path), "--preset", "mystery"
    )
    assert code == 2
    assert "mystery" in err
