from __future__ import annotations

import json
import shutil

import pytest

from formextract import batch
from formextract.cli import main
from formextract.grammar import builtin_grammar_dir
from formextract.pdf import load_document
from formextract.pipeline import DocumentSkipped, detect_image_based, process_document
from formextract.synth import ImageXObject, PdfWriter, build_document, document_bytes
from formextract.synth.forms import render_page

IMAGE_PAGE = b"q 612 0 0 792 0 0 cm /Im0 Do Q"


def scan_pdf(pages: int = 1) -> bytes:
    w = PdfWriter()
    for _ in range(pages):
        w.add_page(IMAGE_PAGE, images={"Im0": ImageXObject(8, 8, b"\xff\xd8 fake jpeg \xff\xd9")})
    return w.to_bytes()


def mixed_pdf() -> bytes:
    """Four text pages and one scanned page."""
    doc = build_document("referral_worksheet", 2)
    w = PdfWriter()
    for _ in range(4):
        w.add_page(render_page(doc.pages[0]))
    w.add_page(IMAGE_PAGE, images={"Im0": ImageXObject(8, 8, b"\xff\xd8\xff\xd9")})
    return w.to_bytes()


def text_pdf(form: str = "liver_data", seed: int = 1) -> bytes:
    return document_bytes(build_document(form, seed))


# -- image-based detection ----------------------------------------------


def test_text_form_is_not_image_based():
    assert not detect_image_based(load_document(text_pdf()))


def test_scan_is_image_based():
    assert detect_image_based(load_document(scan_pdf(2)))


def test_one_scanned_page_among_text_pages():
    assert not detect_image_based(load_document(mixed_pdf()))


def test_scan_is_skipped():
    with pytest.raises(DocumentSkipped):
        process_document(scan_pdf(), "scan.pdf")


def test_unknown_page_is_indexed_not_fatal():
    w = PdfWriter()
    w.add_page(b"BT /F1 10 Tf 72 700 Td (SOMETHING ELSE ENTIRELY) Tj ET")
    result = process_document(w.to_bytes(), "x.pdf")
    assert [(p.status, p.form_id) for p in result.pages] == [("Unknown", None)]
    assert result.tables == {}


# -- batch --------------------------------------------------------------


@pytest.fixture
def input_dir(tmp_path):
    d = tmp_path / "in"
    (d / "sub").mkdir(parents=True)
    (d / "a.pdf").write_bytes(text_pdf("liver_data", 1))
    (d / "sub" / "b.pdf").write_bytes(text_pdf("dcd_flowsheet", 2))
    (d / "scan.pdf").write_bytes(scan_pdf())
    return d


def journal(path) -> list[dict]:
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_batch_counts(input_dir, tmp_path):
    out = tmp_path / "out"
    summary = batch.run(batch.BatchConfig(input_dir, out))
    assert (summary.processed, summary.skipped, summary.failed) == (2, 1, 0)
    assert summary.exit_code == batch.EXIT_OK
    assert (out / "a" / "liver_data.csv").exists()
    assert (out / "sub" / "b" / "b.sql").exists()
    assert (out / "sub" / "b" / "b.json").exists()
    entries = {e["file"]: e for e in journal(out / "journal.jsonl")}
    assert entries["scan.pdf"]["outcome"] == "Skipped"
    assert entries["scan.pdf"]["reason"] == "image-based PDF"
    assert entries["a.pdf"]["forms"] == ["liver_data"]


def test_empty_directory(tmp_path):
    (tmp_path / "in").mkdir()
    summary = batch.run(batch.BatchConfig(tmp_path / "in", tmp_path / "out"))
    assert (summary.processed, summary.skipped, summary.failed) == (0, 0, 0)
    assert summary.exit_code == batch.EXIT_OK
    assert (tmp_path / "out" / "journal.jsonl").read_text() == ""


def test_bad_file_fails_alone(input_dir, tmp_path):
    (input_dir / "bad.pdf").write_bytes(b"%PDF-1.4\nnot really\n")
    summary = batch.run(batch.BatchConfig(input_dir, tmp_path / "out"))
    assert (summary.processed, summary.skipped, summary.failed) == (2, 1, 1)
    failed = [r for r in summary.reports if r.outcome == "Failed"]
    assert [r.file for r in failed] == ["bad.pdf"] and failed[0].error


def test_all_failed_exit_code(tmp_path):
    (tmp_path / "in").mkdir()
    (tmp_path / "in" / "x.pdf").write_bytes(b"garbage")
    summary = batch.run(batch.BatchConfig(tmp_path / "in", tmp_path / "out"))
    assert summary.exit_code == batch.EXIT_ALL_FAILED


def test_worker_count_does_not_change_outputs(input_dir, tmp_path):
    (input_dir / "bad.pdf").write_bytes(b"%PDF-1.4 broken")
    for i in range(3):
        (input_dir / f"k{i}.pdf").write_bytes(text_pdf("kidney_perfusion_flow_sheet", i))
    batch.run(batch.BatchConfig(input_dir, tmp_path / "w1", workers=1))
    s4 = batch.run(batch.BatchConfig(input_dir, tmp_path / "w4", workers=4))
    assert s4.failed == 1

    def files(root):
        return {
            p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file() and p.suffix != ".jsonl"
        }

    assert files(tmp_path / "w1") == files(tmp_path / "w4")


def test_formats_subset(input_dir, tmp_path):
    batch.run(batch.BatchConfig(input_dir, tmp_path / "out", formats=("json",)))
    produced = {p.suffix for p in (tmp_path / "out" / "a").iterdir()}
    assert produced == {".json"}


@pytest.mark.parametrize(
    "kw",
    [{"workers": 0}, {"formats": ("xml",)}, {"formats": ()}, {"dpi": 10}, {"grammar_dir": "/nonexistent"}],
)
def test_config_errors(input_dir, tmp_path, kw):
    with pytest.raises(batch.ConfigError):
        batch.run(batch.BatchConfig(input_dir, tmp_path / "out", **kw))


def test_custom_grammar_dir(input_dir, tmp_path):
    gdir = tmp_path / "grammars"
    gdir.mkdir()
    shutil.copy(builtin_grammar_dir() / "liver_data.grammar", gdir)
    summary = batch.run(batch.BatchConfig(input_dir, tmp_path / "out", grammar_dir=gdir))
    forms = {r.file: r.forms for r in summary.reports if r.outcome == "Processed"}
    assert forms["a.pdf"] == ["liver_data"]
    assert forms[str(input_dir.joinpath("sub", "b.pdf").relative_to(input_dir))] == []


# -- CLI ----------------------------------------------------------------


def test_cli_synth_then_extract(tmp_path, capsys):
    corpus, out = tmp_path / "corpus", tmp_path / "out"
    assert main(["synth", "--seed", "1", "--count", "3", "--out", str(corpus)]) == 0
    assert (corpus / "manifest.json").exists()
    rc = main(["extract", "--input", str(corpus), "--output", str(out), "--formats", "csv,sql"])
    assert rc == 0
    assert len(journal(out / "journal.jsonl")) == 3
    assert "processed=3" in capsys.readouterr().out


def test_cli_missing_input(tmp_path):
    assert main(["extract", "--input", str(tmp_path / "nope"), "--output", str(tmp_path / "o")]) == 1


def test_cli_all_failed(tmp_path):
    (tmp_path / "in").mkdir()
    (tmp_path / "in" / "x.pdf").write_bytes(b"junk")
    assert main(["extract", "--input", str(tmp_path / "in"), "--output", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize(
    "argv",
    [["extract", "--input", "x", "--output", "y", "--formats", "xml"], ["extract", "--output", "y"], ["bogus"]],
)
def test_cli_usage_errors_are_config_errors(argv):
    with pytest.raises(SystemExit) as err:
        main(argv)
    assert err.value.code == batch.EXIT_CONFIG


def test_cli_unknown_perturbation(tmp_path):
    assert main(["synth", "--seed", "1", "--count", "1", "--out", str(tmp_path), "--perturb", "Smudge"]) == 1


def test_cli_journal_path(input_dir, tmp_path):
    j = tmp_path / "logs" / "run.jsonl"
    main(["extract", "--input", str(input_dir), "--output", str(tmp_path / "o"), "--journal", str(j)])
    assert sorted(e["outcome"] for e in journal(j)) == ["Processed", "Processed", "Skipped"]
