from __future__ import annotations

import json
import random

import pytest

from formextract.export import to_csv
from formextract.grammar import default_registry, evaluate_grammar
from formextract.pipeline import PipelineConfig, page_corpora, process_document
from formextract.synth import (
    CorpusIoError,
    CorpusSpec,
    UnknownPerturbation,
    apply_perturbations,
    build_document,
    document_bytes,
    generate,
    load_manifest,
    perturb,
    truth_record,
)
from formextract.synth.corpus import ALT_LABELS
from formextract.synth.forms import expected_lines
from formextract.validation import load_truth, score_checkboxes, score_document


def corpus_files(path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


def test_generation_is_byte_identical(tmp_path):
    spec = CorpusSpec(seed=7, count=6, perturbations=frozenset({"GrayRules"}), perturbation_rate=0.5)
    generate(spec, tmp_path / "a")
    generate(spec, tmp_path / "b")
    assert corpus_files(tmp_path / "a") == corpus_files(tmp_path / "b")


def test_manifest_lists_every_document(small_corpus):
    out, manifest = small_corpus
    assert load_manifest(out) == manifest
    assert [d["id"] for d in manifest["documents"]] == [f"doc_{i:04d}" for i in range(20)]
    for entry in manifest["documents"]:
        assert (out / entry["file"]).exists() and (out / entry["truth"]).exists()


def test_clean_corpus_round_trips_exactly(small_corpus):
    out, manifest = small_corpus
    for entry in manifest["documents"]:
        result = process_document((out / entry["file"]).read_bytes(), entry["file"])
        truth = load_truth(out / entry["truth"])
        assert result.parsed, entry["id"]
        # the generator draws some unchecked heparin boxes next to a written dosage on purpose
        conflicts = [c for c in truth["checkboxes"] if c["field"] == "heparin" and not c["checked"]]
        allowed = {"ConflictingEvidence: heparin box unchecked but dosage/time present"} if conflicts else set()
        assert set(result.diagnostics) <= allowed, entry["id"]
        fields, boxes = score_document(result, truth), score_checkboxes(result, truth)
        assert fields.mismatches == [] and boxes.mismatches == []


def test_seed_42_dcd_matches_truth():
    doc = build_document("dcd_flowsheet", 42)
    truth = json.loads(json.dumps(truth_record("d", doc)))
    result = process_document(document_bytes(doc), "d.pdf")
    score = score_document(result, truth)
    assert score.total > 0 and score.accuracy == 1.0
    assert score_checkboxes(result, truth).accuracy == 1.0


def test_zero_vitals_rows_gives_header_only_table():
    doc = build_document("dcd_flowsheet", 5, (0, 0))
    assert doc.tables["dcd_flowsheet"] == []
    result = process_document(document_bytes(doc), "d.pdf")
    schema, rows = result.tables["dcd_flowsheet"]
    assert rows == []
    assert to_csv(rows, schema).count(b"\n") == 1


def test_empty_perturbation_set_is_identity(small_corpus, tmp_path):
    _, manifest = small_corpus
    assert perturb(manifest, [], 1, tmp_path / "p") is manifest
    assert not (tmp_path / "p").exists()


def test_unknown_perturbation():
    with pytest.raises(UnknownPerturbation):
        CorpusSpec(perturbations=frozenset({"Smudge"}))
    with pytest.raises(UnknownPerturbation):
        perturb({"documents": []}, ["Smudge"], 0, "unused")


@pytest.mark.parametrize(
    "kw",
    [
        {"count": 0},
        {"form_mix": {"dcd_flowsheet": 0.5}},
        {"form_mix": {"dcd_flowsheet": 1.5, "liver_data": -0.5}},
        {"form_mix": {"nope": 1.0}},
        {"perturbation_rate": 1.5},
    ],
)
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        CorpusSpec(**kw)


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(CorpusIoError):
        generate(CorpusSpec(count=1), blocker / "sub")


def test_perturb_marks_documents(small_corpus, tmp_path):
    _, manifest = small_corpus
    new = perturb(manifest, ["AltLabels"], 3, tmp_path, rate=1.0)
    assert all("AltLabels" in d["perturbations"] for d in new["documents"])
    truth = load_truth(tmp_path / new["documents"][0]["truth"])
    assert truth["perturbations"] == ["AltLabels"]


def test_shifted_columns_keep_parse_rate():
    registry = default_registry()
    pages = []
    for seed in range(20):
        for form in ("dcd_flowsheet", "liver_data", "referral_worksheet"):
            doc = apply_perturbations(build_document(form, seed), {"ShiftedColumns"}, random.Random(seed))
            pages.extend((p.form_id, expected_lines(p)) for p in doc.pages)
    for form_id, corpus in page_corpora(pages, registry).items():
        assert evaluate_grammar(registry.get(form_id), corpus).parse_rate == 1.0, form_id


def test_alt_labels_break_the_stock_grammar():
    registry = default_registry()
    for form in ("dcd_flowsheet", "liver_data"):
        doc = apply_perturbations(build_document(form, 1), {"AltLabels"}, random.Random(1))
        old, new = ALT_LABELS[form]
        text = "\n".join(expected_lines(doc.pages[0]))
        assert new in text and old not in text
        report = evaluate_grammar(registry.get(form), [expected_lines(doc.pages[0])])
        assert report.parse_rate == 0.0


def test_gray_rules_do_not_change_results():
    doc = build_document("liver_data", 9)
    gray = apply_perturbations(doc, {"GrayRules"}, random.Random(0))
    a = process_document(document_bytes(doc), "a.pdf")
    b = process_document(document_bytes(gray), "a.pdf")
    assert [o.checked for o in a.pages[0].checkboxes] == [o.checked for o in b.pages[0].checkboxes]


def test_config_rejects_out_of_range_dpi():
    with pytest.raises(ValueError):
        PipelineConfig(dpi=1200)
