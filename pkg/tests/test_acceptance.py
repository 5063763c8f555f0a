"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line with its
measurements, then asserts. The multi-worker scaling half of criterion 5
needs at least 8 CPUs; on smaller machines it still runs and measures,
and is reported as an expected failure.
"""

from __future__ import annotations

import csv
import json
import random
import sqlite3
import time
from pathlib import Path

import numpy as np
import pytest
from oracles import fuzz, labelling_matches_oracle, mutate, random_image

from formextract import batch
from formextract.checkbox import checked_threshold
from formextract.estimators import FormParser, LayoutTextExtractor
from formextract.export import to_csv
from formextract.grammar import default_registry
from formextract.layout import round_half_away
from formextract.pdf import tokenize_content
from formextract.pipeline import PipelineConfig, process_document
from formextract.raster import build_scene, rasterize
from formextract.records import LIVER_CHECKBOXES, assign_checkboxes
from formextract.synth import (
    CorpusSpec,
    document_bytes,
    generate,
    long_document,
    reference_table_pdf,
)
from formextract.validation import checkbox_verdicts

DATA = Path(__file__).parent / "data"
PERTURB_SUITE = frozenset({"AltLabels", "ShiftedColumns", "ExtraBlankLines"})


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}")

    return emit


@pytest.fixture(scope="module")
def clean_run(tmp_path_factory):
    """200 mixed documents pushed through the batch runner at 4 workers."""
    root = tmp_path_factory.mktemp("acceptance")
    manifest = generate(CorpusSpec(seed=2024, count=200), root / "in")
    summary = batch.run(batch.BatchConfig(root / "in", root / "out", workers=4))
    return root, manifest, summary


# -- helpers working only on exported files and the stdlib parsers ------


def exported_json(root: Path, doc_id: str) -> dict:
    return json.loads((root / "out" / doc_id / f"{doc_id}.json").read_text(encoding="utf-8"))


def compare_truth(exported: dict, truth: dict) -> tuple[int, int, list[str]]:
    """Cell-by-cell comparison of an exported JSON document with its ground truth."""
    matched = total = 0
    problems = []
    tables = exported["tables"]
    for name, rows in truth["tables"].items():
        got = tables.get(name, [])
        if len(got) != len(rows):
            problems.append(f"{name}: {len(got)} rows, expected {len(rows)}")
        for i, expected in enumerate(rows):
            actual = got[i] if i < len(got) else {}
            for column, value in expected.items():
                total += 1
                a = actual.get(column, object())
                if a == value and type(a) is type(value):
                    matched += 1
                else:
                    problems.append(f"{name}[{i}].{column}: {a!r} != {value!r}")
    (meta,) = tables["document_meta"]
    for key, value in truth["meta"].items():
        total += 1
        if meta.get(key) == value:
            matched += 1
        else:
            problems.append(f"meta.{key}: {meta.get(key)!r} != {value!r}")
    return matched, total, problems


def csv_cell_agrees(text: str, value) -> bool:
    if value is None:
        return text in ("", "NaN")
    if isinstance(value, bool):
        return text == str(int(value))
    if isinstance(value, (int, float)):
        return text not in ("", "NaN") and float(text) == value
    return text == value


def sql_cell_agrees(cell, value) -> bool:
    if value is None:
        return cell is None
    if isinstance(value, bool):
        return cell == int(value)
    return cell == value and cell is not None


def failed_files(summary) -> set[str]:
    return {r.file for r in summary.reports if r.outcome != "Processed"}


def bound_observations(result) -> dict:
    """Observations keyed by (page, field): liver boxes in reading order, others by anchor."""
    registry = default_registry()
    out = {}
    for page in result.pages:
        if page.form_id == "liver_data" and len(page.checkboxes) == len(LIVER_CHECKBOXES):
            out.update({(page.index, name): obs for name, obs in zip(LIVER_CHECKBOXES, page.checkboxes)})
        elif page.form_id and page.checkboxes:
            anchors = registry.get(page.form_id).anchors
            out.update({(page.index, name): obs for name, obs in assign_checkboxes(page.checkboxes, anchors).items()})
    return out


# -- criteria -----------------------------------------------------------


def test_criterion_1_clean_corpus_round_trip(clean_run, report):
    root, manifest, summary = clean_run
    matched = total = 0
    problems = []
    for entry in manifest["documents"]:
        truth = json.loads((root / "in" / entry["truth"]).read_text(encoding="utf-8"))
        m, t, p = compare_truth(exported_json(root, entry["id"]), truth)
        matched, total = matched + m, total + t
        problems.extend(f"{entry['id']}: {x}" for x in p)
    accuracy = matched / total
    ok = summary.processed == 200 and accuracy == 1.0 and summary.elapsed < 60
    report(
        1,
        ok,
        f"{summary.processed}/200 documents, {matched}/{total} fields exact ({accuracy:.4%}), "
        f"{summary.elapsed:.1f}s at 4 workers",
    )
    assert problems == []
    assert ok


def test_criterion_2_refinement_parse_rate(tmp_path, report):
    fit_dir, eval_dir = tmp_path / "fit", tmp_path / "eval"
    spec = dict(count=100, perturbations=PERTURB_SUITE, perturbation_rate=1.0)
    fit_manifest = generate(CorpusSpec(seed=11, **spec), fit_dir)
    eval_manifest = generate(CorpusSpec(seed=12, **spec), eval_dir)
    fit_docs = [(fit_dir / d["file"]).read_bytes() for d in fit_manifest["documents"]]
    eval_docs = [(eval_dir / d["file"]).read_bytes() for d in eval_manifest["documents"]]

    before = sum(process_document(d, "doc.pdf").parsed for d in eval_docs) / len(eval_docs)
    pages = [page for doc in LayoutTextExtractor().transform(fit_docs) for page in doc]
    parser = FormParser().fit(pages)
    config = PipelineConfig(registry=parser.registry_)
    after = sum(process_document(d, "doc.pdf", config).parsed for d in eval_docs) / len(eval_docs)
    ok = after >= 0.90
    report(2, ok, f"document parse rate {before:.0%} before, {after:.0%} after one refinement (held-out corpus)")
    assert ok


def test_criterion_3_checkbox_thresholds(tmp_path, report):
    mix = {"liver_data": 0.8, "dcd_flowsheet": 0.2}
    manifest = generate(
        CorpusSpec(seed=77, count=80, form_mix=mix, perturbations=frozenset({"GrayRules"}), perturbation_rate=0.5),
        tmp_path,
    )
    t300, t150 = checked_threshold(300), checked_threshold(150)
    instances = correct = same_at_150 = in_band = 0
    # pixel counts of the boxes the truth marks checked / unchecked, at 300 dpi
    counts = {True: [], False: []}
    for entry in manifest["documents"]:
        data = (tmp_path / entry["file"]).read_bytes()
        truth = json.loads((tmp_path / entry["truth"]).read_text())
        hi = process_document(data, entry["file"], PipelineConfig(dpi=300))
        lo = process_document(data, entry["file"], PipelineConfig(dpi=150))
        bound = bound_observations(hi)
        v150 = checkbox_verdicts(lo)
        for box in truth["checkboxes"]:
            key = (box["page"], box["field"])
            instances += 1
            obs = bound.get(key)
            if obs is None:
                continue
            counts[box["checked"]].append(obs.pixel_count)
            in_band += obs.pixel_count >= t300 if box["checked"] else obs.pixel_count < t300
            correct += obs.checked == box["checked"]
            same_at_150 += v150.get(key) == obs.checked
    ok = instances >= 500 and in_band == correct == same_at_150 == instances
    report(
        3,
        ok,
        f"{correct}/{instances} boxes correct at 300 dpi, {same_at_150} identical at 150 dpi "
        f"(threshold {t150:.0f}); checked boxes {min(counts[True])}-{max(counts[True])} px, "
        f"unchecked {min(counts[False])}-{max(counts[False])} px against {t300:.0f}",
    )
    assert ok


def test_criterion_4_reference_table_csv(report):
    result = process_document(reference_table_pdf(), "reference_table.pdf")
    schema, rows = result.tables["dcd_flowsheet"]
    produced = to_csv(rows, schema)
    expected = (DATA / "reference_dcd_flowsheet.csv").read_bytes()
    ok = produced == expected
    report(4, ok, f"{len(rows)} rows, CSV {'identical' if ok else 'differs'} ({len(produced)} bytes)")
    assert ok


def test_criterion_5a_long_document_single_worker(report):
    data = document_bytes(long_document(seed=36, n_pages=36))
    start = time.perf_counter()
    result = process_document(data, "long.pdf")
    elapsed = time.perf_counter() - start
    ok = len(result.pages) == 36 and result.parsed and elapsed <= 5.0
    report(5, ok, f"36-page document in {elapsed:.2f}s on one worker")
    assert ok


@pytest.mark.xfail(
    batch.available_cpus() < 8,
    reason="8-worker scaling needs 8 CPUs; this machine has fewer",
    strict=False,
)
def test_criterion_5b_eight_worker_scaling(tmp_path, report):
    generate(CorpusSpec(seed=64, count=64), tmp_path / "in")
    one = batch.run(batch.BatchConfig(tmp_path / "in", tmp_path / "w1", workers=1))
    eight = batch.run(batch.BatchConfig(tmp_path / "in", tmp_path / "w8", workers=8))
    speedup = eight.docs_per_second / one.docs_per_second
    ok = one.processed == eight.processed == 64 and speedup >= 4.0
    report(
        5,
        ok,
        f"scaling {speedup:.2f}x ({one.docs_per_second:.1f} -> {eight.docs_per_second:.1f} docs/s) "
        f"with {batch.available_cpus()} CPU(s) available",
    )
    assert ok


def test_criterion_6_export_validity(clean_run, report):
    root, manifest, _ = clean_run
    tables = rows = zeros = missing = 0
    problems = []
    for entry in manifest["documents"]:
        doc_id = entry["id"]
        out = root / "out" / doc_id
        exported = exported_json(root, doc_id)
        con = sqlite3.connect(":memory:")
        con.executescript((out / f"{doc_id}.sql").read_text(encoding="utf-8"))
        for name, json_rows in exported["tables"].items():
            tables += 1
            rows += len(json_rows)
            (count,) = con.execute(f'SELECT COUNT(*) FROM "{name}"').fetchone()
            if count != len(json_rows):
                problems.append(f"{doc_id}/{name}: sql has {count} rows, json {len(json_rows)}")
            cur = con.execute(f'SELECT * FROM "{name}"')
            columns = [d[0] for d in cur.description]
            sql_rows = cur.fetchall()
            with open(out / f"{name}.csv", newline="", encoding="utf-8") as fh:
                csv_rows = list(csv.DictReader(fh))
            if len(csv_rows) != len(json_rows):
                problems.append(f"{doc_id}/{name}: csv has {len(csv_rows)} rows, json {len(json_rows)}")
            for i, jrow in enumerate(json_rows):
                if list(jrow) != columns:
                    problems.append(f"{doc_id}/{name}: column order differs")
                for j, (col, value) in enumerate(jrow.items()):
                    zeros += value == 0 and not isinstance(value, bool)
                    missing += value is None
                    if i < len(csv_rows) and not csv_cell_agrees(csv_rows[i][col], value):
                        problems.append(f"{doc_id}/{name}[{i}].{col}: csv {csv_rows[i][col]!r} vs json {value!r}")
                    if i < len(sql_rows) and not sql_cell_agrees(sql_rows[i][j], value):
                        problems.append(f"{doc_id}/{name}[{i}].{col}: sql {sql_rows[i][j]!r} vs json {value!r}")
        con.close()
    ok = not problems and zeros > 0 and missing > 0
    report(
        6,
        ok,
        f"{tables} tables / {rows} rows agree across SQL, CSV and JSON; {zeros} zero cells and {missing} missing cells kept apart",
    )
    assert problems == []
    assert ok


def test_criterion_7_oracle_equivalence(report):
    rng = random.Random(7)
    labelled = sum(labelling_matches_oracle(random_image(rng)) for _ in range(500))

    rects = exact = 0
    for dpi in (72, 150, 300):
        scale = dpi / 72
        for _ in range(100):
            w, h = rng.uniform(0.5, 120), rng.uniform(0.5, 120)
            x, y = rng.uniform(0, 612 - 121), rng.uniform(0, 792 - 121)
            ops = tokenize_content(f"{x:.4f} {y:.4f} {w:.4f} {h:.4f} re f".encode())
            _, _, wr, hr = ops[0].operands
            expected = round_half_away(wr * scale) * round_half_away(hr * scale)
            bm = rasterize(build_scene(ops), dpi)
            rects += 1
            exact += int(np.count_nonzero(bm.luminance == 0)) == expected
    ok = labelled == 500 and exact == rects
    report(7, ok, f"labelling matches flood fill on {labelled}/500 images; {exact}/{rects} rectangle areas exact")
    assert ok


def test_criterion_8_robustness(tmp_path, report):
    seed_doc = document_bytes(long_document(seed=8, n_pages=2))
    # any exception other than a typed PdfError escapes fuzz() and fails the test
    graphs, typed, net = fuzz(seed_doc, 10_000, 1)

    inp = tmp_path / "in"
    inp.mkdir()
    rng = random.Random(8)
    for i in range(10):
        (inp / f"m{i:02d}.pdf").write_bytes(mutate(seed_doc, rng))
    (inp / "good.pdf").write_bytes(seed_doc)
    summary = batch.run(batch.BatchConfig(inp, tmp_path / "out", workers=2))
    ok = graphs + typed == 10_000 and net == 0 and summary.total == 11 and summary.processed >= 1 and "good.pdf" not in failed_files(summary)
    report(
        8,
        ok,
        f"10000 mutations: {graphs} graphs, {typed} typed errors, {net} safety-net catches; "
        f"batch over 11 files finished ({summary.processed} processed, {summary.skipped} skipped, {summary.failed} failed)",
    )
    assert ok
