"""Seeded corpus generation, perturbation and the ``.truth.json`` / ``manifest.json`` files.

Ground truth files hold, per document::

    {"document": "doc_0000", "form_id": "...", "pages": ["..."],
     "perturbations": [], "meta": {"generated_at": "...", "version_note": "..."},
     "tables": {"<table>": [{"<column>": value, ...}]},
     "checkboxes": [{"page": 1, "field": "heparin", "checked": true}]}

Table rows use the same column names and value encodings as the JSON
export (ISO dates, ``HH:MM`` times, ``null`` for Missing).
"""

from __future__ import annotations

import copy
import datetime as dt
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .forms import (
    FORM_BUILDERS,
    PAGE_HEIGHT,
    PAGE_WIDTH,
    DocumentDraft,
    PageDraft,
    draw_preop_page,
    draw_vitals_page,
    preop_values,
    render_page,
)
from .pdfwriter import PdfWriter

PERTURBATIONS = ("AltLabels", "ShiftedColumns", "ExtraBlankLines", "GrayRules")
DEFAULT_MIX = {
    "dcd_flowsheet": 0.2,
    "liver_data": 0.2,
    "kidney_perfusion_flow_sheet": 0.2,
    "referral_worksheet": 0.2,
    "flowsheet": 0.2,
}
# one alternative wording per form, so each perturbed grammar fails in one place
ALT_LABELS = {
    "dcd_flowsheet": ("Withdrawal Date:", "WLST Date:"),
    "pre_operative_management": ("Dosage:", "Dose:"),
    "liver_data": ("Liver Weight:", "Liver Wt:"),
    "kidney_perfusion_flow_sheet": ("Pump:", "Device:"),
    "referral_worksheet": ("Caller:", "Referred By:"),
    "flowsheet": ("SpO2", "SaO2"),
}


class UnknownPerturbation(ValueError):
    pass


class CorpusIoError(OSError):
    pass


@dataclass
class CorpusSpec:
    seed: int = 0
    count: int = 1
    form_mix: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_MIX))
    perturbations: frozenset[str] = frozenset()
    perturbation_rate: float = 0.25
    vitals_rows: tuple[int, int] = (5, 40)

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if abs(sum(self.form_mix.values()) - 1.0) > 1e-9 or any(v < 0 for v in self.form_mix.values()):
            raise ValueError("form_mix proportions must be non-negative and sum to 1")
        unknown = set(self.form_mix) - set(FORM_BUILDERS)
        if unknown:
            raise ValueError(f"unknown form types: {sorted(unknown)}")
        self.perturbations = frozenset(self.perturbations)
        check_perturbations(self.perturbations)
        if not 0.0 <= self.perturbation_rate <= 1.0:
            raise ValueError("perturbation_rate must lie in [0, 1]")


def check_perturbations(names) -> None:
    unknown = set(names) - set(PERTURBATIONS)
    if unknown:
        raise UnknownPerturbation(f"unknown perturbations: {sorted(unknown)}")


def build_document(form_id: str, doc_seed: int, vitals_rows=(5, 40)) -> DocumentDraft:
    rng = random.Random(doc_seed)
    if form_id == "dcd_flowsheet":
        return FORM_BUILDERS[form_id](rng, tuple(vitals_rows))
    return FORM_BUILDERS[form_id](rng)


def long_document(seed: int, n_pages: int, vitals_rows=(5, 40)) -> DocumentDraft:
    """One document of ``n_pages`` pages built by concatenating seeded forms of every type."""
    if n_pages < 1:
        raise ValueError("n_pages must be at least 1")
    rng = random.Random(seed)
    forms = sorted(FORM_BUILDERS)
    pages: list[PageDraft] = []
    tables: dict[str, list] = {}
    first = None
    while len(pages) < n_pages:
        doc = build_document(forms[len(pages) % len(forms)], rng.getrandbits(32), vitals_rows)
        if len(pages) + len(doc.pages) > n_pages:
            doc = build_document("liver_data", rng.getrandbits(32))
        first = first or doc
        pages.extend(doc.pages)
        for name, rows in doc.tables.items():
            tables.setdefault(name, []).extend(rows)
    return DocumentDraft(first.form_id, pages, tables, first.generated_at, first.version_note)


# -- perturbations -------------------------------------------------------


def alt_labels(page: PageDraft) -> None:
    old, new = ALT_LABELS.get(page.form_id, (None, None))
    for item in page.texts:
        if old and item.text.startswith(old):
            item.text = new + item.text[len(old) :]


def shifted_columns(page: PageDraft, rng: random.Random) -> None:
    rows = sorted({t.row for t in page.texts})
    for row in rng.sample(rows, k=min(len(rows), rng.randint(1, 3))):
        delta = rng.choice((-2, 2))
        for item in page.texts:
            if item.row == row:
                item.col = max(0, item.col + delta)


def extra_blank_lines(page: PageDraft, rng: random.Random) -> None:
    rows = sorted({t.row for t in page.texts})
    if len(rows) < 2:
        return
    at = rng.choice(rows[1:])
    k = rng.randint(1, 2)
    for item in page.texts:
        if item.row >= at:
            item.row += k


def gray_rules(page: PageDraft) -> None:
    """Gray rules running through every checkbox; binarization must remove them."""
    for box in page.boxes:
        page.rules.append((36.0, box.cy, 576.0, box.cy))


def apply_perturbations(doc: DocumentDraft, names, rng: random.Random) -> DocumentDraft:
    doc = copy.deepcopy(doc)
    for page in doc.pages:
        if "AltLabels" in names:
            alt_labels(page)
        if "ShiftedColumns" in names:
            shifted_columns(page, rng)
        if "ExtraBlankLines" in names:
            extra_blank_lines(page, rng)
        if "GrayRules" in names:
            gray_rules(page)
    return doc


# -- output --------------------------------------------------------------


def pdf_date(when: dt.datetime) -> str:
    return f"D:{when:%Y%m%d%H%M%S}"


def document_bytes(doc: DocumentDraft) -> bytes:
    writer = PdfWriter(info={"CreationDate": pdf_date(doc.generated_at), "Subject": doc.version_note})
    for page in doc.pages:
        writer.add_page(render_page(page), PAGE_WIDTH, PAGE_HEIGHT)
    return writer.to_bytes()


def truth_record(doc_id: str, doc: DocumentDraft, perturbations=()) -> dict:
    return {
        "document": doc_id,
        "form_id": doc.form_id,
        "pages": [p.form_id for p in doc.pages],
        "perturbations": sorted(perturbations),
        "meta": {"generated_at": doc.generated_at.isoformat(timespec="seconds"), "version_note": doc.version_note},
        "tables": doc.tables,
        "checkboxes": [
            {"page": i, "field": box.field, "checked": box.checked}
            for i, page in enumerate(doc.pages)
            for box in page.boxes
        ],
    }


def _dump_json(obj) -> bytes:
    return (json.dumps(obj, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _write(path: Path, data: bytes) -> None:
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise CorpusIoError(f"cannot write {path}: {exc}") from exc


def _emit(out: Path, entry: dict, spec_vitals) -> None:
    doc = build_document(entry["form_id"], entry["seed"], spec_vitals)
    if entry["perturbations"]:
        doc = apply_perturbations(doc, set(entry["perturbations"]), random.Random(entry["seed"] ^ 0x5EED))
    _write(out / entry["file"], document_bytes(doc))
    _write(out / entry["truth"], _dump_json(truth_record(entry["id"], doc, entry["perturbations"])))


def generate(spec: CorpusSpec, out_dir) -> dict:
    """Write ``count`` documents plus ground truth and a manifest; returns the manifest."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CorpusIoError(f"cannot create {out}: {exc}") from exc
    rng = random.Random(spec.seed)
    forms = sorted(spec.form_mix)
    weights = [spec.form_mix[f] for f in forms]
    documents = []
    for i in range(spec.count):
        form_id = rng.choices(forms, weights)[0]
        doc_seed = rng.getrandbits(32)
        applied = sorted(p for p in sorted(spec.perturbations) if rng.random() < spec.perturbation_rate)
        doc_id = f"doc_{i:04d}"
        entry = {
            "id": doc_id,
            "form_id": form_id,
            "seed": doc_seed,
            "file": f"{doc_id}.pdf",
            "truth": f"{doc_id}.truth.json",
            "perturbations": applied,
        }
        _emit(out, entry, spec.vitals_rows)
        documents.append(entry)
    manifest = {
        "seed": spec.seed,
        "count": spec.count,
        "form_mix": dict(sorted(spec.form_mix.items())),
        "perturbations": sorted(spec.perturbations),
        "perturbation_rate": spec.perturbation_rate,
        "vitals_rows": list(spec.vitals_rows),
        "documents": documents,
    }
    _write(out / "manifest.json", _dump_json(manifest))
    return manifest


def perturb(manifest: dict, perturbations, seed: int, out_dir, rate: float | None = None) -> dict:
    """Re-render a corpus with perturbations applied to a seeded subset of documents.

    An empty perturbation set returns the manifest unchanged and writes nothing.
    """
    perturbations = frozenset(perturbations)
    check_perturbations(perturbations)
    if not perturbations:
        return manifest
    rate = manifest.get("perturbation_rate", 0.25) if rate is None else rate
    rng = random.Random(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    new = copy.deepcopy(manifest)
    new["perturbations"] = sorted(set(manifest.get("perturbations", [])) | perturbations)
    for entry in new["documents"]:
        added = {p for p in sorted(perturbations) if rng.random() < rate}
        entry["perturbations"] = sorted(set(entry["perturbations"]) | added)
        _emit(out, entry, manifest.get("vitals_rows", (5, 40)))
    _write(out / "manifest.json", _dump_json(new))
    return new


def load_manifest(corpus_dir) -> dict:
    return json.loads((Path(corpus_dir) / "manifest.json").read_text(encoding="utf-8"))


# -- fixture of the reference DCD table ----------------------------------

REFERENCE_VITALS = [
    (100, 170, 87, 115, 12, 88),
    (108, 191, 97, 128, 27, 70),
    (111, 203, 102, 136, 33, 38),
    (102, 117, 68, 84, 28, 0),
    (88, 96, 63, 74, 8, 0),
    (54, 72, 49, 57, 0, 0),
] + [(0, 0, 0, 0, 0, 0)] * 8 + [(None,) * 6] * 7
REFERENCE_START = dt.datetime(2022, 1, 1, 9, 47)


def reference_table_document() -> DocumentDraft:
    """The two-page DCD flowsheet carrying the reference 21-row vitals table."""
    rows = []
    for minute, vitals in enumerate(REFERENCE_VITALS):
        ts = REFERENCE_START + dt.timedelta(minutes=minute)
        keys = ["hr", "bp_systolic", "bp_diastolic", "map", "rr", "sao2"]
        rows.append({"minute": minute, "timestamp": f"{ts:%Y-%m-%d %H:%M} EST", **dict(zip(keys, vitals))})
    rng = random.Random(2022)
    vitals_page = draw_vitals_page("DCD0001", REFERENCE_START.date(), rows, rng, literal_nan=True)
    printed, truth, box = preop_values(rng, "DCD0001", REFERENCE_START)
    preop_page = draw_preop_page(printed, truth, box, rng)
    return DocumentDraft(
        "dcd_flowsheet", [vitals_page, preop_page], {}, dt.datetime(2022, 1, 2, 8, 0), "reference table fixture"
    )


def reference_table_pdf() -> bytes:
    return document_bytes(reference_table_document())
