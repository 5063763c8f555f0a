"""End-to-end processing of one document: layout text, form parsing, checkboxes, records."""

from __future__ import annotations

import datetime as dt
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import records
from .checkbox import CheckboxObservation, detect_checkboxes
from .grammar import (
    FormGrammar,
    GrammarRegistry,
    ParseFailure,
    ParseResult,
    default_registry,
    identify_form,
    parse_form,
)
from .layout import (
    DEFAULT_COL_PITCH,
    DEFAULT_ROW_PITCH,
    compose_layout,
    extract_text_runs,
    page_operators,
    render_lines,
)
from .pdf import DocumentGraph, OpClass, PageRef, PageSkipped, PdfError, load_document
from .raster import binarize, build_scene, rasterize, strip_text_operators
from .schema import TableSchema

logger = logging.getLogger(__name__)

DEFAULT_DPI = 300
DEFAULT_INK_THRESHOLD = 100
MIN_TEXT_CHARS_PER_PAGE = 16


@dataclass(frozen=True)
class PipelineConfig:
    dpi: int = DEFAULT_DPI
    col_pitch: float = DEFAULT_COL_PITCH
    row_pitch: float = DEFAULT_ROW_PITCH
    ink_threshold: int = DEFAULT_INK_THRESHOLD
    registry: GrammarRegistry | None = None

    def __post_init__(self):
        if not 72 <= self.dpi <= 600:
            raise ValueError("dpi must lie in [72, 600]")
        if self.col_pitch <= 0 or self.row_pitch <= 0:
            raise ValueError("pitches must be positive")
        if not 0 <= self.ink_threshold <= 255:
            raise ValueError("ink threshold must lie in [0, 255]")

    @property
    def grammars(self) -> GrammarRegistry:
        return self.registry if self.registry is not None else default_registry()


@dataclass
class PageOutcome:
    index: int
    form_id: str | None
    status: str  # Parsed | ParseFailed | Unknown | Skipped | RecordError
    detail: str | None = None
    lines: list[str] = field(default_factory=list, repr=False)
    parse: ParseResult | ParseFailure | None = None
    checkboxes: list[CheckboxObservation] = field(default_factory=list)


@dataclass
class DocumentResult:
    source: str
    meta: records.DocumentMeta
    pages: list[PageOutcome]
    tables: dict[str, tuple[TableSchema, list]]
    diagnostics: list[str] = field(default_factory=list)

    @property
    def parsed(self) -> bool:
        """Every page was identified and parsed into records."""
        return bool(self.pages) and all(p.status == "Parsed" for p in self.pages)

    @property
    def forms(self) -> list[str]:
        return sorted({p.form_id for p in self.pages if p.form_id})

    def table_list(self) -> list[tuple[TableSchema, list]]:
        """Form tables in name order, then the bookkeeping tables."""
        out = [self.tables[name] for name in sorted(self.tables)]
        out.append((records.META_SCHEMA, [self.meta]))
        out.append(
            (
                records.PAGE_INDEX_SCHEMA,
                [records.PageIndexRow(p.index, p.form_id, p.status, p.detail) for p in self.pages],
            )
        )
        return out


# -- image-based detection ----------------------------------------------


def _page_stats(doc: DocumentGraph, page: PageRef) -> tuple[int, int, bool]:
    """(text-class operators, shown characters, only-image) for one page; raises PdfError."""
    ops = page_operators(page)
    text_ops = sum(1 for op in ops if op.kind is OpClass.TEXT)
    chars = 0
    for op in ops:
        if op.name in ("Tj", "'", '"') and op.operands and isinstance(op.operands[-1], (bytes, str)):
            chars += len(op.operands[-1].strip())
        elif op.name == "TJ" and op.operands and isinstance(op.operands[0], list):
            chars += sum(len(p.strip()) for p in op.operands[0] if isinstance(p, (bytes, str)))
    xobjects = doc.xobjects(page)
    images = sum(
        1
        for op in ops
        if (op.name == "Do" and op.operands and _is_image(xobjects.get(op.operands[0]))) or op.name == "BI"
    )
    return text_ops, chars, images > 0


def _is_image(xobject) -> bool:
    info = getattr(xobject, "dict", xobject)
    return not isinstance(info, dict) or str(info.get("Subtype", "Image")) == "Image"


def detect_image_based(doc: DocumentGraph) -> bool:
    """True when the document has no usable text layer.

    That is: no page has a text operator, or some page's content cannot be
    decoded, or images are present while pages average fewer than 16 shown
    characters.
    """
    total_text_ops = total_chars = 0
    any_images = False
    for page in doc.pages:
        try:
            text_ops, chars, images = _page_stats(doc, page)
        except PageSkipped:
            return True
        except PdfError:
            return True
        total_text_ops += text_ops
        total_chars += chars
        any_images = any_images or images
    if total_text_ops == 0:
        return True
    return any_images and total_chars / len(doc.pages) < MIN_TEXT_CHARS_PER_PAGE


# -- per-page work -------------------------------------------------------


def page_lines(page: PageRef, ops, config: PipelineConfig) -> list[str]:
    runs = extract_text_runs(page, ops=ops)
    grid = compose_layout(runs, page.height, config.col_pitch, config.row_pitch)
    return render_lines(grid)


def page_checkboxes(doc: DocumentGraph, page: PageRef, ops, config: PipelineConfig) -> list[CheckboxObservation]:
    scene = build_scene(strip_text_operators(ops), page, xobjects=doc.xobjects(page))
    bitmap = rasterize(scene, config.dpi)
    return detect_checkboxes(binarize(bitmap, config.ink_threshold), config.dpi, page.height)


def split_sections(lines: list[str], subforms: list[FormGrammar]) -> list[tuple[FormGrammar | None, list[str]]]:
    """Cut a page at subform title lines; the leading part belongs to the parent form."""
    titles = [(g, re.compile(g.title_pattern)) for g in subforms]
    sections: list[tuple[FormGrammar | None, list[str]]] = [(None, [])]
    for line in lines:
        for g, rx in titles:
            if rx.search(line):
                sections.append((g, [line]))
                break
        else:
            sections[-1][1].append(line)
    return sections


def parse_page(grammar: FormGrammar, lines: list[str], registry: GrammarRegistry):
    """Parse a page, including any subform sections.

    Returns ``(result_or_failure, [(subgrammar, result), ...])``.
    """
    subforms = registry.subforms(grammar.form_id)
    if not subforms:
        return parse_form(grammar, lines), []
    sections = split_sections(lines, subforms)
    head = parse_form(grammar, sections[0][1])
    if isinstance(head, ParseFailure):
        return head, []
    parts = []
    for sub, body in sections[1:]:
        result = parse_form(sub, body)
        if isinstance(result, ParseFailure):
            return result, []
        parts.append((sub, result))
    return head, parts


def _parse_pdf_date(value) -> dt.datetime | None:
    if not isinstance(value, (bytes, str)):
        return None
    text = value.decode("latin-1") if isinstance(value, bytes) else value
    m = re.match(r"D:(\d{4})(\d{2})?(\d{2})?(\d{2})?(\d{2})?(\d{2})?", text)
    if not m:
        return None
    parts = [int(p) if p else d for p, d in zip(m.groups(), (0, 1, 1, 0, 0, 0))]
    try:
        return dt.datetime(*parts)
    except ValueError:
        return None


def document_info(doc: DocumentGraph) -> tuple[dt.datetime | None, str | None]:
    try:
        info = doc.resolve(doc.trailer.get("Info"))
    except PdfError:
        return None, None
    if not isinstance(info, dict):
        return None, None
    note = info.get("Subject")
    if isinstance(note, bytes):
        note = note.decode("latin-1")
    return _parse_pdf_date(info.get("CreationDate")), note if isinstance(note, str) and note else None


def _add_rows(tables: dict, schema: TableSchema, rows: list) -> None:
    if schema.table_name in tables:
        tables[schema.table_name][1].extend(rows)
    else:
        tables[schema.table_name] = (schema, list(rows))


def build_records(
    outcome: PageOutcome, grammar: FormGrammar, parts, config: PipelineConfig, page_height: float, diagnostics
) -> list[tuple[TableSchema, list]]:
    parse = outcome.parse
    fid = grammar.form_id
    if fid == records.VITALS_FORM:
        return [(records.VITALS_SCHEMA, records.build_vitals_table(parse, diagnostics))]
    if fid in records.PREOP_FORMS:
        rec = records.build_preop_record(
            parse, outcome.checkboxes, grammar.anchors, page_height, config.col_pitch, config.row_pitch, diagnostics
        )
        return [(records.PREOP_SCHEMA, [rec])]
    if fid == "liver_data":
        return [(records.LIVER_SCHEMA, [records.build_liver_record(parse, outcome.checkboxes)])]
    if parts:
        inherited_specs = tuple(s for s in grammar.fields.values() if s.anchor_hint is None)
        inherited = {s.name: parse.value(s.name) for s in inherited_specs}
        return [
            (records.grammar_schema(sub, inherited_specs), records.build_form_rows(result, sub, inherited))
            for sub, result in parts
        ]
    return [(records.grammar_schema(grammar), records.build_form_rows(parse, grammar))]


def process_document(data: bytes, source: str, config: PipelineConfig | None = None) -> DocumentResult:
    """Run every page of one PDF through the pipeline.

    Raises :class:`~formextract.pdf.PdfError` for unreadable files and
    :class:`DocumentSkipped` for image-based ones; page-level problems are
    recorded in the page index instead.
    """
    config = config or PipelineConfig()
    registry = config.grammars
    doc = load_document(data)
    if detect_image_based(doc):
        raise DocumentSkipped("image-based PDF")
    diagnostics = list(doc.diagnostics)
    tables: dict[str, tuple[TableSchema, list]] = {}
    outcomes = []
    for page in doc.pages:
        outcome = PageOutcome(page.index, None, "Unknown")
        outcomes.append(outcome)
        try:
            ops = page_operators(page)
            outcome.lines = page_lines(page, ops, config)
        except PageSkipped as exc:
            outcome.status, outcome.detail = "Skipped", f"{type(exc).__name__}: {exc}"
            continue
        form_id = identify_form(outcome.lines, registry)
        outcome.form_id = form_id
        if form_id is None:
            outcome.detail = "no grammar title matched"
            continue
        grammar = registry.get(form_id)
        result, parts = parse_page(grammar, outcome.lines, registry)
        outcome.parse = result
        if isinstance(result, ParseFailure):
            outcome.status = "ParseFailed"
            line_no, text = result.first_unmatched_line
            outcome.detail = f"{result.reason} at line {line_no}: {text.strip()!r}"
            continue
        diagnostics.extend(result.diagnostics)
        for _, sub in parts:
            diagnostics.extend(sub.diagnostics)
        try:
            if grammar.anchors:
                outcome.checkboxes = page_checkboxes(doc, page, ops, config)
            built = build_records(outcome, grammar, parts, config, page.height, diagnostics)
        except (records.RecordError, PageSkipped) as exc:
            outcome.status, outcome.detail = "RecordError", f"{type(exc).__name__}: {exc}"
            continue
        for schema, rows in built:
            _add_rows(tables, schema, rows)
        outcome.status = "Parsed"
    generated_at, note = document_info(doc)
    first = next((o.form_id for o in outcomes if o.form_id), None)
    meta = records.DocumentMeta(source, first, len(doc.pages), generated_at, note)
    for d in diagnostics:
        logger.debug("%s: %s", source, d)
    return DocumentResult(source, meta, outcomes, tables, diagnostics)


class DocumentSkipped(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def process_file(path, config: PipelineConfig | None = None) -> DocumentResult:
    p = Path(path)
    return process_document(p.read_bytes(), p.name, config)


def page_corpora(pages, registry: GrammarRegistry) -> dict[str, list[list[str]]]:
    """Group ``(form_id, lines)`` pages by the grammar that should parse them.

    Pages of a form with subforms are cut into sections, so each subform
    grammar gets its own corpus.
    """
    corpora: dict[str, list[list[str]]] = {}
    for form_id, lines in pages:
        if not form_id:
            continue
        subforms = registry.subforms(form_id)
        if not subforms:
            corpora.setdefault(form_id, []).append(lines)
            continue
        sections = split_sections(lines, subforms)
        corpora.setdefault(form_id, []).append(sections[0][1])
        for sub, body in sections[1:]:
            corpora.setdefault(sub.form_id, []).append(body)
    return corpora


def grammar_corpora(results: list[DocumentResult], registry: GrammarRegistry) -> dict[str, list[list[str]]]:
    """Page texts of processed documents grouped by grammar (subform sections included)."""
    return page_corpora(((p.form_id, p.lines) for r in results for p in r.pages), registry)
