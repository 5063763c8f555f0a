"""Typed records built from parse results and checkbox observations.

Missing values are ``None`` throughout and are never conflated with zero.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import math
from dataclasses import dataclass, field

from .checkbox import CheckboxObservation
from .grammar import Binding, FieldKind, FieldSpec, FormGrammar, ParseResult
from .layout import DEFAULT_COL_PITCH, DEFAULT_ROW_PITCH
from .schema import Column, TableSchema, ZonedTimestamp, schema_for

MAX_ANCHOR_DISTANCE = 30.0
VITALS_FORM = "dcd_flowsheet"
PREOP_FORMS = frozenset({"dcd_flowsheet", "pre_operative_management"})


class RecordError(ValueError):
    pass


class CheckboxCountMismatch(RecordError):
    def __init__(self, expected: int, found: int):
        super().__init__(f"expected {expected} checkboxes, found {found}")
        self.expected = expected
        self.found = found


def _col(name: str, **kw):
    return field(metadata={"column": name, **kw})


@dataclass(frozen=True)
class VitalsSeriesRow:
    minute: int = _col("Minute")
    timestamp: ZonedTimestamp = _col("Time")
    hr: int | None = _col("HR")
    bp_systolic: int | None = _col("BP_Systolic")
    bp_diastolic: int | None = _col("BP_Diastolic")
    map: int | None = _col("MAP")
    rr: int | None = _col("RR")
    sao2: int | None = _col("SaO2")


@dataclass(frozen=True)
class PreOpRecord:
    donor_id: str | None = None
    form_date: dt.date | None = None
    opo_name: str | None = None
    coordinator: str | None = None
    withdrawal_location: str | None = None
    withdrawal_date: dt.date | None = None
    withdrawal_time: dt.time | None = None
    extubated: str | None = None
    extubation_time: dt.time | None = None
    comfort_care: str | None = None
    heparin: str | None = None
    heparin_dosage: int | float | None = None
    heparin_unit: str | None = None
    heparin_time: dt.time | None = None
    regitine: str | None = None
    family_present: str | None = None
    pronouncing_physician: str | None = None
    asystole_time: dt.time | None = None
    declaration_time: dt.time | None = None
    incision_time: dt.time | None = None
    cross_clamp_time: dt.time | None = None
    flush_solution: str | None = None
    flush_volume: int | None = None
    flush_unit: str | None = None


LIVER_CHECKBOXES = (
    "steatosis",
    "fibrosis",
    "biopsy_performed",
    "vascular_anomaly",
    "arterial_variant",
    "bile_duct_injury",
    "capsular_tear",
    "split_liver",
)


@dataclass(frozen=True)
class LiverDataRecord:
    donor_id: str | None = None
    recovery_date: dt.date | None = None
    surgeon: str | None = None
    liver_weight: int | None = None
    appearance: str | None = None
    steatosis: bool = False
    fibrosis: bool = False
    biopsy_performed: bool = False
    vascular_anomaly: bool = False
    arterial_variant: bool = False
    bile_duct_injury: bool = False
    capsular_tear: bool = False
    split_liver: bool = False
    comments: str | None = None


@dataclass(frozen=True)
class DocumentMeta:
    source_file: str
    form_id: str | None = None
    page_count: int = 0
    generated_at: dt.datetime | None = None
    version_note: str | None = None

    def __post_init__(self):
        if not self.source_file:
            raise RecordError("source_file must not be empty")


@dataclass(frozen=True)
class PageIndexRow:
    page: int
    form_id: str | None
    status: str
    detail: str | None = None


VITALS_SCHEMA = schema_for(VitalsSeriesRow, "dcd_flowsheet")
PREOP_SCHEMA = schema_for(PreOpRecord, "pre_operative_management")
LIVER_SCHEMA = schema_for(LiverDataRecord, "liver_data")
META_SCHEMA = schema_for(DocumentMeta, "document_meta", primary_key=("source_file",))
PAGE_INDEX_SCHEMA = schema_for(PageIndexRow, "page_index", primary_key=("page",))


# -- helpers -------------------------------------------------------------


def _value(parse: ParseResult, name: str):
    b = parse.bindings.get(name)
    return b.value if isinstance(b, Binding) else None


def _row_value(row: dict, name: str):
    b = row.get(name)
    return b.value if isinstance(b, Binding) else None


def anchor_point(
    spec: FieldSpec,
    page_height: float,
    col_pitch: float = DEFAULT_COL_PITCH,
    row_pitch: float = DEFAULT_ROW_PITCH,
) -> tuple[float, float]:
    row, col = spec.anchor_hint
    return col * col_pitch, page_height - row * row_pitch


def assign_checkboxes(
    observations: list[CheckboxObservation],
    anchors: list[FieldSpec],
    page_height: float = 792.0,
    col_pitch: float = DEFAULT_COL_PITCH,
    row_pitch: float = DEFAULT_ROW_PITCH,
    max_distance: float = MAX_ANCHOR_DISTANCE,
    diagnostics: list[str] | None = None,
) -> dict[str, CheckboxObservation]:
    """Bind each observation to its nearest anchor within ``max_distance`` points."""
    diagnostics = diagnostics if diagnostics is not None else []
    points = {a.name: anchor_point(a, page_height, col_pitch, row_pitch) for a in anchors}
    best: dict[str, tuple[float, CheckboxObservation]] = {}
    for obs in observations:
        px, py = obs.page_point
        ranked = sorted((math.hypot(px - ax, py - ay), name) for name, (ax, ay) in points.items())
        if not ranked or ranked[0][0] > max_distance:
            diagnostics.append(f"UnassignedCheckbox: at ({px:.1f}, {py:.1f})")
            continue
        dist, name = ranked[0]
        if name in best:
            diagnostics.append(f"UnassignedCheckbox: second box for {name!r}")
            if dist >= best[name][0]:
                continue
        best[name] = (dist, obs)
    return {name: obs for name, (_, obs) in best.items()}


# -- builders ------------------------------------------------------------


def build_vitals_table(parse: ParseResult, diagnostics: list[str] | None = None) -> list[VitalsSeriesRow]:
    """One row per table line; minute and timestamp continuity problems become diagnostics."""
    if parse.form_id != VITALS_FORM:
        raise RecordError(f"vitals table needs a {VITALS_FORM} parse, got {parse.form_id!r}")
    diagnostics = diagnostics if diagnostics is not None else []
    rows = []
    for cells in parse.rows("vitals"):
        rows.append(
            VitalsSeriesRow(
                minute=_row_value(cells, "minute"),
                timestamp=ZonedTimestamp.parse(_row_value(cells, "vitals_timestamp")),
                hr=_row_value(cells, "hr"),
                bp_systolic=_row_value(cells, "bp_systolic"),
                bp_diastolic=_row_value(cells, "bp_diastolic"),
                map=_row_value(cells, "map"),
                rr=_row_value(cells, "rr"),
                sao2=_row_value(cells, "sao2"),
            )
        )
    for prev, cur in zip(rows, rows[1:]):
        if cur.minute <= prev.minute:
            diagnostics.append(f"NonMonotonicMinute: {prev.minute} then {cur.minute}")
        if cur.timestamp.local - prev.timestamp.local != dt.timedelta(minutes=1):
            diagnostics.append(f"TimestampGap: {prev.timestamp} to {cur.timestamp}")
    return rows


def infer_heparin(
    box: CheckboxObservation | None, dosage, heparin_time, diagnostics: list[str] | None = None
) -> str | None:
    """Dosage or time evidence implies heparin was given; otherwise the checkbox decides."""
    diagnostics = diagnostics if diagnostics is not None else []
    if dosage is not None or heparin_time is not None:
        if box is not None and not box.checked:
            diagnostics.append("ConflictingEvidence: heparin box unchecked but dosage/time present")
        return "Yes"
    if box is not None:
        return "Yes" if box.checked else "No"
    return None


def build_preop_record(
    parse: ParseResult,
    checkboxes: list[CheckboxObservation],
    anchors: list[FieldSpec] = (),
    page_height: float = 792.0,
    col_pitch: float = DEFAULT_COL_PITCH,
    row_pitch: float = DEFAULT_ROW_PITCH,
    diagnostics: list[str] | None = None,
) -> PreOpRecord:
    if parse.form_id not in PREOP_FORMS:
        raise RecordError(f"pre-op record needs one of {sorted(PREOP_FORMS)}, got {parse.form_id!r}")
    diagnostics = diagnostics if diagnostics is not None else []
    assigned = assign_checkboxes(checkboxes, list(anchors), page_height, col_pitch, row_pitch, diagnostics=diagnostics)
    values = {f.name: _value(parse, f.name) for f in dataclasses.fields(PreOpRecord) if f.name != "heparin"}
    values["heparin"] = infer_heparin(
        assigned.get("heparin"), values["heparin_dosage"], values["heparin_time"], diagnostics
    )
    return PreOpRecord(**values)


def build_liver_record(parse: ParseResult, checkboxes: list[CheckboxObservation]) -> LiverDataRecord:
    """The i-th checkbox in reading order binds to the i-th checkbox field."""
    if parse.form_id != "liver_data":
        raise RecordError(f"liver record needs a liver_data parse, got {parse.form_id!r}")
    if len(checkboxes) != len(LIVER_CHECKBOXES):
        raise CheckboxCountMismatch(len(LIVER_CHECKBOXES), len(checkboxes))
    values = {
        f.name: _value(parse, f.name) for f in dataclasses.fields(LiverDataRecord) if f.name not in LIVER_CHECKBOXES
    }
    for name, obs in zip(LIVER_CHECKBOXES, checkboxes):
        values[name] = obs.checked
    return LiverDataRecord(**values)


# -- generic tables ------------------------------------------------------

_KIND_COLUMNS = {
    FieldKind.DATE: "date",
    FieldKind.TIME: "time",
}


def field_column(spec: FieldSpec) -> Column:
    if spec.kind is FieldKind.NUMBER:
        kind = "integer" if spec.integer else "number"
    else:
        kind = _KIND_COLUMNS.get(spec.kind, "text")
    return Column(spec.name, kind)


def grammar_schema(grammar: FormGrammar, inherited: tuple[FieldSpec, ...] = ()) -> TableSchema:
    """Table layout for a grammar without a dedicated record type.

    Scalar fields come first (after any fields inherited from a parent
    form); repeating-row fields follow, one table row per repeated line.
    """
    columns = [field_column(s) for s in inherited]
    for lp in grammar.lines:
        if not lp.block:
            columns.extend(field_column(grammar.fields[n]) for n in lp.names)
    for lp in grammar.lines:
        if lp.block:
            columns.extend(field_column(grammar.fields[n]) for n in lp.names)
    return TableSchema(grammar.form_id, tuple(columns))


def build_form_rows(
    parse: ParseResult, grammar: FormGrammar, inherited: dict[str, object] | None = None
) -> list[dict]:
    inherited = dict(inherited or {})
    scalars = dict(inherited)
    blocks = []
    for lp in grammar.lines:
        if lp.block:
            blocks.append(lp)
        else:
            scalars.update({n: _value(parse, n) for n in lp.names})
    if not blocks:
        return [scalars]
    rows = []
    for lp in blocks:
        for cells in parse.rows(lp.block):
            row = dict(scalars)
            for other in blocks:
                row.update({n: None for n in other.names})
            row.update({n: _row_value(cells, n) for n in lp.names})
            rows.append(row)
    return rows
