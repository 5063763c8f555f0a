from __future__ import annotations

import datetime as dt
import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from formextract.grammar import (
    MISSING,
    DuplicateTokenName,
    FieldKind,
    FieldSpec,
    GrammarError,
    GrammarRegistry,
    LinePattern,
    ParseFailure,
    ParseResult,
    PatternCompileError,
    TypedValueError,
    canonicalize,
    compile_template,
    compose_grammar,
    default_registry,
    evaluate_grammar,
    grammar_from_templates,
    identify_form,
    match_sequential,
    parse_form,
    refine_grammar,
    refine_registry,
)
from formextract.grammar.engine import page_text, parse_date, parse_number, parse_time
from formextract.synth import apply_perturbations, build_document
from formextract.synth.forms import expected_lines

REGISTRY = default_registry()
PREOP = REGISTRY.get("pre_operative_management")


def preop_lines(seed: int = 0, alt: bool = False) -> list[str]:
    doc = build_document("dcd_flowsheet", seed)
    if alt:
        doc = apply_perturbations(doc, {"AltLabels"}, random.Random(seed))
    return expected_lines(doc.pages[1])


def with_heparin_line(lines: list[str], text: str) -> list[str]:
    return [text if ln.lstrip().startswith("Heparin:") else ln for ln in lines]


# -- composition ------------------------------------------------------------


def test_compose_contains_all_groups():
    g = compose_grammar(
        "t",
        "^T$",
        [
            r"Extubated: (?P<extubated>\w+)",
            r"Dosage: (?P<heparin_dosage>\d+)",
            r"Time: (?P<heparin_time>\d{4})",
        ],
    )
    for name in ("extubated", "heparin_dosage", "heparin_time"):
        assert f"(?P<{name}>" in g.composed
    assert g.token_names == ["extubated", "heparin_dosage", "heparin_time"]


def test_empty_grammar_rejected():
    with pytest.raises(PatternCompileError):
        compose_grammar("t", "^T$", [])


def test_duplicate_token_rejected():
    with pytest.raises(DuplicateTokenName):
        compose_grammar("t", "^T$", [r"A (?P<time>\d+)", r"B (?P<time>\d+)"])


def test_bad_regex_reports_fragment():
    with pytest.raises(PatternCompileError) as err:
        compose_grammar("t", "^T$", [r"A (?P<x>\d+"])
    assert "(?P<x>" in err.value.fragment


def test_field_pattern_may_not_name_groups():
    with pytest.raises(PatternCompileError):
        FieldSpec("x", FieldKind.FREE_TEXT, pattern=r"(?P<y>a)")


def test_anchor_needs_hint():
    with pytest.raises(GrammarError):
        FieldSpec("box", FieldKind.CHECKBOX_ANCHOR)


def test_undeclared_template_field():
    with pytest.raises(PatternCompileError):
        compile_template("Name: {nobody}", {})


# -- templates --------------------------------------------------------------

FIELDS = {
    "dose": FieldSpec("dose", FieldKind.NUMBER),
    "unit": FieldSpec("unit", FieldKind.CATEGORICAL, pattern="units|U"),
    "when": FieldSpec("when", FieldKind.TIME),
}


def line_rx(template: str, exact: bool = False):
    return re.compile(compile_template(template, FIELDS, exact))


def test_elastic_whitespace():
    rx = line_rx("Dosage: {dose}    Time: {when}")
    assert rx.fullmatch("Dosage: 30000 Time: 0935")
    assert rx.fullmatch("Dosage:   30000          Time:  09:35")


def test_exact_whitespace():
    rx = line_rx("Dosage: {dose}  Time: {when}", exact=True)
    assert rx.fullmatch("Dosage: 1  Time: 0935")
    assert not rx.fullmatch("Dosage: 1   Time: 0935")


def test_optional_slot_absorbs_leading_space():
    rx = line_rx("Dosage: {dose?} {unit?}    Time: {when?}")
    assert rx.fullmatch("Dosage:    Time:").groupdict() == {"dose": None, "unit": None, "when": None}
    assert rx.fullmatch("Dosage: 5 U    Time: 0900").group("unit") == "U"


def test_literal_alternation():
    rx = line_rx("{=Dosage:|Dose:} {dose}")
    assert rx.fullmatch("Dose: 5") and rx.fullmatch("Dosage: 5")
    assert not rx.fullmatch("Amount: 5")


# -- identification ---------------------------------------------------------


@pytest.mark.parametrize(
    "first,form",
    [
        ("DCD FLOWSHEET", "dcd_flowsheet"),
        ("LIVER DATA", "liver_data"),
        ("PRE-OPERATIVE MANAGEMENT", "pre_operative_management"),
        ("PRE-OPERATIVE MANAGMENT", "pre_operative_management"),
    ],
)
def test_identify_by_title(first, form):
    assert identify_form(["", first, "Donor ID: ABC1234"], REGISTRY) == form


def test_identify_blank_page():
    assert identify_form(["", "   ", ""], REGISTRY) is None


def test_identify_ignores_subforms():
    assert identify_form(["VITAL SIGNS"], REGISTRY) is None


def test_identify_empty_registry():
    with pytest.raises(GrammarError):
        identify_form(["DCD FLOWSHEET"], GrammarRegistry())


def test_registry_order_and_duplicates():
    assert REGISTRY.form_ids[0] == "dcd_flowsheet"
    with pytest.raises(GrammarError):
        GrammarRegistry([PREOP, PREOP])
    assert {g.form_id for g in REGISTRY.subforms("flowsheet")} == {
        "vital_signs",
        "vent_settings",
        "intake",
        "medications_dosage",
        "output",
        "comments",
    }


# -- parsing ----------------------------------------------------------------


def test_heparin_bindings():
    lines = with_heparin_line(preop_lines(), "Heparin:    Dosage: 30000 units   Time: 0935")
    result = parse_form(PREOP, lines)
    assert isinstance(result, ParseResult)
    assert result.value("heparin_dosage") == 30000
    assert result.value("heparin_time") == dt.time(9, 35)
    assert result.value("heparin_unit") == "units"


def test_optional_heparin_values_missing():
    lines = with_heparin_line(preop_lines(), "Heparin:    Dosage:    Time:")
    result = parse_form(PREOP, lines)
    assert result.bindings["heparin_dosage"] is MISSING
    assert result.value("heparin_time") is None


def test_fixed_form_has_no_bindings():
    g = grammar_from_templates("fixed", "^FIXED$", [("", "FIXED"), ("", "All done here")], [])
    result = parse_form(g, ["FIXED", "", "All   done here"])
    assert isinstance(result, ParseResult)
    assert result.bindings == {}


def test_missing_line_reports_index():
    lines = preop_lines()
    idx = next(i for i, ln in enumerate(lines) if ln.lstrip().startswith("Heparin:"))
    del lines[idx]
    failure = parse_form(PREOP, lines)
    assert isinstance(failure, ParseFailure)
    assert not failure
    assert failure.reason == "NoMatch"
    # blank layout rows are skipped, so the offending line is the next non-blank one
    expected = next(i for i in range(idx, len(lines)) if lines[i].strip())
    assert failure.first_unmatched_line == (expected, lines[expected])
    assert "Heparin:" in failure.expected


def test_typed_value_error():
    lines = with_heparin_line(preop_lines(), "Heparin:    Dosage: 1 U    Time: 2599")
    failure = parse_form(PREOP, lines)
    assert isinstance(failure, ParseFailure) and failure.reason == "TypedValueError"


def test_block_rows():
    lines = expected_lines(build_document("dcd_flowsheet", 4).pages[0])
    result = parse_form(REGISTRY.get("dcd_flowsheet"), lines)
    rows = result.rows("vitals")
    assert len(rows) == sum(1 for ln in lines if re.match(r"\s*\d+\s+\d{4}-", ln))
    assert [r["minute"].value for r in rows] == list(range(len(rows)))


def test_parse_is_deterministic():
    lines = preop_lines(3)
    a, b = parse_form(PREOP, lines), parse_form(PREOP, lines)
    assert a.bindings == b.bindings


def test_unmapped_categorical_is_diagnosed():
    lines = preop_lines(2)
    lines = [re.sub(r"Regitine: \S+", "Regitine: Maybe", ln) for ln in lines]
    result = parse_form(PREOP, lines)
    assert result.value("regitine") == "Maybe"
    assert any(d.startswith("UnmappedCategorical") for d in result.diagnostics)


# -- typed values -----------------------------------------------------------


def test_parse_time_forms():
    assert parse_time("0935") == parse_time("09:35") == dt.time(9, 35)
    assert parse_time("7:05") == dt.time(7, 5)
    with pytest.raises(TypedValueError):
        parse_time("24:00")


def test_parse_date_forms():
    assert parse_date("2022-01-01") == parse_date("01/01/2022") == dt.date(2022, 1, 1)
    with pytest.raises(TypedValueError):
        parse_date("2022-13-01")


def test_parse_number_keeps_missing_and_zero_apart():
    assert parse_number("0") == 0 and parse_number("0") is not None
    assert parse_number("NaN") is None
    assert parse_number("--") is None
    assert parse_number("") is None
    assert parse_number("2.50") == 2.5
    assert isinstance(parse_number("30000"), int)


TABLES = [f.canon for g in REGISTRY for f in g.fields.values() if f.canon]


@given(st.sampled_from(TABLES), st.text(alphabet="YyNnesoUuIiHhTtKkcmlL- ", max_size=8))
def test_canonicalize_idempotent(table, raw):
    once, _ = canonicalize(raw, table)
    twice, _ = canonicalize(once, table)
    assert once == twice


@given(st.sampled_from(TABLES), st.data())
def test_canonical_labels_are_known(table, data):
    label = data.draw(st.sampled_from(sorted(set(table.values()))))
    assert canonicalize(label, table) == (label, True)


# -- evaluation and refinement ---------------------------------------------


def test_clean_corpus_parses():
    corpus = [preop_lines(s) for s in range(100)]
    report = evaluate_grammar(PREOP, corpus)
    assert report.parse_rate == 1.0 and not report.clusters


def test_alternate_label_forms_one_cluster():
    corpus = [preop_lines(s, alt=(s % 10 == 0)) for s in range(100)]
    report = evaluate_grammar(PREOP, corpus)
    assert report.parse_rate == pytest.approx(0.9)
    assert len(report.clusters) == 1
    ((reason, _, labels),) = report.clusters
    assert reason == "NoMatch" and "Dose:" in labels


def test_evaluate_empty_corpus():
    with pytest.raises(ValueError):
        evaluate_grammar(PREOP, [])


def test_refinement_fixes_alt_label():
    corpus = [preop_lines(s, alt=(s % 10 == 0)) for s in range(100)]
    report = evaluate_grammar(PREOP, corpus)
    refined = refine_grammar(PREOP, report, corpus)
    assert evaluate_grammar(refined, corpus).parse_rate == 1.0
    assert any("{=Dosage:|Dose:}" in t for t in refined.templates)


def test_refinement_without_failures_is_identity():
    corpus = [preop_lines(s) for s in range(5)]
    report = evaluate_grammar(PREOP, corpus)
    assert refine_grammar(PREOP, report, corpus) is PREOP


def test_refine_registry_keeps_unseen_grammars():
    corpus = {"pre_operative_management": [preop_lines(s, alt=(s % 2 == 0)) for s in range(10)]}
    refined, reports = refine_registry(REGISTRY, corpus)
    assert set(reports) == {"pre_operative_management"}
    assert refined.get("liver_data") is REGISTRY.get("liver_data")
    assert refined.get("pre_operative_management") is not PREOP


# -- composition audit ------------------------------------------------------

POOL = [
    expected_lines(page)
    for form in ("dcd_flowsheet", "liver_data", "kidney_perfusion_flow_sheet", "referral_worksheet", "flowsheet")
    for seed in range(12)
    for page in build_document(form, seed).pages
]
GRAMMARS = list(REGISTRY)


def _mutate(lines: list[str], ops: list[tuple[int, int]]) -> list[str]:
    lines = list(lines)
    for kind, pos in ops:
        if not lines:
            break
        i = pos % len(lines)
        if kind == 0:
            del lines[i]
        elif kind == 1:
            lines.insert(i, lines[i])
        elif kind == 2:
            lines.insert(i, "")
        elif kind == 3:
            lines[i] = lines[i].replace(":", ";", 1)
        elif kind == 4:
            lines[i] = "  " + lines[i]
    return lines


@given(
    st.integers(0, len(POOL) - 1),
    st.sampled_from(GRAMMARS),
    st.lists(st.tuples(st.integers(0, 5), st.integers(0, 200)), max_size=3),
)
@settings(max_examples=1000, deadline=None)
def test_composed_matches_sequential(page_idx, grammar, ops):
    lines = _mutate(POOL[page_idx], ops)
    composed = grammar.regex().match(page_text(lines)) is not None
    sequential = match_sequential(grammar, lines)[0]
    assert composed == sequential


def test_line_pattern_names():
    lp = LinePattern(r"(?P<a>\d) (?P<b>\d)")
    assert lp.names == ["a", "b"]
