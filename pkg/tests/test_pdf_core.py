from __future__ import annotations

import struct
import zlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import fuzz

from formextract.pdf import (
    BrokenXref,
    ContentStream,
    MalformedHeader,
    Name,
    OpClass,
    Operator,
    UnsupportedFilter,
    classify,
    decode_stream,
    load_document,
    serialize_content,
    tokenize_content,
)
from formextract.pdf.content import GRAPHICS_OPERATORS, TEXT_OPERATORS
from formextract.synth import build_document, document_bytes
from formextract.synth.forms import render_page


def stored_deflate(data: bytes) -> bytes:
    """zlib container around uncompressed deflate blocks, written without zlib."""
    out = bytearray(b"\x78\x01")
    chunks = [data[i : i + 65535] for i in range(0, len(data), 65535)] or [b""]
    for i, chunk in enumerate(chunks):
        final = 1 if i == len(chunks) - 1 else 0
        out.append(final)  # BTYPE 00, byte aligned
        out += struct.pack("<HH", len(chunk), len(chunk) ^ 0xFFFF)
        out += chunk
    a, b = 1, 0
    for byte in data:
        a = (a + byte) % 65521
        b = (b + a) % 65521
    out += struct.pack(">I", (b << 16) | a)
    return bytes(out)


# -- load_document ---------------------------------------------------------


def test_single_page_generator_pdf_loads(make_pdf):
    doc = load_document(make_pdf(b"BT /F1 10 Tf 72 700 Td (X) Tj ET\n"))
    assert len(doc.pages) == 1
    assert doc.diagnostics == ()
    assert not doc.xref_reconstructed


def test_empty_input_is_malformed_header():
    with pytest.raises(MalformedHeader):
        load_document(b"")


def test_missing_header():
    with pytest.raises(MalformedHeader):
        load_document(b"hello world")


def test_xref_beyond_eof_without_objects_is_broken_xref():
    with pytest.raises(BrokenXref):
        load_document(b"%PDF-1.4\nstartxref\n999999\n%%EOF\n")


def test_damaged_xref_is_reconstructed(make_pdf):
    data = make_pdf(b"BT 72 700 Td (Heparin:) Tj ET\n")
    start = data.rindex(b"startxref")
    broken = data[:start] + b"startxref\n12\n%%EOF\n"
    doc = load_document(broken)
    assert doc.xref_reconstructed
    assert len(doc.pages) == 1
    assert b"Heparin:" in doc.pages[0].content_bytes()


def test_uncompressed_and_compressed_agree(make_pdf):
    content = b"BT /F1 10 Tf 1 0 0 1 72 700 Tm (A) Tj ET\n"
    a = load_document(make_pdf(content, compress=False)).pages[0].content_bytes()
    b = load_document(make_pdf(content, compress=True)).pages[0].content_bytes()
    assert a == b == content


def test_generator_documents_load_clean():
    for form in ("dcd_flowsheet", "liver_data", "flowsheet"):
        doc = load_document(document_bytes(build_document(form, 1)))
        assert doc.diagnostics == ()
        assert doc.pages


# -- decode_stream ---------------------------------------------------------


def test_flate_against_independent_encoder():
    raw = stored_deflate(b"BT ET")
    assert decode_stream(ContentStream(raw, ("FlateDecode",))) == b"BT ET"


@given(st.binary(max_size=200_000))
@settings(max_examples=30, deadline=None)
def test_flate_oracle_property(data):
    assert decode_stream(ContentStream(stored_deflate(data), ("FlateDecode",))) == data


def test_stored_deflate_oracle_is_valid_zlib():
    # sanity check of the oracle itself against the reference decoder
    assert zlib.decompress(stored_deflate(b"abc" * 30000)) == b"abc" * 30000


def test_no_filters_is_identity():
    assert decode_stream(ContentStream(b"0 0 m", ())) == b"0 0 m"


def test_dct_is_unsupported():
    with pytest.raises(UnsupportedFilter):
        decode_stream(ContentStream(b"\xff\xd8", ("DCTDecode",)))


# -- tokenize_content ------------------------------------------------------


def test_tokenize_text_block():
    ops = tokenize_content(b"BT /F1 12 Tf 72 700 Td (Heparin:) Tj ET")
    assert ops == [
        Operator("BT"),
        Operator("Tf", (Name("F1"), 12)),
        Operator("Td", (72, 700)),
        Operator("Tj", (b"Heparin:",)),
        Operator("ET"),
    ]
    assert all(op.kind is OpClass.TEXT for op in ops)


def test_tokenize_empty():
    assert tokenize_content(b"") == []


def test_tokenize_rectangle():
    ops = tokenize_content(b"0 0 19.2 19.2 re f")
    assert ops == [Operator("re", (0, 0, 19.2, 19.2)), Operator("f")]
    assert all(op.kind is OpClass.GRAPHICS for op in ops)


def test_tokenize_hex_string_and_array():
    (op,) = tokenize_content(b"[(A) -120 <4243>] TJ")
    assert op.name == "TJ"
    assert op.operands == ([b"A", -120, b"BC"],)


def test_string_escapes():
    (op,) = tokenize_content(rb"(a\(b\)c\\d\101) Tj")
    assert op.operands == (b"a(b)c\\dA",)


@pytest.mark.parametrize("name", sorted(TEXT_OPERATORS))
def test_text_operators_classified(name):
    assert classify(name) is OpClass.TEXT


@pytest.mark.parametrize("name", sorted(GRAPHICS_OPERATORS))
def test_graphics_operators_classified(name):
    assert classify(name) is OpClass.GRAPHICS


@given(st.text(min_size=1, max_size=6))
def test_classification_is_total(name):
    kind = classify(name)
    assert kind in set(OpClass)
    if name not in TEXT_OPERATORS | GRAPHICS_OPERATORS:
        assert kind is OpClass.STATE


@pytest.mark.parametrize("form", ["dcd_flowsheet", "liver_data", "kidney_perfusion_flow_sheet", "flowsheet"])
def test_tokenize_serialize_round_trip(form):
    for page in build_document(form, 5).pages:
        ops = tokenize_content(render_page(page))
        assert tokenize_content(serialize_content(ops)) == ops


# -- robustness ------------------------------------------------------------


def test_fuzz_small(make_pdf):
    data = make_pdf(b"BT /F1 10 Tf 72 700 Td (Heparin:) Tj ET\n0 0 19.2 19.2 re S\n", compress=False)
    graphs, typed, net = fuzz(data, 300, 1)
    assert graphs + typed == 300
    assert net == 0
