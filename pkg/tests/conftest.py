from __future__ import annotations

import pytest

from formextract.synth import CorpusSpec, generate
from formextract.synth.pdfwriter import PdfWriter


def one_page_pdf(content: bytes, compress: bool = True, **kw) -> bytes:
    writer = PdfWriter(compress=compress)
    writer.add_page(content, **kw)
    return writer.to_bytes()


@pytest.fixture
def make_pdf():
    return one_page_pdf


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    manifest = generate(CorpusSpec(seed=3, count=20), out)
    return out, manifest
