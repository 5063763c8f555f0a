"""Synthetic form corpora with exact ground truth."""

from .corpus import (
    ALT_LABELS,
    DEFAULT_MIX,
    PERTURBATIONS,
    CorpusIoError,
    CorpusSpec,
    UnknownPerturbation,
    apply_perturbations,
    build_document,
    document_bytes,
    generate,
    load_manifest,
    long_document,
    reference_table_document,
    reference_table_pdf,
    perturb,
    truth_record,
)
from .pdfwriter import ImageXObject, PdfWriter

__all__ = [name for name in dir() if not name.startswith("_")]
