"""Minimal PDF reader: object graph, stream decoding and content tokenizing."""

from .content import (
    ContentStream,
    OpClass,
    Operator,
    classify,
    decode_stream,
    serialize_content,
    tokenize_content,
)
from .document import DocumentGraph, PageRef, load_document
from .errors import (
    BrokenXref,
    CorruptStream,
    DanglingReference,
    EncryptedDocument,
    LexError,
    MalformedDocument,
    MalformedHeader,
    PageIsImageBased,
    PageSkipped,
    PdfError,
    UnsupportedFilter,
    UnsupportedTextTransform,
)
from .lexer import Keyword, Name, Ref, Stream

__all__ = [
    "BrokenXref",
    "ContentStream",
    "CorruptStream",
    "DanglingReference",
    "DocumentGraph",
    "EncryptedDocument",
    "Keyword",
    "LexError",
    "MalformedDocument",
    "MalformedHeader",
    "Name",
    "OpClass",
    "Operator",
    "PageIsImageBased",
    "PageRef",
    "PageSkipped",
    "PdfError",
    "Ref",
    "Stream",
    "UnsupportedFilter",
    "UnsupportedTextTransform",
    "classify",
    "decode_stream",
    "load_document",
    "serialize_content",
    "tokenize_content",
]
