"""Exception hierarchy for the PDF reader."""

from __future__ import annotations


class PdfError(Exception):
    """Base class for every typed failure raised while reading a PDF."""


class MalformedHeader(PdfError):
    pass


class BrokenXref(PdfError):
    pass


class EncryptedDocument(PdfError):
    pass


class MalformedDocument(PdfError):
    """Structural damage that is neither a header nor an xref problem."""


class DanglingReference(PdfError):
    def __init__(self, ref):
        super().__init__(f"indirect reference {ref.num} {ref.gen} R does not resolve")
        self.ref = ref


class UnsupportedFilter(PdfError):
    def __init__(self, name: str):
        super().__init__(f"unsupported stream filter: {name}")
        self.filter = name


class CorruptStream(PdfError):
    pass


class LexError(PdfError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class PageSkipped(PdfError):
    """A page that cannot be handled as native text and must take the skip path."""

    reason = "PageSkipped"


class PageIsImageBased(PageSkipped):
    reason = "PageIsImageBased"


class UnsupportedTextTransform(PageSkipped):
    reason = "UnsupportedTextTransform"
