"""Loading a PDF file into an immutable object graph."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

from .content import ContentStream, decode_stream
from .errors import (
    BrokenXref,
    DanglingReference,
    EncryptedDocument,
    LexError,
    MalformedDocument,
    MalformedHeader,
    PdfError,
)
from .lexer import Keyword, Lexer, Name, Ref, Stream

logger = logging.getLogger(__name__)

DEFAULT_MEDIA_BOX = (0.0, 0.0, 612.0, 792.0)
INHERITABLE = ("Resources", "MediaBox", "CropBox", "Rotate")
_OBJ_HEADER = re.compile(rb"(?<![0-9])(\d{1,10})[\x00\t\n\x0c\r ]+(\d{1,5})[\x00\t\n\x0c\r ]+obj\b")
_MAX_PAGE_DEPTH = 32


@dataclass(frozen=True)
class PageRef:
    """One leaf of the page tree with inherited attributes already applied."""

    index: int
    ref: Ref | None
    attrs: Mapping
    media_box: tuple[float, float, float, float]
    resources: Mapping
    contents: tuple[ContentStream, ...]

    @property
    def width(self) -> float:
        return self.media_box[2] - self.media_box[0]

    @property
    def height(self) -> float:
        return self.media_box[3] - self.media_box[1]

    def content_bytes(self) -> bytes:
        return b"\n".join(decode_stream(s) for s in self.contents)


@dataclass(frozen=True)
class DocumentGraph:
    version: str
    objects: Mapping
    trailer: Mapping
    pages: tuple[PageRef, ...]
    diagnostics: tuple[str, ...] = ()
    xref_reconstructed: bool = False

    def resolve(self, value):
        """Follow indirect references until a direct value is reached."""
        seen = set()
        while isinstance(value, Ref):
            if value in seen:
                raise MalformedDocument(f"reference cycle at {value.num} {value.gen} R")
            seen.add(value)
            try:
                value = self.objects[(value.num, value.gen)]
            except KeyError:
                raise DanglingReference(value) from None
        return value

    def xobjects(self, page: PageRef) -> dict:
        """Resolved XObject resources of ``page`` (name -> Stream)."""
        res = page.resources.get(Name("XObject"))
        try:
            res = self.resolve(res)
        except PdfError:
            return {}
        if not isinstance(res, dict):
            return {}
        out = {}
        for key, value in res.items():
            try:
                value = self.resolve(value)
            except PdfError:
                continue
            if isinstance(value, Stream):
                out[key] = value
        return out


# -- xref ----------------------------------------------------------------


def _find_startxref(data: bytes) -> int | None:
    idx = data.rfind(b"startxref")
    if idx < 0:
        return None
    lex = Lexer(data, idx + len(b"startxref"))
    try:
        token = lex.next_token()
    except LexError:
        return None
    return token if type(token) is int else None


def _read_xref_table(data: bytes, offset: int) -> tuple[dict, dict]:
    """Parse one classic ``xref`` section and its trailer, following /Prev."""
    offsets: dict = {}
    trailer: dict = {}
    visited = set()
    while offset is not None:
        if offset in visited or not (0 <= offset < len(data)):
            raise BrokenXref(f"xref offset {offset} out of range")
        visited.add(offset)
        lex = Lexer(data, offset)
        if lex.next_token() != "xref":
            raise BrokenXref(f"no xref keyword at offset {offset}")
        section: dict = {}
        while True:
            token = lex.next_token()
            if token == "trailer" and isinstance(token, Keyword):
                break
            count = lex.next_token()
            if type(token) is not int or type(count) is not int or count < 0 or token < 0:
                raise BrokenXref("malformed xref subsection header")
            for num in range(token, token + count):
                pos, gen, kind = lex.next_token(), lex.next_token(), lex.next_token()
                if type(pos) is not int or type(gen) is not int or kind not in ("n", "f"):
                    raise BrokenXref(f"malformed xref entry for object {num}")
                if kind == "n" and num > 0:
                    section[(num, gen)] = pos
        part = lex.read_value()
        if not isinstance(part, dict):
            raise BrokenXref("trailer is not a dictionary")
        for key, value in section.items():
            offsets.setdefault(key, value)
        for key, value in part.items():
            trailer.setdefault(key, value)
        prev = part.get(Name("Prev"))
        offset = prev if type(prev) is int else None
    return offsets, trailer


def _scan_objects(data: bytes) -> dict:
    offsets = {}
    for m in _OBJ_HEADER.finditer(data):
        offsets[(int(m.group(1)), int(m.group(2)))] = m.start()
    return offsets


def _scan_trailer(data: bytes) -> dict:
    idx = data.rfind(b"trailer")
    while idx >= 0:
        lex = Lexer(data, idx + len(b"trailer"))
        try:
            value = lex.read_value()
        except LexError:
            value = None
        if isinstance(value, dict):
            return value
        idx = data.rfind(b"trailer", 0, idx)
    return {}


# -- objects -------------------------------------------------------------


class _ObjectReader:
    def __init__(self, data: bytes, offsets: dict):
        self.data = data
        self.offsets = offsets
        self.objects: dict = {}
        self.diagnostics: list[str] = []

    def read_all(self, strict: bool) -> None:
        for key in sorted(self.offsets):
            if key in self.objects:
                continue
            try:
                self.objects[key] = self._read(key)
            except (LexError, MalformedDocument) as exc:
                if strict:
                    raise
                self.diagnostics.append(f"object {key[0]} {key[1]}: {exc}")

    def _read(self, key, for_length: bool = False):
        offset = self.offsets[key]
        if not (0 <= offset < len(self.data)):
            raise MalformedDocument(f"object {key[0]} offset {offset} out of range")
        lex = Lexer(self.data, offset)
        num, gen, kw = lex.next_token(), lex.next_token(), lex.next_token()
        if (num, gen) != key or kw != "obj":
            raise MalformedDocument(f"object {key[0]} {key[1]} not found at offset {offset}")
        value = lex.read_value()
        after = lex.pos
        token = lex.next_token()
        if isinstance(value, dict) and token == "stream" and isinstance(token, Keyword):
            if for_length:
                raise MalformedDocument("stream used as /Length")
            return self._read_stream(value, lex.pos, after)
        return value

    def _stream_length(self, info: dict):
        length = info.get(Name("Length"))
        if isinstance(length, Ref):
            key = (length.num, length.gen)
            if key in self.objects:
                length = self.objects[key]
            elif key in self.offsets:
                try:
                    length = self._read(key, for_length=True)
                except (LexError, MalformedDocument):
                    length = None
                self.objects.setdefault(key, length)
            else:
                length = None
        return length if type(length) is int and length >= 0 else None

    def _read_stream(self, info: dict, pos: int, _after: int) -> Stream:
        data = self.data
        if data[pos : pos + 2] == b"\r\n":
            pos += 2
        elif data[pos : pos + 1] in (b"\n", b"\r"):
            pos += 1
        length = self._stream_length(info)
        if length is not None and pos + length <= len(data):
            tail = Lexer(data, pos + length)
            try:
                ok = tail.next_token() == "endstream"
            except LexError:
                ok = False
            if ok:
                return Stream(info, data[pos : pos + length])
        end = data.find(b"endstream", pos)
        if end < 0:
            raise MalformedDocument("stream without endstream")
        raw = data[pos:end]
        if raw.endswith(b"\r\n"):
            raw = raw[:-2]
        elif raw.endswith((b"\n", b"\r")):
            raw = raw[:-1]
        self.diagnostics.append("stream /Length repaired by endstream scan")
        return Stream(info, raw)


# -- page tree -----------------------------------------------------------


def _number_box(value) -> tuple[float, float, float, float] | None:
    if not isinstance(value, list) or len(value) != 4:
        return None
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return None
    x0, y0, x1, y1 = (float(v) for v in value)
    return (min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1))


def _filters(graph_resolve, info: dict) -> tuple[tuple[str, ...], tuple]:
    filt = graph_resolve(info.get(Name("Filter")))
    parms = graph_resolve(info.get(Name("DecodeParms")))
    if filt is None:
        names: list = []
    elif isinstance(filt, list):
        names = [graph_resolve(f) for f in filt]
    else:
        names = [filt]
    if not all(isinstance(n, Name) for n in names):
        raise MalformedDocument("stream /Filter is not a name")
    if parms is None:
        parm_list: list = []
    elif isinstance(parms, list):
        parm_list = [graph_resolve(p) for p in parms]
    else:
        parm_list = [parms]
    return tuple(str(n) for n in names), tuple(parm_list)


def _collect_pages(graph: DocumentGraph, diagnostics: list) -> list[PageRef]:
    root = graph.resolve(graph.trailer.get(Name("Root")))
    if not isinstance(root, dict):
        raise MalformedDocument("trailer /Root is not a dictionary")
    pages: list[PageRef] = []
    visited: set = set()

    def walk(node_ref, inherited: dict, depth: int) -> None:
        if depth > _MAX_PAGE_DEPTH:
            raise MalformedDocument("page tree too deep")
        if isinstance(node_ref, Ref):
            if node_ref in visited:
                raise MalformedDocument("page tree contains a cycle")
            visited.add(node_ref)
        node = graph.resolve(node_ref)
        if not isinstance(node, dict):
            diagnostics.append("page tree node is not a dictionary")
            return
        attrs = dict(inherited)
        for key in INHERITABLE:
            if Name(key) in node:
                attrs[key] = node[Name(key)]
        kids = graph.resolve(node.get(Name("Kids")))
        node_type = node.get(Name("Type"))
        if isinstance(kids, list) and node_type != "Page":
            for kid in kids:
                walk(kid, attrs, depth + 1)
            return
        if node_type != "Page":
            diagnostics.append(f"page tree leaf has /Type {node_type!r}, skipped")
            return
        pages.append(_make_page(graph, len(pages), node_ref, node, attrs))

    walk(root.get(Name("Pages")), {}, 0)
    return pages


def _make_page(graph: DocumentGraph, index: int, ref, node: dict, attrs: dict) -> PageRef:
    box = _number_box(graph.resolve(attrs.get("MediaBox")))
    if box is None:
        box = DEFAULT_MEDIA_BOX
    resources = graph.resolve(attrs.get("Resources"))
    if not isinstance(resources, dict):
        resources = {}
    contents = graph.resolve(node.get(Name("Contents")))
    if contents is None:
        items = []
    elif isinstance(contents, list):
        items = [graph.resolve(c) for c in contents]
    else:
        items = [contents]
    streams = []
    for item in items:
        if not isinstance(item, Stream):
            raise MalformedDocument(f"page {index + 1} /Contents is not a stream")
        filters, parms = _filters(graph.resolve, item.dict)
        streams.append(ContentStream(raw=item.raw, filters=filters, decode_parms=parms))
    return PageRef(
        index=index,
        ref=ref if isinstance(ref, Ref) else None,
        attrs=MappingProxyType(dict(node)),
        media_box=box,
        resources=MappingProxyType(dict(resources)),
        contents=tuple(streams),
    )


def _dangling(graph: DocumentGraph) -> list[str]:
    out = []
    seen: set = set()
    stack = [graph.trailer]
    while stack:
        value = stack.pop()
        if isinstance(value, Ref):
            if value in seen:
                continue
            seen.add(value)
            key = (value.num, value.gen)
            if key not in graph.objects:
                out.append(f"DanglingReference: {value.num} {value.gen} R")
                continue
            stack.append(graph.objects[key])
        elif isinstance(value, Stream):
            stack.append(value.dict)
        elif isinstance(value, dict):
            stack.extend(value.values())
        elif isinstance(value, list):
            stack.extend(value)
    return sorted(out)


# -- entry point ---------------------------------------------------------


def load_document(data: bytes) -> DocumentGraph:
    """Parse ``data`` into a :class:`DocumentGraph`.

    Classic xref tables are used when intact; otherwise the object table is
    rebuilt once by scanning for ``N G obj`` headers. Every failure surfaces
    as a :class:`PdfError` subclass.
    """
    try:
        return _load(bytes(data))
    except PdfError:
        raise
    except RecursionError:
        raise MalformedDocument("structure nested too deeply") from None
    except Exception as exc:  # never let arbitrary bytes escape as an untyped crash
        raise MalformedDocument(f"unreadable document: {type(exc).__name__}: {exc}") from None


def _load(data: bytes) -> DocumentGraph:
    if not data:
        raise MalformedHeader("empty input")
    head = data.find(b"%PDF-", 0, 1024)
    if head < 0:
        raise MalformedHeader("missing %PDF- header")
    m = re.match(rb"%PDF-(\d+\.\d+)", data[head:])
    version = m.group(1).decode("ascii") if m else ""
    if head:
        data = data[head:]

    diagnostics: list[str] = []
    reconstructed = False
    offsets: dict = {}
    trailer: dict = {}
    startxref = _find_startxref(data)
    try:
        if startxref is None:
            raise BrokenXref("no startxref")
        offsets, trailer = _read_xref_table(data, startxref)
        reader = _ObjectReader(data, offsets)
        reader.read_all(strict=True)
    except (BrokenXref, LexError, MalformedDocument) as exc:
        logger.debug("xref unusable (%s); rebuilding by object scan", exc)
        reconstructed = True
        diagnostics.append(f"xref reconstructed: {exc}")
        offsets = _scan_objects(data)
        if not offsets:
            raise BrokenXref(f"xref unusable and no objects recoverable: {exc}") from None
        scanned_trailer = _scan_trailer(data)
        trailer = {**scanned_trailer, **trailer} if trailer else scanned_trailer
        reader = _ObjectReader(data, offsets)
        reader.read_all(strict=False)
        if Name("Root") not in trailer or not isinstance(trailer.get(Name("Root")), Ref):
            for key in sorted(reader.objects):
                obj = reader.objects[key]
                if isinstance(obj, dict) and obj.get(Name("Type")) == "Catalog":
                    trailer[Name("Root")] = Ref(*key)
                    break
    diagnostics.extend(reader.diagnostics)

    if Name("Encrypt") in trailer:
        raise EncryptedDocument("encrypted documents are not supported")
    if Name("Root") not in trailer:
        raise BrokenXref("no document catalog found")

    graph = DocumentGraph(
        version=version,
        objects=MappingProxyType(reader.objects),
        trailer=MappingProxyType(trailer),
        pages=(),
    )
    diagnostics.extend(_dangling(graph))
    pages = _collect_pages(graph, diagnostics)
    if not pages:
        raise MalformedDocument("document has no pages")
    return DocumentGraph(
        version=version,
        objects=graph.objects,
        trailer=graph.trailer,
        pages=tuple(pages),
        diagnostics=tuple(diagnostics),
        xref_reconstructed=reconstructed,
    )
