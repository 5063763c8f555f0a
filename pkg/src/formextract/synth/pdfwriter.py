"""A tiny deterministic PDF 1.4 writer (classic xref, optional FlateDecode)."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

from ..pdf.content import serialize_value
from ..pdf.lexer import Name, Ref

FONT_RESOURCE = "F1"


@dataclass
class ImageXObject:
    width: int
    height: int
    data: bytes
    filter: str | None = "DCTDecode"


@dataclass
class _Page:
    content: bytes
    width: float
    height: float
    images: dict = field(default_factory=dict)


class PdfWriter:
    """Accumulate pages, then emit a complete file with :meth:`to_bytes`.

    Pages share one Courier font resource named ``/F1``. The output depends
    only on the inputs, so identical calls give byte-identical files.
    """

    def __init__(self, compress: bool = True, version: str = "1.4", info: dict | None = None):
        self.compress = compress
        self.version = version
        self.info = dict(info or {})
        self.pages: list[_Page] = []

    def add_page(self, content: bytes, width: float = 612, height: float = 792, images=None) -> None:
        self.pages.append(_Page(content, width, height, dict(images or {})))

    def to_bytes(self) -> bytes:
        objects: list[bytes] = []

        def reserve() -> int:
            objects.append(b"")
            return len(objects)

        catalog = reserve()
        pages_obj = reserve()
        font = reserve()
        objects[font - 1] = _dict_bytes(
            {
                Name("Type"): Name("Font"),
                Name("Subtype"): Name("Type1"),
                Name("BaseFont"): Name("Courier"),
                Name("Encoding"): Name("WinAnsiEncoding"),
            }
        )
        kids = []
        for page in self.pages:
            page_num = reserve()
            content_num = reserve()
            xobjects = {}
            for name, image in page.images.items():
                img_num = reserve()
                info = {
                    Name("Type"): Name("XObject"),
                    Name("Subtype"): Name("Image"),
                    Name("Width"): image.width,
                    Name("Height"): image.height,
                    Name("ColorSpace"): Name("DeviceGray"),
                    Name("BitsPerComponent"): 8,
                }
                if image.filter:
                    info[Name("Filter")] = Name(image.filter)
                objects[img_num - 1] = _stream_bytes(info, image.data)
                xobjects[Name(name)] = Ref(img_num)
            resources = {Name("Font"): {Name(FONT_RESOURCE): Ref(font)}}
            if xobjects:
                resources[Name("XObject")] = xobjects
            objects[page_num - 1] = _dict_bytes(
                {
                    Name("Type"): Name("Page"),
                    Name("Parent"): Ref(pages_obj),
                    Name("MediaBox"): [0, 0, page.width, page.height],
                    Name("Resources"): resources,
                    Name("Contents"): Ref(content_num),
                }
            )
            if self.compress:
                body = zlib.compress(page.content, 9)
                info = {Name("Filter"): Name("FlateDecode")}
            else:
                body = page.content
                info = {}
            objects[content_num - 1] = _stream_bytes(info, body)
            kids.append(Ref(page_num))
        objects[pages_obj - 1] = _dict_bytes(
            {Name("Type"): Name("Pages"), Name("Kids"): kids, Name("Count"): len(kids)}
        )
        objects[catalog - 1] = _dict_bytes({Name("Type"): Name("Catalog"), Name("Pages"): Ref(pages_obj)})
        info_num = None
        if self.info:
            info_num = reserve()
            objects[info_num - 1] = _dict_bytes({Name(k): v.encode("latin-1") for k, v in self.info.items()})

        out = bytearray(f"%PDF-{self.version}\n%\xe2\xe3\xcf\xd3\n".encode("latin-1"))
        offsets = []
        for num, body in enumerate(objects, start=1):
            offsets.append(len(out))
            out += f"{num} 0 obj\n".encode("ascii") + body + b"\nendobj\n"
        xref_at = len(out)
        out += f"xref\n0 {len(objects) + 1}\n".encode("ascii")
        out += b"0000000000 65535 f \n"
        for off in offsets:
            out += f"{off:010d} 00000 n \n".encode("ascii")
        trailer = {Name("Size"): len(objects) + 1, Name("Root"): Ref(catalog)}
        if info_num is not None:
            trailer[Name("Info")] = Ref(info_num)
        trailer = _dict_bytes(trailer)
        out += b"trailer\n" + trailer + f"\nstartxref\n{xref_at}\n%%EOF\n".encode("ascii")
        return bytes(out)


def _value_bytes(value) -> bytes:
    if isinstance(value, Ref):
        return f"{value.num} {value.gen} R".encode("ascii")
    if isinstance(value, dict):
        return _dict_bytes(value)
    if isinstance(value, list):
        return b"[" + b" ".join(_value_bytes(v) for v in value) + b"]"
    return serialize_value(value).encode("latin-1")


def _dict_bytes(d: dict) -> bytes:
    parts = [serialize_value(k).encode("latin-1") + b" " + _value_bytes(v) for k, v in d.items()]
    return b"<< " + b" ".join(parts) + b" >>"


def _stream_bytes(info: dict, body: bytes) -> bytes:
    info = dict(info)
    info[Name("Length")] = len(body)
    return _dict_bytes(info) + b"\nstream\n" + body + b"\nendstream"
