"""Content streams: filter decoding, operator tokenizing and serialization."""

from __future__ import annotations

import enum
import math
import zlib
from dataclasses import dataclass, field

from .errors import CorruptStream, LexError, UnsupportedFilter
from .lexer import Keyword, Lexer, Name

FLATE_NAMES = frozenset({"FlateDecode", "Fl"})

TEXT_OPERATORS = frozenset({"BT", "ET", "Tf", "Td", "TD", "Tm", "T*", "Tj", "TJ", "'", '"'})
GRAPHICS_OPERATORS = frozenset(
    {"m", "l", "c", "v", "y", "re", "h", "S", "s", "f", "F", "f*", "B", "B*", "b", "b*", "n"}
)


class OpClass(str, enum.Enum):
    TEXT = "Text"
    GRAPHICS = "Graphics"
    STATE = "State"


def classify(name: str) -> OpClass:
    if name in TEXT_OPERATORS:
        return OpClass.TEXT
    if name in GRAPHICS_OPERATORS:
        return OpClass.GRAPHICS
    return OpClass.STATE


@dataclass(frozen=True)
class Operator:
    name: str
    operands: tuple = ()

    @property
    def kind(self) -> OpClass:
        return classify(self.name)

    def __repr__(self) -> str:
        if not self.operands:
            return self.name
        return f"{self.name}{self.operands!r}"


@dataclass(frozen=True)
class ContentStream:
    raw: bytes = field(repr=False)
    filters: tuple[str, ...] = ()
    decoded: bytes | None = field(default=None, repr=False)
    decode_parms: tuple = ()


def decode_stream(stream: ContentStream) -> bytes:
    """Return the fully decoded bytes of ``stream``.

    Only FlateDecode is supported; anything else raises UnsupportedFilter, which
    callers read as "this content is an image, not text".
    """
    if stream.decoded is not None:
        return stream.decoded
    data = stream.raw
    for i, name in enumerate(stream.filters):
        if name not in FLATE_NAMES:
            raise UnsupportedFilter(str(name))
        parms = stream.decode_parms[i] if i < len(stream.decode_parms) else None
        if isinstance(parms, dict) and parms.get(Name("Predictor"), 1) not in (1, None):
            raise UnsupportedFilter(f"{name} with Predictor {parms.get(Name('Predictor'))}")
        try:
            data = zlib.decompressobj().decompress(data)
        except zlib.error as exc:
            raise CorruptStream(f"FlateDecode failed: {exc}") from None
    return data


def _read_inline_image(lex: Lexer, start: int) -> Operator:
    params: dict = {}
    while True:
        token = lex.next_token()
        if token is None:
            raise LexError("unterminated inline image", start)
        if isinstance(token, Keyword) and token == "ID":
            break
        value = lex.read_value(refs=False)
        params[token] = value
    data = lex.data
    data_start = pos = lex.pos + 1  # single whitespace byte after ID
    while True:
        end = data.find(b"EI", pos)
        if end < 0:
            raise LexError("unterminated inline image", start)
        before_ok = end > 0 and data[end - 1] in b"\x00\t\n\x0c\r "
        after = data[end + 2 : end + 3]
        if before_ok and (not after or after in b"\x00\t\n\x0c\r "):
            lex.pos = end + 2
            return Operator("BI", (params, data[data_start : end - 1]))
        pos = end + 2


def tokenize_content(decoded: bytes) -> list[Operator]:
    """Split a decoded content stream into operators with their operands."""
    lex = Lexer(decoded)
    ops: list[Operator] = []
    operands: list = []
    while True:
        start = lex.pos
        token = lex.next_token()
        if token is None:
            break
        if isinstance(token, Keyword):
            if token == "]" or token == ">>":
                raise LexError(f"unbalanced {token!s}", lex.pos - len(token))
            if token in ("[", "<<", "true", "false", "null"):
                operands.append(lex.read_value(token, refs=False))
                continue
            if token in ("{", "}"):
                continue
            if token == "BI":
                ops.append(_read_inline_image(lex, start))
                operands = []
                continue
            ops.append(Operator(str(token), tuple(operands)))
            operands = []
            continue
        operands.append(token)
    return ops


# -- serialization -------------------------------------------------------


def format_number(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite number {x!r}")
    text = repr(float(x))
    if "e" in text or "E" in text:
        text = f"{x:.12f}".rstrip("0").rstrip(".")
        if text in ("", "-", "-0"):
            text = "0"
    return text


def _escape_name(name: str) -> str:
    out = []
    for ch in name:
        o = ord(ch)
        if o < 0x21 or o > 0x7E or ch in "()<>[]{}/%#":
            out.append(f"#{o:02X}")
        else:
            out.append(ch)
    return "/" + "".join(out)


def _escape_string(data: bytes) -> str:
    out = ["("]
    for b in data:
        if b in (0x28, 0x29, 0x5C):
            out.append("\\" + chr(b))
        elif b == 0x0A:
            out.append("\\n")
        elif b == 0x0D:
            out.append("\\r")
        elif b < 0x20 or b > 0x7E:
            out.append(f"\\{b:03o}")
        else:
            out.append(chr(b))
    out.append(")")
    return "".join(out)


def serialize_value(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, Name):
        return _escape_name(value)
    if isinstance(value, (bool, int, float)):
        return format_number(value)
    if isinstance(value, (bytes, bytearray)):
        return _escape_string(bytes(value))
    if isinstance(value, (list, tuple)):
        return "[" + " ".join(serialize_value(v) for v in value) + "]"
    if isinstance(value, dict):
        parts = [f"{_escape_name(k)} {serialize_value(v)}" for k, v in value.items()]
        return "<<" + " ".join(parts) + ">>"
    if isinstance(value, Keyword):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__} into a content stream")


def serialize_content(ops) -> bytes:
    """Inverse of :func:`tokenize_content` for operators without inline images."""
    lines = []
    for op in ops:
        if op.name == "BI":
            params, data = op.operands
            head = " ".join(f"{_escape_name(k)} {serialize_value(v)}" for k, v in params.items())
            lines.append(f"BI {head} ID ".encode("latin-1") + bytes(data) + b" EI")
            continue
        parts = [serialize_value(v) for v in op.operands]
        parts.append(op.name)
        lines.append(" ".join(parts).encode("latin-1"))
    return b"\n".join(lines)
