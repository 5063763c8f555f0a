"""Tokenizer and object parser shared by the file reader and content streams.

PDF values map onto Python values as follows: ``null`` -> ``None``,
booleans -> ``bool``, integers -> ``int``, reals -> ``float``, strings
(literal or hex) -> ``bytes``, names -> :class:`Name`, arrays -> ``list``,
dictionaries -> ``dict`` keyed by :class:`Name`, indirect references ->
:class:`Ref` and stream objects -> :class:`Stream`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import LexError

WHITESPACE = b"\x00\t\n\x0c\r "
DELIMITERS = b"()<>[]{}/%"
_NUMBER = re.compile(rb"[+-]?(?:\d+\.?\d*|\.\d+)\Z")
_HEXDIGITS = frozenset(b"0123456789abcdefABCDEF")
_ESCAPES = {
    ord("n"): b"\n",
    ord("r"): b"\r",
    ord("t"): b"\t",
    ord("b"): b"\b",
    ord("f"): b"\f",
    ord("("): b"(",
    ord(")"): b")",
    ord("\\"): b"\\",
}
MAX_DEPTH = 64


class Name(str):
    """A PDF name object, stored without the leading slash."""

    __slots__ = ()

    def __repr__(self) -> str:
        return f"/{str.__str__(self)}"


class Keyword(str):
    """A bare token: an operator in content streams, or obj/endobj/R/... in files."""

    __slots__ = ()

    def __repr__(self) -> str:
        return f"Keyword({str.__str__(self)})"


@dataclass(frozen=True, slots=True)
class Ref:
    num: int
    gen: int = 0


@dataclass(slots=True)
class Stream:
    dict: dict
    raw: bytes = field(repr=False)


_OPEN_DICT = Keyword("<<")
_CLOSE_DICT = Keyword(">>")
_CONSTANTS = {"true": True, "false": False, "null": None}


class Lexer:
    """Pull tokenizer over a byte buffer.

    ``next_token`` returns ``None`` at end of input. Structural tokens
    (``[``, ``]``, ``<<``, ``>>``, ``{``, ``}``) come back as :class:`Keyword`.
    """

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def skip_whitespace(self) -> None:
        data, n = self.data, len(self.data)
        pos = self.pos
        while pos < n:
            c = data[pos]
            if c in WHITESPACE:
                pos += 1
            elif c == 0x25:  # '%' comment runs to end of line
                while pos < n and data[pos] not in b"\r\n":
                    pos += 1
            else:
                break
        self.pos = pos

    def next_token(self):
        self.skip_whitespace()
        data = self.data
        if self.pos >= len(data):
            return None
        start = self.pos
        c = data[start]
        if c == 0x2F:  # '/'
            return self._read_name()
        if c == 0x28:  # '('
            return self._read_literal_string()
        if c == 0x3C:  # '<'
            if data[start + 1 : start + 2] == b"<":
                self.pos = start + 2
                return _OPEN_DICT
            return self._read_hex_string()
        if c == 0x3E:  # '>'
            if data[start + 1 : start + 2] == b">":
                self.pos = start + 2
                return _CLOSE_DICT
            self.pos = start + 1
            raise LexError("stray '>'", start)
        if c in b"[]{}":
            self.pos = start + 1
            return Keyword(chr(c))
        if c == 0x29:  # ')'
            self.pos = start + 1
            raise LexError("unbalanced ')'", start)
        return self._read_regular()

    def _read_regular(self):
        data, n = self.data, len(self.data)
        start = pos = self.pos
        while pos < n and data[pos] not in WHITESPACE and data[pos] not in DELIMITERS:
            pos += 1
        self.pos = pos
        word = data[start:pos]
        if _NUMBER.match(word):
            if b"." in word or len(word) > 18:
                return float(word)
            return int(word)
        return Keyword(word.decode("latin-1"))

    def _read_name(self) -> Name:
        data, n = self.data, len(self.data)
        pos = self.pos + 1
        out = bytearray()
        while pos < n and data[pos] not in WHITESPACE and data[pos] not in DELIMITERS:
            c = data[pos]
            if c == 0x23 and pos + 2 < n and data[pos + 1] in _HEXDIGITS and data[pos + 2] in _HEXDIGITS:
                out.append(int(data[pos + 1 : pos + 3], 16))
                pos += 3
                continue
            out.append(c)
            pos += 1
        self.pos = pos
        return Name(out.decode("latin-1"))

    def _read_literal_string(self) -> bytes:
        data, n = self.data, len(self.data)
        start = self.pos
        pos = start + 1
        depth = 1
        out = bytearray()
        while pos < n:
            c = data[pos]
            if c == 0x5C:  # backslash
                pos += 1
                if pos >= n:
                    break
                e = data[pos]
                if e in _ESCAPES:
                    out += _ESCAPES[e]
                    pos += 1
                elif 0x30 <= e <= 0x37:
                    j = pos
                    while j < n and j < pos + 3 and 0x30 <= data[j] <= 0x37:
                        j += 1
                    out.append(int(data[pos:j], 8) & 0xFF)
                    pos = j
                elif e == 0x0D:
                    pos += 1
                    if pos < n and data[pos] == 0x0A:
                        pos += 1
                elif e == 0x0A:
                    pos += 1
                else:
                    out.append(e)
                    pos += 1
                continue
            if c == 0x28:
                depth += 1
            elif c == 0x29:
                depth -= 1
                if depth == 0:
                    self.pos = pos + 1
                    return bytes(out)
            out.append(c)
            pos += 1
        self.pos = n
        raise LexError("unterminated string", start)

    def _read_hex_string(self) -> bytes:
        data = self.data
        start = self.pos
        end = data.find(b">", start + 1)
        if end < 0:
            self.pos = len(data)
            raise LexError("unterminated hex string", start)
        digits = bytes(b for b in data[start + 1 : end] if b not in WHITESPACE)
        self.pos = end + 1
        if any(b not in _HEXDIGITS for b in digits):
            raise LexError("invalid hex string", start)
        if len(digits) % 2:
            digits += b"0"
        return bytes.fromhex(digits.decode("ascii"))

    # -- values ---------------------------------------------------------

    def read_value(self, token=..., depth: int = 0, refs: bool = True):
        """Read one complete value; ``token`` may carry an already-consumed token."""
        if depth > MAX_DEPTH:
            raise LexError("nesting too deep", self.pos)
        if token is ...:
            token = self.next_token()
        if token is None:
            raise LexError("unexpected end of data", self.pos)
        if isinstance(token, Keyword):
            if token == "[":
                return self._read_array(depth, refs)
            if token == "<<":
                return self._read_dict(depth, refs)
            if token in _CONSTANTS:
                return _CONSTANTS[token]
            return token
        if refs and type(token) is int and token >= 0:
            saved = self.pos
            try:
                gen = self.next_token()
                if isinstance(gen, int) and gen >= 0:
                    kw = self.next_token()
                    if isinstance(kw, Keyword) and kw == "R":
                        return Ref(token, gen)
            except LexError:
                pass
            self.pos = saved
        return token

    def _read_array(self, depth: int, refs: bool) -> list:
        start = self.pos
        items = []
        while True:
            token = self.next_token()
            if token is None:
                raise LexError("unterminated array", start - 1)
            if isinstance(token, Keyword) and token == "]":
                return items
            items.append(self.read_value(token, depth + 1, refs))

    def _read_dict(self, depth: int, refs: bool) -> dict:
        start = self.pos
        out: dict = {}
        while True:
            token = self.next_token()
            if token is None:
                raise LexError("unterminated dictionary", start - 2)
            if isinstance(token, Keyword) and token == ">>":
                return out
            if not isinstance(token, Name):
                raise LexError("dictionary key is not a name", self.pos)
            value_token = self.next_token()
            if isinstance(value_token, Keyword) and value_token == ">>":
                out[token] = None
                return out
            out[token] = self.read_value(value_token, depth + 1, refs)
