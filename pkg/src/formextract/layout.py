"""Layout-preserving text: positioned text runs placed on a fixed-pitch character grid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .pdf import (
    DocumentGraph,
    Operator,
    PageIsImageBased,
    PageRef,
    UnsupportedFilter,
    UnsupportedTextTransform,
    tokenize_content,
)

DEFAULT_COL_PITCH = 6.0
DEFAULT_ROW_PITCH = 12.0
# Glyph advance in thousandths of an em; forms are set in a fixed-pitch face.
GLYPH_WIDTH = 600.0
_EPS = 1e-6

IDENTITY = (1.0, 0.0, 0.0, 1.0, 0.0, 0.0)


@dataclass(frozen=True)
class TextRun:
    text: str
    x: float
    y: float
    font_size: float


@dataclass(frozen=True)
class CellCollision:
    row: int
    col: int
    previous: str
    current: str
    previous_run: int
    current_run: int


@dataclass
class LayoutGrid:
    cells: list[list[str]]
    row_pitch: float
    col_pitch: float
    owners: list[list[int]] = field(default_factory=list, repr=False)
    collisions: list[CellCollision] = field(default_factory=list)
    clipped: list[tuple[int, str]] = field(default_factory=list)

    @property
    def rows(self) -> int:
        return len(self.cells)

    @property
    def cols(self) -> int:
        return len(self.cells[0]) if self.cells else 0


def multiply(m1, m2):
    a1, b1, c1, d1, e1, f1 = m1
    a2, b2, c2, d2, e2, f2 = m2
    return (
        a1 * a2 + b1 * c2,
        a1 * b2 + b1 * d2,
        c1 * a2 + d1 * c2,
        c1 * b2 + d1 * d2,
        e1 * a2 + f1 * c2 + e2,
        e1 * b2 + f1 * d2 + f2,
    )


def _num(value, default: float = 0.0) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value):
        return float(value)
    return default


def decode_text(data) -> str:
    if isinstance(data, str):
        text = data
    else:
        try:
            text = bytes(data).decode("cp1252")
        except UnicodeDecodeError:
            text = bytes(data).decode("latin-1")
    return "".join(" " if ord(ch) < 0x20 else ch for ch in text)


class _TextState:
    def __init__(self):
        self.ctm = IDENTITY
        self.stack: list = []
        self.tm = IDENTITY
        self.tlm = IDENTITY
        self.font_size = 0.0
        self.char_spacing = 0.0
        self.word_spacing = 0.0
        self.h_scale = 1.0
        self.leading = 0.0
        self.rise = 0.0

    def save(self):
        self.stack.append(
            (self.ctm, self.font_size, self.char_spacing, self.word_spacing, self.h_scale, self.leading, self.rise)
        )

    def restore(self):
        if self.stack:
            (
                self.ctm,
                self.font_size,
                self.char_spacing,
                self.word_spacing,
                self.h_scale,
                self.leading,
                self.rise,
            ) = self.stack.pop()

    def move(self, tx: float, ty: float):
        self.tlm = multiply((1.0, 0.0, 0.0, 1.0, tx, ty), self.tlm)
        self.tm = self.tlm

    def advance(self, tx: float):
        self.tm = multiply((1.0, 0.0, 0.0, 1.0, tx, 0.0), self.tm)


def text_runs_from_operators(ops: list[Operator], origin=(0.0, 0.0)) -> list[TextRun]:
    """Interpret text operators into runs; positions are relative to ``origin``."""
    st = _TextState()
    runs: list[TextRun] = []
    ox, oy = origin

    def show(pieces):
        fs = st.font_size
        trm = multiply((fs * st.h_scale, 0.0, 0.0, fs, 0.0, st.rise), multiply(st.tm, st.ctm))
        m = multiply(st.tm, st.ctm)
        if abs(m[1]) > _EPS or abs(m[2]) > _EPS or m[0] <= 0 or m[3] <= 0:
            raise UnsupportedTextTransform(f"rotated or mirrored text matrix {m!r}")
        x, y = trm[4] - ox, trm[5] - oy
        size = fs * m[3]
        chars = []
        for piece in pieces:
            if isinstance(piece, (int, float)) and not isinstance(piece, bool):
                st.advance(-piece / 1000.0 * fs * st.h_scale)
                continue
            text = decode_text(piece)
            for ch in text:
                w = GLYPH_WIDTH / 1000.0 * fs + st.char_spacing
                if ch == " ":
                    w += st.word_spacing
                st.advance(w * st.h_scale)
            chars.append(text)
        text = "".join(chars)
        if text:
            runs.append(TextRun(text=text, x=x, y=y, font_size=size))

    for op in ops:
        name, args = op.name, op.operands
        if name == "q":
            st.save()
        elif name == "Q":
            st.restore()
        elif name == "cm" and len(args) == 6:
            st.ctm = multiply(tuple(_num(a) for a in args), st.ctm)
        elif name == "BT":
            st.tm = st.tlm = IDENTITY
        elif name == "Tf" and len(args) == 2:
            st.font_size = _num(args[1])
        elif name == "Tc" and args:
            st.char_spacing = _num(args[0])
        elif name == "Tw" and args:
            st.word_spacing = _num(args[0])
        elif name == "Tz" and args:
            st.h_scale = _num(args[0], 100.0) / 100.0
        elif name == "TL" and args:
            st.leading = _num(args[0])
        elif name == "Ts" and args:
            st.rise = _num(args[0])
        elif name == "Td" and len(args) == 2:
            st.move(_num(args[0]), _num(args[1]))
        elif name == "TD" and len(args) == 2:
            st.leading = -_num(args[1])
            st.move(_num(args[0]), _num(args[1]))
        elif name == "Tm" and len(args) == 6:
            st.tm = st.tlm = tuple(_num(a) for a in args)
        elif name == "T*":
            st.move(0.0, -st.leading)
        elif name == "Tj" and args:
            show([args[0]] if isinstance(args[0], (bytes, str)) else [])
        elif name == "TJ" and args and isinstance(args[0], list):
            show(args[0])
        elif name == "'" and args:
            st.move(0.0, -st.leading)
            show([args[0]] if isinstance(args[0], (bytes, str)) else [])
        elif name == '"' and len(args) == 3:
            st.word_spacing = _num(args[0])
            st.char_spacing = _num(args[1])
            st.move(0.0, -st.leading)
            show([args[2]] if isinstance(args[2], (bytes, str)) else [])
    return runs


def page_operators(page: PageRef) -> list[Operator]:
    """Decode and tokenize a page's content; undecodable content means an image page."""
    try:
        data = page.content_bytes()
    except UnsupportedFilter as exc:
        raise PageIsImageBased(str(exc)) from exc
    return tokenize_content(data)


def extract_text_runs(page: PageRef, graph: DocumentGraph | None = None, ops=None) -> list[TextRun]:
    """Text runs of ``page`` in content-stream order, one per text-showing operator.

    ``graph`` is accepted for API symmetry with other page-level operations;
    pass ``ops`` to reuse an already tokenized content stream.
    """
    if ops is None:
        ops = page_operators(page)
    return text_runs_from_operators(ops, origin=page.media_box[:2])


def round_half_away(value: float) -> int:
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


def compose_layout(
    runs: list[TextRun],
    page_height: float,
    col_pitch: float = DEFAULT_COL_PITCH,
    row_pitch: float = DEFAULT_ROW_PITCH,
) -> LayoutGrid:
    """Place each run on the character grid, top of page first."""
    if col_pitch <= 0 or row_pitch <= 0:
        raise ValueError("pitches must be positive")
    placed = []
    clipped: list[tuple[int, str]] = []
    n_rows = n_cols = 0
    for idx, run in enumerate(runs):
        row = round_half_away((page_height - run.y) / row_pitch)
        col = round_half_away(run.x / col_pitch)
        if row < 0 or col < 0:
            clipped.append((idx, run.text))
            continue
        stripped = run.text.rstrip(" ")
        if not stripped:
            continue
        placed.append((idx, row, col, stripped))
        n_rows = max(n_rows, row + 1)
        n_cols = max(n_cols, col + len(stripped))
    cells = [[" "] * n_cols for _ in range(n_rows)]
    owners = [[-1] * n_cols for _ in range(n_rows)]
    collisions: list[CellCollision] = []
    for idx, row, col, text in placed:
        line, own = cells[row], owners[row]
        for k, ch in enumerate(text):
            if ch == " ":
                continue
            c = col + k
            if own[c] >= 0 and own[c] != idx:
                collisions.append(CellCollision(row, c, line[c], ch, own[c], idx))
            line[c] = ch
            own[c] = idx
    return LayoutGrid(cells, row_pitch, col_pitch, owners, collisions, clipped)


def render_lines(grid: LayoutGrid) -> list[str]:
    return ["".join(row).rstrip() for row in grid.cells]
