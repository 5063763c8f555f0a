"""Rasterizing the non-text drawing commands of a page.

Text operators are removed, the remaining path operators are interpreted
into a :class:`GraphicsScene`, and the scene is scan-converted into a
grayscale bitmap (no anti-aliasing) which is then thresholded. Table rules
drawn in gray fall above the ink threshold and disappear; black checkbox
strokes survive.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .layout import IDENTITY, multiply, round_half_away
from .pdf import OpClass, Operator, PageRef, PageSkipped

logger = logging.getLogger(__name__)

DEFAULT_DPI = 300
DEFAULT_INK_THRESHOLD = 100
FLATTEN_TOLERANCE_PX = 0.2
MAX_PIXELS = 80_000_000
_EPS = 1e-9


@dataclass
class Subpath:
    start: tuple[float, float]
    segments: list = field(default_factory=list)
    closed: bool = False
    rect: tuple[float, float, float, float] | None = None  # x, y, w, h in page points

    @property
    def current(self) -> tuple[float, float]:
        if not self.segments:
            return self.start
        return self.segments[-1][-1]


@dataclass
class Element:
    subpaths: list[Subpath]
    paint: str  # "fill" or "stroke"
    gray: float
    line_width: float = 1.0
    even_odd: bool = False


@dataclass
class GraphicsScene:
    elements: list[Element]
    page_width: float
    page_height: float
    images: int = 0
    diagnostics: list[str] = field(default_factory=list)


@dataclass
class RasterBitmap:
    width: int
    height: int
    dpi: int
    luminance: np.ndarray = field(repr=False)  # (height, width) uint8, 255 = white

    def tobytes(self) -> bytes:
        return self.luminance.tobytes()


@dataclass
class BinaryImage:
    width: int
    height: int
    foreground: np.ndarray = field(repr=False)  # (height, width) bool, True = ink

    def count(self) -> int:
        return int(self.foreground.sum())


def strip_text_operators(ops: list[Operator]) -> list[Operator]:
    """Drop text operators; graphics and state operators keep their order."""
    return [op for op in ops if op.kind is not OpClass.TEXT]


# -- scene construction --------------------------------------------------


def _nums(args, n: int):
    if len(args) != n:
        return None
    out = []
    for a in args:
        if isinstance(a, bool) or not isinstance(a, (int, float)) or not math.isfinite(a):
            return None
        out.append(float(a))
    return out


def _clamp01(v: float) -> float:
    return min(1.0, max(0.0, v))


def rgb_to_gray(r: float, g: float, b: float) -> float:
    return _clamp01(0.299 * r + 0.587 * g + 0.114 * b)


def cmyk_to_gray(c: float, m: float, y: float, k: float) -> float:
    return rgb_to_gray((1 - c) * (1 - k), (1 - m) * (1 - k), (1 - y) * (1 - k))


def _color(values) -> float | None:
    if len(values) == 1:
        return _clamp01(values[0])
    if len(values) == 3:
        return rgb_to_gray(*values)
    if len(values) == 4:
        return cmyk_to_gray(*values)
    return None


def _color_operands(args) -> float | None:
    # pattern names given to scn/SCN are ignored
    values = [a for a in args if not isinstance(a, str)]
    v = _nums(values, len(values))
    return _color(v) if v else None


class _SceneBuilder:
    def __init__(self, width: float, height: float, origin, xobjects: dict | None):
        self.scene = GraphicsScene([], width, height)
        self.ctm = IDENTITY
        self.fill_gray = 0.0
        self.stroke_gray = 0.0
        self.line_width = 1.0
        self.stack: list = []
        self.path: list[Subpath] = []
        self.origin = origin
        self.xobjects = xobjects or {}

    def pt(self, x: float, y: float) -> tuple[float, float]:
        a, b, c, d, e, f = self.ctm
        return (a * x + c * y + e - self.origin[0], b * x + d * y + f - self.origin[1])

    def current(self):
        return self.path[-1] if self.path else None

    def move_to(self, x, y):
        p = self.pt(x, y)
        sp = self.current()
        if sp is not None and not sp.segments and not sp.closed:
            sp.start = p
            sp.rect = None
        else:
            self.path.append(Subpath(p))

    def _open_subpath(self) -> Subpath | None:
        sp = self.current()
        if sp is None:
            return None
        if sp.closed:
            sp = Subpath(sp.start)
            self.path.append(sp)
        sp.rect = None
        return sp

    def line_to(self, x, y):
        sp = self._open_subpath()
        if sp is None:
            self.scene.diagnostics.append("PathStateError: lineto without current point")
            return
        sp.segments.append(("l", self.pt(x, y)))

    def curve_to(self, p1, p2, p3):
        sp = self._open_subpath()
        if sp is None:
            self.scene.diagnostics.append("PathStateError: curveto without current point")
            return
        sp.segments.append(("c", p1, p2, p3))

    def rect(self, x, y, w, h):
        p0 = self.pt(x, y)
        p1 = self.pt(x + w, y)
        p2 = self.pt(x + w, y + h)
        p3 = self.pt(x, y + h)
        sp = Subpath(p0, [("l", p1), ("l", p2), ("l", p3)], closed=True)
        a, b, c, d, _, _ = self.ctm
        if abs(b) < _EPS and abs(c) < _EPS:
            # size from the operands, not corner differences, so 0.9 stays 0.9
            rw, rh = abs(w * a), abs(h * d)
            sp.rect = (min(p0[0], p2[0]), min(p0[1], p2[1]), rw, rh)
        self.path.append(sp)
        # current point after re is (x, y) on a fresh subpath
        self.path.append(Subpath(p0))

    def close(self):
        sp = self.current()
        if sp is not None:
            sp.closed = True

    def scaled_width(self) -> float:
        a, b, c, d, _, _ = self.ctm
        return self.line_width * math.sqrt(abs(a * d - b * c))

    def paint(self, fill: bool, stroke: bool, even_odd: bool = False, close: bool = False):
        if close:
            self.close()
        subpaths = [sp for sp in self.path if sp.segments]
        self.path = []
        if not subpaths:
            self.scene.diagnostics.append("PathStateError: paint operator without a current path")
            logger.warning("paint operator without a current path ignored")
            return
        if fill:
            self.scene.elements.append(Element(subpaths, "fill", self.fill_gray, even_odd=even_odd))
        if stroke:
            self.scene.elements.append(Element(subpaths, "stroke", self.stroke_gray, self.scaled_width()))

    def apply(self, op: Operator):
        name, args = op.name, op.operands
        if name == "q":
            self.stack.append((self.ctm, self.fill_gray, self.stroke_gray, self.line_width))
        elif name == "Q":
            if self.stack:
                self.ctm, self.fill_gray, self.stroke_gray, self.line_width = self.stack.pop()
        elif name == "cm":
            v = _nums(args, 6)
            if v:
                self.ctm = multiply(tuple(v), self.ctm)
        elif name == "w":
            v = _nums(args, 1)
            if v:
                self.line_width = abs(v[0])
        elif name in ("g", "rg", "k", "sc", "scn"):
            gray = _color_operands(args)
            if gray is not None:
                self.fill_gray = gray
        elif name in ("G", "RG", "K", "SC", "SCN"):
            gray = _color_operands(args)
            if gray is not None:
                self.stroke_gray = gray
        elif name == "cs":
            self.fill_gray = 0.0
        elif name == "CS":
            self.stroke_gray = 0.0
        elif name == "m":
            v = _nums(args, 2)
            if v:
                self.move_to(*v)
        elif name == "l":
            v = _nums(args, 2)
            if v:
                self.line_to(*v)
        elif name == "c":
            v = _nums(args, 6)
            if v:
                self.curve_to(self.pt(v[0], v[1]), self.pt(v[2], v[3]), self.pt(v[4], v[5]))
        elif name == "v":
            v = _nums(args, 4)
            sp = self.current()
            if v and sp is not None:
                self.curve_to(sp.current, self.pt(v[0], v[1]), self.pt(v[2], v[3]))
        elif name == "y":
            v = _nums(args, 4)
            if v:
                end = self.pt(v[2], v[3])
                self.curve_to(self.pt(v[0], v[1]), end, end)
        elif name == "re":
            v = _nums(args, 4)
            if v:
                self.rect(*v)
        elif name == "h":
            self.close()
        elif name == "S":
            self.paint(False, True)
        elif name == "s":
            self.paint(False, True, close=True)
        elif name in ("f", "F"):
            self.paint(True, False)
        elif name == "f*":
            self.paint(True, False, even_odd=True)
        elif name == "B":
            self.paint(True, True)
        elif name == "B*":
            self.paint(True, True, even_odd=True)
        elif name == "b":
            self.paint(True, True, close=True)
        elif name == "b*":
            self.paint(True, True, even_odd=True, close=True)
        elif name == "n":
            self.path = []
        elif name == "BI":
            self.scene.images += 1
        elif name == "Do" and args:
            xobj = self.xobjects.get(args[0])
            subtype = xobj.dict.get("Subtype") if xobj is not None else None
            if subtype == "Image" or xobj is None:
                self.scene.images += 1
            else:
                self.scene.diagnostics.append(f"form XObject {args[0]!r} not rendered")


def build_scene(
    ops: list[Operator],
    page: PageRef | None = None,
    *,
    width: float = 612.0,
    height: float = 792.0,
    xobjects: dict | None = None,
) -> GraphicsScene:
    """Interpret path construction and painting operators into scene elements.

    Coordinates are page points with the origin at the lower-left corner of
    the media box. Painting without a current path is recorded as a
    ``PathStateError`` diagnostic and otherwise ignored.
    """
    origin = (0.0, 0.0)
    if page is not None:
        width, height = page.width, page.height
        origin = page.media_box[:2]
    builder = _SceneBuilder(width, height, origin, xobjects)
    for op in ops:
        if op.kind is OpClass.TEXT:
            continue
        builder.apply(op)
    return builder.scene


# -- rasterization -------------------------------------------------------


def _flatten(subpath: Subpath, scale: float, height: float) -> list[tuple[float, float]]:
    """Polyline in pixel space (y down) approximating ``subpath``."""

    def px(p):
        return (p[0] * scale, (height - p[1]) * scale)

    pts = [px(subpath.start)]
    for seg in subpath.segments:
        if seg[0] == "l":
            pts.append(px(seg[1]))
            continue
        p0 = pts[-1]
        p1, p2, p3 = px(seg[1]), px(seg[2]), px(seg[3])
        dd = max(
            math.hypot(p0[0] - 2 * p1[0] + p2[0], p0[1] - 2 * p1[1] + p2[1]),
            math.hypot(p1[0] - 2 * p2[0] + p3[0], p1[1] - 2 * p2[1] + p3[1]),
        )
        n = max(1, math.ceil(math.sqrt(0.75 * dd / FLATTEN_TOLERANCE_PX)))
        n = min(n, 1000)
        for i in range(1, n + 1):
            t = i / n
            u = 1 - t
            pts.append(
                (
                    u**3 * p0[0] + 3 * u * u * t * p1[0] + 3 * u * t * t * p2[0] + t**3 * p3[0],
                    u**3 * p0[1] + 3 * u * u * t * p1[1] + 3 * u * t * t * p2[1] + t**3 * p3[1],
                )
            )
    if subpath.closed and (pts[0] != pts[-1]):
        pts.append(pts[0])
    return pts


def _polygon_edges(polys) -> np.ndarray:
    edges = []
    for pts in polys:
        if len(pts) < 2:
            continue
        ring = list(pts)
        if ring[0] != ring[-1]:
            ring.append(ring[0])
        for (x0, y0), (x1, y1) in zip(ring, ring[1:]):
            if y0 != y1:
                edges.append((x0, y0, x1, y1))
    return np.asarray(edges, dtype=float).reshape(-1, 4)


def scanline_spans(edges: np.ndarray, height: int, width: int, even_odd: bool = False):
    """Yield ``(row, col_start, col_stop)`` spans whose pixel centres are inside.

    ``edges`` is an (N, 4) array of x0, y0, x1, y1 in pixel coordinates.
    The winding rule is nonzero unless ``even_odd`` is set.
    """
    if len(edges) == 0:
        return
    x0, y0, x1, y1 = edges.T
    down = y1 > y0
    direction = np.where(down, 1, -1)
    ya = np.where(down, y0, y1)
    yb = np.where(down, y1, y0)
    xa = np.where(down, x0, x1)
    xb = np.where(down, x1, x0)
    slope = (xb - xa) / (yb - ya)
    r_first = max(0, math.ceil(float(ya.min()) - 0.5))
    r_last = min(height, math.ceil(float(yb.max()) - 0.5))
    for row in range(r_first, r_last):
        yc = row + 0.5
        active = (ya <= yc) & (yc < yb)
        if not active.any():
            continue
        xs = xa[active] + (yc - ya[active]) * slope[active]
        dirs = direction[active]
        order = np.argsort(xs, kind="stable")
        xs, dirs = xs[order], dirs[order]
        wind = 0
        for i in range(len(xs) - 1):
            wind = wind + 1 if even_odd else wind + int(dirs[i])
            inside = (wind % 2 == 1) if even_odd else (wind != 0)
            if not inside:
                continue
            c0 = max(0, math.ceil(xs[i] - 0.5))
            c1 = min(width, math.ceil(xs[i + 1] - 0.5))
            if c1 > c0:
                yield row, c0, c1


def _paint_rect(lum: np.ndarray, r0: int, r1: int, c0: int, c1: int, value: int) -> None:
    h, w = lum.shape
    r0, r1 = max(0, r0), min(h, r1)
    c0, c1 = max(0, c0), min(w, c1)
    if r1 > r0 and c1 > c0:
        region = lum[r0:r1, c0:c1]
        np.minimum(region, value, out=region)


def _paint_spans(lum: np.ndarray, spans, value: int) -> None:
    for row, c0, c1 in spans:
        seg = lum[row, c0:c1]
        np.minimum(seg, value, out=seg)


def _stroke_segment(lum, a, b, width_px: float, value: int) -> None:
    (xa, ya), (xb, yb) = a, b
    length = math.hypot(xb - xa, yb - ya)
    if length < _EPS:
        return
    half = max(width_px, 1.0) / 2.0
    h, w = lum.shape
    if abs(ya - yb) < 1e-6 or abs(xa - xb) < 1e-6:
        x_lo, x_hi = min(xa, xb) - half, max(xa, xb) + half
        y_lo, y_hi = min(ya, yb) - half, max(ya, yb) + half
        c0 = round_half_away(x_lo)
        r0 = round_half_away(y_lo)
        c1 = c0 + max(1, round_half_away(x_hi - x_lo))
        r1 = r0 + max(1, round_half_away(y_hi - y_lo))
        _paint_rect(lum, r0, r1, c0, c1, value)
        return
    ux, uy = (xb - xa) / length, (yb - ya) / length
    nx, ny = -uy * half, ux * half
    ex, ey = ux * half, uy * half
    quad = [
        (xa - ex + nx, ya - ey + ny),
        (xb + ex + nx, yb + ey + ny),
        (xb + ex - nx, yb + ey - ny),
        (xa - ex - nx, ya - ey - ny),
    ]
    _paint_spans(lum, scanline_spans(_polygon_edges([quad]), h, w), value)


def bitmap_size(page_width: float, page_height: float, dpi: int) -> tuple[int, int]:
    scale = dpi / 72.0
    return math.ceil(page_width * scale - 1e-9), math.ceil(page_height * scale - 1e-9)


def rasterize(scene: GraphicsScene, dpi: int = DEFAULT_DPI) -> RasterBitmap:
    """Scan-convert ``scene`` at ``dpi`` into an 8-bit luminance bitmap.

    Fills use pixel-centre sampling with the element's winding rule; single
    axis-aligned rectangles are snapped so their pixel area is exactly
    ``round(w) * round(h)`` in device pixels. Strokes are drawn as one
    rectangle/quad per flattened segment with projecting ends, never
    thinner than one pixel. Overlapping ink keeps the darker value.
    """
    if not 72 <= dpi <= 600:
        raise ValueError(f"dpi must be within [72, 600], got {dpi}")
    scale = dpi / 72.0
    width, height = bitmap_size(scene.page_width, scene.page_height, dpi)
    if width <= 0 or height <= 0 or width * height > MAX_PIXELS:
        raise PageSkipped(f"page of {scene.page_width}x{scene.page_height} pt cannot be rasterized at {dpi} dpi")
    lum = np.full((height, width), 255, dtype=np.uint8)
    for el in scene.elements:
        value = int(round(255 * _clamp01(el.gray)))
        if el.paint == "fill":
            if len(el.subpaths) == 1 and el.subpaths[0].rect is not None:
                x, y, w, h = el.subpaths[0].rect
                c0 = round_half_away(x * scale)
                r0 = round_half_away((scene.page_height - y - h) * scale)
                _paint_rect(lum, r0, r0 + round_half_away(h * scale), c0, c0 + round_half_away(w * scale), value)
                continue
            polys = [_flatten(sp, scale, scene.page_height) for sp in el.subpaths]
            _paint_spans(lum, scanline_spans(_polygon_edges(polys), height, width, el.even_odd), value)
        else:
            width_px = el.line_width * scale
            for sp in el.subpaths:
                pts = _flatten(sp, scale, scene.page_height)
                for a, b in zip(pts, pts[1:]):
                    _stroke_segment(lum, a, b, width_px, value)
    return RasterBitmap(width, height, dpi, lum)


def binarize(bitmap: RasterBitmap, ink_threshold: int = DEFAULT_INK_THRESHOLD) -> BinaryImage:
    """Foreground where luminance <= ``ink_threshold``."""
    if not 0 <= ink_threshold <= 255:
        raise ValueError("ink_threshold must be within [0, 255]")
    return BinaryImage(bitmap.width, bitmap.height, bitmap.luminance <= ink_threshold)


# -- debug dumps ---------------------------------------------------------


def write_pgm(bitmap: RasterBitmap, path) -> None:
    header = f"P5\n{bitmap.width} {bitmap.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + bitmap.luminance.tobytes())


def write_pbm(image: BinaryImage, path) -> None:
    header = f"P4\n{image.width} {image.height}\n".encode("ascii")
    packed = np.packbits(image.foreground, axis=1)
    Path(path).write_bytes(header + packed.tobytes())
