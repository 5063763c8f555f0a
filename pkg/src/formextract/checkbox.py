"""Checkbox detection on binarized graphics: components, reading order, verdicts.

The thresholds are anchored at 300 dpi, where a checkbox is about 80x80
pixels and 2500 foreground pixels separate checked from unchecked boxes.
At other resolutions lengths scale with ``dpi/300`` and pixel counts with
its square.
"""

from __future__ import annotations

import csv
import enum
import statistics
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .raster import BinaryImage

REFERENCE_DPI = 300
NOMINAL_SIDE_PX = 80
CHECKED_PIXELS = 2500
SIDE_RANGE = (0.6, 1.4)
ASPECT_RANGE = (0.75, 1.33)

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


class CheckState(str, enum.Enum):
    CHECKED = "Checked"
    UNCHECKED = "Unchecked"


@dataclass(frozen=True)
class Component:
    label: int
    bbox: tuple[int, int, int, int]  # min_x, min_y, max_x, max_y (inclusive)
    pixel_count: int
    centroid: tuple[float, float]

    @property
    def width(self) -> int:
        return self.bbox[2] - self.bbox[0] + 1

    @property
    def height(self) -> int:
        return self.bbox[3] - self.bbox[1] + 1


@dataclass(frozen=True)
class CheckboxObservation:
    bbox: tuple[int, int, int, int]
    pixel_count: int
    fill_fraction: float
    state: CheckState
    page_point: tuple[float, float]

    @property
    def checked(self) -> bool:
        return self.state is CheckState.CHECKED


def nominal_side(dpi: int) -> float:
    return NOMINAL_SIDE_PX * dpi / REFERENCE_DPI


def checked_threshold(dpi: int) -> float:
    return CHECKED_PIXELS * (dpi / REFERENCE_DPI) ** 2


def connected_components(img: BinaryImage) -> list[Component]:
    """8-connected components, labelled densely from 1 in raster-scan order."""
    fg = np.asarray(img.foreground, dtype=bool)
    if fg.size == 0 or not fg.any():
        return []
    rows = np.flatnonzero(fg.any(axis=1))
    cols = np.flatnonzero(fg.any(axis=0))
    r0, c0 = int(rows[0]), int(cols[0])
    crop = fg[r0 : rows[-1] + 1, c0 : cols[-1] + 1]
    labels, n = ndimage.label(crop, structure=_EIGHT_CONNECTED)
    ys, xs = np.nonzero(labels)
    lab = labels[ys, xs]
    counts = np.bincount(lab, minlength=n + 1)
    sum_x = np.bincount(lab, weights=xs, minlength=n + 1)
    sum_y = np.bincount(lab, weights=ys, minlength=n + 1)
    out = []
    for i, sl in enumerate(ndimage.find_objects(labels), start=1):
        cnt = int(counts[i])
        out.append(
            Component(
                label=i,
                bbox=(sl[1].start + c0, sl[0].start + r0, sl[1].stop - 1 + c0, sl[0].stop - 1 + r0),
                pixel_count=cnt,
                centroid=(sum_x[i] / cnt + c0, sum_y[i] / cnt + r0),
            )
        )
    return out


def order_reading(components: list[Component], row_tolerance: float | None = None) -> list[Component]:
    """Rows top-down, left-to-right within a row.

    Components whose centroid-y lies within ``row_tolerance`` of the first
    member of the current row join that row. The default tolerance is half
    the median bounding-box height.
    """
    if not components:
        return []
    if row_tolerance is None:
        row_tolerance = statistics.median(c.height for c in components) / 2.0
    if row_tolerance < 0:
        raise ValueError("row_tolerance must be non-negative")
    by_y = sorted(components, key=lambda c: (c.centroid[1], c.centroid[0], c.label))
    rows: list[list[Component]] = []
    anchor_y = None
    for comp in by_y:
        if anchor_y is None or comp.centroid[1] - anchor_y > row_tolerance:
            rows.append([comp])
            anchor_y = comp.centroid[1]
        else:
            rows[-1].append(comp)
    ordered = []
    for row in rows:
        ordered.extend(sorted(row, key=lambda c: (c.centroid[0], c.label)))
    return ordered


def classify_checkbox(component: Component, dpi: int, page_height: float = 792.0) -> CheckboxObservation | None:
    """Verdict for one component, or ``None`` when it is not checkbox-shaped."""
    side = nominal_side(dpi)
    lo, hi = SIDE_RANGE[0] * side, SIDE_RANGE[1] * side
    w, h = component.width, component.height
    if not (lo <= w <= hi and lo <= h <= hi):
        return None
    if not ASPECT_RANGE[0] <= w / h <= ASPECT_RANGE[1]:
        return None
    state = CheckState.CHECKED if component.pixel_count >= checked_threshold(dpi) else CheckState.UNCHECKED
    scale = dpi / 72.0
    min_x, min_y, max_x, max_y = component.bbox
    cx = (min_x + max_x + 1) / 2.0 / scale
    cy = page_height - (min_y + max_y + 1) / 2.0 / scale
    return CheckboxObservation(
        bbox=component.bbox,
        pixel_count=component.pixel_count,
        fill_fraction=component.pixel_count / (w * h),
        state=state,
        page_point=(cx, cy),
    )


def detect_checkboxes(
    img: BinaryImage, dpi: int, page_height: float = 792.0, components: list[Component] | None = None
) -> list[CheckboxObservation]:
    """Checkbox observations of a page in reading order."""
    if components is None:
        components = connected_components(img)
    observations = []
    for comp in order_reading(components):
        obs = classify_checkbox(comp, dpi, page_height)
        if obs is not None:
            observations.append(obs)
    return observations


def write_components_csv(components: list[Component], dpi: int, path, page_height: float = 792.0) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label", "min_x", "min_y", "max_x", "max_y", "pixel_count", "verdict"])
        for comp in components:
            obs = classify_checkbox(comp, dpi, page_height)
            verdict = obs.state.value if obs is not None else "NotACheckbox"
            writer.writerow([comp.label, *comp.bbox, comp.pixel_count, verdict])
