"""Text-line extraction and connected-component geometry.

Lines come from the horizontal projection profile; components are
8-connected ink regions, assigned to the line band containing the center of
their bounding box.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from datefield import _kernels
from datefield.raster import BinaryImage, ValidationError


@dataclass(frozen=True, order=True)
class BBox:
    """Inclusive pixel rectangle."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValidationError(f"degenerate box {self}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min + 1

    @property
    def height(self) -> int:
        return self.y_max - self.y_min + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    def union(self, other: BBox) -> BBox:
        return BBox(
            min(self.x_min, other.x_min),
            min(self.y_min, other.y_min),
            max(self.x_max, other.x_max),
            max(self.y_max, other.y_max),
        )

    def intersection_area(self, other: BBox) -> int:
        w = min(self.x_max, other.x_max) - max(self.x_min, other.x_min) + 1
        h = min(self.y_max, other.y_max) - max(self.y_min, other.y_min) + 1
        return max(w, 0) * max(h, 0)

    def iou(self, other: BBox) -> float:
        inter = self.intersection_area(other)
        if inter == 0:
            return 0.0
        return inter / (self.area + other.area - inter)

    def shifted(self, dx: int = 0, dy: int = 0) -> BBox:
        return BBox(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "y_min": self.y_min, "x_max": self.x_max, "y_max": self.y_max}

    @classmethod
    def from_dict(cls, d) -> BBox:
        if isinstance(d, (list, tuple)):
            return cls(*(int(v) for v in d))
        return cls(int(d["x_min"]), int(d["y_min"]), int(d["x_max"]), int(d["y_max"]))


def union_all(boxes: Sequence[BBox]) -> BBox:
    if not boxes:
        raise ValidationError("union of no boxes")
    return BBox(
        min(b.x_min for b in boxes),
        min(b.y_min for b in boxes),
        max(b.x_max for b in boxes),
        max(b.y_max for b in boxes),
    )


@dataclass(frozen=True)
class ConnComp:
    id: int
    bbox: BBox
    pixel_count: int

    def __post_init__(self):
        if self.pixel_count < 1 or self.pixel_count > self.bbox.area:
            raise ValidationError(f"pixel_count {self.pixel_count} inconsistent with {self.bbox}")

    @property
    def width(self) -> int:
        return self.bbox.width

    @property
    def height(self) -> int:
        return self.bbox.height

    @property
    def centroid_y(self) -> float:
        # center of the bounding box, not of the ink mass
        return (self.bbox.y_min + self.bbox.y_max) / 2

    def shifted(self, dx: int = 0, dy: int = 0) -> ConnComp:
        return ConnComp(self.id, self.bbox.shifted(dx, dy), self.pixel_count)


@dataclass(frozen=True)
class TextLine:
    y_top: int
    y_bottom: int
    components: tuple[ConnComp, ...] = ()


@dataclass(frozen=True)
class LayoutParams:
    min_gap: int = 3
    min_ink: int = 1
    noise_min_pixels: int = 4

    def __post_init__(self):
        if self.min_gap < 1 or self.min_ink < 1 or self.noise_min_pixels < 1:
            raise ValidationError(f"layout parameters must be >= 1: {self}")

    def to_dict(self) -> dict:
        return {"min_gap": self.min_gap, "min_ink": self.min_ink, "noise_min_pixels": self.noise_min_pixels}

    @classmethod
    def from_dict(cls, d: dict) -> LayoutParams:
        known = {k: int(d[k]) for k in ("min_gap", "min_ink", "noise_min_pixels") if k in d}
        return cls(**known)


def project_rows(img: BinaryImage) -> np.ndarray:
    """Ink count per row."""
    return img.bits.sum(axis=1, dtype=np.int64)


def segment_lines(img: BinaryImage, min_gap: int = 3, min_ink: int = 1) -> list[tuple[int, int]]:
    """Row bands of text.

    A band is a maximal run of rows holding at least ``min_ink`` ink
    pixels; bands separated by fewer than ``min_gap`` rows are merged.
    """
    if min_gap < 1 or min_ink < 1:
        raise ValidationError("min_gap and min_ink must be >= 1")
    profile = project_rows(img)
    active = np.concatenate(([False], profile >= min_ink, [False]))
    edges = np.flatnonzero(np.diff(active.astype(np.int8)))
    starts, stops = edges[0::2], edges[1::2] - 1

    bands: list[tuple[int, int]] = []
    for top, bottom in zip(starts.tolist(), stops.tolist()):
        if bands and top - bands[-1][1] - 1 < min_gap:
            bands[-1] = (bands[-1][0], bottom)
        else:
            bands.append((top, bottom))
    return bands


def label_image(img: BinaryImage):
    """Raw labeling: (label array, list of ConnComp). Label k+1 is component id k."""
    labels, x0, y0, x1, y1, count = _kernels.label_components_raw(img.bits)
    comps = [
        ConnComp(i, BBox(int(a), int(b), int(c), int(d)), int(n))
        for i, (a, b, c, d, n) in enumerate(zip(x0, y0, x1, y1, count))
    ]
    return labels, comps


def label_components(img: BinaryImage) -> list[ConnComp]:
    """8-connected components with dense ids from 0, in raster order of first pixel."""
    return label_image(img)[1]


def _sort_key(c: ConnComp):
    return (c.bbox.x_min, c.bbox.y_min, c.id)


def assign_to_lines(
    comps: Sequence[ConnComp],
    lines: Sequence[tuple[int, int]],
    noise_min_pixels: int = 4,
) -> list[TextLine]:
    """Group components into line bands.

    Components lighter than ``noise_min_pixels`` are dropped. Each remaining
    component goes to the band containing its ``centroid_y``, or to the
    nearest band (earlier band on ties) when none contains it.
    """
    buckets: list[list[ConnComp]] = [[] for _ in lines]
    if lines:
        tops = np.array([t for t, _ in lines], dtype=np.float64)
        bottoms = np.array([b for _, b in lines], dtype=np.float64)
        for c in comps:
            if c.pixel_count < noise_min_pixels:
                continue
            y = c.centroid_y
            dist = np.maximum(tops - y, 0.0) + np.maximum(y - bottoms, 0.0)
            buckets[int(np.argmin(dist))].append(c)
    return [
        TextLine(top, bottom, tuple(sorted(bucket, key=_sort_key)))
        for (top, bottom), bucket in zip(lines, buckets)
    ]


def extract_lines(img: BinaryImage, params: LayoutParams = LayoutParams()) -> list[TextLine]:
    """Segment, label and group; returns only lines that kept at least one component."""
    bands = segment_lines(img, params.min_gap, params.min_ink)
    lines = assign_to_lines(label_components(img), bands, params.noise_min_pixels)
    return [ln for ln in lines if ln.components]
