"""Eight-component window detector.

A date written as DD?MM?YY is six digit components and two separators. Every
run of eight consecutive components on a text line is tested in turn:

1. ordering: x_min strictly increases along the run;
2. spacing: no horizontal gap exceeds ``spacing_multiplier * w_max``;
3. numeric fields: height and center-y ratios of the digit pairs at
   positions (1,2), (4,5), (7,8) fall inside configured intervals;
4. separator layout: the components at positions 3 and 6 either enclose
   their neighbouring digits vertically (slash) or sit inside them (dash or
   dot).

The single-window functions below are the readable reference; ``scan_line``
runs the same tests over a whole line through ``_kernels.scan_windows``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from datefield import _kernels
from datefield.layout import BBox, ConnComp, LayoutParams, TextLine, extract_lines, union_all
from datefield.raster import BinaryImage, ValidationError

WINDOW = 8
FEATURE_NAMES = ("f1", "f2", "f3", "f4", "f5", "f6")
# digit pairs (0-based positions) feeding (f1,f2), (f3,f4), (f5,f6)
DIGIT_PAIRS = ((0, 1), (3, 4), (6, 7))


class LayoutClass(str, Enum):
    SLASH = "Slash"
    DASH_OR_DOT = "DashOrDot"
    NON_DATE = "NonDate"


class DateClass(str, Enum):
    SLASH = "Slash"
    DASH = "Dash"
    DOT = "Dot"
    UNREFINED = "Unrefined"


_CODE_TO_LAYOUT = {
    _kernels.SLASH: LayoutClass.SLASH,
    _kernels.DASH_OR_DOT: LayoutClass.DASH_OR_DOT,
    _kernels.NON_DATE: LayoutClass.NON_DATE,
}


@dataclass(frozen=True)
class EcccWindow:
    """Eight consecutive components of one line, left to right."""

    comps: tuple[ConnComp, ...]
    start: int = 0

    def __post_init__(self):
        comps = tuple(self.comps)
        if len(comps) != WINDOW:
            raise ValidationError(f"a window holds exactly {WINDOW} components, got {len(comps)}")
        for a, b in zip(comps, comps[1:]):
            if not b.bbox.x_min > a.bbox.x_min:
                raise ValidationError("window components must have strictly increasing x_min")
        object.__setattr__(self, "comps", comps)

    @property
    def w_max(self) -> int:
        return max(c.width for c in self.comps)

    @property
    def gaps(self) -> tuple[int, ...]:
        return tuple(
            max(0, b.bbox.x_min - a.bbox.x_max - 1) for a, b in zip(self.comps, self.comps[1:])
        )

    @property
    def boxes(self) -> tuple[BBox, ...]:
        return tuple(c.bbox for c in self.comps)


@dataclass(frozen=True)
class NumericFeatures:
    f1: float
    f2: float
    f3: float
    f4: float
    f5: float
    f6: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.f1, self.f2, self.f3, self.f4, self.f5, self.f6)

    def to_dict(self) -> dict:
        return {k: (None if math.isnan(v) else v) for k, v in zip(FEATURE_NAMES, self.as_tuple())}


DEFAULT_HEIGHT_RANGE = (0.5, 2.0)
DEFAULT_CENTER_RANGE = (0.9, 1.1)


@dataclass(frozen=True)
class NumericRangeConfig:
    """Closed interval per numeric feature f1..f6."""

    intervals: tuple[tuple[float, float], ...] = (
        DEFAULT_HEIGHT_RANGE,
        DEFAULT_CENTER_RANGE,
        DEFAULT_HEIGHT_RANGE,
        DEFAULT_CENTER_RANGE,
        DEFAULT_HEIGHT_RANGE,
        DEFAULT_CENTER_RANGE,
    )

    def __post_init__(self):
        iv = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        if len(iv) != 6:
            raise ValidationError("six feature intervals are required")
        for k, (lo, hi) in enumerate(iv, 1):
            if not (0 < lo <= hi) or not math.isfinite(hi):
                raise ValidationError(f"f{k}: invalid interval [{lo}, {hi}]")
        object.__setattr__(self, "intervals", iv)

    @property
    def lo(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.intervals])

    @property
    def hi(self) -> np.ndarray:
        return np.array([hi for _, hi in self.intervals])

    def contains(self, feats: NumericFeatures) -> bool:
        return all(lo <= f <= hi for f, (lo, hi) in zip(feats.as_tuple(), self.intervals))

    def to_dict(self) -> dict:
        return {name: [lo, hi] for name, (lo, hi) in zip(FEATURE_NAMES, self.intervals)}

    @classmethod
    def from_dict(cls, d) -> NumericRangeConfig:
        # a mapping keyed by feature name, or six [lo, hi] pairs in feature order
        if isinstance(d, (list, tuple)):
            if len(d) != len(FEATURE_NAMES):
                raise ValidationError(f"expected {len(FEATURE_NAMES)} intervals, got {len(d)}")
            return cls(tuple(tuple(iv) for iv in d))
        if not isinstance(d, dict):
            raise ValidationError("ranges must be an object or a list of intervals")
        default = cls()
        return cls(tuple(tuple(d.get(n, iv)) for n, iv in zip(FEATURE_NAMES, default.intervals)))


@dataclass(frozen=True)
class ScanConfig:
    """Everything the detector needs besides the image.

    Serialized as JSON::

        {"ranges": {"f1": [lo, hi], ...}, "spacing_multiplier": 1.5,
         "layout": {"min_gap": 3, "min_ink": 1, "noise_min_pixels": 4},
         "threshold": null}
    """

    ranges: NumericRangeConfig = field(default_factory=NumericRangeConfig)
    spacing_multiplier: float = 1.5
    layout: LayoutParams = field(default_factory=LayoutParams)
    threshold: int | None = None

    def __post_init__(self):
        if not self.spacing_multiplier > 0:
            raise ValidationError("spacing_multiplier must be positive")

    def to_dict(self) -> dict:
        return {
            "ranges": self.ranges.to_dict(),
            "spacing_multiplier": self.spacing_multiplier,
            "layout": self.layout.to_dict(),
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ScanConfig:
        if "ranges" not in d and any(n in d for n in FEATURE_NAMES):
            d = {"ranges": d}
        threshold = d.get("threshold")
        return cls(
            ranges=NumericRangeConfig.from_dict(d.get("ranges", {})),
            spacing_multiplier=float(d.get("spacing_multiplier", 1.5)),
            layout=LayoutParams.from_dict(d.get("layout", {})),
            threshold=None if threshold is None else int(threshold),
        )

    @classmethod
    def load(cls, path) -> ScanConfig:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class DateCandidate:
    line_index: int
    window: EcccWindow
    layout_class: LayoutClass
    final_class: DateClass
    region: BBox
    features: NumericFeatures | None = None

    def __post_init__(self):
        if self.layout_class is LayoutClass.SLASH and self.final_class is not DateClass.SLASH:
            raise ValidationError("slash candidates keep the Slash class")
        if self.layout_class is LayoutClass.DASH_OR_DOT and self.final_class is DateClass.SLASH:
            raise ValidationError("dash/dot candidates cannot be labelled Slash")
        if self.layout_class is LayoutClass.NON_DATE:
            raise ValidationError("non-date windows are not candidates")

    def to_dict(self) -> dict:
        return {
            "line_index": self.line_index,
            "class": self.final_class.value,
            "layout_class": self.layout_class.value,
            "region": self.region.to_dict(),
            "features": (self.features or numeric_features(self.window)).to_dict(),
            "component_boxes": [b.to_dict() for b in self.window.boxes],
        }


# ---------------------------------------------------------------------------
# single-window stages


def form_windows(line: TextLine) -> list[EcccWindow]:
    """All 8-runs of the line (sliding by one) with strictly increasing x_min."""
    comps = line.components
    out = []
    for s in range(len(comps) - WINDOW + 1):
        run = comps[s : s + WINDOW]
        if all(b.bbox.x_min > a.bbox.x_min for a, b in zip(run, run[1:])):
            out.append(EcccWindow(run, s))
    return out


def check_spacing(w: EcccWindow, multiplier: float = 1.5) -> bool:
    # "exceeds" is strict, so a gap of exactly multiplier * w_max passes
    limit = multiplier * w.w_max
    return all(g <= limit for g in w.gaps)


def numeric_features(w: EcccWindow) -> NumericFeatures:
    """Height and center-y ratios of the three digit pairs.

    A center-y of 0 (box touching the top row) leaves that ratio as NaN.
    """
    vals = []
    for a, b in DIGIT_PAIRS:
        ca, cb = w.comps[a], w.comps[b]
        vals.append(cb.height / ca.height)
        vals.append(cb.centroid_y / ca.centroid_y if ca.centroid_y > 0 else math.nan)
    return NumericFeatures(*vals)


def verify_numeric(w: EcccWindow, cfg: NumericRangeConfig) -> tuple[bool, NumericFeatures]:
    feats = numeric_features(w)
    # NaN compares False, so undefined ratios fail here
    return cfg.contains(feats), feats


def _inside(inner: BBox, outer: BBox) -> bool:
    return (
        outer.y_min <= inner.y_min <= outer.y_max
        and outer.y_min <= inner.y_max <= outer.y_max
    )


def classify_separator_layout(w: EcccWindow) -> LayoutClass:
    """Slash if the separators enclose their neighbouring digits vertically,
    DashOrDot if the separators sit inside them, NonDate otherwise.

    When both hold (all eight boxes share one vertical extent) the answer is
    DashOrDot.
    """
    b = w.boxes
    if _inside(b[2], b[1]) and _inside(b[2], b[3]) and _inside(b[5], b[4]) and _inside(b[5], b[6]):
        return LayoutClass.DASH_OR_DOT
    if _inside(b[1], b[2]) and _inside(b[3], b[2]) and _inside(b[4], b[5]) and _inside(b[6], b[5]):
        return LayoutClass.SLASH
    return LayoutClass.NON_DATE


def register_date(w: EcccWindow) -> BBox:
    """Union of all eight boxes; a tall separator may be the vertical extreme."""
    return union_all(w.boxes)


# ---------------------------------------------------------------------------
# line and document scans


def _line_arrays(line: TextLine):
    boxes = [c.bbox for c in line.components]
    return (
        np.array([b.x_min for b in boxes], dtype=np.int64),
        np.array([b.y_min for b in boxes], dtype=np.int64),
        np.array([b.x_max for b in boxes], dtype=np.int64),
        np.array([b.y_max for b in boxes], dtype=np.int64),
    )


def window_codes(line: TextLine, cfg: ScanConfig = ScanConfig()):
    """Stage code and features for every window start of the line.

    Codes: ``_kernels.REJECT_ORDER`` / ``REJECT_SPACING`` / ``REJECT_NUMERIC``
    for the first failing stage, else the layout code.
    """
    if len(line.components) < WINDOW:
        return np.zeros(0, dtype=np.int8), np.zeros((0, 6))
    x0, y0, x1, y1 = _line_arrays(line)
    return _kernels.scan_windows(x0, y0, x1, y1, cfg.ranges.lo, cfg.ranges.hi, cfg.spacing_multiplier)


def accepted_windows(line: TextLine, cfg: ScanConfig = ScanConfig()) -> list[tuple[int, LayoutClass, NumericFeatures]]:
    """Every window start that passes all four stages, before deduplication."""
    codes, feats = window_codes(line, cfg)
    out = []
    for s in np.flatnonzero(codes > 0).tolist():
        out.append((s, _CODE_TO_LAYOUT[int(codes[s])], NumericFeatures(*feats[s].tolist())))
    return out


def dedupe_starts(starts: Sequence[int]) -> list[int]:
    """Keep the earliest accepted window and drop any that shares a component with it."""
    kept: list[int] = []
    for s in sorted(starts):
        if not kept or s - kept[-1] >= WINDOW:
            kept.append(s)
    return kept


def scan_line(line: TextLine, cfg: ScanConfig = ScanConfig(), line_index: int = 0) -> list[DateCandidate]:
    accepted = {s: (cls, feats) for s, cls, feats in accepted_windows(line, cfg)}
    out = []
    for s in dedupe_starts(list(accepted)):
        cls, feats = accepted[s]
        w = EcccWindow(line.components[s : s + WINDOW], s)
        final = DateClass.SLASH if cls is LayoutClass.SLASH else DateClass.UNREFINED
        out.append(DateCandidate(line_index, w, cls, final, register_date(w), feats))
    return out


def scan_lines(lines: Sequence[TextLine], cfg: ScanConfig = ScanConfig(), knn_model=None) -> list[DateCandidate]:
    cands = []
    for i, line in enumerate(lines):
        cands.extend(scan_line(line, cfg, i))
    if knn_model is not None:
        from datefield.knn import refine

        cands = [refine(knn_model, c) if c.layout_class is LayoutClass.DASH_OR_DOT else c for c in cands]
    return cands


def scan_document(img: BinaryImage, cfg: ScanConfig = ScanConfig(), knn_model=None) -> list[DateCandidate]:
    """Detect date fields on a binary page.

    ``line_index`` counts only lines that kept at least one component after
    noise filtering. With ``knn_model`` given, DashOrDot candidates are
    refined to Dash or Dot.
    """
    return scan_lines(extract_lines(img, cfg.layout), cfg, knn_model)


def candidates_to_json(cands: Sequence[DateCandidate]) -> str:
    return json.dumps([c.to_dict() for c in cands], indent=2) + "\n"


def with_class(cand: DateCandidate, final_class: DateClass) -> DateCandidate:
    return replace(cand, final_class=final_class)
