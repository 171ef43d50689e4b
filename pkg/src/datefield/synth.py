"""Synthetic binary pages with planted dates and exact ground truth.

Digits, letters and dashes are filled rectangles, slashes are leaning
strokes and dots are small squares; the detector only looks at bounding
boxes, so glyph shape does not matter. Objects on a line (dates, words,
stressors) are separated by gaps wider than the spacing rule allows for the
widest component a SynthSpec can produce, so no window can straddle two
objects. Words never exceed seven components.

Stressors:

* ``double_digits``: fraction of planted dates whose first two digits touch
  and merge into one component (a known miss, flagged ``expected_miss``);
* ``date_like_text``: eight-letter runs per page that pass ordering,
  spacing and numeric tests; a ``date_like_accept_fraction`` share also
  passes the separator layout test (flagged ``expected_false_accept``);
* ``specks``: salt specks lighter than the noise filter.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from datefield.detector import (
    EcccWindow,
    LayoutClass,
    NumericRangeConfig,
    check_spacing,
    classify_separator_layout,
    verify_numeric,
)
from datefield.knn import SeparatorSample
from datefield.layout import BBox, ConnComp, union_all
from datefield.raster import BinaryImage, ValidationError

CLASSES = ("Slash", "Dash", "Dot")
_LAYOUT_FOR = {"Slash": LayoutClass.SLASH, "Dash": LayoutClass.DASH_OR_DOT, "Dot": LayoutClass.DASH_OR_DOT}
_MAX_TRIES = 100


def _pair(v) -> tuple:
    lo, hi = v
    if lo > hi:
        raise ValidationError(f"empty range {v}")
    return (lo, hi)


@dataclass(frozen=True)
class Stressors:
    double_digits: float = 0.0
    date_like_text: int = 0
    date_like_accept_fraction: float = 0.5
    specks: int = 0

    def __post_init__(self):
        if not 0.0 <= self.double_digits <= 1.0 or not 0.0 <= self.date_like_accept_fraction <= 1.0:
            raise ValidationError("stressor fractions must lie in [0, 1]")
        if self.date_like_text < 0 or self.specks < 0:
            raise ValidationError("stressor counts must be >= 0")


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    page_width: int = 1400
    page_height: int = 1000
    lines: int = 8
    dates_per_page: int = 2
    class_mix: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)  # Slash, Dash, Dot
    digit_height: tuple[int, int] = (30, 40)
    digit_width: tuple[int, int] = (14, 22)
    baseline_jitter: int = 2
    slash_height_factor: tuple[float, float] = (1.3, 1.6)
    slash_stroke: tuple[int, int] = (3, 4)
    dash_width: tuple[int, int] = (12, 20)
    dash_height: tuple[int, int] = (3, 5)
    dot_size: tuple[int, int] = (2, 4)
    date_gap: tuple[int, int] = (2, 8)
    object_gap: tuple[int, int] = (44, 80)
    distractor_density: float = 0.6
    letter_width: tuple[int, int] = (8, 18)
    x_height: tuple[int, int] = (16, 22)
    ascender_height: tuple[int, int] = (30, 38)
    descender_depth: tuple[int, int] = (8, 12)
    margin: int = 60
    top_margin: int = 80
    stressors: Stressors = field(default_factory=Stressors)

    def __post_init__(self):
        for name in (
            "digit_height", "digit_width", "slash_height_factor", "slash_stroke", "dash_width",
            "dash_height", "dot_size", "date_gap", "object_gap", "letter_width", "x_height",
            "ascender_height", "descender_depth",
        ):
            object.__setattr__(self, name, _pair(getattr(self, name)))
        mix = tuple(float(p) for p in self.class_mix)
        if len(mix) != 3 or any(p < 0 for p in mix) or not math.isclose(sum(mix), 1.0, abs_tol=1e-9):
            raise ValidationError(f"class_mix must be three non-negative proportions summing to 1, got {mix}")
        object.__setattr__(self, "class_mix", mix)
        if isinstance(self.stressors, dict):
            object.__setattr__(self, "stressors", Stressors(**self.stressors))
        if self.slash_height_factor[0] <= 1.0:
            raise ValidationError("slash_height_factor must exceed 1")
        if self.page_width < 1 or self.page_height < 1 or self.lines < 1 or self.dates_per_page < 0:
            raise ValidationError("page size and line count must be positive")
        if not 0.0 <= self.distractor_density <= 1.0:
            raise ValidationError("distractor_density must lie in [0, 1]")
        if self.dot_size[0] * self.dot_size[0] < 1 or self.dash_height[0] < 1:
            raise ValidationError("separator sizes must be positive")
        widest = self.widest_component
        # gaps between objects must defeat the spacing test for any window
        if self.object_gap[0] <= 1.5 * widest:
            raise ValidationError(
                f"object_gap minimum {self.object_gap[0]} must exceed 1.5 x widest component ({widest})"
            )
        if self.line_pitch < self.max_extent + 8:
            raise ValidationError(
                f"{self.lines} lines do not fit: pitch {self.line_pitch:.1f} < extent {self.max_extent} + 8"
            )

    @property
    def widest_component(self) -> int:
        return max(
            self.digit_width[1],
            self.letter_width[1],
            self.dash_width[1],
            self.dot_size[1],
            self.slash_stroke[1] + self._max_lean(),
        )

    def _max_lean(self) -> int:
        return int(round(0.35 * self._max_slash_height()))

    def _max_slash_height(self) -> int:
        return int(math.ceil(self.slash_height_factor[1] * self.digit_height[1]))

    @property
    def max_extent(self) -> int:
        return max(self._max_slash_height(), self.ascender_height[1] + self.descender_depth[1], 2 * self.digit_height[1])

    @property
    def line_pitch(self) -> float:
        return (self.page_height - self.top_margin - self.margin) / self.lines

    def to_dict(self) -> dict:
        d = asdict(self)
        d["class_mix"] = dict(zip(CLASSES, self.class_mix))
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SynthSpec:
        d = dict(d)
        mix = d.get("class_mix")
        if isinstance(mix, dict):
            d["class_mix"] = tuple(float(mix.get(c, 0.0)) for c in CLASSES)
        if "stressors" in d:
            d["stressors"] = Stressors(**d["stressors"])
        for k, v in list(d.items()):
            if isinstance(v, list):
                d[k] = tuple(v)
        return cls(**d)

    @classmethod
    def load(cls, path) -> SynthSpec:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class PlantedDate:
    line_index: int
    cls: str
    region: BBox
    component_boxes: tuple[BBox, ...]
    expected_miss: bool = False

    def to_dict(self) -> dict:
        return {
            "line_index": self.line_index,
            "class": self.cls,
            "region": self.region.to_dict(),
            "component_boxes": [b.to_dict() for b in self.component_boxes],
            "expected_miss": self.expected_miss,
        }

    @classmethod
    def from_dict(cls, d: dict) -> PlantedDate:
        return cls(
            int(d["line_index"]),
            d["class"],
            BBox.from_dict(d["region"]),
            tuple(BBox.from_dict(b) for b in d["component_boxes"]),
            bool(d.get("expected_miss", False)),
        )


@dataclass(frozen=True)
class Distractor:
    line_index: int
    kind: str  # "word" or "date_like"
    region: BBox
    expected_false_accept: bool = False

    def to_dict(self) -> dict:
        return {
            "line_index": self.line_index,
            "kind": self.kind,
            "region": self.region.to_dict(),
            "expected_false_accept": self.expected_false_accept,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Distractor:
        return cls(int(d["line_index"]), d["kind"], BBox.from_dict(d["region"]), bool(d.get("expected_false_accept", False)))


@dataclass(frozen=True)
class GroundTruth:
    width: int
    height: int
    seed: int
    dates: tuple[PlantedDate, ...] = ()
    distractors: tuple[Distractor, ...] = ()

    def to_dict(self) -> dict:
        return {
            "page": {"width": self.width, "height": self.height},
            "seed": self.seed,
            "dates": [d.to_dict() for d in self.dates],
            "distractors": [d.to_dict() for d in self.distractors],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> GroundTruth:
        return cls(
            int(d["page"]["width"]),
            int(d["page"]["height"]),
            int(d.get("seed", 0)),
            tuple(PlantedDate.from_dict(x) for x in d.get("dates", [])),
            tuple(Distractor.from_dict(x) for x in d.get("distractors", [])),
        )

    @classmethod
    def load(cls, path) -> GroundTruth:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def shifted(self, dx: int = 0, dy: int = 0, width: int | None = None, height: int | None = None) -> GroundTruth:
        return GroundTruth(
            self.width if width is None else width,
            self.height if height is None else height,
            self.seed,
            tuple(
                PlantedDate(d.line_index, d.cls, d.region.shifted(dx, dy),
                            tuple(b.shifted(dx, dy) for b in d.component_boxes), d.expected_miss)
                for d in self.dates
            ),
            tuple(
                Distractor(d.line_index, d.kind, d.region.shifted(dx, dy), d.expected_false_accept)
                for d in self.distractors
            ),
        )


# ---------------------------------------------------------------------------
# shapes are (kind, x0, y0, x1, y1, extra) in absolute page coordinates once
# placed; before placement x is relative to the object's left edge


@dataclass
class _Shape:
    kind: str  # "rect" or "slash"
    x0: int
    y0: int
    x1: int
    y1: int
    stroke: int = 0

    def box(self, dx: int = 0) -> BBox:
        return BBox(self.x0 + dx, self.y0, self.x1 + dx, self.y1)


@dataclass
class _Object:
    kind: str  # "date", "word", "date_like"
    shapes: list
    width: int
    cls: str = ""
    expected_miss: bool = False
    expected_false_accept: bool = False
    merged_pairs: tuple = ()  # (i, j) shape indices that render as one component
    clearance: int = 0  # minimum blank columns to either neighbour


def _ri(rng, lo_hi) -> int:
    lo, hi = lo_hi
    return int(rng.integers(lo, hi + 1))


def _draw(canvas: np.ndarray, s: _Shape, dx: int) -> None:
    if s.kind == "rect":
        canvas[s.y0 : s.y1 + 1, s.x0 + dx : s.x1 + dx + 1] = 1
        return
    # leaning stroke: bottom-left to top-right, one-pixel shift per step keeps
    # it 8-connected and its box exactly (x0, y0, x1, y1)
    h = s.y1 - s.y0 + 1
    lean = (s.x1 - s.x0 + 1) - s.stroke
    for r in range(h):
        off = lean - (r * lean) // max(h - 1, 1) if h > 1 else 0
        x = s.x0 + dx + off
        canvas[s.y0 + r, x : x + s.stroke] = 1


def _shape_pixels(s: _Shape) -> int:
    if s.kind == "rect":
        return (s.x1 - s.x0 + 1) * (s.y1 - s.y0 + 1)
    return (s.y1 - s.y0 + 1) * s.stroke


def _window_of(boxes_pixels) -> EcccWindow:
    return EcccWindow(tuple(ConnComp(i, b, n) for i, (b, n) in enumerate(boxes_pixels)))


def _lay_out(rng, widths, gap_range) -> tuple[list[int], int]:
    xs, cursor = [], 0
    for i, w in enumerate(widths):
        xs.append(cursor)
        cursor += w
        if i < len(widths) - 1:
            cursor += _ri(rng, gap_range)
    return xs, cursor


def _make_date(rng, spec: SynthSpec, cls: str, yc: int, double: bool) -> _Object:
    ranges = NumericRangeConfig()
    for _ in range(_MAX_TRIES):
        digits = []
        for _ in range(6):
            h = _ri(rng, spec.digit_height)
            w = _ri(rng, spec.digit_width)
            j = int(rng.integers(-spec.baseline_jitter, spec.baseline_jitter + 1))
            y0 = yc + j - h // 2
            digits.append((w, y0, y0 + h - 1))

        def separator(left, right):
            top = max(left[1], right[1])
            bottom = min(left[2], right[2])
            if cls == "Slash":
                hmax = max(d[2] - d[1] + 1 for d in digits)
                sh = int(math.ceil(rng.uniform(*spec.slash_height_factor) * hmax))
                stroke = _ri(rng, spec.slash_stroke)
                lean = int(round(0.35 * sh))
                y0 = yc - sh // 2
                return ("slash", stroke + lean, y0, y0 + sh - 1, stroke)
            if cls == "Dash":
                w = _ri(rng, spec.dash_width)
                h = _ri(rng, spec.dash_height)
                y0 = (top + bottom) // 2 - h // 2 + int(rng.integers(-1, 2))
                return ("rect", w, y0, y0 + h - 1, 0)
            s = _ri(rng, spec.dot_size)
            y1 = bottom - int(rng.integers(0, 3))
            return ("rect", s, y1 - s + 1, y1, 0)

        seps = [separator(digits[1], digits[2]), separator(digits[3], digits[4])]
        parts = [
            ("rect", digits[0][0], digits[0][1], digits[0][2], 0),
            ("rect", digits[1][0], digits[1][1], digits[1][2], 0),
            seps[0],
            ("rect", digits[2][0], digits[2][1], digits[2][2], 0),
            ("rect", digits[3][0], digits[3][1], digits[3][2], 0),
            seps[1],
            ("rect", digits[4][0], digits[4][1], digits[4][2], 0),
            ("rect", digits[5][0], digits[5][1], digits[5][2], 0),
        ]
        widths = [p[1] for p in parts]
        xs, total = _lay_out(rng, widths, spec.date_gap)
        if double:
            # close the first gap so digits 1 and 2 touch
            shift = xs[1] - (xs[0] + widths[0])
            xs = [x if i == 0 else x - shift for i, x in enumerate(xs)]
            total -= shift
        shapes = [_Shape(k, x, y0, x + w - 1, y1, st) for (k, w, y0, y1, st), x in zip(parts, xs)]

        window = _window_of([(s.box(), _shape_pixels(s)) for s in shapes])
        ok = (
            check_spacing(window)
            and verify_numeric(window, ranges)[0]
            and classify_separator_layout(window) is _LAYOUT_FOR[cls]
        )
        if ok:
            clearance = 0
            if double:
                # the merged pair widens w_max; keep neighbours out of reach of the spacing test
                merged = shapes[1].box().x_max - shapes[0].box().x_min + 1
                clearance = int(1.5 * max(merged, spec.widest_component)) + 1
            return _Object("date", shapes, total, cls=cls, expected_miss=double,
                           merged_pairs=((0, 1),) if double else (), clearance=clearance)
    raise ValidationError(f"could not plant a detectable {cls} date with this geometry")


def _make_date_like(rng, spec: SynthSpec, yc: int, accept: bool) -> _Object:
    """Eight letters that look like a numeric field; separators mimicked by
    ascenders (accepted as Slash) or by raised letters (rejected)."""
    ranges = NumericRangeConfig()
    base = yc + 10
    for _ in range(_MAX_TRIES):
        parts = []
        for pos in range(8):
            w = _ri(rng, spec.letter_width)
            xh = _ri(rng, spec.x_height)
            if pos in (2, 5) and accept:
                h = _ri(rng, spec.ascender_height)
                parts.append((w, base - h + 1, base))
            elif pos in (2, 5):
                parts.append((w, base - xh - 7, base - 8))
            else:
                parts.append((w, base - xh + 1, base))
        xs, total = _lay_out(rng, [p[0] for p in parts], spec.date_gap)
        shapes = [_Shape("rect", x, y0, x + w - 1, y1) for (w, y0, y1), x in zip(parts, xs)]
        window = _window_of([(s.box(), _shape_pixels(s)) for s in shapes])
        layout = classify_separator_layout(window)
        passes_front = check_spacing(window) and verify_numeric(window, ranges)[0]
        if passes_front and ((layout is not LayoutClass.NON_DATE) == accept):
            return _Object("date_like", shapes, total, expected_false_accept=accept)
    raise ValidationError("could not build a date-like stressor with this geometry")


def _make_word(rng, spec: SynthSpec, yc: int) -> _Object:
    base = yc + 10
    n_letters = int(rng.integers(2, 7))
    shapes, cursor, n_comps = [], 0, 0
    for i in range(n_letters):
        if n_comps >= 7:
            break
        w = _ri(rng, spec.letter_width)
        xh = _ri(rng, spec.x_height)
        kind = rng.random()
        if kind < 0.25:
            y0, y1 = base - _ri(rng, spec.ascender_height) + 1, base
        elif kind < 0.4:
            y0, y1 = base - xh + 1, base + _ri(rng, spec.descender_depth)
        else:
            y0, y1 = base - xh + 1, base
        shapes.append(_Shape("rect", cursor, y0, cursor + w - 1, y1))
        n_comps += 1
        if kind >= 0.4 and rng.random() < 0.15 and n_comps < 7 and w >= 5:
            # dot of an 'i': 3x3, two blank rows above the stem
            dx = int(rng.integers(1, w - 3)) if w > 4 else 1
            shapes.append(_Shape("rect", cursor + dx, y0 - 5, cursor + dx + 2, y0 - 3))
            n_comps += 1
        cursor += w
        if i < n_letters - 1:
            cursor += int(rng.integers(1, 6))
    width = max(s.x1 for s in shapes) + 1
    return _Object("word", shapes, width)


def _line_centers(spec: SynthSpec) -> list[int]:
    pitch = spec.line_pitch
    return [int(round(spec.top_margin + pitch * (i + 0.5))) for i in range(spec.lines)]


def generate(spec: SynthSpec, page_index: int = 0) -> tuple[BinaryImage, GroundTruth]:
    """Render one page. Deterministic in (spec, page_index)."""
    rng = np.random.default_rng(spec.seed + page_index)
    centers = _line_centers(spec)
    st = spec.stressors
    usable = spec.page_width - 2 * spec.margin

    specials: list[tuple[int, str, bool]] = []  # (line, kind, flag)
    n_special = spec.dates_per_page + st.date_like_text
    order = list(rng.permutation(spec.lines))
    slots = [int(order[i % spec.lines]) for i in range(n_special)]
    for i in range(spec.dates_per_page):
        specials.append((slots[i], "date", bool(rng.random() < st.double_digits)))
    for i in range(st.date_like_text):
        specials.append((slots[spec.dates_per_page + i], "date_like", bool(rng.random() < st.date_like_accept_fraction)))

    per_line: list[list[_Object]] = [[] for _ in range(spec.lines)]
    for line, kind, flag in specials:
        yc = centers[line]
        if kind == "date":
            cls = CLASSES[int(rng.choice(3, p=spec.class_mix))]
            per_line[line].append(_make_date(rng, spec, cls, yc, flag))
        else:
            per_line[line].append(_make_date_like(rng, spec, yc, flag))

    canvas = np.zeros((spec.page_height, spec.page_width), dtype=np.uint8)
    placed: list[tuple[int, _Object, int]] = []  # (line, object, dx)
    for line, objs in enumerate(per_line):
        yc = centers[line]
        mean_gap = sum(spec.object_gap) / 2
        budget = spec.distractor_density * usable
        used = sum(o.width + mean_gap for o in objs)
        words = []
        while spec.distractor_density > 0 and used < budget:
            w = _make_word(rng, spec, yc)
            words.append(w)
            used += w.width + mean_gap
        seq = words + objs
        rng.shuffle(seq)
        drawn = [_ri(rng, spec.object_gap) for _ in range(max(len(seq) - 1, 0))]

        def fit(seq):
            gaps = [max(g, seq[i].clearance, seq[i + 1].clearance) for i, g in enumerate(drawn[: len(seq) - 1])]
            return gaps, sum(o.width for o in seq) + sum(gaps)

        gaps, total = fit(seq)
        # drop words until the line fits; specials are never dropped
        while total > usable and any(o.kind == "word" for o in seq):
            seq.pop(max(i for i, o in enumerate(seq) if o.kind == "word"))
            gaps, total = fit(seq)
        if total > usable:
            raise ValidationError(f"line {line}: planted objects need {total}px, page offers {usable}px")
        slack = usable - total
        x = spec.margin + (int(rng.integers(0, slack + 1)) if slack > 0 else 0)
        for i, o in enumerate(seq):
            for s in o.shapes:
                _draw(canvas, s, x)
            placed.append((line, o, x))
            x += o.width + (gaps[i] if i < len(gaps) else 0)

    nonempty = sorted({line for line, _, _ in placed})
    rank = {line: i for i, line in enumerate(nonempty)}
    dates, distractors = [], []
    for line, o, dx in sorted(placed, key=lambda t: (t[0], t[2])):
        boxes = [s.box(dx) for s in o.shapes]
        region = union_all(boxes)
        if o.kind == "date":
            comp_boxes = list(boxes)
            for i, j in o.merged_pairs:
                comp_boxes[i] = boxes[i].union(boxes[j])
            for _, j in sorted(o.merged_pairs, reverse=True):
                comp_boxes.pop(j)
            dates.append(PlantedDate(rank[line], o.cls, region, tuple(comp_boxes), o.expected_miss))
        else:
            distractors.append(Distractor(rank[line], o.kind, region, o.expected_false_accept))

    if st.specks:
        _sprinkle(rng, canvas, st.specks)

    truth = GroundTruth(spec.page_width, spec.page_height, spec.seed + page_index, tuple(dates), tuple(distractors))
    return BinaryImage(canvas), truth


def _sprinkle(rng, canvas: np.ndarray, count: int) -> None:
    """Specks of 1-3 pixels, each at least two pixels clear of other ink."""
    h, w = canvas.shape
    shapes = ((1, 1), (1, 2), (2, 1), (1, 3), (3, 1))
    placed = 0
    for _ in range(count * 50):
        if placed == count:
            break
        sh, sw = shapes[int(rng.integers(len(shapes)))]
        y = int(rng.integers(2, h - sh - 2))
        x = int(rng.integers(2, w - sw - 2))
        if canvas[y - 2 : y + sh + 2, x - 2 : x + sw + 2].any():
            continue
        canvas[y : y + sh, x : x + sw] = 1
        placed += 1


def separator_samples(
    n: int,
    rng,
    dash_width: tuple[int, int] = (12, 20),
    dot_size: tuple[int, int] = (2, 4),
    dash_fraction: float = 0.5,
) -> list[SeparatorSample]:
    """(w3, w6) training pairs drawn from the dash and dot width ranges."""
    out = []
    for _ in range(n):
        if rng.random() < dash_fraction:
            out.append(SeparatorSample(_ri(rng, dash_width), _ri(rng, dash_width), "Dash"))
        else:
            out.append(SeparatorSample(_ri(rng, dot_size), _ri(rng, dot_size), "Dot"))
    return out


def page_stem(i: int) -> str:
    return f"page_{i:03d}"


def write_page(img: BinaryImage, truth: GroundTruth, out_dir, stem: str) -> tuple[str, str]:
    from datefield.ioutil import write_bytes_atomic, write_text_atomic, pgm_bytes

    img_path = os.path.join(out_dir, stem + ".pgm")
    truth_path = os.path.join(out_dir, stem + ".truth.json")
    write_bytes_atomic(img_path, pgm_bytes(img.to_gray()))
    write_text_atomic(truth_path, truth.to_json())
    return img_path, truth_path


def generate_corpus(spec: SynthSpec, out_dir, pages: int, start: int = 0) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    stems = []
    for i in range(start, start + pages):
        img, truth = generate(spec, i)
        write_page(img, truth, out_dir, page_stem(i))
        stems.append(page_stem(i))
    return stems
