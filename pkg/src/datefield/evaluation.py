"""Scoring detections against ground truth, and calibration from corpora.

Rates (all in percent):

* FAR = false accepts / detections
* FRR = false rejects / true dates
* Efficiency = matches with the correct class / true dates

Truth dates flagged ``expected_miss`` (touching digits) count toward the
true-date total only when matched, unless ``include_expected_miss`` is set.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from datefield.detector import (
    FEATURE_NAMES,
    DateCandidate,
    EcccWindow,
    NumericRangeConfig,
    ScanConfig,
    form_windows,
    numeric_features,
)
from datefield.knn import SeparatorSample
from datefield.layout import BBox, extract_lines
from datefield.raster import BinaryImage, ValidationError
from datefield.synth import GroundTruth


@dataclass(frozen=True)
class Detection:
    """The part of a candidate that scoring needs."""

    line_index: int
    cls: str
    region: BBox

    @classmethod
    def of(cls, d) -> Detection:
        if isinstance(d, Detection):
            return d
        if isinstance(d, DateCandidate):
            return cls(d.line_index, d.final_class.value, d.region)
        return cls(int(d["line_index"]), d["class"], BBox.from_dict(d["region"]))


@dataclass
class DocumentMatch:
    pairs: list[tuple[int, int, float, bool]] = field(default_factory=list)  # (det, truth, iou, class_ok)
    false_accepts: list[int] = field(default_factory=list)
    false_rejects: list[int] = field(default_factory=list)
    excluded: list[int] = field(default_factory=list)  # unmatched expected_miss truths
    explained_false_accepts: list[int] = field(default_factory=list)
    n_detections: int = 0

    @property
    def true_dates(self) -> int:
        return len(self.pairs) + len(self.false_rejects)


def match(
    detections: Sequence,
    truth: GroundTruth,
    iou_min: float = 0.5,
    include_expected_miss: bool = False,
) -> DocumentMatch:
    """Greedy one-to-one matching by descending IoU on the same line.

    IoU ties go to the lower truth index, then the lower detection index.
    """
    if not 0 < iou_min <= 1:
        raise ValidationError(f"iou_min must be in (0, 1], got {iou_min}")
    dets = [Detection.of(d) for d in detections]
    dates = truth.dates

    pairs = []
    for di, d in enumerate(dets):
        for ti, t in enumerate(dates):
            if d.line_index != t.line_index:
                continue
            iou = d.region.iou(t.region)
            if iou >= iou_min:
                pairs.append((-iou, ti, di))
    pairs.sort()

    out = DocumentMatch(n_detections=len(dets))
    used_d, used_t = set(), set()
    for neg_iou, ti, di in pairs:
        if ti in used_t or di in used_d:
            continue
        used_t.add(ti)
        used_d.add(di)
        out.pairs.append((di, ti, -neg_iou, dets[di].cls == dates[ti].cls))

    for ti, t in enumerate(dates):
        if ti in used_t:
            continue
        if t.expected_miss and not include_expected_miss:
            out.excluded.append(ti)
        else:
            out.false_rejects.append(ti)

    flagged = [x.region for x in truth.distractors if x.expected_false_accept]
    for di, d in enumerate(dets):
        if di in used_d:
            continue
        out.false_accepts.append(di)
        if any(d.region.iou(r) >= iou_min for r in flagged):
            out.explained_false_accepts.append(di)
    out.pairs.sort()
    return out


@dataclass(frozen=True)
class EvalReport:
    documents: int
    true_dates: int
    detections: int
    matches: int
    class_correct: int
    false_accepts: int
    false_rejects: int
    far_pct: float
    frr_pct: float
    efficiency_pct: float
    expected_false_accepts: int = 0
    excluded_expected_misses: int = 0
    documents_with_dates: int = 0
    documents_fully_correct: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def table(self, reference_rows: Sequence[tuple[str, int, float, float, float]] = ()) -> str:
        """Aligned text table: documents, FAR, FRR, Efficiency."""
        head = f"{'':<14}{'No. of Documents':>18}{'FAR (%)':>10}{'FRR (%)':>10}{'Efficiency (%)':>16}"
        rows = [head, "-" * len(head)]
        for name, docs, far, frr, eff in [("this run", self.documents, self.far_pct, self.frr_pct, self.efficiency_pct), *reference_rows]:
            rows.append(f"{name:<14}{docs:>18d}{far:>10.2f}{frr:>10.2f}{eff:>16.2f}")
        return "\n".join(rows) + "\n"


def _pct(num: int, den: int) -> float:
    return 100.0 * num / den if den else 0.0


def report(results: Iterable[DocumentMatch]) -> EvalReport:
    results = list(results)
    true_dates = sum(r.true_dates for r in results)
    detections = sum(r.n_detections for r in results)
    matches = sum(len(r.pairs) for r in results)
    correct = sum(sum(1 for p in r.pairs if p[3]) for r in results)
    fa = sum(len(r.false_accepts) for r in results)
    fr = sum(len(r.false_rejects) for r in results)
    return EvalReport(
        documents=len(results),
        true_dates=true_dates,
        detections=detections,
        matches=matches,
        class_correct=correct,
        false_accepts=fa,
        false_rejects=fr,
        far_pct=_pct(fa, detections),
        frr_pct=_pct(fr, true_dates),
        efficiency_pct=_pct(correct, true_dates),
        expected_false_accepts=sum(len(r.explained_false_accepts) for r in results),
        excluded_expected_misses=sum(len(r.excluded) for r in results),
        documents_with_dates=sum(1 for r in results if r.true_dates),
        documents_fully_correct=sum(
            1 for r in results if not r.false_accepts and not r.false_rejects and all(p[3] for p in r.pairs)
        ),
    )


# ---------------------------------------------------------------------------
# calibration


def calibrate_ranges(
    labeled: Iterable[tuple[EcccWindow, bool]],
    q: float = 0.01,
    margin: float = 1.05,
) -> NumericRangeConfig:
    """Per-feature [q, 1-q] quantiles over positive windows, widened by ``margin``."""
    if not 0 <= q < 0.5 or margin < 1:
        raise ValidationError("need 0 <= q < 0.5 and margin >= 1")
    feats = np.array([numeric_features(w).as_tuple() for w, is_date in labeled if is_date], dtype=np.float64)
    if feats.size == 0:
        raise ValidationError("calibration needs at least one positive window")
    intervals = []
    for k, name in enumerate(FEATURE_NAMES):
        col = feats[:, k]
        col = col[np.isfinite(col)]
        if col.size == 0:
            raise ValidationError(f"{name}: no finite values among positives")
        lo, hi = np.quantile(col, [q, 1 - q])
        intervals.append((float(lo) / margin, float(hi) * margin))
    return NumericRangeConfig(tuple(intervals))


def labeled_windows(img: BinaryImage, truth: GroundTruth, cfg: ScanConfig = ScanConfig()) -> list[tuple[EcccWindow, bool]]:
    """Every ordered window on the page, labelled by exact box match with a planted date."""
    wanted = {d.component_boxes for d in truth.dates if len(d.component_boxes) == 8}
    out = []
    for line in extract_lines(img, cfg.layout):
        for w in form_windows(line):
            out.append((w, w.boxes in wanted))
    return out


def extract_knn_samples(labeled: Iterable[tuple[Sequence[BBox], str]]) -> list[SeparatorSample]:
    """One (w3, w6, label) sample per labelled Dash/Dot date from its component boxes."""
    out = []
    for boxes, label in labeled:
        if boxes is None or len(boxes) != 8:
            raise ValidationError("each labelled date needs its eight component boxes")
        out.append(SeparatorSample(boxes[2].width, boxes[5].width, label))
    return out


def knn_pairs_from_truth(truths: Iterable[GroundTruth]) -> list[tuple[tuple[BBox, ...], str]]:
    """Dash and Dot dates with a full complement of components."""
    return [
        (d.component_boxes, d.cls)
        for t in truths
        for d in t.dates
        if d.cls in ("Dash", "Dot") and not d.expected_miss
    ]


# ---------------------------------------------------------------------------
# directory layout helpers: <stem>.pgm, <stem>.truth.json, <stem>.json


TRUTH_SUFFIX = ".truth.json"


def truth_stems(truth_dir) -> list[str]:
    return sorted(f[: -len(TRUTH_SUFFIX)] for f in os.listdir(truth_dir) if f.endswith(TRUTH_SUFFIX))


def load_detections(path) -> list[Detection]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("detections", [])
    return [Detection.of(d) for d in data]


def evaluate_dirs(det_dir, truth_dir, iou_min: float = 0.5, include_expected_miss: bool = False) -> tuple[EvalReport, list[DocumentMatch]]:
    """Score every ``<stem>.truth.json`` against ``<stem>.json``; a missing detection file counts as no detections."""
    results = []
    for stem in truth_stems(truth_dir):
        truth = GroundTruth.load(os.path.join(truth_dir, stem + TRUTH_SUFFIX))
        det_path = os.path.join(det_dir, stem + ".json")
        dets = load_detections(det_path) if os.path.exists(det_path) else []
        results.append(match(dets, truth, iou_min, include_expected_miss))
    return report(results), results
