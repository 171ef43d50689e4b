"""K-nearest-neighbour split of dash from dot separators.

Features are the widths of the 3rd and 6th window components. Distances
are squared Euclidean on integer widths, so neighbour ranking is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from datefield.detector import DateCandidate, DateClass, LayoutClass, with_class
from datefield.raster import ValidationError

LABELS = (DateClass.DASH, DateClass.DOT)


class ContractError(ValueError):
    pass


@dataclass(frozen=True)
class SeparatorSample:
    w_cc3: int
    w_cc6: int
    label: DateClass

    def __post_init__(self):
        label = DateClass(self.label)
        if label not in LABELS:
            raise ValidationError(f"separator label must be Dash or Dot, got {label.value}")
        if self.w_cc3 < 1 or self.w_cc6 < 1:
            raise ValidationError("separator widths must be >= 1")
        object.__setattr__(self, "label", label)

    def to_dict(self) -> dict:
        return {"w3": int(self.w_cc3), "w6": int(self.w_cc6), "label": self.label.value}

    @classmethod
    def from_dict(cls, d: dict) -> SeparatorSample:
        return cls(int(d["w3"]), int(d["w6"]), DateClass(d["label"]))


@dataclass(frozen=True, eq=False)
class KnnModel:
    samples: tuple[SeparatorSample, ...]
    k: int = 3

    def __post_init__(self):
        samples = tuple(self.samples)
        if self.k < 1 or self.k % 2 == 0:
            raise ValidationError(f"k must be a positive odd integer, got {self.k}")
        if len(samples) < self.k:
            raise ValidationError(f"need at least k={self.k} samples, got {len(samples)}")
        if {s.label for s in samples} != set(LABELS):
            raise ValidationError("training samples must contain both Dash and Dot")
        object.__setattr__(self, "samples", samples)
        feats = np.array([(s.w_cc3, s.w_cc6) for s in samples], dtype=np.int64)
        feats.flags.writeable = False
        object.__setattr__(self, "_features", feats)
        object.__setattr__(self, "_is_dash", np.array([s.label is DateClass.DASH for s in samples]))

    def neighbours(self, query) -> np.ndarray:
        """Indices of the k nearest samples; equal distances prefer lower index."""
        q = np.asarray(query, dtype=np.int64)
        d2 = ((self._features - q) ** 2).sum(axis=1)
        return np.argsort(d2, kind="stable")[: self.k]

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "samples": [s.to_dict() for s in self.samples]}, indent=2) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> KnnModel:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if isinstance(data, list):
            return train(load_samples_data(data))
        return train(load_samples_data(data["samples"]), int(data.get("k", 3)))


def load_samples_data(rows: Iterable[dict]) -> list[SeparatorSample]:
    return [SeparatorSample.from_dict(r) for r in rows]


def train(samples: Sequence[SeparatorSample], k: int = 3) -> KnnModel:
    """Store the samples as a lazy learner after checking the model invariants."""
    return KnnModel(tuple(samples), k)


def classify(model: KnnModel, query) -> DateClass:
    idx = model.neighbours(query)
    dash_votes = int(model._is_dash[idx].sum())
    return DateClass.DASH if 2 * dash_votes > len(idx) else DateClass.DOT


def refine(model: KnnModel, cand: DateCandidate) -> DateCandidate:
    if cand.layout_class is not LayoutClass.DASH_OR_DOT:
        raise ContractError(f"only DashOrDot candidates are refined, got {cand.layout_class.value}")
    comps = cand.window.comps
    return with_class(cand, classify(model, (comps[2].width, comps[5].width)))


def leave_one_out_accuracy(samples: Sequence[SeparatorSample], k: int = 3) -> float:
    correct = 0
    for i, s in enumerate(samples):
        rest = list(samples[:i]) + list(samples[i + 1 :])
        if classify(train(rest, k), (s.w_cc3, s.w_cc6)) is s.label:
            correct += 1
    return correct / len(samples)
