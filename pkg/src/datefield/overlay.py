"""Visual outputs for detections."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from datefield.detector import DateCandidate
from datefield.raster import BinaryImage

CLASS_COLORS = {
    "Slash": (220, 30, 30),
    "Dash": (30, 110, 220),
    "Dot": (20, 160, 60),
    "Unrefined": (200, 130, 0),
}


def dates_only(img: BinaryImage, cands: Sequence[DateCandidate]) -> BinaryImage:
    """Copy of the page keeping ink only inside detected date regions."""
    mask = np.zeros_like(img.bits, dtype=bool)
    for c in cands:
        r = c.region
        mask[r.y_min : r.y_max + 1, r.x_min : r.x_max + 1] = True
    return BinaryImage((img.bits.astype(bool) & mask).astype(np.uint8))


def annotate(img: BinaryImage, cands: Sequence[DateCandidate], pad: int = 3) -> np.ndarray:
    """RGB rendering with a class-colored rectangle around each detection."""
    gray = np.where(img.bits == 1, 0, 255).astype(np.uint8)
    rgb = np.repeat(gray[..., None], 3, axis=2)
    h, w = gray.shape
    for c in cands:
        color = CLASS_COLORS.get(c.final_class.value, (255, 0, 255))
        r = c.region
        x0, y0 = max(r.x_min - pad, 0), max(r.y_min - pad, 0)
        x1, y1 = min(r.x_max + pad, w - 1), min(r.y_max + pad, h - 1)
        for t in range(2):
            rgb[min(y0 + t, y1), x0 : x1 + 1] = color
            rgb[max(y1 - t, y0), x0 : x1 + 1] = color
            rgb[y0 : y1 + 1, min(x0 + t, x1)] = color
            rgb[y0 : y1 + 1, max(x1 - t, x0)] = color
    return rgb
