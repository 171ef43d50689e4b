"""Raster loading and binarization.

Ink polarity convention used everywhere downstream: 1 is ink, 0 is
background. Inputs are assumed to be dark ink on light paper.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

# Rec.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])

_SUPPORTED = {"PPM", "PNG", "BMP", "TIFF", "JPEG"}


class RasterError(Exception):
    """Base class for raster problems."""


class ImageFormatError(RasterError):
    pass


class ValidationError(RasterError, ValueError):
    pass


def _frozen(arr):
    arr = np.ascontiguousarray(arr, dtype=np.uint8)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale raster stored as a (height, width) uint8 array."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 2:
            raise ValidationError(f"expected a 2-D sample array, got shape {s.shape}")
        if s.shape[0] == 0 or s.shape[1] == 0:
            raise ValidationError("image has a zero dimension")
        if s.dtype != np.uint8:
            if s.size and (s.min() < 0 or s.max() > 255):
                raise ValidationError("samples must lie in 0..255")
        object.__setattr__(self, "samples", _frozen(s))

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(self.samples, other.samples)


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """Binary raster, ``bits[y, x]`` is 1 for ink and 0 for background."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2:
            raise ValidationError(f"expected a 2-D bit array, got shape {b.shape}")
        if b.shape[0] == 0 or b.shape[1] == 0:
            raise ValidationError("image has a zero dimension")
        if b.dtype == bool:
            b = b.astype(np.uint8)
        elif b.dtype.kind == "u":
            if b.max() > 1:
                raise ValidationError("binary image values must be 0 or 1")
        elif not ((b == 0) | (b == 1)).all():
            raise ValidationError("binary image values must be 0 or 1")
        object.__setattr__(self, "bits", _frozen(b))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def ink_count(self) -> int:
        return int(self.bits.sum(dtype=np.int64))

    def __eq__(self, other):
        return isinstance(other, BinaryImage) and np.array_equal(self.bits, other.bits)

    def to_gray(self) -> GrayImage:
        """Render ink black (0) on white (255)."""
        return GrayImage(np.where(self.bits == 1, 0, 255).astype(np.uint8))


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)[..., :3]
    return np.clip(np.rint(rgb @ _LUMA), 0, 255).astype(np.uint8)


def load_image(path) -> GrayImage:
    """Decode an 8-bit raster file into grayscale samples.

    Color images are reduced with Rec.601 luma; alpha is ignored.
    Raises ``OSError`` if the file cannot be read, ``ImageFormatError`` for
    unsupported formats or bit depths.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(path)
    try:
        with Image.open(path) as im:
            im.load()
            fmt = im.format
            mode = im.mode
            if fmt not in _SUPPORTED:
                raise ImageFormatError(f"{path}: unsupported format {fmt}")
            if mode == "L":
                arr = np.array(im)
            elif mode == "1":
                arr = np.array(im.convert("L"))
            elif mode in ("RGB", "RGBA", "RGBX"):
                arr = rgb_to_gray(np.array(im))
            elif mode in ("P", "PA"):
                arr = rgb_to_gray(np.array(im.convert("RGB")))
            elif mode == "LA":
                arr = np.array(im)[..., 0]
            else:
                raise ImageFormatError(f"{path}: unsupported pixel mode {mode}, 8-bit depth required")
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"{path}: not a recognised raster image") from exc
    return GrayImage(arr)


def save_gray(img: GrayImage, path) -> None:
    """Write a grayscale image; format follows the suffix (.pgm -> binary P5)."""
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    fmt = "PPM" if ext in (".pgm", ".ppm", ".pnm") else None
    Image.fromarray(np.asarray(img.samples), mode="L").save(path, format=fmt)


def otsu_threshold(img: GrayImage) -> int:
    """Otsu's threshold over the 256-bin histogram.

    Returns ``t`` such that samples ``< t`` are ink. Every t in 1..255 is
    tried; the smallest maximizer of between-class variance wins. A
    single-intensity image has no split and falls back to 128.
    """
    hist = np.bincount(img.samples.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(hist)[:-1]  # weight of samples < t for t = 1..255
    m0 = np.cumsum(hist * levels)[:-1]
    w1 = total - w0
    m_total = float((hist * levels).sum())
    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        return 128
    mu0 = np.divide(m0, w0, out=np.zeros_like(m0), where=valid)
    mu1 = np.divide(m_total - m0, w1, out=np.zeros_like(m0), where=valid)
    between = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, -1.0)
    return int(np.argmax(between)) + 1


def binarize(img: GrayImage, threshold: int | None = None) -> BinaryImage:
    """Map samples below ``threshold`` to ink (1); default threshold is Otsu's."""
    if threshold is None:
        threshold = otsu_threshold(img)
    elif not 0 <= int(threshold) <= 255:
        raise ValidationError(f"threshold must be in 0..255, got {threshold}")
    return BinaryImage((img.samples < int(threshold)).astype(np.uint8))


def load_binary(path, threshold: int | None = None) -> BinaryImage:
    return binarize(load_image(path), threshold)
