"""Localize handwritten numerical date fields (DD/MM/YY, DD-MM-YY, DD.MM.YY)
in binarized document images from the spatial arrangement of connected
components."""

__version__ = "0.1.0"

from datefield.raster import BinaryImage, GrayImage, binarize, load_binary, load_image
from datefield.layout import BBox, ConnComp, TextLine, LayoutParams
from datefield.detector import (
    DateCandidate,
    EcccWindow,
    NumericRangeConfig,
    ScanConfig,
    scan_document,
)
from datefield.knn import KnnModel, SeparatorSample

__all__ = [
    "BBox",
    "BinaryImage",
    "ConnComp",
    "DateCandidate",
    "EcccWindow",
    "GrayImage",
    "KnnModel",
    "LayoutParams",
    "NumericRangeConfig",
    "ScanConfig",
    "SeparatorSample",
    "TextLine",
    "binarize",
    "load_binary",
    "load_image",
    "scan_document",
]
