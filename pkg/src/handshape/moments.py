"""Zeroth moment, centroid and bounding box of a segmented region.

Moments are taken over the filled component, with the mask normalized to
{0, 1} first so that M00 is the area in pixels.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .segmentation import Contour, Region


@dataclass(frozen=True)
class Centroid:
    cx: float
    cy: float


@dataclass(frozen=True)
class BoundingBox:
    x_min: int
    y_min: int
    x_max: int
    y_max: int

    @property
    def width(self) -> int:
        return self.x_max - self.x_min + 1

    @property
    def height(self) -> int:
        return self.y_max - self.y_min + 1

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


def _indicator(region_or_mask) -> np.ndarray:
    mask = region_or_mask.mask if isinstance(region_or_mask, Region) else np.asarray(region_or_mask)
    return (mask != 0).astype(np.int64)


def raw_moments(region: Region | np.ndarray) -> tuple[int, int, int]:
    """Exact integer ``(M00, M10, M01)``: pixel count and sums of x and y."""
    ys, xs = np.nonzero(_indicator(region))
    return len(xs), int(xs.sum()), int(ys.sum())


def moment00(region: Region | np.ndarray) -> int:
    return int(_indicator(region).sum())


def centroid_exact(region: Region | np.ndarray) -> tuple[Fraction, Fraction]:
    m00, m10, m01 = raw_moments(region)
    if m00 == 0:
        raise ValueError("centroid of an empty region is undefined")
    return Fraction(m10, m00), Fraction(m01, m00)


def centroid(region: Region | np.ndarray) -> Centroid:
    m00, m10, m01 = raw_moments(region)
    if m00 == 0:
        raise ValueError("centroid of an empty region is undefined")
    return Centroid(m10 / m00, m01 / m00)


def bounding_box(contour: Contour) -> BoundingBox:
    if len(contour.points) == 0:
        raise ValueError("bounding box of an empty contour is undefined")
    xs = [p[0] for p in contour.points]
    ys = [p[1] for p in contour.points]
    return BoundingBox(min(xs), min(ys), max(xs), max(ys))
