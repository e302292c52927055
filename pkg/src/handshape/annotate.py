"""Burn boxes, centroid crosses and text into gray frames.

Text uses a built-in 5x7 bitmap font (upper case, digits and the
punctuation the feedback messages need); lower-case input is upper-cased.
"""
from __future__ import annotations

import numpy as np

from .imagecore import GrayImage, as_gray
from .moments import BoundingBox, Centroid

GLYPH_W, GLYPH_H = 5, 7

_FONT_ROWS = {
    "A": ("01110", "10001", "10001", "11111", "10001", "10001", "10001"),
    "B": ("11110", "10001", "10001", "11110", "10001", "10001", "11110"),
    "C": ("01110", "10001", "10000", "10000", "10000", "10001", "01110"),
    "D": ("11110", "10001", "10001", "10001", "10001", "10001", "11110"),
    "E": ("11111", "10000", "10000", "11110", "10000", "10000", "11111"),
    "F": ("11111", "10000", "10000", "11110", "10000", "10000", "10000"),
    "G": ("01110", "10001", "10000", "10111", "10001", "10001", "01111"),
    "H": ("10001", "10001", "10001", "11111", "10001", "10001", "10001"),
    "I": ("01110", "00100", "00100", "00100", "00100", "00100", "01110"),
    "J": ("00111", "00010", "00010", "00010", "00010", "10010", "01100"),
    "K": ("10001", "10010", "10100", "11000", "10100", "10010", "10001"),
    "L": ("10000", "10000", "10000", "10000", "10000", "10000", "11111"),
    "M": ("10001", "11011", "10101", "10101", "10001", "10001", "10001"),
    "N": ("10001", "10001", "11001", "10101", "10011", "10001", "10001"),
    "O": ("01110", "10001", "10001", "10001", "10001", "10001", "01110"),
    "P": ("11110", "10001", "10001", "11110", "10000", "10000", "10000"),
    "Q": ("01110", "10001", "10001", "10001", "10101", "10010", "01101"),
    "R": ("11110", "10001", "10001", "11110", "10100", "10010", "10001"),
    "S": ("01111", "10000", "10000", "01110", "00001", "00001", "11110"),
    "T": ("11111", "00100", "00100", "00100", "00100", "00100", "00100"),
    "U": ("10001", "10001", "10001", "10001", "10001", "10001", "01110"),
    "V": ("10001", "10001", "10001", "10001", "10001", "01010", "00100"),
    "W": ("10001", "10001", "10001", "10101", "10101", "10101", "01010"),
    "X": ("10001", "10001", "01010", "00100", "01010", "10001", "10001"),
    "Y": ("10001", "10001", "01010", "00100", "00100", "00100", "00100"),
    "Z": ("11111", "00001", "00010", "00100", "01000", "10000", "11111"),
    "0": ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    "1": ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    "2": ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    "3": ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    "4": ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    "5": ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    "6": ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    "7": ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    "8": ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    "9": ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
    " ": ("00000",) * 7,
    ".": ("00000", "00000", "00000", "00000", "00000", "01100", "01100"),
    ",": ("00000", "00000", "00000", "00000", "01100", "00100", "01000"),
    "!": ("00100", "00100", "00100", "00100", "00100", "00000", "00100"),
    "?": ("01110", "10001", "00001", "00010", "00100", "00000", "00100"),
    "'": ("00100", "00100", "01000", "00000", "00000", "00000", "00000"),
    ":": ("00000", "01100", "01100", "00000", "01100", "01100", "00000"),
    "-": ("00000", "00000", "00000", "11111", "00000", "00000", "00000"),
    "=": ("00000", "00000", "11111", "00000", "11111", "00000", "00000"),
    "(": ("00010", "00100", "01000", "01000", "01000", "00100", "00010"),
    ")": ("01000", "00100", "00010", "00010", "00010", "00100", "01000"),
    "/": ("00000", "00001", "00010", "00100", "01000", "10000", "00000"),
    "%": ("11000", "11001", "00010", "00100", "01000", "10011", "00011"),
}
_UNKNOWN = ("11111", "10001", "10001", "10001", "10001", "10001", "11111")

FONT = {ch: np.array([[c == "1" for c in row] for row in rows]) for ch, rows in _FONT_ROWS.items()}


def glyph(ch: str) -> np.ndarray:
    ch = ch.upper()
    if ch in FONT:
        return FONT[ch]
    return np.array([[c == "1" for c in row] for row in _UNKNOWN])


def text_size(text: str, scale: int = 1) -> tuple[int, int]:
    if not text:
        return 0, 0
    return (len(text) * (GLYPH_W + 1) - 1) * scale, GLYPH_H * scale


def draw_text(img: GrayImage, text: str, x: int, y: int, value: int = 255, scale: int = 1) -> GrayImage:
    """Render ``text`` with its top-left corner at ``(x, y)``; clipped to the image."""
    out = as_gray(img).copy()
    h, w = out.shape
    for k, ch in enumerate(text):
        g = np.kron(glyph(ch), np.ones((scale, scale), dtype=bool))
        gx = x + k * (GLYPH_W + 1) * scale
        ys, xs = np.nonzero(g)
        ys = ys + y
        xs = xs + gx
        keep = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
        out[ys[keep], xs[keep]] = value
    return out


def draw_box(img: GrayImage, box: BoundingBox, value: int = 255) -> GrayImage:
    out = as_gray(img).copy()
    h, w = out.shape
    x0, x1 = max(box.x_min, 0), min(box.x_max, w - 1)
    y0, y1 = max(box.y_min, 0), min(box.y_max, h - 1)
    if x0 > x1 or y0 > y1:
        return out
    for y in (box.y_min, box.y_max):
        if 0 <= y < h:
            out[y, x0:x1 + 1] = value
    for x in (box.x_min, box.x_max):
        if 0 <= x < w:
            out[y0:y1 + 1, x] = value
    return out


def draw_cross(img: GrayImage, c: Centroid, arm: int = 4, value: int = 255) -> GrayImage:
    out = as_gray(img).copy()
    h, w = out.shape
    x = int(np.floor(c.cx + 0.5))
    y = int(np.floor(c.cy + 0.5))
    for d in range(-arm, arm + 1):
        if 0 <= y < h and 0 <= x + d < w:
            out[y, x + d] = value
        if 0 <= x < w and 0 <= y + d < h:
            out[y + d, x] = value
    return out


def annotate(img: GrayImage, box: BoundingBox | None = None, center: Centroid | None = None,
             lines: tuple[str, ...] = (), value: int = 255) -> GrayImage:
    """Box, centroid cross and stacked text lines starting at the top-left corner."""
    out = as_gray(img)
    if box is not None:
        out = draw_box(out, box, value)
    if center is not None:
        out = draw_cross(out, center, value=value)
    for k, line in enumerate(lines):
        out = draw_text(out, line, 2, 2 + k * (GLYPH_H + 2), value)
    if out is img:
        out = out.copy()
    return out
