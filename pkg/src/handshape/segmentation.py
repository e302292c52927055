"""Background subtraction, binarization and contour/region extraction."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from .imagecore import BlurSpec, GrayImage, as_gray, gaussian_blur

BinaryMask = NDArray[np.uint8]

DEFAULT_BINARY_THRESHOLD = 25

# Clockwise (on screen, y down) starting from west.
_MOORE = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))
_MOORE_INDEX = {d: i for i, d in enumerate(_MOORE)}
# Freeman chain code: 0 = east, counter-clockwise with y pointing up.
_FREEMAN = {(1, 0): 0, (1, -1): 1, (0, -1): 2, (-1, -1): 3, (-1, 0): 4, (-1, 1): 5, (0, 1): 6, (1, 1): 7}
_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class Contour:
    """Closed outer boundary of one 8-connected component.

    ``points`` are ``(x, y)`` pixels in trace order without repeating the
    start; ``chain_code[k]`` is the Freeman direction from ``points[k]`` to
    ``points[k + 1]`` (wrapping). A single-pixel contour has chain code ``[0]``.
    """

    points: tuple[tuple[int, int], ...]
    chain_code: tuple[int, ...]
    # mask the contour was traced on; needed to recover holes when filling
    source: BinaryMask | None = field(default=None, repr=False, compare=False)

    @property
    def start(self) -> tuple[int, int]:
        return self.points[0]

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Region:
    mask: BinaryMask = field(repr=False)
    area: int
    contour: Contour


def abs_diff(background: GrayImage, frame: GrayImage) -> GrayImage:
    b = as_gray(background)
    f = as_gray(frame)
    if b.shape != f.shape:
        raise ValueError(f"dimension mismatch: background {b.shape[::-1]} vs frame {f.shape[::-1]}")
    return np.abs(b.astype(np.int16) - f.astype(np.int16)).astype(np.uint8)


def threshold_binary(diff: GrayImage, t: int = DEFAULT_BINARY_THRESHOLD) -> BinaryMask:
    """255 where ``diff > t`` (strictly), else 0."""
    d = as_gray(diff)
    return np.where(d > t, 255, 0).astype(np.uint8)


def as_mask(mask) -> BinaryMask:
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got shape {m.shape}")
    return np.where(m != 0, 255, 0).astype(np.uint8)


def trace_boundary(fg: NDArray[np.bool_], start: tuple[int, int]) -> Contour:
    """Moore-neighbour trace clockwise from ``start``.

    ``start`` must be the top-most, then left-most pixel of its component, so
    its west neighbour is background. Tracing stops when the start pixel is
    about to be left along the same first move again (Jacob's criterion).
    """
    h, w = fg.shape

    def on(x, y):
        return 0 <= x < w and 0 <= y < h and fg[y, x]

    def step(p, back):
        # search clockwise around p, beginning just after the backtrack cell
        px, py = p
        b = _MOORE_INDEX[(back[0] - px, back[1] - py)]
        prev = back
        for k in range(1, 9):
            dx, dy = _MOORE[(b + k) % 8]
            c = (px + dx, py + dy)
            if on(*c):
                return c, prev
            prev = c
        return None, None

    sx, sy = start
    first, back = step(start, (sx - 1, sy))
    if first is None:
        return Contour(((sx, sy),), (0,))
    points = [start]
    p = first
    limit = 4 * int(fg.sum()) + 8
    while True:
        nxt, back = step(p, back)
        if p == start and nxt == first:
            break
        points.append(p)
        p = nxt
        if len(points) > limit:
            raise RuntimeError(f"contour trace from {start} did not close")
    codes = tuple(
        _FREEMAN[(points[(k + 1) % len(points)][0] - points[k][0],
                  points[(k + 1) % len(points)][1] - points[k][1])]
        for k in range(len(points))
    )
    return Contour(tuple(points), codes)


def find_contours(mask: BinaryMask) -> list[Contour]:
    """One outer contour per 8-connected component, in raster order of start pixels."""
    m = as_mask(mask)
    fg = m == 255
    labels, n = ndimage.label(fg, structure=_EIGHT)
    if n == 0:
        return []
    # first raster index of each label is its top-most, left-most pixel
    flat = labels.ravel()
    idx = np.flatnonzero(flat)
    ids, first = np.unique(flat[idx], return_index=True)
    starts = np.sort(idx[first])
    w = m.shape[1]
    contours = []
    for s in starts:
        y, x = divmod(int(s), w)
        c = trace_boundary(fg, (x, y))
        contours.append(Contour(c.points, c.chain_code, m))
    return contours


def _flood_component(fg: NDArray[np.bool_], start: tuple[int, int]) -> NDArray[np.bool_]:
    labels, _ = ndimage.label(fg, structure=_EIGHT)
    sx, sy = start
    return labels == labels[sy, sx]


def fill_region(contour: Contour, width: int, height: int) -> Region:
    """The whole 8-connected component bounded by ``contour``.

    Holes stay holes: the fill follows the mask the contour was traced on.
    Without a source mask, the component is rebuilt from the boundary alone
    by filling everything the closed trace encloses.
    """
    pts = np.asarray(contour.points, dtype=np.intp).reshape(-1, 2)
    if pts.size == 0:
        raise ValueError("empty contour")
    if pts[:, 0].min() < 0 or pts[:, 1].min() < 0 or pts[:, 0].max() >= width or pts[:, 1].max() >= height:
        raise ValueError(f"contour points fall outside a {width}x{height} mask")
    if contour.source is not None:
        if contour.source.shape != (height, width):
            raise ValueError("contour was traced on a mask of different dimensions")
        fg = contour.source == 255
        sx, sy = contour.start
        if not fg[sy, sx]:
            raise ValueError("contour start is not a foreground pixel of its source mask")
        comp = _flood_component(fg, contour.start)
    else:
        comp = _enclosed(pts, width, height)
    mask = np.where(comp, 255, 0).astype(np.uint8)
    return Region(mask, int(comp.sum()), contour)


def _enclosed(pts: NDArray[np.intp], width: int, height: int) -> NDArray[np.bool_]:
    # boundary pixels plus everything the exterior flood cannot reach
    wall = np.zeros((height + 2, width + 2), dtype=bool)
    wall[pts[:, 1] + 1, pts[:, 0] + 1] = True
    outside, _ = ndimage.label(~wall)  # 4-connected background
    return (outside != outside[0, 0])[1:-1, 1:-1]


def regions(mask: BinaryMask) -> list[Region]:
    m = as_mask(mask)
    h, w = m.shape
    return [fill_region(c, w, h) for c in find_contours(m)]


def largest_region(mask: BinaryMask) -> Region | None:
    """Region of maximal area; earlier start pixel wins ties; None if empty."""
    m = as_mask(mask)
    fg = m == 255
    labels, n = ndimage.label(fg, structure=_EIGHT)
    if n == 0:
        return None
    areas = np.bincount(labels.ravel())[1:]
    flat = labels.ravel()
    idx = np.flatnonzero(flat)
    ids, first = np.unique(flat[idx], return_index=True)
    starts = idx[first]
    # order: larger area, then earlier start pixel
    best = min(range(n), key=lambda k: (-int(areas[ids[k] - 1]), int(starts[k])))
    y, x = divmod(int(starts[best]), m.shape[1])
    c = trace_boundary(fg, (x, y))
    comp = labels == ids[best]
    contour = Contour(c.points, c.chain_code, m)
    return Region(np.where(comp, 255, 0).astype(np.uint8), int(comp.sum()), contour)


@dataclass(frozen=True)
class SegmentConfig:
    threshold: int = DEFAULT_BINARY_THRESHOLD
    diff_blur: BlurSpec | None = BlurSpec()

    def __post_init__(self):
        if not 0 <= self.threshold <= 255:
            raise ValueError(f"binary threshold must be in [0, 255], got {self.threshold}")


def segment(background: GrayImage, frame: GrayImage, cfg: SegmentConfig = SegmentConfig()) -> BinaryMask:
    """Difference, optional blur, then binary threshold."""
    diff = abs_diff(background, frame)
    if cfg.diff_blur is not None:
        diff = gaussian_blur(diff, cfg.diff_blur)
    return threshold_binary(diff, cfg.threshold)
