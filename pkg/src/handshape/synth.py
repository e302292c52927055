"""Deterministic synthetic hand shapes, templates and frame sequences.

Every shape is a union of a palm disk and finger capsules laid out on a
canvas spanning ``[-1, 1]`` in both axes (x right, y down):

* Rock: palm disk only, centre ``(0, 0.3)``, radius 0.5.
* Paper: palm plus five fingers.
* Scissors: palm plus two fingers in a V.
* ThumbsUp: palm plus one upright bar offset to the left.

Shapes are rendered with 4x4 supersampling as ``bg + coverage * (fg - bg)``.
A template is the shape rendered at ``template_size`` pixels; a frame built
with scale factor ``s`` contains the shape rendered at ``template_size / s``
pixels, so it is found by matching at image scale ``s``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .imagecore import GrayImage, save_image
from .matching import HAND_LABELS, ClassLabel, Template, write_manifest

PALM_CENTER = (0.0, 0.3)
PALM_RADIUS = 0.5

# (angle from vertical in degrees, negative = left; length from palm centre; radius)
_FINGERS = {
    ClassLabel.ROCK: (),
    ClassLabel.PAPER: ((-62, 0.85, 0.085), (-28, 1.1, 0.085), (-9, 1.2, 0.085), (10, 1.15, 0.085), (29, 1.0, 0.085)),
    ClassLabel.SCISSORS: ((-18, 1.15, 0.1), (18, 1.15, 0.1)),
    ClassLabel.THUMBS_UP: (),
}
# ThumbsUp bar: fixed segment endpoints and radius
_THUMB_BAR = ((-0.38, 0.1), (-0.38, -0.8), 0.13)

SUPERSAMPLE = 4
DEFAULT_TEMPLATE_SIZE = 80
DEFAULT_BACKGROUND = 60
DEFAULT_FOREGROUND = 200


def _segment_distance(x, y, p0, p1):
    (x0, y0), (x1, y1) = p0, p1
    dx, dy = x1 - x0, y1 - y0
    t = np.clip(((x - x0) * dx + (y - y0) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
    return np.hypot(x - (x0 + t * dx), y - (y0 + t * dy))


def _inside(kind: ClassLabel, x, y):
    cx, cy = PALM_CENTER
    hit = (x - cx) ** 2 + (y - cy) ** 2 <= PALM_RADIUS**2
    for angle, length, radius in _FINGERS[kind]:
        a = math.radians(angle)
        tip = (cx + length * math.sin(a), cy - length * math.cos(a))
        hit |= _segment_distance(x, y, PALM_CENTER, tip) <= radius
    if kind is ClassLabel.THUMBS_UP:
        p0, p1, radius = _THUMB_BAR
        hit |= _segment_distance(x, y, p0, p1) <= radius
    return hit


def coverage(kind: ClassLabel, size: int) -> np.ndarray:
    """Fraction of each pixel of a ``size`` x ``size`` canvas covered by the shape."""
    kind = ClassLabel(kind)
    if kind is ClassLabel.NO_HAND:
        raise ValueError("NoHand has no shape")
    n = size * SUPERSAMPLE
    c = (np.arange(n, dtype=np.float64) + 0.5) / n * 2.0 - 1.0
    inside = _inside(kind, c[None, :], c[:, None])
    return inside.reshape(size, SUPERSAMPLE, size, SUPERSAMPLE).mean(axis=(1, 3))


def render_shape(kind: ClassLabel, size: int, fg: int = DEFAULT_FOREGROUND, bg: int = DEFAULT_BACKGROUND) -> GrayImage:
    cov = coverage(kind, size)
    return np.floor(bg + cov * (fg - bg) + 0.5).astype(np.uint8)


def make_templates(size: int = DEFAULT_TEMPLATE_SIZE, fg: int = DEFAULT_FOREGROUND,
                   bg: int = DEFAULT_BACKGROUND, kinds: Sequence[ClassLabel] = HAND_LABELS) -> list[Template]:
    return [Template(k, render_shape(k, size, fg, bg)) for k in kinds]


def add_noise(img: np.ndarray, sigma: float, rng: np.random.Generator) -> GrayImage:
    if sigma <= 0:
        return img.astype(np.uint8)
    noisy = img.astype(np.float64) + rng.normal(0.0, sigma, img.shape)
    return np.clip(np.floor(noisy + 0.5), 0, 255).astype(np.uint8)


def paste(canvas: np.ndarray, patch: np.ndarray, x: int, y: int) -> np.ndarray:
    out = canvas.copy()
    h, w = patch.shape
    out[y:y + h, x:x + w] = patch
    return out


def shape_size(template_size: int, scale: float) -> int:
    return int(math.floor(template_size / scale + 0.5))


@dataclass(frozen=True)
class SynthSpec:
    kind: ClassLabel = ClassLabel.ROCK
    width: int = 320
    height: int = 240
    template_size: int = DEFAULT_TEMPLATE_SIZE
    foreground: int = DEFAULT_FOREGROUND
    background: int = DEFAULT_BACKGROUND
    noise_sigma: float = 0.0
    scale: float = 1.0
    start: tuple[int, int] = (10, 40)
    step: tuple[int, int] = (20, 0)
    frames: int = 5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", ClassLabel.parse(self.kind) if isinstance(self.kind, str) else self.kind)
        if self.kind is ClassLabel.NO_HAND:
            raise ValueError("synthetic sequences need a hand class")
        if self.noise_sigma < 0 or not self.scale > 0 or self.frames < 1:
            raise ValueError("noise_sigma >= 0, scale > 0 and frames >= 1 are required")
        size = shape_size(self.template_size, self.scale)
        for k in range(self.frames):
            x = self.start[0] + k * self.step[0]
            y = self.start[1] + k * self.step[1]
            if x < 0 or y < 0 or x + size > self.width or y + size > self.height:
                raise ValueError(f"frame {k}: a {size}px shape at ({x}, {y}) leaves the {self.width}x{self.height} canvas")


def background_image(width: int, height: int, level: int, sigma: float, rng: np.random.Generator) -> GrayImage:
    return add_noise(np.full((height, width), level, dtype=np.uint8), sigma, rng)


def sequence(spec: SynthSpec) -> tuple[GrayImage, list[GrayImage]]:
    """Background image and a translating-shape frame sequence."""
    rng = np.random.default_rng(spec.seed)
    bg = background_image(spec.width, spec.height, spec.background, spec.noise_sigma, rng)
    flat = np.full((spec.height, spec.width), spec.background, dtype=np.uint8)
    shape = render_shape(spec.kind, shape_size(spec.template_size, spec.scale), spec.foreground, spec.background)
    frames = []
    for k in range(spec.frames):
        x = spec.start[0] + k * spec.step[0]
        y = spec.start[1] + k * spec.step[1]
        frames.append(add_noise(paste(flat, shape, x, y), spec.noise_sigma, rng))
    return bg, frames


@dataclass(frozen=True)
class Sample:
    label: ClassLabel
    frame: GrayImage = field(repr=False)
    scale: float
    x: int
    y: int


def corpus(per_class: int, scales: Sequence[float] = (0.5, 0.75, 1.0), noise_sigma: float = 5.0,
           seed: int = 0, width: int = 320, height: int = 240,
           template_size: int = DEFAULT_TEMPLATE_SIZE) -> tuple[GrayImage, Iterator[Sample]]:
    """Shared background plus ``per_class`` randomly placed frames per class.

    Frames are yielded class by class in ``HAND_LABELS`` order.
    """
    rng = np.random.default_rng(seed)
    bg = background_image(width, height, DEFAULT_BACKGROUND, noise_sigma, rng)
    flat = np.full((height, width), DEFAULT_BACKGROUND, dtype=np.uint8)
    shapes = {}

    def gen():
        for label in HAND_LABELS:
            for _ in range(per_class):
                s = float(scales[int(rng.integers(len(scales)))])
                size = shape_size(template_size, s)
                if (label, size) not in shapes:
                    shapes[label, size] = render_shape(label, size)
                x = int(rng.integers(0, width - size + 1))
                y = int(rng.integers(0, height - size + 1))
                frame = add_noise(paste(flat, shapes[label, size], x, y), noise_sigma, rng)
                yield Sample(label, frame, s, x, y)

    return bg, gen()


def write_templates(out_dir: Path, templates: Sequence[Template]) -> Path:
    tdir = out_dir / "templates"
    tdir.mkdir(parents=True, exist_ok=True)
    entries = []
    for t in templates:
        name = f"{t.label.value.lower()}.pgm"
        save_image(t.image, tdir / name)
        entries.append((t.label, f"templates/{name}"))
    manifest = out_dir / "templates.json"
    write_manifest(manifest, entries)
    return manifest


def write_labels(path: Path, rows: Sequence[tuple[str, ClassLabel]]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["frame", "label"])
        for name, label in rows:
            writer.writerow([name, label.value])


def write_sequence(spec: SynthSpec, out_dir: str | Path) -> Path:
    """Write templates, manifest, background, frames and labels under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_templates(out, make_templates(spec.template_size, spec.foreground, spec.background))
    bg, frames = sequence(spec)
    save_image(bg, out / "background.pgm")
    fdir = out / "frames"
    fdir.mkdir(exist_ok=True)
    rows = []
    for k, frame in enumerate(frames):
        name = f"frame_{k:04d}.pgm"
        save_image(frame, fdir / name)
        rows.append((f"frames/{name}", spec.kind))
    write_labels(out / "labels.csv", rows)
    return out


def write_corpus(out_dir: str | Path, per_class: int, scales: Sequence[float] = (0.5, 0.75, 1.0),
                 noise_sigma: float = 5.0, seed: int = 0) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_templates(out, make_templates())
    bg, samples = corpus(per_class, scales, noise_sigma, seed)
    save_image(bg, out / "background.pgm")
    fdir = out / "frames"
    fdir.mkdir(exist_ok=True)
    rows = []
    for k, sample in enumerate(samples):
        name = f"frame_{k:04d}.pgm"
        save_image(sample.frame, fdir / name)
        rows.append((f"frames/{name}", sample.label))
    write_labels(out / "labels.csv", rows)
    return out
