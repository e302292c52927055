"""Normalized cross-correlation and multiscale template classification.

The correlation at offset ``(u, v)`` (``u`` = column, ``v`` = row of the
window's top-left corner) is the zero-mean NCC between the template and the
image window, with the window mean taken per offset. Windows or templates with
zero variance score 0.

Sums are evaluated directly (no FFT). With 8-bit data every window sum is an
integer, and the numerator and both variance terms are formed from exact
integer sums, so only the final square root and division round.
"""
from __future__ import annotations

import enum
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from numpy.typing import NDArray

from .imagecore import BlurSpec, GrayImage, as_gray, gaussian_blur, load_image, resize_bilinear, to_grayscale

DEFAULT_ACCEPT_THRESHOLD = 0.74
DEFAULT_SCALES = tuple(round(0.1 * k, 10) for k in range(1, 11))


class ClassLabel(str, enum.Enum):
    ROCK = "Rock"
    PAPER = "Paper"
    SCISSORS = "Scissors"
    THUMBS_UP = "ThumbsUp"
    NO_HAND = "NoHand"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "ClassLabel":
        key = text.strip().replace(" ", "").replace("_", "").replace("-", "").lower()
        for label in cls:
            if label.value.lower() == key:
                return label
        raise ValueError(f"unknown class label {text!r}")


HAND_LABELS = (ClassLabel.ROCK, ClassLabel.PAPER, ClassLabel.SCISSORS, ClassLabel.THUMBS_UP)


class NoValidScaleError(ValueError):
    """The template does not fit inside the frame at any configured scale."""


@dataclass(frozen=True)
class Template:
    label: ClassLabel
    image: GrayImage = field(repr=False)

    def __post_init__(self):
        img = as_gray(self.image)
        if img.shape[0] < 2 or img.shape[1] < 2:
            raise ValueError(f"template must be at least 2x2, got {img.shape[1]}x{img.shape[0]}")
        if self.label is ClassLabel.NO_HAND:
            raise ValueError("NoHand cannot be a template label")
        object.__setattr__(self, "image", img)


@dataclass(frozen=True)
class MatchResult:
    label: ClassLabel
    score: float
    u: int
    v: int
    scale: float
    # template footprint in original-frame pixels
    width: int = 0
    height: int = 0


@dataclass(frozen=True)
class MatchConfig:
    scales: tuple[float, ...] = DEFAULT_SCALES
    accept_threshold: float = DEFAULT_ACCEPT_THRESHOLD
    template_blur: BlurSpec | None = BlurSpec()
    blur_frame: bool = False

    def __post_init__(self):
        scales = tuple(float(s) for s in self.scales)
        if not scales:
            raise ValueError("scales must be nonempty")
        if any(not 0 < s <= 1 for s in scales):
            raise ValueError(f"scales must lie in (0, 1], got {scales}")
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise ValueError(f"scales must be strictly increasing, got {scales}")
        object.__setattr__(self, "scales", scales)


def scale_range(start: float = 0.1, stop: float = 1.0, step: float = 0.1) -> tuple[float, ...]:
    """Inclusive arithmetic scale list, rounded to suppress float drift."""
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + k * step, 10) for k in range(n))


# --- correlation kernels ---

def _window_sums(img: NDArray[np.int64], h: int, w: int) -> NDArray[np.int64]:
    s = np.zeros((img.shape[0] + 1, img.shape[1] + 1), dtype=np.int64)
    s[1:, 1:] = img.cumsum(0).cumsum(1)
    return s[h:, w:] - s[:-h, w:] - s[h:, :-w] + s[:-h, :-w]


def _gemm_dtype(w: int):
    # a w-term row dot product of 8-bit values stays an exact float32 integer
    return np.float32 if w * 255 * 255 < 2**24 else np.float64


def window_columns(img: NDArray, w: int) -> NDArray:
    """Every width-``w`` horizontal window of every row, as rows of a matrix."""
    H, W = img.shape
    src = img.astype(_gemm_dtype(w), copy=False)
    return np.ascontiguousarray(sliding_window_view(src, w, axis=1)).reshape(H * (W - w + 1), w)


def _cross_correlate(img: NDArray, tpl: NDArray, cols: NDArray | None = None) -> NDArray[np.float64]:
    """Valid-mode sum of I*T over every window.

    Each image row is unrolled into its width-``w`` windows once and
    multiplied against all template rows in one matrix product; the per-row
    partial sums are then added along the diagonal in double precision.
    """
    H, W = img.shape
    h, w = tpl.shape
    oh, ow = H - h + 1, W - w + 1
    if cols is None:
        cols = window_columns(img, w)
    rows = (tpl.astype(cols.dtype) @ cols.T).reshape(h, H, ow)
    out = rows[0, 0:oh].astype(np.float64)
    for i in range(1, h):
        out += rows[i, i:i + oh]
    return out


class _Prepared:
    """Per-template constants reused across scales."""

    def __init__(self, tpl: GrayImage):
        t = tpl.astype(np.int64)
        self.shape = tpl.shape
        self.n = tpl.size
        self.image = tpl
        self.t1 = int(t.sum())
        self.var = self.n * int((t * t).sum()) - self.t1 * self.t1


def _ncc(image: GrayImage, prep: _Prepared, cache: dict | None = None) -> NDArray[np.float64]:
    # cache holds per-image arrays shared by every template at one scale
    h, w = prep.shape
    H, W = image.shape
    if h > H or w > W:
        raise ValueError(f"template {w}x{h} larger than image {W}x{H}")
    if cache is None:
        cache = {}
    if "i1" not in cache:
        i64 = image.astype(np.int64)
        cache["i1"] = i64
        cache["i2"] = i64 * i64
    if ("cols", w) not in cache:
        cache["cols", w] = window_columns(image, w)
    if ("stats", h, w) not in cache:
        s1 = _window_sums(cache["i1"], h, w)
        s2 = _window_sums(cache["i2"], h, w)
        cache["stats", h, w] = (s1, prep.n * s2 - s1 * s1)
    s1, var_i = cache["stats", h, w]
    cross = _cross_correlate(image, prep.image, cache["cols", w])
    num = prep.n * cross - s1.astype(np.float64) * prep.t1
    den = np.sqrt(var_i.astype(np.float64)) * math.sqrt(prep.var)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return np.clip(out, -1.0, 1.0)


def ncc_map(image: GrayImage, template: GrayImage) -> NDArray[np.float64]:
    """Correlation map of shape ``(H - h + 1, W - w + 1)``, indexed ``[v, u]``."""
    img = as_gray(image)
    tpl = as_gray(template)
    return _ncc(img, _Prepared(tpl))


# --- multiscale search ---

def _search(frame: GrayImage, templates: Sequence[Template], cfg: MatchConfig) -> list[MatchResult | None]:
    preps = [_Prepared(t.image) for t in templates]
    best: list[MatchResult | None] = [None] * len(templates)
    for s in cfg.scales:
        scaled = frame if s == 1.0 else resize_bilinear(frame, s)
        sh, sw = scaled.shape
        cache: dict = {}
        for k, (tpl, prep) in enumerate(zip(templates, preps)):
            h, w = prep.shape
            if h > sh or w > sw:
                continue
            r = _ncc(scaled, prep, cache)
            idx = int(np.argmax(r))
            score = float(r.flat[idx])
            # ascending scales + strict comparison keeps the smaller scale on ties
            if best[k] is None or score > best[k].score:
                v, u = divmod(idx, r.shape[1])
                best[k] = MatchResult(
                    label=tpl.label,
                    score=score,
                    u=int(math.floor(u / s + 0.5)),
                    v=int(math.floor(v / s + 0.5)),
                    scale=s,
                    width=int(math.floor(w / s + 0.5)),
                    height=int(math.floor(h / s + 0.5)),
                )
    return best


def _prepare_frame(frame: GrayImage, cfg: MatchConfig) -> GrayImage:
    img = to_grayscale(frame) if np.ndim(frame) == 3 else as_gray(frame)
    if cfg.blur_frame and cfg.template_blur is not None:
        img = gaussian_blur(img, cfg.template_blur)
    return img


def best_match(frame: GrayImage, template: Template, cfg: MatchConfig = MatchConfig()) -> MatchResult:
    """Maximum correlation over offsets and scales.

    The frame is resized by each scale; the template is used as given.
    Ties go to the smaller scale, then smaller ``v``, then smaller ``u``.
    """
    img = _prepare_frame(frame, cfg)
    result = _search(img, [template], cfg)[0]
    if result is None:
        raise NoValidScaleError(
            f"template {template.image.shape[1]}x{template.image.shape[0]} does not fit "
            f"frame {img.shape[1]}x{img.shape[0]} at any of scales {cfg.scales}"
        )
    return result


def blur_templates(templates: Sequence[Template], spec: BlurSpec | None) -> list[Template]:
    if spec is None:
        return list(templates)
    return [Template(t.label, gaussian_blur(t.image, spec)) for t in templates]


def classify(frame: GrayImage, templates: Sequence[Template],
             cfg: MatchConfig = MatchConfig()) -> tuple[ClassLabel, list[MatchResult]]:
    """Return the label of the best-scoring template plus every template's result.

    Templates are blurred with ``cfg.template_blur`` first. A best score
    strictly below ``cfg.accept_threshold`` yields ``ClassLabel.NO_HAND``;
    equal scores resolve to the earlier template.
    """
    if not templates:
        raise ValueError("template list is empty")
    img = _prepare_frame(frame, cfg)
    blurred = blur_templates(templates, cfg.template_blur)
    results = _search(img, blurred, cfg)
    missing = [t.label.value for t, r in zip(templates, results) if r is None]
    if missing:
        raise NoValidScaleError(f"templates {missing} do not fit the frame at any scale")
    top = 0
    for k, r in enumerate(results):
        if r.score > results[top].score:
            top = k
    if results[top].score < cfg.accept_threshold:
        return ClassLabel.NO_HAND, results
    return results[top].label, results


# --- template manifests ---

def load_manifest(path: str | os.PathLike) -> list[Template]:
    """Read a JSON manifest ``[{"label": ..., "image": ...}, ...]``.

    Image paths are relative to the manifest's directory. The list order is
    the tie-break order used by :func:`classify`.
    """
    path = Path(path)
    try:
        entries = json.loads(path.read_text())
    except OSError as exc:
        raise FileNotFoundError(f"cannot read template manifest {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from exc
    if isinstance(entries, dict):
        entries = entries.get("templates")
    if not isinstance(entries, list):
        raise ValueError(f"{path}: expected a list of templates")
    templates = []
    for entry in entries:
        try:
            label = ClassLabel.parse(entry["label"])
            img_path = path.parent / entry["image"]
        except (KeyError, TypeError):
            raise ValueError(f"{path}: each template needs 'label' and 'image'") from None
        templates.append(Template(label, to_grayscale(load_image(img_path))))
    if not templates:
        raise ValueError(f"{path}: manifest lists no templates")
    return templates


def write_manifest(path: str | os.PathLike, entries: Sequence[tuple[ClassLabel, str]]) -> None:
    doc = [{"label": label.value, "image": str(img)} for label, img in entries]
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
