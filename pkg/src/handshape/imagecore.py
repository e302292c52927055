"""Image containers, grayscale conversion, blurring, resampling and file I/O.

Images are plain numpy arrays: a gray image is an ``(H, W)`` ``uint8`` array,
an RGB image is ``(H, W, 3)`` ``uint8``. Every function here returns a new
array and never mutates its input.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

GrayImage = NDArray[np.uint8]
RgbImage = NDArray[np.uint8]

# ITU-R BT.601 luma weights
GRAY_WEIGHTS = (0.299, 0.587, 0.114)


class ImageFormatError(ValueError):
    """Raised for unreadable, malformed or unsupported image files."""


@dataclass(frozen=True)
class BlurSpec:
    kernel_size: int = 5
    sigma: float = 1.0

    def __post_init__(self):
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd and >= 1, got {self.kernel_size}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")


def as_gray(img) -> GrayImage:
    """Validate and coerce ``img`` into a 2-D uint8 array."""
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D gray image, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if np.any(arr < 0) or np.any(arr > 255):
            raise ValueError("gray intensities must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def round_half_up(x: NDArray) -> NDArray:
    return np.floor(x + 0.5)


def _to_uint8(x: NDArray) -> GrayImage:
    return np.clip(round_half_up(x), 0, 255).astype(np.uint8)


def to_grayscale(img: RgbImage) -> GrayImage:
    """Convert an RGB image to gray with BT.601 weights, rounding to nearest."""
    arr = np.asarray(img)
    if arr.ndim == 2:
        return as_gray(arr)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) RGB image, got shape {arr.shape}")
    wr, wg, wb = GRAY_WEIGHTS
    rgb = arr.astype(np.float64)
    return _to_uint8(wr * rgb[..., 0] + wg * rgb[..., 1] + wb * rgb[..., 2])


def gaussian_kernel(spec: BlurSpec) -> NDArray[np.float64]:
    """Sampled 2-D Gaussian of size ``kernel_size``, normalized to sum 1."""
    r = spec.kernel_size // 2
    ax = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * spec.sigma**2))
    return g / g.sum()


def gaussian_blur(img: GrayImage, spec: BlurSpec = BlurSpec()) -> GrayImage:
    """Gaussian blur with edge-replicated borders."""
    src = as_gray(img)
    k = spec.kernel_size
    if k == 1:
        return src.copy()
    kernel = gaussian_kernel(spec)
    r = k // 2
    padded = np.pad(src.astype(np.float64), r, mode="edge")
    h, w = src.shape
    acc = np.zeros((h, w), dtype=np.float64)
    for dy in range(k):
        for dx in range(k):
            acc += kernel[dy, dx] * padded[dy:dy + h, dx:dx + w]
    return _to_uint8(acc)


def scaled_size(width: int, height: int, scale: float) -> tuple[int, int]:
    """Output ``(width, height)`` of a resize by ``scale``."""
    w = max(1, int(round_half_up(np.float64(width) * scale)))
    h = max(1, int(round_half_up(np.float64(height) * scale)))
    return w, h


def _axis_weights(n_src: int, n_dst: int, scale: float):
    x = (np.arange(n_dst, dtype=np.float64) + 0.5) / scale - 0.5
    x = np.clip(x, 0.0, n_src - 1)
    x0 = np.floor(x).astype(np.intp)
    x1 = np.minimum(x0 + 1, n_src - 1)
    return x0, x1, x - x0


def resize_bilinear(img: GrayImage, scale: float) -> GrayImage:
    """Bilinear resize by ``scale`` using half-pixel-center coordinates.

    Source coordinates are ``(dst + 0.5) / scale - 0.5``, clamped to the image.
    """
    if not scale > 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    src = as_gray(img)
    h, w = src.shape
    out_w, out_h = scaled_size(w, h, scale)
    x0, x1, fx = _axis_weights(w, out_w, scale)
    y0, y1, fy = _axis_weights(h, out_h, scale)
    f = src.astype(np.float64)
    top = f[y0][:, x0] * (1.0 - fx) + f[y0][:, x1] * fx
    bot = f[y1][:, x0] * (1.0 - fx) + f[y1][:, x1] * fx
    return _to_uint8(top * (1.0 - fy)[:, None] + bot * fy[:, None])


# --- Netpbm / PNG I/O ---

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _parse_netpbm(data: bytes, path) -> np.ndarray:
    pos = 0
    fields = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise ImageFormatError(f"{path}: truncated header")
        fields.append(m.group(1))
        pos = m.end()
    magic = fields[0]
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"{path}: unsupported magic {magic!r} (need P5 or P6)")
    try:
        width, height, maxval = (int(f) for f in fields[1:])
    except ValueError:
        raise ImageFormatError(f"{path}: non-numeric header field") from None
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"{path}: only 8-bit maxval 255 is supported, got {maxval}")
    # exactly one whitespace byte separates header from raster
    if pos >= len(data) or data[pos:pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise ImageFormatError(f"{path}: missing whitespace after header")
    pos += 1
    channels = 1 if magic == b"P5" else 3
    n = width * height * channels
    payload = data[pos:pos + n]
    if len(payload) < n:
        raise ImageFormatError(f"{path}: pixel payload truncated ({len(payload)} of {n} bytes)")
    arr = np.frombuffer(payload, dtype=np.uint8)
    if channels == 1:
        return arr.reshape(height, width).copy()
    return arr.reshape(height, width, 3).copy()


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Load a PGM (P5), PPM (P6) or PNG file.

    Returns a 2-D array for gray files and ``(H, W, 3)`` for colour ones.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ImageFormatError(f"{path}: cannot read ({exc.strerror})") from exc
    if data[:2] in (b"P5", b"P6"):
        return _parse_netpbm(data, path)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _load_png(path)
    raise ImageFormatError(f"{path}: unrecognized image format")


def _load_png(path: Path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I", "F"):
            raise ImageFormatError(f"{path}: only 8-bit PNG is supported")
        if im.mode == "L":
            return np.array(im, dtype=np.uint8)
        return np.array(im.convert("RGB"), dtype=np.uint8)


def save_image(img: np.ndarray, path: str | os.PathLike) -> None:
    """Save as PGM/PPM (by array shape) or PNG when the suffix is ``.png``."""
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        raise ValueError("only uint8 images can be saved")
    if arr.ndim == 3 and arr.shape[2] != 3 or arr.ndim not in (2, 3):
        raise ValueError(f"unsupported image shape {arr.shape}")
    path = Path(path)
    if path.suffix.lower() == ".png":
        from PIL import Image

        Image.fromarray(arr).save(path)
        return
    magic = b"P5" if arr.ndim == 2 else b"P6"
    h, w = arr.shape[:2]
    header = magic + b"\n%d %d\n255\n" % (w, h)
    path.write_bytes(header + np.ascontiguousarray(arr).tobytes())


def gray_to_rgb(img: GrayImage) -> RgbImage:
    g = as_gray(img)
    return np.repeat(g[:, :, None], 3, axis=2)
