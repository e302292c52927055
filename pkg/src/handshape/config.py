"""Run configuration: documented defaults < JSON config file < command-line flags."""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .imagecore import BlurSpec
from .matching import DEFAULT_ACCEPT_THRESHOLD, DEFAULT_SCALES, MatchConfig, scale_range
from .segmentation import DEFAULT_BINARY_THRESHOLD, SegmentConfig
from .tracking import DEFAULT_AREA_THRESHOLD, DEFAULT_MOTION_THRESHOLD, PipelineConfig, TrackerState

FIRST_FRAME = "first-frame"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    templates: str | None = None
    background: str = FIRST_FRAME
    binary_threshold: int = DEFAULT_BINARY_THRESHOLD
    accept_threshold: float = DEFAULT_ACCEPT_THRESHOLD
    scales: tuple[float, ...] = DEFAULT_SCALES
    blur_kernel: int = 5
    blur_sigma: float = 1.0
    blur_frame: bool = False
    blur_diff: bool = True
    motion_threshold: float = DEFAULT_MOTION_THRESHOLD
    area_threshold: int = DEFAULT_AREA_THRESHOLD
    euclidean_motion: bool = False
    include_nohand: bool = False
    out: str = "out"
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.binary_threshold <= 255:
            raise ConfigError(f"binary_threshold must be in [0, 255], got {self.binary_threshold}")
        if not -1.0 <= self.accept_threshold <= 1.0:
            raise ConfigError(f"accept_threshold must be in [-1, 1], got {self.accept_threshold}")
        if self.motion_threshold <= 0 or self.area_threshold <= 0:
            raise ConfigError("motion_threshold and area_threshold must be > 0")
        try:
            self.pipeline()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def blur(self) -> BlurSpec:
        return BlurSpec(self.blur_kernel, self.blur_sigma)

    def match(self) -> MatchConfig:
        return MatchConfig(tuple(self.scales), self.accept_threshold, self.blur, self.blur_frame)

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(
            match=self.match(),
            segment=SegmentConfig(self.binary_threshold, self.blur if self.blur_diff else None),
            tracker=TrackerState(None, self.motion_threshold, self.area_threshold, self.euclidean_motion),
        )


FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def parse_scales(value) -> tuple[float, ...]:
    """Accept a list, a comma list ``"0.5,1.0"`` or a range ``"0.1:1.0:0.1"``."""
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    text = str(value).strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3:
            raise ConfigError(f"scale range must be start:stop:step, got {text!r}")
        return scale_range(*parts)
    return tuple(float(p) for p in text.split(",") if p.strip())


_BOOL = {"blur_frame", "blur_diff", "euclidean_motion", "include_nohand"}
_INT = {"binary_threshold", "blur_kernel", "area_threshold", "seed"}
_FLOAT = {"accept_threshold", "blur_sigma", "motion_threshold"}


def _coerce(name: str, value: Any) -> Any:
    if name == "scales":
        return parse_scales(value)
    if name in _BOOL:
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{name} must be true or false, got {value!r}")
    try:
        if name in _INT:
            if isinstance(value, bool) or not float(value).is_integer():
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            return int(float(value))
        if name in _FLOAT:
            if isinstance(value, bool):
                raise ConfigError(f"{name} must be a number, got {value!r}")
            return float(value)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    return None if value is None else str(value)


def load_config_file(path: str | os.PathLike) -> dict[str, Any]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a flat JSON object")
    unknown = sorted(set(doc) - set(FIELDS))
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    base = path.parent
    out = {}
    for k, v in doc.items():
        if isinstance(v, (dict, list)) and k != "scales":
            raise ConfigError(f"{path}: {k} must be a scalar value")
        out[k] = _coerce(k, v)
        # relative paths in a config file are relative to the file
        if k in ("templates", "out") and out[k] is not None and not Path(out[k]).is_absolute():
            out[k] = str(base / out[k])
        if k == "background" and out[k] != FIRST_FRAME and not Path(out[k]).is_absolute():
            out[k] = str(base / out[k])
    return out


def resolve(config_path: str | os.PathLike | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Layer the config file and then non-None overrides over the defaults."""
    values: dict[str, Any] = {}
    if config_path is not None:
        values.update(load_config_file(config_path))
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k not in FIELDS:
            raise ConfigError(f"unknown setting {k!r}")
        values[k] = _coerce(k, v)
    return RunConfig(**values)
