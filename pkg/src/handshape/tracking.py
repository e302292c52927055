"""Centroid tracking, motion rule, area safeguard and the per-frame pipeline."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .imagecore import GrayImage, as_gray, to_grayscale
from .matching import ClassLabel, MatchConfig, MatchResult, Template, classify
from .moments import BoundingBox, Centroid, bounding_box, centroid
from .segmentation import Region, SegmentConfig, largest_region, segment

NO_HAND_MESSAGE = "No Hand Detected"
ROCK_MESSAGE = "Don't hit me with that rock!"
PAPER_MESSAGE = "Bye!"

DEFAULT_MOTION_THRESHOLD = 15.0
DEFAULT_AREA_THRESHOLD = 1000

# why a frame was reported as NoHand
REASON_NO_REGION = "no_region"
REASON_SMALL_AREA = "small_area"
REASON_LOW_SCORE = "low_score"


@dataclass(frozen=True)
class TrackerState:
    prev_centroid: Centroid | None = None
    motion_threshold: float = DEFAULT_MOTION_THRESHOLD
    area_threshold: int = DEFAULT_AREA_THRESHOLD
    euclidean: bool = False

    def __post_init__(self):
        if not self.motion_threshold > 0 or not self.area_threshold > 0:
            raise ValueError("motion and area thresholds must be > 0")


@dataclass(frozen=True)
class FrameDecision:
    label: ClassLabel
    moving: bool = False
    message: str | None = None
    box: BoundingBox | None = None
    centroid: Centroid | None = None
    score: float | None = None
    reason: str | None = None
    index: int = 0
    frame: str | None = None
    match: MatchResult | None = field(default=None, repr=False, compare=False)

    def record(self) -> dict:
        # key order is the log's field order
        return {
            "index": self.index,
            "frame": self.frame,
            "label": self.label.value,
            "score": None if self.score is None else round(self.score, 6),
            "moving": self.moving,
            "message": self.message,
            "box": None if self.box is None else [self.box.x_min, self.box.y_min, self.box.x_max, self.box.y_max],
            "centroid": None if self.centroid is None else [round(self.centroid.cx, 6), round(self.centroid.cy, 6)],
            "reason": self.reason,
        }

    def to_json(self) -> str:
        return json.dumps(self.record(), separators=(", ", ": "))


def _no_hand(reason: str) -> FrameDecision:
    return FrameDecision(ClassLabel.NO_HAND, False, NO_HAND_MESSAGE, reason=reason)


def update(state: TrackerState, region: Region | None, label: ClassLabel) -> tuple[TrackerState, FrameDecision]:
    """Advance the tracker by one frame.

    A missing region, an area below ``area_threshold`` or a NoHand label all
    produce a NoHand decision and clear the stored centroid. Otherwise the hand
    is moving when the horizontal centroid shift exceeds ``motion_threshold``.
    """
    cleared = replace(state, prev_centroid=None)
    if region is None:
        return cleared, _no_hand(REASON_NO_REGION)
    if region.area < state.area_threshold:
        return cleared, _no_hand(REASON_SMALL_AREA)
    if label is ClassLabel.NO_HAND:
        return cleared, _no_hand(REASON_LOW_SCORE)

    c = centroid(region)
    moving = False
    prev = state.prev_centroid
    if prev is not None:
        if state.euclidean:
            shift = math.hypot(c.cx - prev.cx, c.cy - prev.cy)
        else:
            shift = abs(c.cx - prev.cx)
        moving = shift > state.motion_threshold
    message = None
    if moving and label is ClassLabel.ROCK:
        message = ROCK_MESSAGE
    elif moving and label is ClassLabel.PAPER:
        message = PAPER_MESSAGE
    decision = FrameDecision(label, moving, message, bounding_box(region.contour), c)
    return replace(state, prev_centroid=c), decision


@dataclass(frozen=True)
class PipelineConfig:
    match: MatchConfig = MatchConfig()
    segment: SegmentConfig = SegmentConfig()
    tracker: TrackerState = TrackerState()


def _gray(frame) -> GrayImage:
    return to_grayscale(frame) if np.ndim(frame) == 3 else as_gray(frame)


def process_frame(state: TrackerState, frame, background: GrayImage, templates: Sequence[Template],
                  cfg: PipelineConfig) -> tuple[TrackerState, FrameDecision]:
    """Subtract, threshold, pick the largest region, classify and track one frame."""
    gray = _gray(frame)
    region = largest_region(segment(background, gray, cfg.segment))
    if region is None or region.area < state.area_threshold:
        # segmentation already decides NoHand; skip the costly match
        return update(state, region, ClassLabel.NO_HAND)
    label, results = classify(gray, templates, cfg.match)
    top = max(results, key=lambda r: r.score)  # first maximum, as in classify
    state, decision = update(state, region, label)
    return state, replace(decision, score=top.score, match=top)


def run_pipeline(frames: Iterable, background: GrayImage, templates: Sequence[Template],
                 cfg: PipelineConfig = PipelineConfig(), names: Sequence[str] | None = None) -> list[FrameDecision]:
    """Process ``frames`` in order; one decision per frame."""
    if not templates:
        raise ValueError("template list is empty")
    bg = _gray(background)
    state = cfg.tracker
    decisions = []
    for k, frame in enumerate(frames):
        gray = _gray(frame)
        if gray.shape != bg.shape:
            raise ValueError(
                f"frame {k} is {gray.shape[1]}x{gray.shape[0]}, background is {bg.shape[1]}x{bg.shape[0]}"
            )
        state, decision = process_frame(state, gray, bg, templates, cfg)
        decisions.append(replace(decision, index=k, frame=None if names is None else names[k]))
    return decisions
