"""Training targets and the stacked-frame input layout.

Ball targets are a pair of 1-D Gaussian profiles (one per axis, peak 1 at the ball
centre, all zeros when there is no ball). Event targets are smooth probabilities
``sin((4 - |n|) * pi / 8)`` for a frame ``n`` frames away from a labeled event, zero
for ``|n| >= 4``. Event targets attach to the middle frame of the stack, ball and
segmentation targets to the last.
"""
from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Literal

import cv2
import numpy as np
import torch

from .geometry import ResolutionConfig, round_half_away

EventType = Literal["bounce", "net"]
EVENT_TYPES: tuple[EventType, ...] = ("bounce", "net")
SEG_CLASSES: tuple[str, ...] = ("human", "table", "scoreboard")

EVENT_SUPPORT = 4
CLIP_LENGTH = 25
CLIP_EVENT_INDEX = 12
DEFAULT_NUM_FRAMES = 9
SIGMA_GLOBAL = 1.25
SIGMA_LOCAL = 7.5


@dataclass
class BallTarget:
    vx: np.ndarray
    vy: np.ndarray
    present: bool


@dataclass(frozen=True)
class EventTarget:
    bounce: float = 0.0
    net: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.bounce, self.net], dtype=np.float32)

    def merge(self, other: EventTarget) -> EventTarget:
        """Element-wise maximum, used when several events fall near one frame"""
        return EventTarget(bounce=max(self.bounce, other.bounce), net=max(self.net, other.net))


@dataclass
class SegTarget:
    """Binary class maps (human, table, scoreboard), shape (3, h1, w1)"""
    masks: np.ndarray

    def __post_init__(self) -> None:
        if self.masks.ndim != 3 or self.masks.shape[0] != len(SEG_CLASSES):
            raise ValueError(f"expected masks of shape (3, h, w), got {self.masks.shape}")

    @classmethod
    def empty(cls, cfg: ResolutionConfig) -> SegTarget:
        return cls(np.zeros((len(SEG_CLASSES), cfg.h1, cfg.w1), dtype=np.uint8))


@dataclass
class TrainingSample:
    """One input stack with the targets attached to its middle and last frames"""
    frames: list[np.ndarray]
    ball_full: tuple[float, float] | None
    event: EventTarget
    seg: SegTarget | None
    meta: dict[str, int | str | bool] = field(default_factory=dict)

    @property
    def num_frames(self) -> int:
        return len(self.frames)


@dataclass
class EventClip:
    """Frames around one labeled event, with per-frame annotations.

    ``events`` maps clip-relative frame indices to event types and always contains
    the anchor event at ``event_index``; ``balls`` and ``masks`` are per-frame and
    hold None where nothing is annotated.
    """
    frames: Sequence[np.ndarray]
    events: Mapping[int, EventType]
    balls: Sequence[tuple[float, float] | None]
    masks: Sequence[SegTarget | None]
    event_index: int = CLIP_EVENT_INDEX


def build_ball_target(
    center: tuple[float, float] | None,
    width: int,
    height: int,
    sigma: float,
) -> BallTarget:
    """Gaussian ball vectors with peak 1 at the centre; zeros when the ball is absent"""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if center is None:
        return BallTarget(np.zeros(width, dtype=np.float32), np.zeros(height, dtype=np.float32), False)
    cx, cy = center
    if not (0 <= cx < width and 0 <= cy < height):
        raise ValueError(f"ball centre ({cx}, {cy}) outside {width}x{height}")
    xs = np.arange(width, dtype=np.float64)
    ys = np.arange(height, dtype=np.float64)
    vx = np.exp(-((xs - cx) ** 2) / (2 * sigma**2))
    vy = np.exp(-((ys - cy) ** 2) / (2 * sigma**2))
    return BallTarget(vx.astype(np.float32), vy.astype(np.float32), True)


def ball_target_tensors(
    centers: torch.Tensor,
    present: torch.Tensor,
    width: int,
    height: int,
    sigma: float,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Batched build_ball_target; centres are rounded half away from zero, then clamped
    to the vector range.

    ``centers`` is (B, 2) in pixels of the target frame, ``present`` is (B,) bool.
    """
    rounded = torch.sign(centers) * torch.floor(centers.abs() + 0.5)
    cx = rounded[:, :1].clamp(0, width - 1)
    cy = rounded[:, 1:].clamp(0, height - 1)
    xs = torch.arange(width, dtype=centers.dtype, device=centers.device)
    ys = torch.arange(height, dtype=centers.dtype, device=centers.device)
    vx = torch.exp(-((xs[None, :] - cx) ** 2) / (2 * sigma**2))
    vy = torch.exp(-((ys[None, :] - cy) ** 2) / (2 * sigma**2))
    mask = present.to(centers.dtype)[:, None]
    return vx * mask, vy * mask


def global_ball_center(x: float, y: float, cfg: ResolutionConfig) -> tuple[int, int]:
    """Integer global-frame pixel holding a full-frame position"""
    gx = round_half_away(x * cfg.w1 / cfg.w0)
    gy = round_half_away(y * cfg.h1 / cfg.h0)
    return min(max(gx, 0), cfg.w1 - 1), min(max(gy, 0), cfg.h1 - 1)


def event_value(n: int) -> float:
    """Smooth event probability n frames away from the labeled event frame"""
    if abs(n) >= EVENT_SUPPORT:
        return 0.0
    return math.sin((EVENT_SUPPORT - abs(n)) * math.pi / 8)


def build_event_target(n: int, event_type: EventType) -> EventTarget:
    if event_type not in EVENT_TYPES:
        raise ValueError(f"unknown event type {event_type!r}")
    value = event_value(int(n))
    return EventTarget(bounce=value if event_type == "bounce" else 0.0,
                       net=value if event_type == "net" else 0.0)


def event_target_at(frame: int, events: Mapping[int, EventType]) -> EventTarget:
    """Combined target for a frame given every event labeled nearby"""
    target = EventTarget()
    for event_frame, event_type in events.items():
        if abs(frame - event_frame) < EVENT_SUPPORT:
            target = target.merge(build_event_target(frame - event_frame, event_type))
    return target


def assemble_input(frames: Sequence[np.ndarray], num_frames: int = DEFAULT_NUM_FRAMES) -> np.ndarray:
    """Stack HxWx3 frames channel-wise, frame-major: (3 * num_frames, H, W)"""
    if len(frames) != num_frames:
        raise ValueError(f"expected {num_frames} frames, got {len(frames)}")
    shape = frames[0].shape
    if len(shape) != 3 or shape[2] != 3:
        raise ValueError(f"frames must be HxWx3, got {shape}")
    for frame in frames[1:]:
        if frame.shape != shape:
            raise ValueError(f"frame size mismatch: {frame.shape} vs {shape}")
    stacked = np.stack(frames, axis=0).transpose(0, 3, 1, 2)
    return np.ascontiguousarray(stacked.reshape(num_frames * 3, shape[0], shape[1]))


def downscale_frame(frame: np.ndarray, cfg: ResolutionConfig) -> np.ndarray:
    """Bilinear resize of a full frame to the global resolution"""
    return cv2.resize(frame, (cfg.w1, cfg.h1), interpolation=cv2.INTER_LINEAR)


def middle_index(num_frames: int) -> int:
    return num_frames // 2


def subsample_event_sequence(
    clip: EventClip,
    window_start: int,
    num_frames: int = DEFAULT_NUM_FRAMES,
) -> TrainingSample:
    """Cut one input stack out of an event clip and attach its targets"""
    last_start = len(clip.frames) - num_frames
    if not 0 <= window_start <= last_start:
        raise ValueError(f"window_start {window_start} outside [0, {last_start}]")
    last = window_start + num_frames - 1
    middle = window_start + middle_index(num_frames)
    return TrainingSample(
        frames=list(clip.frames[window_start:last + 1]),
        ball_full=clip.balls[last],
        event=event_target_at(middle, clip.events),
        seg=clip.masks[last],
        meta={"window_start": window_start, "offset": middle - clip.event_index},
    )
