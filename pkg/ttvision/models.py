"""Data models exchanged between modules and written to disk"""
from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, Field, field_validator

# ============ Annotation Manifest ============

EventLabel = Literal["bounce", "net", "empty"]


class ClipManifest(BaseModel):
    """Per-clip annotation file (``annotations.json``), keyed by frame number"""
    events: dict[int, EventLabel] = Field(default_factory=dict)
    ball: dict[int, tuple[float, float]] = Field(default_factory=dict)
    masks: dict[int, str] = Field(default_factory=dict)
    frame_pattern: str = "frames/{:06d}.png"

    @field_validator("frame_pattern")
    @classmethod
    def _pattern_has_slot(cls, value: str) -> str:
        if "{" not in value:
            raise ValueError("frame_pattern must contain a format slot for the frame number")
        return value


# ============ Evaluation Report ============

REPORT_KEYS: tuple[str, ...] = (
    "global_rmse_px",
    "local_rmse_px",
    "global_accuracy",
    "local_accuracy",
    "pce",
    "spce",
    "iou_human",
    "iou_table",
    "iou_scoreboard",
)


class EvaluationReport(BaseModel):
    """Flat metrics report; undefined metrics (e.g. RMSE without detections) are NaN"""
    global_rmse_px: float = math.nan
    local_rmse_px: float = math.nan
    global_accuracy: float = math.nan
    local_accuracy: float = math.nan
    pce: float = math.nan
    spce: float = math.nan
    iou_human: float = math.nan
    iou_table: float = math.nan
    iou_scoreboard: float = math.nan
    global_mean_dist_px: float = math.nan
    local_mean_dist_px: float = math.nan
    mean_iou: float = math.nan

    def to_key_value(self) -> str:
        return "".join(f"{key}={value!r}\n" for key, value in self.model_dump().items())

    @classmethod
    def from_key_value(cls, text: str) -> EvaluationReport:
        values = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            key, _, value = line.partition("=")
            values[key.strip()] = float(value)
        return cls.model_validate(values)


# ============ Inference Records ============

class InferenceRecord(BaseModel):
    """One output line of streaming inference.

    ``frame_index`` is the last frame of the stack (ball, masks);
    ``event_frame_index`` is its middle frame (event probabilities).
    """
    frame_index: int
    event_frame_index: int
    ball_present: bool
    ball_x: float | None = None
    ball_y: float | None = None
    bounce: float
    net: float
    bounce_flag: bool
    net_flag: bool
    mask_pixels: dict[str, int] | None = None
    latency_ms: float | None = None


class LatencySummary(BaseModel):
    """Per-stack wall-clock statistics"""
    stacks: int
    mean_ms: float
    p95_ms: float
    reference_ms: float = 6.0


# ============ Training Log ============

class EpochRecord(BaseModel):
    """One line of the epoch log"""
    epoch: int
    lr: float
    losses: dict[str, float]
    loss_total: float
    val_loss: float
    weights: dict[str, float]
    metrics: EvaluationReport
    aborted: bool = False

    def to_key_value(self) -> str:
        pairs: list[tuple[str, object]] = [("epoch", self.epoch), ("lr", self.lr)]
        pairs += [(f"loss_{task}", value) for task, value in self.losses.items()]
        pairs += [("loss_total", self.loss_total), ("val_loss", self.val_loss)]
        pairs += [(f"weight_{task}", value) for task, value in self.weights.items()]
        pairs += list(self.metrics.model_dump().items())
        if self.aborted:
            pairs.append(("aborted", True))
        return " ".join(f"{key}={value:.6g}" if isinstance(value, float) else f"{key}={value}" for key, value in pairs)


# ============ HTTP Service ============

class InferRequest(BaseModel):
    """Streaming inference over a server-side frames directory"""
    frames_dir: str
    checkpoint: str | None = None


class InferResponse(BaseModel):
    records: list[InferenceRecord]
    latency: LatencySummary
