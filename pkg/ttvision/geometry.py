"""Coordinate frames of the two-stage ball detector and conversions between them.

Three frames are involved:

* full: the original video frame, ``w0 x h0`` pixels
* global: the whole scene downscaled to ``w1 x h1``
* local: a ``w2 x h2`` crop of the full frame around the global detection

A full-frame position is recovered as ``crop origin + local offset``. When the crop
is centred on an unrounded, unclamped global detection this is exactly
``x = x1 * w0 / w1 - w2 / 2 + x2`` (and likewise for y).
"""
from __future__ import annotations

import math

from pydantic import BaseModel, ConfigDict, PositiveInt, model_validator


class ResolutionConfig(BaseModel):
    """Pixel sizes of the full, global and local frames"""
    model_config = ConfigDict(frozen=True)

    w0: PositiveInt = 1920
    h0: PositiveInt = 1080
    w1: PositiveInt = 320
    h1: PositiveInt = 128
    w2: PositiveInt = 320
    h2: PositiveInt = 128

    @model_validator(mode="after")
    def _crop_fits(self) -> ResolutionConfig:
        if self.w2 > self.w0 or self.h2 > self.h0:
            raise ValueError(f"crop {self.w2}x{self.h2} larger than frame {self.w0}x{self.h0}")
        return self

    @property
    def global_size(self) -> tuple[int, int]:
        return self.w1, self.h1

    @property
    def local_size(self) -> tuple[int, int]:
        return self.w2, self.h2


class GlobalCoord(BaseModel):
    """Ball position on the downscaled frame"""
    model_config = ConfigDict(frozen=True)

    x1: float
    y1: float


class LocalCoord(BaseModel):
    """Ball position inside the crop window"""
    model_config = ConfigDict(frozen=True)

    x2: float
    y2: float


class FullCoord(BaseModel):
    """Ball position on the full-resolution frame"""
    model_config = ConfigDict(frozen=True)

    x: float
    y: float


class CropWindow(BaseModel):
    """Top-left corner and size of a local crop, in full-frame pixels"""
    model_config = ConfigDict(frozen=True)

    x_origin: int
    y_origin: int
    width: PositiveInt
    height: PositiveInt

    def contains(self, x: float, y: float) -> bool:
        return (self.x_origin <= x < self.x_origin + self.width
                and self.y_origin <= y < self.y_origin + self.height)


def round_half_away(value: float) -> int:
    """Round to the nearest integer, ties away from zero"""
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


def scale_global_to_full(c: GlobalCoord, cfg: ResolutionConfig) -> tuple[float, float]:
    """Map a global-frame point to real-valued full-frame pixels (unrounded)"""
    if not (0 <= c.x1 < cfg.w1 and 0 <= c.y1 < cfg.h1):
        raise ValueError(f"global coordinate ({c.x1}, {c.y1}) outside {cfg.w1}x{cfg.h1}")
    return c.x1 * cfg.w0 / cfg.w1, c.y1 * cfg.h0 / cfg.h1


def scale_full_to_global(x: float, y: float, cfg: ResolutionConfig) -> tuple[float, float]:
    """Inverse of scale_global_to_full"""
    return x * cfg.w1 / cfg.w0, y * cfg.h1 / cfg.h0


def make_crop_window(center_full: tuple[float, float], cfg: ResolutionConfig) -> CropWindow:
    """Crop window of size w2 x h2 centred on the rounded point and clamped into the frame"""
    cx, cy = center_full
    x_origin = round_half_away(cx) - cfg.w2 // 2
    y_origin = round_half_away(cy) - cfg.h2 // 2
    x_origin = min(max(x_origin, 0), cfg.w0 - cfg.w2)
    y_origin = min(max(y_origin, 0), cfg.h0 - cfg.h2)
    return CropWindow(x_origin=x_origin, y_origin=y_origin, width=cfg.w2, height=cfg.h2)


def compose_coordinates(crop: CropWindow, c2: LocalCoord) -> FullCoord:
    """Full-frame position of a point given in crop coordinates"""
    if not (0 <= c2.x2 < crop.width and 0 <= c2.y2 < crop.height):
        raise ValueError(f"local coordinate ({c2.x2}, {c2.y2}) outside crop {crop.width}x{crop.height}")
    return FullCoord(x=crop.x_origin + c2.x2, y=crop.y_origin + c2.y2)


def to_local(crop: CropWindow, x: float, y: float) -> LocalCoord | None:
    """Crop coordinates of a full-frame point, or None if the window does not contain it"""
    if not crop.contains(x, y):
        return None
    return LocalCoord(x2=x - crop.x_origin, y2=y - crop.y_origin)
