"""Sequence-consistent augmentation.

One parameter draw per input stack. The geometric part (random crop resized back to
full size, horizontal flip, rotation about the frame centre) is composed into a single
affine map applied to every frame, to the class masks (nearest neighbour, at mask
scale) and to the ball position. Brightness, contrast and hue shifts touch the frames
only.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import cv2
import numpy as np

from ..geometry import ResolutionConfig
from ..targets import SegTarget, TrainingSample

MAX_CROP_FRACTION = 0.15
MAX_ROTATION_DEG = 15.0
MAX_BRIGHTNESS = 0.1
MAX_CONTRAST = 0.1
MAX_HUE_DEG = 5.0


@dataclass(frozen=True)
class AugmentationParams:
    """Crop fractions are removed width/height shares; offsets place the crop in [0, 1]"""
    crop_x: float = 0.0
    crop_y: float = 0.0
    crop_offset_x: float = 0.0
    crop_offset_y: float = 0.0
    rotation_deg: float = 0.0
    hflip: bool = False
    brightness: float = 0.0
    contrast: float = 0.0
    hue_deg: float = 0.0

    def __post_init__(self) -> None:
        for name in ("crop_x", "crop_y"):
            value = getattr(self, name)
            if not 0 <= value <= MAX_CROP_FRACTION:
                raise ValueError(f"{name} must lie in [0, {MAX_CROP_FRACTION}], got {value}")
        for name in ("crop_offset_x", "crop_offset_y"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if abs(self.rotation_deg) > MAX_ROTATION_DEG:
            raise ValueError(f"rotation {self.rotation_deg} deg outside +-{MAX_ROTATION_DEG}")
        if self.contrast <= -1:
            raise ValueError(f"contrast delta must exceed -1, got {self.contrast}")

    @property
    def is_geometric_identity(self) -> bool:
        return self.crop_x == 0 and self.crop_y == 0 and self.rotation_deg == 0 and not self.hflip

    @property
    def is_photometric_identity(self) -> bool:
        return self.brightness == 0 and self.contrast == 0 and self.hue_deg == 0


def sample_augmentation(rng: np.random.Generator) -> AugmentationParams:
    return AugmentationParams(
        crop_x=float(rng.uniform(0, MAX_CROP_FRACTION)),
        crop_y=float(rng.uniform(0, MAX_CROP_FRACTION)),
        crop_offset_x=float(rng.uniform(0, 1)),
        crop_offset_y=float(rng.uniform(0, 1)),
        rotation_deg=float(rng.uniform(-MAX_ROTATION_DEG, MAX_ROTATION_DEG)),
        hflip=bool(rng.random() < 0.5),
        brightness=float(rng.uniform(-MAX_BRIGHTNESS, MAX_BRIGHTNESS)),
        contrast=float(rng.uniform(-MAX_CONTRAST, MAX_CONTRAST)),
        hue_deg=float(rng.uniform(-MAX_HUE_DEG, MAX_HUE_DEG)),
    )


def affine_matrix(params: AugmentationParams, width: int, height: int) -> np.ndarray:
    """3x3 map from source to augmented pixel coordinates of a width x height frame"""
    kept_w = width * (1 - params.crop_x)
    kept_h = height * (1 - params.crop_y)
    ox = params.crop_offset_x * (width - kept_w)
    oy = params.crop_offset_y * (height - kept_h)
    crop = np.array([[width / kept_w, 0, -ox * width / kept_w],
                     [0, height / kept_h, -oy * height / kept_h],
                     [0, 0, 1]])
    flip = np.array([[-1, 0, width - 1], [0, 1, 0], [0, 0, 1]], dtype=np.float64) if params.hflip else np.eye(3)
    rotation = np.vstack([
        cv2.getRotationMatrix2D(((width - 1) / 2, (height - 1) / 2), params.rotation_deg, 1.0),
        [0, 0, 1],
    ])
    return rotation @ flip @ crop


def transform_point(matrix: np.ndarray, x: float, y: float) -> tuple[float, float]:
    px, py, _ = matrix @ np.array([x, y, 1.0])
    return float(px), float(py)


def _photometric(frame: np.ndarray, params: AugmentationParams) -> np.ndarray:
    image = frame
    if params.hue_deg:
        hsv = cv2.cvtColor(image, cv2.COLOR_RGB2HSV)
        # OpenCV stores 8-bit hue as degrees / 2
        hsv[..., 0] = ((hsv[..., 0].astype(np.int16) + round(params.hue_deg / 2)) % 180).astype(np.uint8)
        image = cv2.cvtColor(hsv, cv2.COLOR_HSV2RGB)
    out = image.astype(np.float32) * (1 + params.contrast) + 255.0 * params.brightness
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def augment(sample: TrainingSample, params: AugmentationParams, cfg: ResolutionConfig) -> TrainingSample:
    """Apply one parameter set to a whole stack and its targets; the event target is untouched"""
    if params.is_geometric_identity and params.is_photometric_identity:
        return sample

    frames = sample.frames
    ball = sample.ball_full
    seg = sample.seg
    meta = dict(sample.meta)

    if not params.is_geometric_identity:
        matrix = affine_matrix(params, cfg.w0, cfg.h0)
        frames = [
            cv2.warpAffine(frame, matrix[:2], (cfg.w0, cfg.h0), flags=cv2.INTER_LINEAR,
                           borderMode=cv2.BORDER_CONSTANT, borderValue=0)
            for frame in frames
        ]
        if ball is not None:
            x, y = transform_point(matrix, *ball)
            ball = (x, y) if 0 <= x < cfg.w0 and 0 <= y < cfg.h0 else None
            if ball is None:
                meta["ball_left_frame"] = True
        if seg is not None:
            sx, sy = cfg.w1 / cfg.w0, cfg.h1 / cfg.h0
            # scale about pixel centres: x' = (x + 0.5) * s - 0.5
            scale = np.array([[sx, 0, 0.5 * sx - 0.5], [0, sy, 0.5 * sy - 0.5], [0, 0, 1.0]])
            mask_matrix = scale @ matrix @ np.linalg.inv(scale)
            masks = np.stack([
                cv2.warpAffine(np.ascontiguousarray(m), mask_matrix[:2], (cfg.w1, cfg.h1),
                               flags=cv2.INTER_NEAREST, borderMode=cv2.BORDER_CONSTANT, borderValue=0)
                for m in seg.masks
            ])
            seg = SegTarget(masks)

    if not params.is_photometric_identity:
        frames = [_photometric(frame, params) for frame in frames]

    meta["augmented"] = True
    return replace(sample, frames=list(frames), ball_full=ball, seg=seg, meta=meta)