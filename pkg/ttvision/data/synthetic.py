"""Synthetic table-tennis clips with exact ground truth.

A white anti-aliased disc follows ballistic motion over a static scene (table, net,
scoreboard, two player blobs). A bounce is labeled on the frame where the disc's lower
edge reaches the table surface while falling; a net hit on the frame where the centre
crosses the net line within the net's height. Class masks are rendered from the scene
geometry at mask resolution. Everything is a function of the config and the seed.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..geometry import ResolutionConfig
from ..targets import CLIP_EVENT_INDEX, CLIP_LENGTH, SEG_CLASSES, EventType
from .annotations import MANIFEST_NAME, write_rgb

logger = logging.getLogger(__name__)

Rect = tuple[float, float, float, float]  # x0, y0, x1, y1
Ellipse = tuple[float, float, float, float]  # cx, cy, rx, ry

BACKGROUND = (30, 40, 70)
TABLE_COLOR = (20, 90, 160)
NET_COLOR = (200, 200, 200)
SCOREBOARD_COLOR = (10, 10, 10)
HUMAN_COLOR = (180, 60, 50)
BALL_COLOR = np.array([255, 255, 255], dtype=np.float32)

# Reference geometry at 1920 x 1080
_REFERENCE = {
    "table": (360.0, 620.0, 1560.0, 700.0),
    "net_x": 960.0,
    "net_height": 60.0,
    "scoreboard": (60.0, 40.0, 360.0, 140.0),
    "humans": ((200.0, 650.0, 90.0, 250.0), (1720.0, 650.0, 90.0, 250.0)),
    "ball_radius": 18.0,
    "gravity": 0.5,
}


class SyntheticSceneConfig(BaseModel):
    """Scene geometry in full-frame pixels; velocities in pixels per frame"""
    model_config = ConfigDict(frozen=True)

    resolution: ResolutionConfig = Field(default_factory=ResolutionConfig)
    table: Rect = _REFERENCE["table"]
    net_x: float = _REFERENCE["net_x"]
    net_height: float = _REFERENCE["net_height"]
    scoreboard: Rect = _REFERENCE["scoreboard"]
    humans: tuple[Ellipse, Ellipse] = _REFERENCE["humans"]
    ball_radius: float = _REFERENCE["ball_radius"]
    gravity: float = _REFERENCE["gravity"]
    restitution: float = Field(0.85, gt=0, le=1)
    ball_start: tuple[float, float] | None = None
    ball_velocity: tuple[float, float] | None = None
    noise: float = Field(2.0, ge=0)
    clip_length: int = Field(64, gt=0)
    bounce_guaranteed: bool = False

    @model_validator(mode="after")
    def _geometry_fits(self) -> SyntheticSceneConfig:
        res = self.resolution
        x0, y0, x1, y1 = self.table
        if x1 <= x0 or y1 <= y0:
            raise ValueError(f"degenerate table rectangle {self.table}")
        for name, (a, b, c, d) in (("table", self.table), ("scoreboard", self.scoreboard)):
            if a < 0 or b < 0 or c > res.w0 or d > res.h0:
                raise ValueError(f"{name} {(a, b, c, d)} outside the {res.w0}x{res.h0} frame")
        if not x0 < self.net_x < x1:
            raise ValueError("net must stand on the table")
        if self.ball_radius * res.w1 / res.w0 < 2 or self.ball_radius * res.h1 / res.h0 < 2:
            raise ValueError(f"ball radius {self.ball_radius} px is below 2 px at the global scale")
        if self.bounce_guaranteed and self.clip_length < CLIP_LENGTH:
            raise ValueError(f"bounce_guaranteed needs clips of at least {CLIP_LENGTH} frames")
        return self

    @classmethod
    def for_resolution(cls, resolution: ResolutionConfig, **overrides) -> SyntheticSceneConfig:
        """Reference scene scaled to another frame size"""
        sx, sy = resolution.w0 / 1920, resolution.h0 / 1080

        def rect(r: Rect) -> Rect:
            return r[0] * sx, r[1] * sy, r[2] * sx, r[3] * sy

        # keep the ball at least 2 global pixels wide on both axes
        min_radius = 2 * max(resolution.w0 / resolution.w1, resolution.h0 / resolution.h1)
        values = {
            "resolution": resolution,
            "table": rect(_REFERENCE["table"]),
            "net_x": _REFERENCE["net_x"] * sx,
            "net_height": _REFERENCE["net_height"] * sy,
            "scoreboard": rect(_REFERENCE["scoreboard"]),
            "humans": tuple((cx * sx, cy * sy, rx * sx, ry * sy) for cx, cy, rx, ry in _REFERENCE["humans"]),
            "ball_radius": max(_REFERENCE["ball_radius"] * min(sx, sy), min_radius),
            "gravity": _REFERENCE["gravity"] * sy,
        }
        values.update(overrides)
        return cls(**values)

    @property
    def table_top(self) -> float:
        return self.table[1]


@dataclass
class SyntheticClip:
    frames: list[np.ndarray]
    balls: list[tuple[float, float] | None]
    events: dict[int, EventType]
    masks: np.ndarray  # (3, h1, w1), identical for every frame of the static scene
    seed: int
    meta: dict[str, float] = field(default_factory=dict)


def simulate_trajectory(
    cfg: SyntheticSceneConfig,
    start: tuple[float, float],
    velocity: tuple[float, float],
) -> tuple[list[tuple[float, float]], dict[int, EventType]]:
    """Ball centre per frame and event labels; frame 0 is the start position"""
    x, y = start
    vx, vy = velocity
    top = cfg.table_top
    net_top = top - cfg.net_height
    table_x0, _, table_x1, _ = cfg.table
    positions = [(x, y)]
    events: dict[int, EventType] = {}
    for t in range(1, cfg.clip_length):
        vy += cfg.gravity
        nx, ny = x + vx, y + vy
        if (x - cfg.net_x) * (nx - cfg.net_x) < 0:
            frac = (cfg.net_x - x) / (nx - x)
            cross_y = y + frac * (ny - y)
            if net_top <= cross_y <= top:
                events[t] = "net"
                vx = -0.3 * vx
                nx = cfg.net_x + (nx - cfg.net_x) * -0.3
        if vy > 0 and y + cfg.ball_radius < top <= ny + cfg.ball_radius and table_x0 <= nx <= table_x1:
            penetration = ny + cfg.ball_radius - top
            ny = top - cfg.ball_radius - penetration * cfg.restitution
            vy = -vy * cfg.restitution
            events.setdefault(t, "bounce")
        x, y = nx, ny
        positions.append((x, y))
    return positions, events


def _draw_rect(canvas: np.ndarray, rect: Rect, color: tuple[int, int, int]) -> None:
    x0, y0, x1, y1 = (int(round(v)) for v in rect)
    canvas[max(y0, 0):max(y1, 0), max(x0, 0):max(x1, 0)] = color


def _ellipse_mask(shape: tuple[int, int], ellipse: Ellipse, sx: float = 1.0, sy: float = 1.0) -> np.ndarray:
    """Pixels whose centres lie inside the ellipse; (sx, sy) map pixel to scene units"""
    cx, cy, rx, ry = ellipse
    ys, xs = np.mgrid[0:shape[0], 0:shape[1]]
    px = (xs + 0.5) * sx
    py = (ys + 0.5) * sy
    return ((px - cx) / rx) ** 2 + ((py - cy) / ry) ** 2 <= 1.0


def rect_mask(shape: tuple[int, int], rect: Rect, sx: float = 1.0, sy: float = 1.0) -> np.ndarray:
    """Pixels whose centres lie inside the rectangle"""
    x0, y0, x1, y1 = rect
    ys, xs = np.mgrid[0:shape[0], 0:shape[1]]
    px = (xs + 0.5) * sx
    py = (ys + 0.5) * sy
    return (px >= x0) & (px < x1) & (py >= y0) & (py < y1)


def render_masks(cfg: SyntheticSceneConfig) -> np.ndarray:
    """Exact class masks at the global resolution, channel order as SEG_CLASSES"""
    res = cfg.resolution
    shape = (res.h1, res.w1)
    sx, sy = res.w0 / res.w1, res.h0 / res.h1
    human = np.zeros(shape, dtype=bool)
    for ellipse in cfg.humans:
        human |= _ellipse_mask(shape, ellipse, sx, sy)
    table = rect_mask(shape, cfg.table, sx, sy)
    scoreboard = rect_mask(shape, cfg.scoreboard, sx, sy)
    masks = {"human": human, "table": table, "scoreboard": scoreboard}
    return np.stack([masks[name] for name in SEG_CLASSES]).astype(np.uint8)


def render_background(cfg: SyntheticSceneConfig) -> np.ndarray:
    res = cfg.resolution
    canvas = np.empty((res.h0, res.w0, 3), dtype=np.uint8)
    canvas[:] = BACKGROUND
    for ellipse in cfg.humans:
        canvas[_ellipse_mask((res.h0, res.w0), ellipse)] = HUMAN_COLOR
    _draw_rect(canvas, cfg.table, TABLE_COLOR)
    net_width = max(2.0, res.w0 / 640)
    _draw_rect(canvas, (cfg.net_x - net_width / 2, cfg.table_top - cfg.net_height,
                        cfg.net_x + net_width / 2, cfg.table_top), NET_COLOR)
    _draw_rect(canvas, cfg.scoreboard, SCOREBOARD_COLOR)
    return canvas


def draw_ball(frame: np.ndarray, center: tuple[float, float], radius: float) -> np.ndarray:
    """Blend an anti-aliased white disc into ``frame`` (copy returned); off-frame parts are clipped"""
    out = frame.astype(np.float32)
    cx, cy = center
    h, w = frame.shape[:2]
    x0, x1 = max(int(np.floor(cx - radius - 1)), 0), min(int(np.ceil(cx + radius + 2)), w)
    y0, y1 = max(int(np.floor(cy - radius - 1)), 0), min(int(np.ceil(cy + radius + 2)), h)
    if x0 < x1 and y0 < y1:
        ys, xs = np.mgrid[y0:y1, x0:x1]
        dist = np.hypot(xs - cx, ys - cy)
        alpha = np.clip(radius + 0.5 - dist, 0.0, 1.0)[..., None]
        out[y0:y1, x0:x1] = out[y0:y1, x0:x1] * (1 - alpha) + BALL_COLOR * alpha
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def _random_launch(cfg: SyntheticSceneConfig, rng: np.random.Generator) -> tuple[tuple[float, float], tuple[float, float]]:
    res = cfg.resolution
    sx, sy = res.w0 / 1920, res.h0 / 1080
    from_left = bool(rng.random() < 0.5)
    x = rng.uniform(400, 700) * sx
    vx = rng.uniform(8, 20) * sx
    if not from_left:
        x, vx = res.w0 - x, -vx
    y = rng.uniform(200, 450) * sy
    vy = rng.uniform(-6, 2) * sy
    return (float(x), float(y)), (float(vx), float(vy))


def _bounce_in_middle(events: dict[int, EventType], length: int) -> bool:
    return any(kind == "bounce" and CLIP_EVENT_INDEX <= t <= length - CLIP_LENGTH + CLIP_EVENT_INDEX
               for t, kind in events.items())


def synthesize_clip(cfg: SyntheticSceneConfig, seed: int) -> SyntheticClip:
    """Render one clip; identical (cfg, seed) give identical clips"""
    rng = np.random.default_rng(seed)
    if cfg.ball_start is not None and cfg.ball_velocity is not None:
        start, velocity = cfg.ball_start, cfg.ball_velocity
        positions, events = simulate_trajectory(cfg, start, velocity)
    else:
        for _ in range(1000):
            start, velocity = _random_launch(cfg, rng)
            positions, events = simulate_trajectory(cfg, start, velocity)
            if not cfg.bounce_guaranteed or _bounce_in_middle(events, cfg.clip_length):
                break
        else:
            raise ValueError("could not find a launch that bounces inside the clip")

    res = cfg.resolution
    background = render_background(cfg)
    frames, balls = [], []
    for position in positions:
        inside = 0 <= position[0] < res.w0 and 0 <= position[1] < res.h0
        frame = draw_ball(background, position, cfg.ball_radius)
        if cfg.noise:
            noisy = frame.astype(np.float32) + rng.normal(0.0, cfg.noise, frame.shape).astype(np.float32)
            frame = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
        frames.append(frame)
        balls.append((float(position[0]), float(position[1])) if inside else None)

    return SyntheticClip(frames, balls, events, render_masks(cfg), seed,
                         meta={"start_x": start[0], "start_y": start[1], "vx": velocity[0], "vy": velocity[1]})


def write_clip(clip: SyntheticClip, directory: str | Path) -> Path:
    """Write frames, masks and ``annotations.json`` in the dataset layout"""
    directory = Path(directory)
    mask_image = clip.masks.transpose(1, 2, 0) * 255
    mask_path = "masks/static.png"
    write_rgb(directory / mask_path, mask_image.astype(np.uint8))
    for index, frame in enumerate(clip.frames):
        write_rgb(directory / "frames" / f"{index:06d}.png", frame)
    manifest = {
        "events": {str(t): kind for t, kind in sorted(clip.events.items())},
        "ball": {str(t): [round(b[0], 4), round(b[1], 4)] for t, b in enumerate(clip.balls) if b is not None},
        "masks": {str(t): mask_path for t in range(len(clip.frames))},
        "frame_pattern": "frames/{:06d}.png",
    }
    (directory / MANIFEST_NAME).write_text(json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8")
    return directory


def clip_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def synthesize_dataset(
    out_dir: str | Path,
    n_clips: int,
    seed: int,
    cfg: SyntheticSceneConfig | None = None,
) -> dict[str, dict[str, int]]:
    """Write ``n_clips`` clips under ``out_dir``; returns event counts per clip"""
    cfg = cfg or SyntheticSceneConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    counts: dict[str, dict[str, int]] = {}
    for index in range(n_clips):
        clip = synthesize_clip(cfg, clip_seed(seed, index))
        name = f"clip_{index:04d}"
        write_clip(clip, out_dir / name)
        kinds = list(clip.events.values())
        counts[name] = {"bounce": kinds.count("bounce"), "net": kinds.count("net")}
        logger.debug("Wrote %s: %s", name, counts[name])
    logger.info("Synthesized %d clips into %s", n_clips, out_dir)
    return counts
