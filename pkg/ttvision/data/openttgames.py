"""Converter from the published table-tennis game layout to the clip manifest layout.

A published game directory holds::

    events_markup.json          {"<frame>": "bounce" | "net" | "empty_event", ...}
    ball_markup.json            {"<frame>": {"x": int, "y": int}, ...}   (-1 when absent)
    segmentation_masks/<frame>.png

Frames must be extracted from the video beforehand (for example
``ffmpeg -i game_1.mp4 -start_number 0 frames/%06d.png``). Mask colours vary between
releases, so decoding is configurable: ``channels`` reads one class per RGB channel,
``palette`` matches exact colours.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import cv2
import numpy as np

from ..geometry import ResolutionConfig
from ..targets import SEG_CLASSES
from .annotations import MANIFEST_NAME, read_rgb, write_rgb

logger = logging.getLogger(__name__)

EVENT_NAMES = {"bounce": "bounce", "net": "net", "empty_event": "empty"}
DEFAULT_PALETTE: dict[str, tuple[int, int, int]] = {
    "human": (255, 0, 0),
    "table": (0, 255, 0),
    "scoreboard": (0, 0, 255),
}


@dataclass
class MaskDecoder:
    mode: Literal["channels", "palette"] = "channels"
    palette: dict[str, tuple[int, int, int]] = field(default_factory=lambda: dict(DEFAULT_PALETTE))
    tolerance: int = 10

    def decode(self, image: np.ndarray, cfg: ResolutionConfig) -> np.ndarray:
        """(3, h1, w1) binary masks from an RGB mask image of any size"""
        if image.shape[:2] != (cfg.h1, cfg.w1):
            image = cv2.resize(image, (cfg.w1, cfg.h1), interpolation=cv2.INTER_NEAREST)
        if self.mode == "channels":
            return (image.transpose(2, 0, 1) > 127).astype(np.uint8)
        masks = []
        for name in SEG_CLASSES:
            color = np.array(self.palette[name], dtype=np.int16)
            diff = np.abs(image.astype(np.int16) - color).max(axis=2)
            masks.append(diff <= self.tolerance)
        return np.stack(masks).astype(np.uint8)


def _read_json(path: Path) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def convert_game(
    game_dir: str | Path,
    out_dir: str | Path | None = None,
    cfg: ResolutionConfig | None = None,
    decoder: MaskDecoder | None = None,
    frame_pattern: str = "frames/{:06d}.png",
) -> Path:
    """Write ``annotations.json`` (and re-encoded masks) for one game; returns the clip directory"""
    game_dir = Path(game_dir)
    out_dir = Path(out_dir) if out_dir is not None else game_dir
    cfg = cfg or ResolutionConfig()
    decoder = decoder or MaskDecoder()

    events: dict[str, str] = {}
    events_path = game_dir / "events_markup.json"
    if events_path.is_file():
        for frame, label in _read_json(events_path).items():
            if label not in EVENT_NAMES:
                logger.warning("Skipping unknown event label %r at frame %s", label, frame)
                continue
            events[str(int(frame))] = EVENT_NAMES[label]

    balls: dict[str, list[float]] = {}
    ball_path = game_dir / "ball_markup.json"
    if ball_path.is_file():
        for frame, point in _read_json(ball_path).items():
            x, y = point.get("x", -1), point.get("y", -1)
            if x < 0 or y < 0:
                continue
            balls[str(int(frame))] = [float(x), float(y)]

    masks: dict[str, str] = {}
    mask_dir = game_dir / "segmentation_masks"
    if mask_dir.is_dir():
        for path in sorted(mask_dir.glob("*.png")):
            frame = int(path.stem)
            relative = f"masks/{frame:06d}.png"
            decoded = decoder.decode(read_rgb(path), cfg)
            write_rgb(out_dir / relative, (decoded.transpose(1, 2, 0) * 255).astype(np.uint8))
            masks[str(frame)] = relative

    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"events": events, "ball": balls, "masks": masks, "frame_pattern": frame_pattern}
    (out_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8")
    logger.info("Converted %s: %d events, %d ball labels, %d masks", game_dir.name, len(events), len(balls), len(masks))
    return out_dir
