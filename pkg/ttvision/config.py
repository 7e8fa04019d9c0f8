"""Configuration: process settings from the environment and training config files"""

from __future__ import annotations

import json
import logging
import shutil
from pathlib import Path
from typing import Any, Literal

from dotenv import dotenv_values
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError
from .geometry import ResolutionConfig
from .losses import TASKS

logger = logging.getLogger(__name__)

EXAMPLE_CONFIG_PATH = Path(__file__).parent / "config.example.env"
RESOLUTION_KEYS = ("w0", "h0", "w1", "h1", "w2", "h2")
LIST_FIELDS = ("manual_weights", "tasks", "crop_jitter", "adam_betas")
SUPPORTED_NUM_FRAMES = (1, 3, 5, 7, 9)


class Settings(BaseSettings):
    """Process-level settings (``TTV_*`` environment variables or ``.env``)"""
    model_config = SettingsConfigDict(env_prefix="TTV_", env_file=".env", extra="ignore")

    device: Literal["cpu", "cuda", "auto"] = "auto"
    num_threads: int | None = None
    log_dir: Path = Path("logs")
    deterministic: bool = False
    checkpoint: Path | None = None


class TrainConfig(BaseModel):
    """Everything one training run needs"""

    # Optimizer and schedule
    lr0: float = Field(1e-3, gt=0)
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = Field(1e-8, gt=0)
    plateau_patience: int = Field(3, gt=0)
    stop_patience: int = Field(12, gt=0)
    max_epochs: int = Field(30, gt=0)
    grad_clip: float | None = None

    # Data
    train_dir: Path = Path("data/train")
    val_dir: Path = Path("data/val")
    out_dir: Path = Path("runs/latest")
    batch_size: int = Field(8, gt=0)
    num_workers: int = Field(0, ge=0)
    negatives_ratio: float = Field(1.0, ge=0)
    augment: bool = True
    num_frames: int = 9
    seed: int = 0

    # Loss
    strategy: Literal["unbalanced", "manual", "adaptive"] = "adaptive"
    manual_weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    tasks: tuple[str, ...] = TASKS
    bounce_weight: float = Field(1.0, gt=0)
    net_weight: float = Field(3.0, gt=0)
    sigma_global: float = Field(1.25, gt=0)
    sigma_local: float = Field(7.5, gt=0)

    # Model
    width_multiplier: float = Field(1.0, gt=0, le=1)
    conv_dropout: float = Field(0.25, ge=0, lt=1)
    fc_dropout: float = Field(0.5, ge=0, lt=1)
    crop_policy: Literal["ground_truth", "predicted"] = "ground_truth"
    crop_jitter: tuple[int, int] = (32, 12)
    resolution: ResolutionConfig = Field(default_factory=ResolutionConfig)

    progress: bool = True

    @field_validator("num_frames")
    @classmethod
    def _supported_frames(cls, value: int) -> int:
        if value not in SUPPORTED_NUM_FRAMES:
            raise ValueError(f"num_frames must be one of {SUPPORTED_NUM_FRAMES}")
        return value

    @field_validator("tasks")
    @classmethod
    def _known_tasks(cls, value: tuple[str, ...]) -> tuple[str, ...]:
        unknown = set(value) - set(TASKS)
        if unknown or not value:
            raise ValueError(f"tasks must be a non-empty subset of {TASKS}, got {value}")
        return tuple(task for task in TASKS if task in value)

    @field_validator("manual_weights")
    @classmethod
    def _positive_weights(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if any(w <= 0 for w in value):
            raise ValueError("manual weights must be positive")
        return value

    @field_validator("crop_jitter")
    @classmethod
    def _non_negative_jitter(cls, value: tuple[int, int]) -> tuple[int, int]:
        if min(value) < 0:
            raise ValueError("crop jitter must be non-negative")
        return value

    @model_validator(mode="after")
    def _betas_in_range(self) -> TrainConfig:
        if not all(0 <= b < 1 for b in self.adam_betas):
            raise ValueError(f"adam betas must lie in [0, 1), got {self.adam_betas}")
        return self


def _parse_list(value: str) -> list[Any]:
    raw = value.strip()
    try:
        parsed = json.loads(raw)
        if isinstance(parsed, list):
            return parsed
    except json.JSONDecodeError:
        pass
    return [v.strip() for v in raw.strip("()[]").split(",") if v.strip()]


def train_config_from_mapping(values: dict[str, Any]) -> TrainConfig:
    """Validate flat key/value pairs (any key case) into a TrainConfig"""
    data: dict[str, Any] = {}
    resolution: dict[str, Any] = {}
    known = set(TrainConfig.model_fields) - {"resolution"}
    unknown = []
    for key, value in values.items():
        name = key.strip().lower()
        if value is None or (isinstance(value, str) and not value.strip()):
            continue
        if name in RESOLUTION_KEYS:
            resolution[name] = value
        elif name in known:
            data[name] = _parse_list(value) if name in LIST_FIELDS and isinstance(value, str) else value
        else:
            unknown.append(key)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if resolution:
        data["resolution"] = resolution
    return TrainConfig.model_validate(data)


def load_train_config(path: str | Path, overrides: dict[str, Any] | None = None) -> TrainConfig:
    """Read a flat ``KEY=value`` file; ``overrides`` (e.g. CLI flags) win over file values"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, Any] = dict(dotenv_values(path))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    try:
        cfg = train_config_from_mapping(values)
    except ValidationError as exc:
        raise ConfigError(f"{path}: {exc.errors()[0]['loc']} {exc.errors()[0]['msg']}") from exc
    logger.debug("Loaded train config from %s: %s", path, cfg)
    return cfg


def ensure_config_file(path: str | Path) -> bool:
    """Copy the bundled example to ``path`` if nothing is there; returns True if it copied"""
    path = Path(path)
    if path.exists():
        return False
    path.parent.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(EXAMPLE_CONFIG_PATH, path)
    logger.info("Wrote example config to %s", path)
    return True


def write_train_config(cfg: TrainConfig, path: str | Path) -> None:
    """Write ``cfg`` back as a flat file that load_train_config reads unchanged"""
    lines = []
    for name, value in cfg.model_dump(mode="json", exclude={"resolution"}).items():
        if value is None:
            continue
        text = json.dumps(value) if isinstance(value, list) else str(value)
        lines.append(f"{name.upper()}={text}")
    lines += [f"{key.upper()}={getattr(cfg.resolution, key)}" for key in RESOLUTION_KEYS]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
