"""Saving and restoring complete training state"""
from __future__ import annotations

import json
import logging
import os
import pickle
import random
import zipfile
from pathlib import Path
from typing import Any

import numpy as np
import torch

from .errors import CheckpointError, ResolutionMismatchError
from .geometry import ResolutionConfig

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def capture_rng_state() -> dict[str, Any]:
    """Global RNG states in a form ``torch.load(weights_only=True)`` accepts"""
    kind, keys, pos, has_gauss, cached = np.random.get_state()
    version, internal, gauss_next = random.getstate()
    state: dict[str, Any] = {
        "torch": torch.get_rng_state(),
        "numpy": json.dumps([kind, keys.tolist(), pos, has_gauss, cached]),
        "python": [version, list(internal), gauss_next],
    }
    if torch.cuda.is_available():
        state["cuda"] = torch.cuda.get_rng_state_all()
    return state


def restore_rng_state(state: dict[str, Any]) -> None:
    torch.set_rng_state(state["torch"])
    kind, keys, pos, has_gauss, cached = json.loads(state["numpy"])
    np.random.set_state((kind, np.array(keys, dtype=np.uint32), pos, has_gauss, cached))
    version, internal, gauss_next = state["python"]
    random.setstate((version, tuple(internal), gauss_next))
    if "cuda" in state and torch.cuda.is_available():
        torch.cuda.set_rng_state_all(state["cuda"])


def save_checkpoint(payload: dict[str, Any], path: str | Path) -> Path:
    """Write ``payload`` plus format version and RNG state; the file is replaced atomically"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = dict(payload)
    data["format_version"] = FORMAT_VERSION
    data.setdefault("rng", capture_rng_state())
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        torch.save(data, tmp)
        os.replace(tmp, path)
    except OSError as exc:
        raise CheckpointError("write", f"{path}: {exc}") from exc
    logger.debug("Saved checkpoint %s", path)
    return path


def load_checkpoint(path: str | Path, map_location: str | torch.device = "cpu") -> dict[str, Any]:
    """Read a checkpoint, rejecting missing, corrupt and foreign-version files"""
    path = Path(path)
    if not path.is_file():
        raise CheckpointError("missing", str(path))
    try:
        data = torch.load(path, map_location=map_location, weights_only=True)
    except (RuntimeError, EOFError, ValueError, pickle.UnpicklingError, zipfile.BadZipFile) as exc:
        raise CheckpointError("corrupt", f"{path}: {exc}".splitlines()[0]) from exc
    if not isinstance(data, dict) or "format_version" not in data:
        raise CheckpointError("corrupt", f"{path}: not a ttvision checkpoint")
    if data["format_version"] != FORMAT_VERSION:
        raise CheckpointError("version", f"{path}: format {data['format_version']}, expected {FORMAT_VERSION}")
    return data


def check_resolution(data: dict[str, Any], cfg: ResolutionConfig) -> ResolutionConfig:
    """The checkpoint's resolution, which must equal ``cfg``"""
    stored = ResolutionConfig.model_validate(data["model_config"]["resolution"])
    if stored != cfg:
        raise ResolutionMismatchError(stored.model_dump(), cfg.model_dump())
    return stored
