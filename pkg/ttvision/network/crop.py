"""Choice of the local crop centre and extraction of crops from full frames"""
from __future__ import annotations

from typing import Literal

import torch

from ..geometry import CropWindow, ResolutionConfig, make_crop_window

CropPolicy = Literal["ground_truth", "predicted"]


def predicted_centers(vx: torch.Tensor, vy: torch.Tensor, cfg: ResolutionConfig) -> torch.Tensor:
    """Argmax of the global vectors scaled to full-frame pixels, shape (B, 2)"""
    x1 = torch.argmax(vx, dim=1).to(torch.float64)
    y1 = torch.argmax(vy, dim=1).to(torch.float64)
    return torch.stack([x1 * cfg.w0 / cfg.w1, y1 * cfg.h0 / cfg.h1], dim=1)


def choose_crop_centers(
    policy: CropPolicy,
    vx: torch.Tensor,
    vy: torch.Tensor,
    cfg: ResolutionConfig,
    ball_full: torch.Tensor | None = None,
    ball_present: torch.Tensor | None = None,
    jitter: tuple[int, int] = (32, 12),
) -> torch.Tensor:
    """Full-frame crop centres for a batch.

    ``ground_truth`` uses the labeled ball centre plus uniform integer jitter and
    falls back to the prediction for items without a ball; ``predicted`` always uses
    the global argmax.
    """
    with torch.no_grad():
        centers = predicted_centers(vx.detach(), vy.detach(), cfg)
        if policy == "predicted":
            return centers
        if policy != "ground_truth":
            raise ValueError(f"unknown crop policy {policy!r}")
        if ball_full is None or ball_present is None:
            raise ValueError("ground_truth crop policy needs ball_full and ball_present")

        truth = ball_full.detach().to(torch.float64).cpu()
        jx, jy = jitter
        batch = truth.shape[0]
        offsets = torch.stack([
            torch.randint(-jx, jx + 1, (batch,)) if jx else torch.zeros(batch, dtype=torch.long),
            torch.randint(-jy, jy + 1, (batch,)) if jy else torch.zeros(batch, dtype=torch.long),
        ], dim=1).to(torch.float64)
        present = ball_present.detach().cpu().bool()[:, None]
        return torch.where(present, truth + offsets, centers.cpu())


def crop_windows(centers: torch.Tensor, cfg: ResolutionConfig) -> list[CropWindow]:
    return [make_crop_window((float(cx), float(cy)), cfg) for cx, cy in centers.tolist()]


def extract_crops(full_frames: torch.Tensor, windows: list[CropWindow]) -> torch.Tensor:
    """Stack of (C, h2, w2) crops, one window per batch item"""
    if full_frames.shape[0] != len(windows):
        raise ValueError(f"{full_frames.shape[0]} frame stacks but {len(windows)} crop windows")
    crops = [
        frames[:, w.y_origin:w.y_origin + w.height, w.x_origin:w.x_origin + w.width]
        for frames, w in zip(full_frames, windows, strict=True)
    ]
    return torch.stack(crops, dim=0)
