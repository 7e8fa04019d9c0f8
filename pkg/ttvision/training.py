"""Optimisation loop: Adam with plateau halving, early stopping and loss aggregation"""
from __future__ import annotations

import json
import logging
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import torch
from tqdm import tqdm

from .checkpoint import check_resolution, load_checkpoint, restore_rng_state, save_checkpoint
from .config import TrainConfig
from .data.dataset import build_dataset, make_loader
from .errors import NonFiniteLossError
from .geometry import CropWindow, ResolutionConfig, round_half_away
from .losses import (
    EventClassWeights,
    TaskLosses,
    ball_loss,
    event_loss,
    segmentation_loss,
)
from .metrics import BallEvalRecord, MetricAccumulator, decide_presence
from .models import EpochRecord, EvaluationReport
from .network import TTNet, TTNetOutput, crop_windows
from .reports import render_training_summary
from .strategies import BaseAggregation, build_strategy
from .targets import ball_target_tensors

logger = logging.getLogger(__name__)

EPOCH_LOG = "epochs.log"
BEST_CHECKPOINT = "best.pt"
LAST_CHECKPOINT = "last.pt"


# ============ Learning-rate schedule ============

@dataclass
class ScheduleDecision:
    improved: bool
    halved: bool
    stop: bool
    lr: float


@dataclass
class PlateauSchedule:
    """Halve the lr after ``plateau_patience`` epochs without a strict improvement of the
    best validation loss, stop after ``stop_patience`` such epochs in a row.

    Halving resets the plateau counter only; the stop counter keeps running until the
    best loss improves.
    """
    lr0: float = 1e-3
    plateau_patience: int = 3
    stop_patience: int = 12
    lr: float = field(init=False)
    best: float = math.inf
    plateau_count: int = 0
    since_best: int = 0
    halvings: int = 0
    stopped: bool = False

    def __post_init__(self) -> None:
        if self.lr0 <= 0:
            raise ValueError(f"lr0 must be positive, got {self.lr0}")
        if self.plateau_patience <= 0 or self.stop_patience <= 0:
            raise ValueError("patiences must be positive")
        self.lr = self.lr0 / 2**self.halvings

    def step(self, val_loss: float) -> ScheduleDecision:
        improved = val_loss < self.best
        halved = False
        if improved:
            self.best = val_loss
            self.plateau_count = 0
            self.since_best = 0
        else:
            self.plateau_count += 1
            self.since_best += 1
            if self.plateau_count >= self.plateau_patience:
                self.halvings += 1
                self.lr = self.lr0 / 2**self.halvings
                self.plateau_count = 0
                halved = True
        self.stopped = self.since_best >= self.stop_patience
        return ScheduleDecision(improved, halved, self.stopped, self.lr)

    def state_dict(self) -> dict[str, Any]:
        return {key: value for key, value in asdict(self).items() if key != "lr"}

    @classmethod
    def from_state(cls, state: dict[str, Any]) -> PlateauSchedule:
        return cls(**state)


def run_schedule(
    val_loss_history: Sequence[float],
    lr0: float = 1e-3,
    plateau_patience: int = 3,
    stop_patience: int = 12,
) -> list[ScheduleDecision]:
    """Replay a validation-loss history; decisions stop at the first stop decision"""
    if not val_loss_history:
        raise ValueError("validation loss history is empty")
    schedule = PlateauSchedule(lr0, plateau_patience, stop_patience)
    decisions = []
    for loss in val_loss_history:
        decision = schedule.step(loss)
        decisions.append(decision)
        if decision.stop:
            break
    return decisions


# ============ Loss computation ============

@dataclass
class TrainState:
    epoch: int = 0
    best_val_loss: float = math.inf
    history: list[float] = field(default_factory=list)


def local_ball_targets(
    batch: dict[str, torch.Tensor],
    windows: list[CropWindow],
    cfg: ResolutionConfig,
    sigma: float,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Crop-frame target vectors; the ball counts as present only inside the window"""
    ball = batch["ball_full"].to(torch.float64).cpu()
    origins = torch.tensor([[w.x_origin, w.y_origin] for w in windows], dtype=torch.float64)
    inside = torch.tensor([w.contains(float(x), float(y)) for w, (x, y) in zip(windows, ball.tolist(), strict=True)])
    present = batch["ball_present"].cpu().bool() & inside
    vx, vy = ball_target_tensors(ball - origins, present, cfg.w2, cfg.h2, sigma)
    return vx.float(), vy.float(), present


def compute_losses(
    batch: dict[str, torch.Tensor],
    output: TTNetOutput,
    cfg: TrainConfig,
    weights: EventClassWeights,
) -> TaskLosses:
    device = output.global_x.device
    losses = TaskLosses()
    if "ball_global" in cfg.tasks:
        losses.ball_global = ball_loss(output.global_x, output.global_y,
                                       batch["ball_global_x"].to(device), batch["ball_global_y"].to(device))
    if "ball_local" in cfg.tasks:
        vx, vy, _ = local_ball_targets(batch, output.windows, cfg.resolution, cfg.sigma_local)
        losses.ball_local = ball_loss(output.local_x, output.local_y, vx.to(device), vy.to(device))
    if "event" in cfg.tasks:
        losses.event = event_loss(output.events, batch["event"].to(device), weights)
    if "segmentation" in cfg.tasks:
        labeled = batch["seg_present"].bool().to(device)
        if bool(labeled.any()):
            losses.segmentation = segmentation_loss(output.seg[labeled], batch["seg"].to(device)[labeled])
    return losses


def oracle_output(batch: dict[str, torch.Tensor], cfg: TrainConfig) -> TTNetOutput:
    """Predictions equal to the targets, with crops centred on the labeled ball"""
    res = cfg.resolution
    present = batch["ball_present"].cpu().bool()
    centers = torch.where(present[:, None], batch["ball_full"].to(torch.float64).cpu(),
                          torch.full((present.shape[0], 2), 0.0, dtype=torch.float64))
    windows = crop_windows(centers, res)
    local_x, local_y, _ = local_ball_targets(batch, windows, res, cfg.sigma_local)
    return TTNetOutput(
        global_x=batch["ball_global_x"].float(),
        global_y=batch["ball_global_y"].float(),
        local_x=local_x,
        local_y=local_y,
        events=batch["event"].float(),
        seg=batch["seg"].float(),
        windows=windows,
    )


def local_truth(ball: Sequence[float], window: CropWindow) -> tuple[float, float]:
    """Ball position in crop pixels, clamped into the window like the local targets"""
    x = round_half_away(ball[0]) - window.x_origin
    y = round_half_away(ball[1]) - window.y_origin
    return float(min(max(x, 0), window.width - 1)), float(min(max(y, 0), window.height - 1))


def accumulate_metrics(
    acc: MetricAccumulator,
    batch: dict[str, torch.Tensor],
    output: TTNetOutput,
) -> None:
    """Score one batch: global in global pixels, local composed back to full-frame pixels"""
    gx, gy = output.global_x.detach().cpu().numpy(), output.global_y.detach().cpu().numpy()
    lx, ly = output.local_x.detach().cpu().numpy(), output.local_y.detach().cpu().numpy()
    events = output.events.detach().cpu().numpy()
    event_targets = batch["event"].cpu().numpy()
    target_gx, target_gy = batch["ball_global_x"].cpu().numpy(), batch["ball_global_y"].cpu().numpy()
    ball = batch["ball_full"].cpu().tolist()
    present = batch["ball_present"].cpu().tolist()
    seg_present = batch["seg_present"].cpu().tolist()
    seg = output.seg.detach().cpu().numpy()
    seg_targets = batch["seg"].cpu().numpy()

    for i, window in enumerate(output.windows):
        global_truth = (float(target_gx[i].argmax()), float(target_gy[i].argmax())) if present[i] else None
        acc.add_ball(BallEvalRecord(gx[i], gy[i], global_truth, "global"))
        truth = local_truth(ball[i], window) if present[i] else None
        global_present = decide_presence(gx[i], gy[i])
        local_x = lx[i] if global_present else lx[i] * 0
        acc.add_ball(BallEvalRecord(local_x, ly[i], truth, "local"))
        acc.add_event(events[i], event_targets[i])
        if seg_present[i]:
            acc.add_segmentation(seg[i], seg_targets[i])


# ============ Trainer ============

class Trainer:
    """Owns the model, the aggregation strategy, the optimizer and the schedule"""

    def __init__(self, cfg: TrainConfig, device: str | torch.device = "cpu"):
        self.cfg = cfg
        self.device = torch.device(device)
        torch.manual_seed(cfg.seed)
        self.model = TTNet(
            cfg.resolution,
            num_frames=cfg.num_frames,
            multiplier=cfg.width_multiplier,
            conv_dropout=cfg.conv_dropout,
            fc_dropout=cfg.fc_dropout,
        ).to(self.device)
        self.strategy: BaseAggregation = build_strategy(cfg.strategy, cfg.manual_weights).to(self.device)
        self.optimizer = torch.optim.Adam(
            list(self.model.parameters()) + self.strategy.parameters(),
            lr=cfg.lr0,
            betas=cfg.adam_betas,
            eps=cfg.adam_eps,
        )
        self.schedule = PlateauSchedule(cfg.lr0, cfg.plateau_patience, cfg.stop_patience)
        self.event_weights = EventClassWeights(cfg.bounce_weight, cfg.net_weight)
        self.state = TrainState()
        logger.info("Trainer ready: strategy=%s multiplier=%s tasks=%s device=%s",
                    self.strategy.name, cfg.width_multiplier, ",".join(cfg.tasks), self.device)

    def set_lr(self, lr: float) -> None:
        for group in self.optimizer.param_groups:
            group["lr"] = lr

    def forward(self, batch: dict[str, torch.Tensor], crop_policy: str) -> TTNetOutput:
        return self.model(
            batch["global"].to(self.device),
            batch["full"].to(self.device),
            crop_policy=crop_policy,
            ball_full=batch["ball_full"],
            ball_present=batch["ball_present"],
            jitter=self.cfg.crop_jitter,
        )

    def train_step(self, batch: dict[str, torch.Tensor]) -> tuple[TaskLosses, float]:
        """One optimizer update; returns the task losses and the aggregate"""
        self.model.train()
        output = self.forward(batch, self.cfg.crop_policy)
        losses = compute_losses(batch, output, self.cfg, self.event_weights)
        total = self.strategy.aggregate(losses)
        if not losses.is_finite() or not bool(torch.isfinite(total)):
            components = losses.as_floats()
            components["total"] = float(total.detach())
            raise NonFiniteLossError(batch["sample_id"].tolist(), components)

        self.optimizer.zero_grad(set_to_none=True)
        total.backward()
        if self.cfg.grad_clip is not None:
            torch.nn.utils.clip_grad_norm_(
                list(self.model.parameters()) + self.strategy.parameters(), self.cfg.grad_clip)
        self.optimizer.step()
        return losses, float(total.detach())

    @torch.no_grad()
    def evaluate_epoch(
        self,
        loader: Iterable[dict[str, torch.Tensor]],
        oracle: bool = False,
    ) -> tuple[EvaluationReport, float]:
        """Metrics and mean aggregated loss over a split, dropout off, uncertainty frozen"""
        self.model.eval()
        acc = MetricAccumulator()
        total, count = 0.0, 0
        for batch in loader:
            output = oracle_output(batch, self.cfg) if oracle else self.forward(batch, "predicted")
            losses = compute_losses(batch, output, self.cfg, self.event_weights)
            size = int(batch["sample_id"].shape[0])
            total += float(self.strategy.aggregate(losses)) * size
            count += size
            accumulate_metrics(acc, batch, output)
        if count == 0:
            raise ValueError("evaluation split is empty")
        return acc.report(), total / count

    # ---- checkpoints ----

    def model_config(self) -> dict[str, Any]:
        return {
            "resolution": self.cfg.resolution.model_dump(),
            "num_frames": self.cfg.num_frames,
            "multiplier": self.cfg.width_multiplier,
            "conv_dropout": self.cfg.conv_dropout,
            "fc_dropout": self.cfg.fc_dropout,
        }

    def checkpoint_payload(self) -> dict[str, Any]:
        return {
            "model": self.model.state_dict(),
            "model_config": self.model_config(),
            "strategy": {"name": self.strategy.name, "state": self.strategy.state_dict()},
            "optimizer": self.optimizer.state_dict(),
            "schedule": self.schedule.state_dict(),
            "train_state": {
                "epoch": self.state.epoch,
                "best_val_loss": self.state.best_val_loss,
                "history": list(self.state.history),
            },
            "train_config": self.cfg.model_dump_json(),
        }

    def save(self, path: str | Path) -> Path:
        return save_checkpoint(self.checkpoint_payload(), path)

    def restore(self, path: str | Path) -> None:
        """Load every piece of state, including the global RNGs"""
        data = load_checkpoint(path, map_location=self.device)
        check_resolution(data, self.cfg.resolution)
        if data["strategy"]["name"] != self.strategy.name:
            raise ValueError(f"checkpoint used strategy {data['strategy']['name']!r}, config asks for "
                             f"{self.strategy.name!r}")
        self.model.load_state_dict(data["model"])
        self.strategy.load_state_dict(data["strategy"]["state"])
        self.optimizer.load_state_dict(data["optimizer"])
        self.schedule = PlateauSchedule.from_state(data["schedule"])
        self.set_lr(self.schedule.lr)
        state = data["train_state"]
        self.state = TrainState(state["epoch"], state["best_val_loss"], list(state["history"]))
        restore_rng_state(data["rng"])
        logger.info("Restored %s at epoch %d (lr=%g)", path, self.state.epoch, self.schedule.lr)

    # ---- main loop ----

    def train_epoch(self, loader: Iterable[dict[str, torch.Tensor]], epoch: int) -> tuple[dict[str, float], float, bool]:
        """Mean task losses and aggregate over the epoch, and whether it was aborted"""
        sums: dict[str, float] = {}
        total, steps = 0.0, 0
        out_dir = Path(self.cfg.out_dir)
        progress = tqdm(loader, desc=f"epoch {epoch}", disable=not self.cfg.progress, leave=False)
        try:
            for batch in progress:
                losses, aggregate = self.train_step(batch)
                for task, value in losses.as_floats().items():
                    sums[task] = sums.get(task, 0.0) + value
                total += aggregate
                steps += 1
                progress.set_postfix(loss=f"{aggregate:.4f}")
        except NonFiniteLossError as exc:
            dump = out_dir / f"nonfinite_epoch{epoch}.json"
            dump.parent.mkdir(parents=True, exist_ok=True)
            dump.write_text(json.dumps({"epoch": epoch, "sample_ids": exc.sample_ids,
                                        "components": exc.components}, indent=2), encoding="utf-8")
            logger.error("Aborting epoch %d: %s (dump at %s)", epoch, exc, dump)
            return {task: value / max(steps, 1) for task, value in sums.items()}, total / max(steps, 1), True
        finally:
            progress.close()
        return {task: value / max(steps, 1) for task, value in sums.items()}, total / max(steps, 1), False

    def fit(
        self,
        train_loader_for_epoch: Callable[[int], Iterable[dict[str, torch.Tensor]]],
        val_loader: Iterable[dict[str, torch.Tensor]],
    ) -> list[EpochRecord]:
        """Train until early stop or ``max_epochs``.

        ``train_loader_for_epoch(epoch)`` must return that epoch's training loader.
        Writes ``epochs.log``, ``last.pt`` after every epoch and ``best.pt`` on improvement.
        """
        out_dir = Path(self.cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        records: list[EpochRecord] = []
        for epoch in range(self.state.epoch, self.cfg.max_epochs):
            self.set_lr(self.schedule.lr)
            lr = self.schedule.lr
            train_losses, train_total, aborted = self.train_epoch(train_loader_for_epoch(epoch), epoch)
            report, val_loss = self.evaluate_epoch(val_loader)
            decision = self.schedule.step(val_loss)
            self.state.epoch = epoch + 1
            self.state.history.append(val_loss)

            record = EpochRecord(
                epoch=epoch, lr=lr, losses=train_losses, loss_total=train_total, val_loss=val_loss,
                weights=self.strategy.weights(), metrics=report, aborted=aborted,
            )
            records.append(record)
            line = record.to_key_value()
            with open(out_dir / EPOCH_LOG, "a", encoding="utf-8") as f:
                f.write(line + "\n")
            logger.info(line)

            if decision.improved:
                self.state.best_val_loss = val_loss
                self.save(out_dir / BEST_CHECKPOINT)
            self.save(out_dir / LAST_CHECKPOINT)
            if decision.halved:
                logger.info("Validation loss flat for %d epochs, lr -> %g", self.cfg.plateau_patience, decision.lr)
            if decision.stop:
                logger.info("Early stop after epoch %d: no improvement for %d epochs", epoch, self.cfg.stop_patience)
                break
        return records


def load_model(path: str | Path, cfg: ResolutionConfig | None = None, device: str | torch.device = "cpu") -> TTNet:
    """Rebuild a TTNet from a checkpoint, in eval mode"""
    data = load_checkpoint(path, map_location=device)
    model_config = data["model_config"]
    resolution = ResolutionConfig.model_validate(model_config["resolution"])
    if cfg is not None:
        check_resolution(data, cfg)
    model = TTNet(
        resolution,
        num_frames=model_config["num_frames"],
        multiplier=model_config["multiplier"],
        conv_dropout=model_config["conv_dropout"],
        fc_dropout=model_config["fc_dropout"],
    )
    model.load_state_dict(data["model"])
    return model.to(device).eval()


# ============ Entry points ============

@dataclass
class TrainingResult:
    records: list[EpochRecord]
    final_lr: float
    stopped: bool
    out_dir: Path
    summary: str


def train_from_config(
    cfg: TrainConfig,
    resume: str | Path | None = None,
    device: str | torch.device = "cpu",
) -> TrainingResult:
    """Build both splits, train, and write ``summary.txt`` next to the checkpoints"""
    train_set = build_dataset(cfg.train_dir, cfg, augment=cfg.augment)
    val_set = build_dataset(cfg.val_dir, cfg, augment=False)
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValueError(f"empty split: {len(train_set)} training and {len(val_set)} validation windows")
    val_loader = make_loader(val_set, cfg.batch_size, shuffle=False, seed=cfg.seed, num_workers=cfg.num_workers)

    trainer = Trainer(cfg, device)
    if resume is not None:
        trainer.restore(resume)

    def train_loader_for_epoch(epoch: int) -> Iterable[dict[str, torch.Tensor]]:
        return make_loader(train_set, cfg.batch_size, shuffle=True, seed=cfg.seed, epoch=epoch,
                           num_workers=cfg.num_workers)

    records = trainer.fit(train_loader_for_epoch, val_loader)
    out_dir = Path(cfg.out_dir)
    summary = render_training_summary(records, trainer.strategy.name, trainer.schedule.lr,
                                      trainer.schedule.stopped, out_dir)
    (out_dir / "summary.txt").write_text(summary, encoding="utf-8")
    return TrainingResult(records, trainer.schedule.lr, trainer.schedule.stopped, out_dir, summary)


def evaluate_checkpoint(
    data_dir: str | Path,
    checkpoint: str | Path | None = None,
    cfg: TrainConfig | None = None,
    oracle: bool = False,
    device: str | torch.device = "cpu",
) -> EvaluationReport:
    """Score a checkpoint (or, with ``oracle``, the targets themselves) on one split.

    The checkpoint's own training config is used unless ``cfg`` is given, in which case
    the two resolutions must agree.
    """
    data = None
    if checkpoint is not None:
        data = load_checkpoint(checkpoint, map_location=device)
        if cfg is None:
            cfg = TrainConfig.model_validate_json(data["train_config"])
        check_resolution(data, cfg.resolution)
    elif not oracle:
        raise ValueError("a checkpoint is required unless oracle mode is on")
    cfg = cfg or TrainConfig()

    trainer = Trainer(cfg.model_copy(update={"progress": False}), device)
    if data is not None:
        trainer.model.load_state_dict(data["model"])
        if data["strategy"]["name"] == trainer.strategy.name:
            trainer.strategy.load_state_dict(data["strategy"]["state"])
    dataset = build_dataset(data_dir, cfg, augment=False)
    loader = make_loader(dataset, cfg.batch_size, shuffle=False, seed=cfg.seed, num_workers=cfg.num_workers)
    report, val_loss = trainer.evaluate_epoch(loader, oracle=oracle)
    logger.info("Evaluated %s on %s (oracle=%s): loss %.6g", checkpoint, data_dir, oracle, val_loss)
    return report
