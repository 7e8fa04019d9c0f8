"""Streaming inference over a directory of extracted frames.

A reader thread decodes frames into a bounded queue while the main thread slides a
window of ``num_frames`` frames (stride 1) and evaluates the network. Each stack yields
one record: ball and masks refer to its last frame, event probabilities to its middle
frame.
"""
from __future__ import annotations

import logging
import queue
import threading
import time
from collections import deque
from collections.abc import Iterator
from pathlib import Path

import numpy as np
import torch

from .data.annotations import read_rgb
from .errors import InsufficientFramesError
from .geometry import LocalCoord, compose_coordinates
from .metrics import EVENT_THRESHOLD, decide_presence, predicted_center
from .models import InferenceRecord, LatencySummary
from .network import TTNet
from .network.complexity import REFERENCE_INFERENCE_MS
from .targets import SEG_CLASSES, assemble_input, downscale_frame, middle_index

logger = logging.getLogger(__name__)

FRAME_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")
_END = object()


def list_frames(frames_dir: str | Path) -> list[Path]:
    frames_dir = Path(frames_dir)
    if not frames_dir.is_dir():
        raise FileNotFoundError(f"frames directory not found: {frames_dir}")
    return sorted(p for p in frames_dir.iterdir() if p.suffix.lower() in FRAME_SUFFIXES)


class FrameReader(threading.Thread):
    """Producer thread: reads frames in order into a bounded queue"""

    def __init__(self, paths: list[Path], buffer: int = 16):
        super().__init__(daemon=True)
        self.paths = paths
        self.queue: queue.Queue = queue.Queue(maxsize=buffer)
        self._stop_event = threading.Event()

    def run(self) -> None:
        try:
            for path in self.paths:
                if self._stop_event.is_set():
                    break
                self.queue.put(read_rgb(path))
        except Exception as exc:  # re-raised in the consumer
            self.queue.put(exc)
        finally:
            self.queue.put(_END)

    def stop(self) -> None:
        self._stop_event.set()
        # unblock a producer waiting on a full queue
        while not self.queue.empty():
            try:
                self.queue.get_nowait()
            except queue.Empty:
                break

    def __iter__(self) -> Iterator[np.ndarray]:
        while True:
            item = self.queue.get()
            if item is _END:
                return
            if isinstance(item, Exception):
                raise item
            yield item


class StreamingInference:
    """Runs a frozen model over a frame stream and keeps per-stack latencies"""

    def __init__(self, model: TTNet, device: str | torch.device = "cpu", include_masks: bool = True):
        self.model = model.eval()
        self.device = torch.device(device)
        self.include_masks = include_masks
        self.latencies_ms: list[float] = []

    @torch.no_grad()
    def predict_stack(self, frames: list[np.ndarray], frame_index: int) -> InferenceRecord:
        cfg = self.model.cfg
        num_frames = self.model.num_frames
        if frames[0].shape[:2] != (cfg.h0, cfg.w0):
            raise ValueError(f"frame is {frames[0].shape[1]}x{frames[0].shape[0]}, model expects {cfg.w0}x{cfg.h0}")
        started = time.perf_counter()
        full = torch.from_numpy(assemble_input(frames, num_frames))[None].to(self.device)
        global_stack = assemble_input([downscale_frame(f, cfg) for f in frames], num_frames)
        global_in = (torch.from_numpy(global_stack).float() / 255.0)[None].to(self.device)
        output = self.model(global_in, full, crop_policy="predicted")
        gx, gy = output.global_x[0].cpu().numpy(), output.global_y[0].cpu().numpy()
        lx, ly = output.local_x[0].cpu().numpy(), output.local_y[0].cpu().numpy()
        events = output.events[0].cpu().numpy()
        seg = output.seg[0].cpu().numpy() if self.include_masks else None
        self.latencies_ms.append((time.perf_counter() - started) * 1000)

        present = decide_presence(gx, gy) and decide_presence(lx, ly)
        ball_x = ball_y = None
        if present:
            x2, y2 = predicted_center(lx, ly)
            point = compose_coordinates(output.windows[0], LocalCoord(x2=x2, y2=y2))
            ball_x, ball_y = point.x, point.y
        bounce, net = float(events[0]), float(events[1])
        return InferenceRecord(
            frame_index=frame_index,
            event_frame_index=frame_index - (num_frames - 1 - middle_index(num_frames)),
            ball_present=present,
            ball_x=ball_x,
            ball_y=ball_y,
            bounce=bounce,
            net=net,
            bounce_flag=bounce > EVENT_THRESHOLD,
            net_flag=net > EVENT_THRESHOLD,
            mask_pixels=None if seg is None else {
                name: int((seg[c] > 0.5).sum()) for c, name in enumerate(SEG_CLASSES)
            },
            latency_ms=round(self.latencies_ms[-1], 3),
        )

    def run(self, paths: list[Path], buffer: int = 16) -> Iterator[InferenceRecord]:
        """One record per stack: ``len(paths) - num_frames + 1`` records"""
        num_frames = self.model.num_frames
        if len(paths) < num_frames:
            raise InsufficientFramesError(f"need at least {num_frames} frames, got {len(paths)}")
        reader = FrameReader(paths, buffer)
        reader.start()
        window: deque[np.ndarray] = deque(maxlen=num_frames)
        try:
            for index, frame in enumerate(reader):
                window.append(frame)
                if len(window) == num_frames:
                    yield self.predict_stack(list(window), index)
        finally:
            reader.stop()
            reader.join(timeout=5)

    def latency_summary(self) -> LatencySummary:
        values = np.array(self.latencies_ms, dtype=np.float64)
        if values.size == 0:
            return LatencySummary(stacks=0, mean_ms=float("nan"), p95_ms=float("nan"),
                                  reference_ms=REFERENCE_INFERENCE_MS)
        return LatencySummary(
            stacks=int(values.size),
            mean_ms=float(values.mean()),
            p95_ms=float(np.percentile(values, 95)),
            reference_ms=REFERENCE_INFERENCE_MS,
        )


def run_inference(
    model: TTNet,
    frames_dir: str | Path,
    out_path: str | Path | None = None,
    device: str | torch.device = "cpu",
) -> tuple[list[InferenceRecord], LatencySummary]:
    """Infer over every frame in ``frames_dir``; writes JSON lines to ``out_path`` if given"""
    paths = list_frames(frames_dir)
    runner = StreamingInference(model, device)
    records = []
    handle = None
    if out_path is not None:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        handle = open(out_path, "w", encoding="utf-8")
    try:
        for record in runner.run(paths):
            records.append(record)
            if handle is not None:
                handle.write(record.model_dump_json() + "\n")
    finally:
        if handle is not None:
            handle.close()
    summary = runner.latency_summary()
    logger.info("Inference on %d frames: %d records, mean %.2f ms, p95 %.2f ms (reference %.1f ms)",
                len(paths), len(records), summary.mean_ms, summary.p95_ms, summary.reference_ms)
    return records, summary
