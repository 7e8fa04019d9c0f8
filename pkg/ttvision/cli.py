"""Command-line interface: synthetic data, training, evaluation, inference and architecture checks."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import torch
import uvicorn
from pydantic import ValidationError

from .config import Settings, TrainConfig, ensure_config_file, load_train_config
from .data.synthetic import SyntheticSceneConfig, synthesize_dataset
from .errors import ConfigError, TTVisionError
from .geometry import ResolutionConfig
from .inference import run_inference
from .network.complexity import summarize_architecture
from .reports import render_arch_report
from .training import evaluate_checkpoint, load_model, train_from_config

logger = logging.getLogger(__name__)

LOG_LEVELS = ["critical", "error", "warning", "info", "debug"]


def setup_logging(log_level: str, log_dir: Path) -> None:
    level = getattr(logging, log_level.upper(), logging.INFO)
    log_dir.mkdir(parents=True, exist_ok=True)
    log_file = log_dir / "ttvision.log"

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)

    formatter = logging.Formatter("%(asctime)s %(levelname)s [%(name)s] %(message)s")

    file_handler = logging.FileHandler(log_file, encoding="utf-8")
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)

    root_logger.handlers.clear()
    root_logger.addHandler(file_handler)
    root_logger.addHandler(console_handler)


def resolve_device(settings: Settings) -> str:
    if settings.device == "auto":
        return "cuda" if torch.cuda.is_available() else "cpu"
    if settings.device == "cuda" and not torch.cuda.is_available():
        raise ValueError("device=cuda requested but CUDA is not available")
    return settings.device


def apply_torch_settings(settings: Settings) -> None:
    if settings.num_threads:
        torch.set_num_threads(settings.num_threads)
    if settings.deterministic:
        torch.use_deterministic_algorithms(True)


def _resolution_from(config_path: str | None) -> ResolutionConfig:
    if config_path is None:
        return ResolutionConfig()
    return load_train_config(config_path).resolution


# ============ Commands ============

def cmd_synth(args: argparse.Namespace, settings: Settings) -> int:
    resolution = _resolution_from(args.config)
    overrides = {"bounce_guaranteed": args.bounce, "noise": args.noise}
    if args.length is not None:
        overrides["clip_length"] = args.length
    scene = SyntheticSceneConfig.for_resolution(resolution, **overrides)
    counts = synthesize_dataset(args.out, args.clips, args.seed, scene)
    for name, events in counts.items():
        print(f"{name} bounce={events['bounce']} net={events['net']}")
    return 0


def cmd_train(args: argparse.Namespace, settings: Settings) -> int:
    if ensure_config_file(args.config):
        raise ConfigError(f"no config at {args.config}; wrote the example config there, edit it and run again")
    overrides = {
        "seed": args.seed,
        "strategy": args.strategy,
        "width_multiplier": args.multiplier,
        "out_dir": args.out,
    }
    cfg = load_train_config(args.config, overrides)
    result = train_from_config(cfg, resume=args.resume, device=resolve_device(settings))
    print(result.summary)
    return 0


def cmd_eval(args: argparse.Namespace, settings: Settings) -> int:
    cfg: TrainConfig | None = load_train_config(args.config) if args.config else None
    data_dir = args.data_dir or (cfg.val_dir if cfg is not None else None)
    if data_dir is None:
        raise ValueError("--data-dir is required without --config")
    report = evaluate_checkpoint(data_dir, args.checkpoint, cfg, oracle=args.oracle,
                                 device=resolve_device(settings))
    text = report.to_key_value()
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        logger.info("Wrote report to %s", out)
    sys.stdout.write(text)
    return 0


def cmd_infer(args: argparse.Namespace, settings: Settings) -> int:
    device = resolve_device(settings)
    resolution = load_train_config(args.config).resolution if args.config else None
    model = load_model(args.checkpoint, resolution, device=device)
    records, summary = run_inference(model, args.frames_dir, args.out, device=device)
    if args.out is None:
        for record in records:
            print(record.model_dump_json())
    print(f"latency stacks={summary.stacks} mean_ms={summary.mean_ms:.3f} p95_ms={summary.p95_ms:.3f} "
          f"reference_ms={summary.reference_ms}", file=sys.stderr)
    return 0


def cmd_arch(args: argparse.Namespace, settings: Settings) -> int:
    resolution = _resolution_from(args.config)
    summary = summarize_architecture(args.multiplier, resolution, args.num_frames)
    print(render_arch_report(summary, resolution, args.num_frames))
    return 0


def cmd_serve(args: argparse.Namespace, settings: Settings) -> int:
    uvicorn.run(
        "ttvision.service:app",
        host=args.host,
        port=args.port,
        log_level=args.log_level,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ttvision", description="Table tennis video analysis")
    parser.add_argument(
        "--log-level",
        default="info",
        choices=LOG_LEVELS,
        help="Console log level",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="Generate a synthetic dataset")
    synth.add_argument("--out", required=True, help="Output directory")
    synth.add_argument("--clips", type=int, default=10, help="Number of clips")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--bounce", action="store_true", help="Guarantee a bounce in every clip")
    synth.add_argument("--length", type=int, default=None, help="Frames per clip")
    synth.add_argument("--noise", type=float, default=2.0, help="Gaussian pixel noise sigma")
    synth.add_argument("--config", default=None, help="Config file supplying the resolution")
    synth.set_defaults(func=cmd_synth)

    train = sub.add_parser("train", help="Train a model")
    train.add_argument("--config", required=True, help="Flat KEY=value config file")
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--strategy", choices=["unbalanced", "manual", "adaptive"], default=None)
    train.add_argument("--multiplier", type=float, default=None, help="Channel width multiplier")
    train.add_argument("--out", default=None, help="Run directory")
    train.add_argument("--resume", default=None, help="Checkpoint to continue from")
    train.set_defaults(func=cmd_train)

    evaluate = sub.add_parser("eval", help="Evaluate a checkpoint on a dataset split")
    evaluate.add_argument("--checkpoint", default=None)
    evaluate.add_argument("--data-dir", default=None, help="Split directory (default: VAL_DIR from --config)")
    evaluate.add_argument("--config", default=None, help="Config whose resolution must match the checkpoint")
    evaluate.add_argument("--oracle", action="store_true", help="Score the targets as predictions")
    evaluate.add_argument("--out", default=None, help="Report file")
    evaluate.set_defaults(func=cmd_eval)

    infer = sub.add_parser("infer", help="Streaming inference over extracted frames")
    infer.add_argument("--checkpoint", required=True)
    infer.add_argument("--frames-dir", required=True)
    infer.add_argument("--out", default=None, help="JSON lines output (default: stdout)")
    infer.add_argument("--config", default=None, help="Config whose resolution must match the checkpoint")
    infer.set_defaults(func=cmd_infer)

    arch = sub.add_parser("arch", help="Parameter and FLOP report")
    arch.add_argument("--multiplier", type=float, default=1.0)
    arch.add_argument("--num-frames", type=int, default=9)
    arch.add_argument("--config", default=None, help="Config file supplying the resolution")
    arch.set_defaults(func=cmd_arch)

    serve = sub.add_parser("serve", help="Run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1", help="Host to bind")
    serve.add_argument("--port", type=int, default=8009, help="Port to bind")
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> None:
    args = build_parser().parse_args(argv)
    try:
        settings = Settings()
        setup_logging(args.log_level, settings.log_dir)
        apply_torch_settings(settings)
        code = args.func(args, settings)
    except (TTVisionError, ValueError, OSError, ValidationError) as exc:
        message = " ".join(str(exc).split())
        print(f"error={type(exc).__name__} message={message}", file=sys.stderr)
        sys.exit(2)
    except Exception as exc:
        logger.exception("Unexpected failure")
        print(f"error={type(exc).__name__} message={' '.join(str(exc).split())}", file=sys.stderr)
        sys.exit(1)
    sys.exit(code)


if __name__ == "__main__":
    main()
