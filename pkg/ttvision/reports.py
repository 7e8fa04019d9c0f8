"""Text reports rendered from Jinja2 templates"""

import math
from pathlib import Path

from jinja2 import Environment, FileSystemLoader

from .geometry import ResolutionConfig
from .models import EpochRecord
from .network.complexity import (
    REFERENCE_ENCODER_GFLOPS,
    REFERENCE_ENCODER_PARAMS,
    REFERENCE_INFERENCE_MS,
    ArchitectureSummary,
)

# Initialize Jinja2 Environment
TEMPLATE_DIR = Path(__file__).parent / "templates"
jinja_env = Environment(
    loader=FileSystemLoader(str(TEMPLATE_DIR)),
    trim_blocks=True,
    lstrip_blocks=True,
    autoescape=False
)


def _delta_pct(value: float, reference: float) -> float:
    return 100.0 * (value - reference) / reference


def arch_report_data(summary: ArchitectureSummary) -> dict:
    """Counts next to the reference figures, as plain data"""
    return {
        "multiplier": summary.multiplier,
        "encoder_params": summary.encoder_params,
        "encoder_conv_params": summary.encoder_conv_params,
        "full_params": summary.full_params,
        "encoder_macs": summary.encoder_macs,
        "encoder_flops": summary.encoder_flops,
        "reference": {
            "encoder_params": REFERENCE_ENCODER_PARAMS,
            "encoder_gflops": REFERENCE_ENCODER_GFLOPS,
            "inference_ms": REFERENCE_INFERENCE_MS,
            "encoder_gflops_compared_to": "encoder_macs",
        },
        "params_delta_pct": _delta_pct(summary.encoder_params, REFERENCE_ENCODER_PARAMS),
        "macs_delta_pct": _delta_pct(summary.encoder_macs / 1e9, REFERENCE_ENCODER_GFLOPS),
        "flops_delta_pct": _delta_pct(summary.encoder_flops / 1e9, REFERENCE_ENCODER_GFLOPS),
    }


def render_arch_report(summary: ArchitectureSummary, resolution: ResolutionConfig, num_frames: int = 9) -> str:
    """
    Render the parameter / FLOP report

    Args:
        summary: counts for one width multiplier
        resolution: resolution the counts were taken at
        num_frames: frames per input stack

    Returns:
        Report text
    """
    data = arch_report_data(summary)
    template = jinja_env.get_template("arch_report.j2")
    return template.render(
        summary=summary,
        resolution=resolution,
        num_frames=num_frames,
        reference={
            "params": REFERENCE_ENCODER_PARAMS,
            "gflops": REFERENCE_ENCODER_GFLOPS,
            "inference_ms": REFERENCE_INFERENCE_MS,
        },
        params_delta_pct=data["params_delta_pct"],
        macs_delta_pct=data["macs_delta_pct"],
        flops_delta_pct=data["flops_delta_pct"],
    )


def render_training_summary(
    records: list[EpochRecord],
    strategy: str,
    final_lr: float,
    stopped: bool,
    out_dir: Path,
) -> str:
    finite = [r for r in records if math.isfinite(r.val_loss)]
    best = min(finite, key=lambda r: r.val_loss) if finite else None
    template = jinja_env.get_template("training_summary.j2")
    return template.render(
        records=records,
        strategy=strategy,
        final_lr=final_lr,
        stopped=stopped,
        best=best,
        aborted=[r.epoch for r in records if r.aborted],
        out_dir=out_dir,
    )
