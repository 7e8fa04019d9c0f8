"""Pytest configuration and fixtures"""
import sys
from pathlib import Path

import pytest
import torch

# Add parent directory to path so we can import ttvision
sys.path.insert(0, str(Path(__file__).parent.parent))

from ttvision.config import TrainConfig  # noqa: E402
from ttvision.data.synthetic import SyntheticSceneConfig, synthesize_dataset  # noqa: E402
from ttvision.geometry import ResolutionConfig  # noqa: E402
from ttvision.network import TTNet  # noqa: E402

TINY_RESOLUTION = ResolutionConfig(w0=256, h0=128, w1=128, h1=64, w2=128, h2=64)


@pytest.fixture
def tiny_res():
    """Smallest resolution the network accepts (one 1/64 feature row)"""
    return TINY_RESOLUTION


@pytest.fixture
def tiny_model(tiny_res):
    torch.manual_seed(0)
    return TTNet(tiny_res, num_frames=9, multiplier=0.25)


@pytest.fixture(scope="session")
def synthetic_root(tmp_path_factory):
    """Two short bouncing clips at the tiny resolution, shared by the session"""
    root = tmp_path_factory.mktemp("synthetic")
    scene = SyntheticSceneConfig.for_resolution(TINY_RESOLUTION, bounce_guaranteed=True, clip_length=48, noise=1.0)
    synthesize_dataset(root, n_clips=2, seed=3, cfg=scene)
    return root


@pytest.fixture
def tiny_config(tmp_path, synthetic_root):
    return TrainConfig(
        train_dir=synthetic_root,
        val_dir=synthetic_root,
        out_dir=tmp_path / "run",
        batch_size=8,
        max_epochs=1,
        negatives_ratio=0.25,
        augment=False,
        width_multiplier=0.25,
        resolution=TINY_RESOLUTION,
        progress=False,
    )


@pytest.fixture(autouse=True)
def isolated_logs(tmp_path, monkeypatch):
    """Keep CLI log files out of the working tree"""
    monkeypatch.setenv("TTV_LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.setenv("TTV_DEVICE", "cpu")
