"""HTTP surface over the architecture report and streaming inference"""
import logging
from contextlib import asynccontextmanager
from pathlib import Path
from threading import Lock

from fastapi import FastAPI, HTTPException, Query

from . import __version__
from .config import Settings
from .errors import CheckpointError, InsufficientFramesError, TTVisionError
from .inference import run_inference
from .models import InferRequest, InferResponse
from .network import TTNet
from .network.complexity import summarize_architecture
from .reports import arch_report_data
from .training import load_model

logger = logging.getLogger(__name__)

# checkpoint path -> (mtime, model)
_models: dict[str, tuple[float, TTNet]] = {}
_models_lock = Lock()


def get_model(path: Path) -> TTNet:
    """Load a checkpoint once and reuse it until the file changes"""
    key = str(path.resolve())
    with _models_lock:
        mtime = path.stat().st_mtime
        cached = _models.get(key)
        if cached is not None and cached[0] == mtime:
            return cached[1]
        model = load_model(path)
        _models[key] = (mtime, model)
    logger.info("Loaded model from %s", path)
    return model


@asynccontextmanager
async def lifespan(_app: FastAPI):
    yield
    with _models_lock:
        _models.clear()


app = FastAPI(
    title="ttvision",
    version=__version__,
    lifespan=lifespan,
)


@app.get("/api/arch")
def architecture(multiplier: float = Query(1.0, gt=0, le=1), num_frames: int = Query(9, ge=1, le=9)):
    """Parameter and FLOP counts at the default resolution"""
    try:
        summary = summarize_architecture(multiplier, num_frames=num_frames)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return arch_report_data(summary)


@app.post("/api/infer", response_model=InferResponse)
def infer(request: InferRequest):
    """Run streaming inference over a frames directory on the server"""
    checkpoint = request.checkpoint or Settings().checkpoint
    if checkpoint is None:
        raise HTTPException(status_code=400, detail="No checkpoint given and TTV_CHECKPOINT is not set")
    checkpoint = Path(checkpoint)
    if not checkpoint.is_file():
        raise HTTPException(status_code=404, detail=f"Checkpoint not found: {checkpoint}")
    if not Path(request.frames_dir).is_dir():
        raise HTTPException(status_code=404, detail=f"Frames directory not found: {request.frames_dir}")

    try:
        model = get_model(checkpoint)
        records, latency = run_inference(model, request.frames_dir)
    except CheckpointError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except (InsufficientFramesError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except TTVisionError as e:
        raise HTTPException(status_code=500, detail=str(e))
    return InferResponse(records=records, latency=latency)


# Health check
@app.get("/api/health")
def health_check():
    """Health check endpoint"""
    return {"status": "ok", "version": __version__}
