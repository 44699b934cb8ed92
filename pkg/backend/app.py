from fastapi import FastAPI, HTTPException, Request, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.middleware.gzip import GZipMiddleware
from fastapi.responses import JSONResponse
from fastapi.concurrency import run_in_threadpool
from pydantic import BaseModel
from typing import Dict, List, Optional
from pathlib import Path
from datetime import datetime
import logging

from cli import configure_logging
from config import Config, PipelineConfig
from pipeline import STAGES, run_stage
from report import SUMMARY_MD
from tools.artifacts import Manifest
from tools.errors import (
    DataError,
    IntegrityError,
    MissingArtifactError,
    TransientProviderError,
    UsageError,
)

configure_logging()
logger = logging.getLogger(__name__)

VERSION = "1.0.0"

# Initialize FastAPI
app = FastAPI(
    title="Steam Game Network API",
    description="Sampling, structural profiling, embedding and clustering of Steam game networks",
    version=VERSION,
    docs_url="/docs",
    redoc_url="/redoc"
)

# Middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=Config.CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)
app.add_middleware(GZipMiddleware, minimum_size=1000)


# Pydantic Models
class StageResponse(BaseModel):
    success: bool
    stage: str
    output_dir: str
    artifacts: List[str]
    timestamp: str
    processing_time_ms: float


class ReportResponse(BaseModel):
    success: bool
    output_dir: str
    summary: str
    files: List[str]
    stages: Dict[str, str]


class HealthResponse(BaseModel):
    status: str
    version: str
    environment: str
    stages: List[str]
    timestamp: str


def _error_response(status_code: int, error: str, exc: Exception) -> JSONResponse:
    return JSONResponse(
        status_code=status_code,
        content={
            "success": False,
            "error": error,
            "detail": str(exc),
        }
    )


# Exception handlers, most specific first
@app.exception_handler(MissingArtifactError)
async def missing_artifact_handler(request: Request, exc: MissingArtifactError):
    logger.warning(f"Missing artifact: {exc}")
    return _error_response(status.HTTP_409_CONFLICT, "Missing upstream artifact", exc)


@app.exception_handler(IntegrityError)
async def integrity_handler(request: Request, exc: IntegrityError):
    logger.warning(f"Integrity check failed: {exc}")
    return _error_response(status.HTTP_409_CONFLICT, "Artifact hash mismatch", exc)


@app.exception_handler(DataError)
async def data_error_handler(request: Request, exc: DataError):
    logger.warning(f"Data error: {exc}")
    return _error_response(status.HTTP_422_UNPROCESSABLE_ENTITY, "Invalid input data", exc)


@app.exception_handler(TransientProviderError)
async def transient_handler(request: Request, exc: TransientProviderError):
    logger.error(f"Provider unavailable: {exc}")
    return _error_response(status.HTTP_503_SERVICE_UNAVAILABLE, "Steam provider unavailable", exc)


@app.exception_handler(UsageError)
async def usage_handler(request: Request, exc: UsageError):
    return _error_response(status.HTTP_400_BAD_REQUEST, "Bad request", exc)


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    logger.error(f"Global exception: {str(exc)}", exc_info=True)
    return JSONResponse(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        content={
            "success": False,
            "error": "Internal server error",
            "detail": str(exc) if Config.DEBUG else "An error occurred"
        }
    )


# Routes
@app.get("/", tags=["Root"])
async def root():
    return {
        "message": "Steam Game Network API",
        "version": VERSION,
        "docs": "/docs",
        "health": "/health",
        "stages": STAGES + ["pipeline"],
    }


@app.get("/health", response_model=HealthResponse, tags=["Health"])
async def health_check():
    return HealthResponse(
        status="healthy",
        version=VERSION,
        environment=Config.ENVIRONMENT,
        stages=STAGES,
        timestamp=datetime.now().isoformat()
    )


@app.post("/stages/{stage}", response_model=StageResponse, tags=["Pipeline"])
async def run_pipeline_stage(stage: str, cfg: PipelineConfig):
    """Run one stage, or every stage with `pipeline`, against the configured output directory"""
    if stage not in STAGES and stage != "pipeline":
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=f"Unknown stage '{stage}'; expected one of {', '.join(STAGES + ['pipeline'])}"
        )

    start = datetime.now()
    logger.info(f"API request: stage '{stage}' into {cfg.output_dir}")
    # stages are CPU-bound; keep them off the event loop
    outputs = await run_in_threadpool(run_stage, stage, cfg)
    elapsed = (datetime.now() - start).total_seconds() * 1000

    out_dir = Path(cfg.output_dir)
    return StageResponse(
        success=True,
        stage=stage,
        output_dir=str(out_dir),
        artifacts=sorted(Path(p).resolve().relative_to(out_dir.resolve()).as_posix() for p in outputs),
        timestamp=datetime.now().isoformat(),
        processing_time_ms=round(elapsed, 2)
    )


@app.get("/report", response_model=ReportResponse, tags=["Pipeline"])
async def get_report(output_dir: Optional[str] = None):
    """Summary document and bundle listing of a finished run"""
    out_dir = Path(output_dir or Config.OUTPUT_DIR)
    report_dir = out_dir / "report"
    summary = report_dir / SUMMARY_MD
    if not summary.exists():
        raise MissingArtifactError(f"report/{SUMMARY_MD}", "report")

    manifest = Manifest.load(out_dir)
    return ReportResponse(
        success=True,
        output_dir=str(out_dir),
        summary=summary.read_text(encoding="utf-8"),
        files=sorted(p.name for p in report_dir.iterdir() if p.is_file()),
        stages={stage: record["config_hash"] for stage, record in sorted(manifest.stages.items())},
    )


# Main backend/app.py
if __name__ == "__main__":
    try:
        import uvicorn
        logger.info("Starting uvicorn server...")
        uvicorn.run(
            "app:app",
            host=Config.API_HOST,
            port=Config.API_PORT,
            reload=Config.DEBUG,
            log_level=Config.LOG_LEVEL.lower(),
            access_log=False,
            timeout_keep_alive=60
        )
    except KeyboardInterrupt:
        logger.info("Server stopped by user")
    except Exception as e:
        logger.error(f"Failed to start server: {str(e)}", exc_info=True)
        raise
