import os
import json
import hashlib
from datetime import date
from pathlib import Path
from typing import Optional, Literal

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator, model_validator

load_dotenv()


class Config:
    """Environment configuration for the Steam game-network toolkit"""

    # Steam Web API (live mode only)
    STEAM_API_KEY = os.getenv("STEAM_API_KEY", "")
    STEAM_API_BASE_URL = os.getenv("STEAM_API_BASE_URL", "https://api.steampowered.com")
    STEAM_TIMEOUT = int(os.getenv("STEAM_TIMEOUT", 30))

    # Rate limiting: daily quota plus a short-window token bucket
    STEAM_REQUESTS_PER_DAY = int(os.getenv("STEAM_REQUESTS_PER_DAY", 100000))
    STEAM_BURST = int(os.getenv("STEAM_BURST", 10))

    # Retry policy
    STEAM_MAX_ATTEMPTS = int(os.getenv("STEAM_MAX_ATTEMPTS", 4))
    STEAM_BACKOFF_BASE = float(os.getenv("STEAM_BACKOFF_BASE", 1.0))
    STEAM_BACKOFF_FACTOR = float(os.getenv("STEAM_BACKOFF_FACTOR", 2.0))

    # Paths
    CACHE_DIR = os.getenv("CACHE_DIR", "./data/cache")
    OUTPUT_DIR = os.getenv("OUTPUT_DIR", "./data/run")

    # Reproducibility and parallelism
    MASTER_SEED = int(os.getenv("MASTER_SEED", 42))
    JOBS = int(os.getenv("JOBS", 1))
    MAX_IN_FLIGHT = int(os.getenv("MAX_IN_FLIGHT", 8))

    # API Configuration
    API_HOST = os.getenv("API_HOST", "127.0.0.1")
    API_PORT = int(os.getenv("API_PORT", 8000))
    API_VERSION = "v1"

    # Logging
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_FILE = os.getenv("LOG_FILE", "./logs/app.log")

    # CORS Settings
    CORS_ORIGINS = os.getenv("CORS_ORIGINS", "*").split(",")

    # Deployment
    ENVIRONMENT = os.getenv("ENVIRONMENT", "development")
    DEBUG = os.getenv("DEBUG", "true").lower() == "true"


class ProviderConfig(BaseModel):
    """Where friend lists and playtime snapshots come from"""

    mode: Literal["fixture", "live"] = "fixture"
    fixture_root: Optional[Path] = None
    api_key: str = Field(default_factory=lambda: Config.STEAM_API_KEY, repr=False)
    base_url: str = Field(default_factory=lambda: Config.STEAM_API_BASE_URL)
    requests_per_day: int = Field(default_factory=lambda: Config.STEAM_REQUESTS_PER_DAY, gt=0)
    burst: int = Field(default_factory=lambda: Config.STEAM_BURST, gt=0)
    max_attempts: int = Field(default_factory=lambda: Config.STEAM_MAX_ATTEMPTS, ge=1)
    backoff_base: float = Field(default_factory=lambda: Config.STEAM_BACKOFF_BASE, ge=0)
    backoff_factor: float = Field(default_factory=lambda: Config.STEAM_BACKOFF_FACTOR, ge=1)
    timeout: int = Field(default_factory=lambda: Config.STEAM_TIMEOUT, gt=0)
    cache_dir: Path = Field(default_factory=lambda: Path(Config.CACHE_DIR))
    max_in_flight: int = Field(default_factory=lambda: Config.MAX_IN_FLIGHT, ge=1)

    @model_validator(mode="after")
    def _check_mode(self):
        if self.mode == "live" and not self.api_key:
            raise ValueError("live mode requires STEAM_API_KEY")
        if self.mode == "fixture" and self.fixture_root is None:
            raise ValueError("fixture mode requires fixture_root")
        return self


class EmbeddingConfig(BaseModel):
    d: int = Field(8, ge=1)
    wl_iterations: int = Field(2, ge=0)
    epochs: int = Field(10, ge=0)
    learning_rate: float = Field(0.025, gt=0)
    min_learning_rate: float = Field(0.0001, ge=0)
    negative_samples: int = Field(5, ge=1)
    min_token_count: int = Field(1, ge=1)
    seed: int = Field(default_factory=lambda: Config.MASTER_SEED)


class ClusteringConfig(BaseModel):
    k: int = Field(6, ge=2)
    k_min: int = Field(2, ge=2)
    k_max: int = Field(10, ge=2)
    n_init: int = Field(10, ge=1)
    max_iter: int = Field(300, ge=1)
    tol: float = Field(1e-6, ge=0)
    seed: int = Field(default_factory=lambda: Config.MASTER_SEED)

    @model_validator(mode="after")
    def _check_range(self):
        if self.k_min > self.k_max:
            raise ValueError(f"k_min ({self.k_min}) must not exceed k_max ({self.k_max})")
        return self


class MetricsConfig(BaseModel):
    bootstrap_reps: int = Field(100, ge=0)
    p_threshold: float = Field(0.1, ge=0, le=1)
    min_tail: int = Field(25, ge=1)
    seed: int = Field(default_factory=lambda: Config.MASTER_SEED)


class CharacterizationConfig(BaseModel):
    top_k: int = Field(10, ge=1)


# input locations, resolved against the config file
PATH_FIELDS = ("edge_list", "seeds_file", "activity_csv", "catalog", "frontier_file")


class PipelineConfig(BaseModel):
    """Full parameter surface of a pipeline run"""

    edge_list: Optional[Path] = None
    seeds_file: Optional[Path] = None
    activity_csv: Optional[Path] = None
    catalog: Optional[Path] = None
    frontier_file: Optional[Path] = None
    provider: Optional[ProviderConfig] = None

    window_start: date
    window_end: date
    top_n: int = Field(200, ge=1)
    min_nodes: int = Field(250, ge=0)

    embedding: EmbeddingConfig = Field(default_factory=EmbeddingConfig)
    clustering: ClusteringConfig = Field(default_factory=ClusteringConfig)
    metrics: MetricsConfig = Field(default_factory=MetricsConfig)
    characterization: CharacterizationConfig = Field(default_factory=CharacterizationConfig)

    output_dir: Path = Field(default_factory=lambda: Path(Config.OUTPUT_DIR))
    seed: int = Field(default_factory=lambda: Config.MASTER_SEED)
    jobs: int = Field(default_factory=lambda: Config.JOBS, ge=1)

    @field_validator("window_start", "window_end", mode="before")
    @classmethod
    def _parse_date(cls, value):
        if isinstance(value, str):
            from dateutil.parser import isoparse
            return isoparse(value).date()
        return value

    @model_validator(mode="after")
    def _check_window(self):
        if self.window_start > self.window_end:
            raise ValueError(f"window start {self.window_start} is after end {self.window_end}")
        return self

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        base = Path(path).resolve().parent
        # relative paths in a config file are relative to the file
        for key in (*PATH_FIELDS, "output_dir"):
            if data.get(key) and not Path(data[key]).is_absolute():
                data[key] = str(base / data[key])
        provider = data.get("provider")
        if provider and provider.get("fixture_root") and not Path(provider["fixture_root"]).is_absolute():
            provider["fixture_root"] = str(base / provider["fixture_root"])
        # a top-level seed is the default for every seeded section
        if "seed" in data:
            for section in ("embedding", "clustering", "metrics"):
                data.setdefault(section, {}).setdefault("seed", data["seed"])
        return cls.model_validate(data)

    def with_seed(self, seed: int) -> "PipelineConfig":
        """Apply a master seed to every seeded sub-config"""
        return self.model_copy(update={
            "seed": seed,
            "embedding": self.embedding.model_copy(update={"seed": seed}),
            "clustering": self.clustering.model_copy(update={"seed": seed}),
            "metrics": self.metrics.model_copy(update={"seed": seed}),
        })

    def config_hash(self) -> str:
        """
        SHA-256 of the parameters that shape results. File locations are left
        out; the manifest hashes the input files themselves.
        """
        payload = self.model_dump(mode="json", exclude={"output_dir", "jobs", *PATH_FIELDS})
        if payload.get("provider"):
            for key in ("api_key", "fixture_root", "cache_dir"):
                payload["provider"].pop(key, None)
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()
