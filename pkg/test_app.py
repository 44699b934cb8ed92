"""
API tests against the FastAPI app with a tiny synthetic fixture
Run with: pytest test_app.py
"""

import sys
import os

import pytest
from fastapi.testclient import TestClient

# Add backend to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'backend'))

from app import app
from config import PipelineConfig
from pipeline import STAGES
from tools.fixtures import write_synthetic_fixture


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture(scope="module")
def fixture_config(tmp_path_factory):
    root = tmp_path_factory.mktemp("api_fixture")
    write_synthetic_fixture(root, n_players=150, n_games=4, seed=2, min_nodes=3)
    cfg = PipelineConfig.from_file(root / "config.json")
    return cfg.model_copy(update={
        "embedding": cfg.embedding.model_copy(update={"epochs": 2}),
        "clustering": cfg.clustering.model_copy(update={"k": 2, "k_min": 2, "k_max": 2, "n_init": 2}),
        "metrics": cfg.metrics.model_copy(update={"bootstrap_reps": 3}),
    })


def body(cfg, output_dir):
    return cfg.model_copy(update={"output_dir": output_dir}).model_dump(mode="json")


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["stages"] == STAGES + ["pipeline"]


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    data = response.json()
    assert data["status"] == "healthy"
    assert data["stages"] == STAGES


def test_unknown_stage(client, fixture_config, tmp_path):
    response = client.post("/stages/plot", json=body(fixture_config, tmp_path / "run"))
    assert response.status_code == 400


def test_invalid_body(client):
    response = client.post("/stages/sample", json={"window_start": "2020-04-15", "window_end": "2020-04-13"})
    assert response.status_code == 422


def test_missing_upstream_artifact(client, fixture_config, tmp_path):
    response = client.post("/stages/embed", json=body(fixture_config, tmp_path / "run"))
    assert response.status_code == 409
    assert response.json()["success"] is False


def test_missing_report(client, tmp_path):
    response = client.get("/report", params={"output_dir": str(tmp_path / "nothing")})
    assert response.status_code == 409


def test_usage_error(client, fixture_config, tmp_path):
    cfg = fixture_config.model_copy(update={"seeds_file": None})
    response = client.post("/stages/sample", json=body(cfg, tmp_path / "run"))
    assert response.status_code == 400


def test_pipeline_and_report(client, fixture_config, tmp_path):
    out = tmp_path / "run"
    response = client.post("/stages/sample", json=body(fixture_config, out))
    assert response.status_code == 200
    data = response.json()
    assert data["success"] is True
    assert "graph.tsv" in data["artifacts"]

    response = client.post("/stages/pipeline", json=body(fixture_config, out))
    assert response.status_code == 200
    assert "report/summary.md" in response.json()["artifacts"]

    response = client.get("/report", params={"output_dir": str(out)})
    assert response.status_code == 200
    report = response.json()
    assert report["summary"].startswith("# Game network report")
    assert "summary.md" in report["files"]
    assert sorted(report["stages"]) == sorted(STAGES)
