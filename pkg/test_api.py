"""HTTP API tests"""
import csv

import pytest
from fastapi.testclient import TestClient

from filterlab.main import app


@pytest.fixture
def client():
    return TestClient(app)


def test_root_and_info(client):
    assert client.get("/").json()["status"] == "running"
    info = client.get("/api/info").json()
    assert info["max_sites"] == 20


class TestHealth:

    def test_status(self, client):
        response = client.get("/api/health/status")
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "healthy"
        assert body["dense_max_sites"] == 12

    def test_ready(self, client):
        assert client.get("/api/health/ready").json() == {"ready": True}


class TestPresets:

    def test_list(self, client):
        presets = client.get("/api/presets").json()["presets"]
        assert len(presets) == 8
        assert {"key", "label", "description"} <= set(presets[0])

    def test_detail(self, client):
        body = client.get("/api/presets/fig4").json()
        assert body["config"]["experiment"]["kind"] == "adiabatic_sweep"
        assert body["config"]["schedule"]["steps"] == [250, 500, 1000, 2000]

    def test_unknown(self, client):
        assert client.get("/api/presets/fig1").status_code == 404


class TestTheory:

    def test_variance(self, client):
        body = client.get("/api/experiments/theory/variance", params={"delta": 1.0, "sigma0_sq": 1.0}).json()
        assert body["sigma_L_sq"] == pytest.approx(0.52515, abs=1e-4)

    def test_variance_rejects_nonpositive_delta(self, client):
        response = client.get("/api/experiments/theory/variance", params={"delta": 0.0, "sigma0_sq": 1.0})
        assert response.status_code == 422

    def test_theta_energy(self, client):
        body = client.get("/api/experiments/theory/theta-energy", params={"theta": 0.0}).json()
        assert body["energy_density"] == pytest.approx(1.5)


class TestRun:

    def test_unknown_preset(self, client):
        assert client.post("/api/experiments/run", json={"preset": "nope"}).status_code == 404

    def test_invalid_config(self, client):
        response = client.post("/api/experiments/run", json={"config": {"experiment": {"kind": "gap_audit"}}})
        assert response.status_code == 400

    @pytest.mark.parametrize("body", [{}, {"preset": "fig2", "config": {}}])
    def test_needs_exactly_one_source(self, client, body):
        assert client.post("/api/experiments/run", json=body).status_code == 422

    def test_run_config(self, client, tmp_path):
        out = tmp_path / "api.csv"
        config = {
            "experiment": {"kind": "gap_audit", "sizes": [4]},
            "filter": {"deltas": [1.0]},
            "output": {"path": str(out)},
        }
        response = client.post("/api/experiments/run", json={"config": config})
        assert response.status_code == 202
        body = response.json()
        assert body["kind"] == "gap_audit" and body["output_path"] == str(out)
        with open(out, newline="") as handle:
            (row,) = list(csv.DictReader(handle))
        assert row["passed"] == "true"

    def test_run_preset_with_overrides(self, client, tmp_path):
        out = tmp_path / "fig6.csv"
        response = client.post("/api/experiments/run", json={
            "preset": "fig6",
            "overrides": {"experiment": {"sizes": [4], "thetas": [0.0]}, "output": {"path": str(out)}},
        })
        assert response.status_code == 202
        with open(out, newline="") as handle:
            (row,) = list(csv.DictReader(handle))
        assert float(row["energy_density_limit"]) == pytest.approx(1.5)
