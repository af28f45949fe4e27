import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from transuq.emulator import predict
from transuq.sensitivity import default_baseline
from transuq.service import LEAD_BAND_MIDPOINTS, ModelStore, build_app, create_app
from transuq.cli import load_model_store


@pytest.fixture(scope="module")
def app_state(workspace):
    app = create_app(models_dir=workspace / "models")
    client = TestClient(app)
    models = load_model_store(workspace / "models")
    return client, models


def test_unready_store_returns_503():
    client = TestClient(build_app(ModelStore()))
    response = client.get("/api/space")
    assert response.status_code == 503
    assert "not loaded" in response.json()["detail"]


def test_space_endpoint(app_state, space):
    client, _ = app_state
    response = client.get("/api/space")
    assert response.status_code == 200
    payload = response.json()
    assert len(payload["inputs"]) == space.dimension
    specials = [d for d in payload["inputs"]
                if d.get("special_mapping") == "us-rollback"]
    assert [d["id"] for d in specials] == ["US_subsidy_fit"]


def test_predict_matches_direct_emulator(app_state, space):
    client, models = app_state
    response = client.post("/api/predict", json={
        "keys": [{"region": "global", "output": "emissions_Mt", "year": 2050}]})
    assert response.status_code == 200
    result = response.json()["results"][0]
    mean, var = predict(models[("global", "emissions_Mt", 2050)],
                        default_baseline(space))
    assert result["mean"] == mean
    assert result["sd"] == float(np.sqrt(var))
    assert result["unit"] == "MtCO2/yr"


def test_predict_with_overrides_and_band_names(app_state, space):
    client, models = app_state
    response = client.post("/api/predict", json={
        "keys": [{"region": "IN", "output": "renewables_share", "year": 2030}],
        "policy": {"CN_carbon_price": 0.7},
        "techno": {"solar_lead": "fast", "om_mult": 0.25},
    })
    assert response.status_code == 200
    vec = default_baseline(space)
    vec[space.index_of("CN_carbon_price")] = 0.7
    vec[space.index_of("solar_lead")] = LEAD_BAND_MIDPOINTS["fast"]
    vec[space.index_of("om_mult")] = 0.25
    mean, _ = predict(models[("IN", "renewables_share", 2030)], vec)
    assert response.json()["results"][0]["mean"] == mean


def test_predict_validation_errors(app_state, space):
    client, _ = app_state
    key = [{"region": "global", "output": "emissions_Mt", "year": 2050}]

    r = client.post("/api/predict", json={"keys": key,
                                          "policy": {"nonsense": 0.5}})
    assert r.status_code == 400 and "unknown input id" in r.json()["detail"]

    r = client.post("/api/predict", json={"keys": key,
                                          "policy": {"om_mult": 0.5}})
    assert r.status_code == 400 and "not a policy input" in r.json()["detail"]

    r = client.post("/api/predict", json={"keys": key,
                                          "techno": {"CN_phase_out": 0.5}})
    assert r.status_code == 400
    assert "not a techno-economic input" in r.json()["detail"]

    r = client.post("/api/predict", json={"keys": key,
                                          "policy": {"CN_phase_out": 1.5}})
    assert r.status_code == 400
    detail = r.json()["detail"]
    assert "CN_phase_out" in detail and "outside [0, 1]" in detail

    r = client.post("/api/predict", json={"keys": key,
                                          "techno": {"om_mult": "fast"}})
    assert r.status_code == 400 and "unknown band name" in r.json()["detail"]

    r = client.post("/api/predict", json={"keys": key,
                                          "coordinates": [0.5, 0.5]})
    assert r.status_code == 400
    assert f"length {space.dimension}" in r.json()["detail"]


def test_predict_unknown_key_lists_alternatives(app_state):
    client, _ = app_state
    r = client.post("/api/predict", json={
        "keys": [{"region": "global", "output": "emissions_Mt", "year": 2040}]})
    assert r.status_code == 404
    assert "available years" in r.json()["detail"]
    assert "2030" in r.json()["detail"] and "2050" in r.json()["detail"]

    r = client.post("/api/predict", json={
        "keys": [{"region": "XX", "output": "emissions_Mt", "year": 2030}]})
    assert r.status_code == 404
    assert "available keys" in r.json()["detail"]


def test_distribution_replay_and_seed_echo(app_state):
    client, _ = app_state
    body = {
        "keys": [{"region": "global", "output": "emissions_Mt", "year": 2050}],
        "package": "sub-cp", "lead_band": "fast", "n": 500, "seed": 42,
    }
    r1 = client.post("/api/distribution", json=body)
    r2 = client.post("/api/distribution", json=body)
    assert r1.status_code == 200
    assert r1.content == r2.content
    payload = r1.json()
    assert payload["seed"] == 42
    assert payload["bands"] == {"lead": "fast"}
    out = payload["outputs"][0]
    assert sum(out["histogram"]["counts"]) == 500
    q = out["quantiles"]
    assert q["q05"] <= q["q50"] <= q["q95"]


def test_distribution_fresh_seed_when_omitted(app_state):
    client, _ = app_state
    body = {"keys": [{"region": "IN", "output": "emissions_Mt", "year": 2030}],
            "n": 50}
    s1 = client.post("/api/distribution", json=body).json()["seed"]
    s2 = client.post("/api/distribution", json=body).json()["seed"]
    assert s1 != s2
    replay = client.post("/api/distribution", json={**body, "seed": s1}).json()
    assert replay["seed"] == s1


def test_distribution_rejects_oversized_request(app_state):
    client, _ = app_state
    r = client.post("/api/distribution", json={
        "keys": [{"region": "IN", "output": "emissions_Mt", "year": 2030}],
        "n": 100001})
    assert r.status_code == 400
    assert "at most 100000" in r.json()["detail"]


def test_robustness_endpoint(app_state):
    client, _ = app_state
    body = {"packages": ["baseline", "sub-cp"], "lead_band": "medium",
            "n": 300, "seed": 7}
    r1 = client.post("/api/robustness", json=body)
    r2 = client.post("/api/robustness", json=body)
    assert r1.status_code == 200
    assert r1.content == r2.content
    payload = r1.json()
    assert payload["seed"] == 7
    assert [rep["package"] for rep in payload["reports"]] == ["baseline", "sub-cp"]
    for rep in payload["reports"]:
        assert set(rep["proportions"]) == {
            "capacity_393GW", "renewables_share_55pct", "cost_at_most_68",
            "emissions_below_1000Mt"}
        for value in rep["proportions"].values():
            assert 0.0 <= value <= 1.0


def test_robustness_empty_packages(app_state):
    client, _ = app_state
    r = client.post("/api/robustness", json={"packages": [], "n": 10})
    assert r.status_code == 400
    assert "non-empty" in r.json()["detail"]


def test_robustness_missing_target_models(app_state):
    client, _ = app_state
    r = client.post("/api/robustness", json={
        "packages": ["baseline"], "n": 10,
        "targets": {"targets": [
            {"name": "t", "region": "US", "year": 2030,
             "outputs": ["emissions_Mt"], "direction": "le",
             "threshold": 10.0}]}})
    assert r.status_code == 404
    assert "missing fitted models" in r.json()["detail"]


def test_sensitivity_endpoint(app_state, space):
    client, _ = app_state
    r = client.get("/api/sensitivity", params={
        "output": "emissions_Mt", "year": 2050, "region": "global"})
    assert r.status_code == 200
    payload = r.json()
    assert payload["metric"] == "range"
    assert len(payload["indices"]) == space.dimension
    assert sum(payload["indices"].values()) == pytest.approx(1.0, abs=1e-9)

    custom = client.get("/api/sensitivity", params={
        "output": "emissions_Mt", "year": 2050, "m": 15})
    assert custom.status_code == 200
    assert sum(custom.json()["indices"].values()) == pytest.approx(1.0, abs=1e-9)

    missing = client.get("/api/sensitivity", params={
        "output": "emissions_Mt", "year": 1999})
    assert missing.status_code == 404
    too_coarse = client.get("/api/sensitivity", params={
        "output": "emissions_Mt", "year": 2050, "m": 5})
    assert too_coarse.status_code == 422


def test_cors_allows_browser_clients(app_state):
    client, _ = app_state
    r = client.get("/api/space", headers={"Origin": "http://localhost:5173"})
    assert r.headers.get("access-control-allow-origin") == "*"


def test_predict_latency_budget(app_state):
    client, _ = app_state
    body = {"keys": [{"region": "global", "output": "emissions_Mt", "year": 2050},
                     {"region": "IN", "output": "weighted_cost", "year": 2030}]}
    times = []
    for _ in range(100):
        start = time.perf_counter()
        assert client.post("/api/predict", json=body).status_code == 200
        times.append(time.perf_counter() - start)
    p99 = sorted(times)[98]
    assert p99 <= 0.050, f"p99 latency {p99 * 1000:.1f} ms exceeds 50 ms"
