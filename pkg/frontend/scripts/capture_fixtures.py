#!/usr/bin/env python3
"""Capture HTTP fixtures for the explorer tests.

Builds a small model workspace with the CLI, serves it in-process, and
snapshots the exact response bytes the UI renders. Also runs the
command-line robustness grid with the same spec and seed so the gauge
consistency test can compare UI values against the CSV. Fixtures are
committed; rerun this script after changing the service.

Usage: python3 scripts/capture_fixtures.py [--workspace DIR]
"""

import argparse
import json
import shutil
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from transuq import cli
from transuq.service import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
FIGURE_PACKAGES = ["baseline", "sub-cp", "cp-phase", "sub-cp-phase", "sub-phase"]
KEY_2050 = {"region": "global", "output": "emissions_Mt", "year": 2050}
KEY_2030 = {"region": "global", "output": "emissions_Mt", "year": 2030}

# Thresholds chosen near the fixture models' 2030 medians so the captured
# gauges land strictly inside (0, 1) and the CSV comparison is non-trivial.
CUSTOM_TARGETS = {
    "targets": [
        {"name": "capacity_190GW", "region": "IN", "year": 2030,
         "outputs": ["solar_capacity_GW", "onshore_capacity_GW"],
         "direction": "ge", "threshold": 190.0, "unit": "GW"},
        {"name": "renewables_share_27pct", "region": "IN", "year": 2030,
         "outputs": ["renewables_share"],
         "direction": "ge", "threshold": 0.275, "unit": "fraction"},
        {"name": "cost_at_most_150", "region": "IN", "year": 2030,
         "outputs": ["weighted_cost"],
         "direction": "le", "threshold": 150.0, "unit": "currency/MWh"},
        {"name": "emissions_below_1765Mt", "region": "IN", "year": 2030,
         "outputs": ["emissions_Mt"],
         "direction": "le", "threshold": 1765.0, "unit": "MtCO2/yr"},
    ],
}

GRID_SPEC = {
    "packages": FIGURE_PACKAGES,
    "ambition": 1.0,
    "lead_band": "fast",
    "lead_bands": 3,
    "discount_band": "low",
    "demand_band": "high",
    "targets": CUSTOM_TARGETS,
    "n": 2000,
    "seed": 7,
}

# The three form states exercised by the fidelity test. The request bodies
# here must match what the TypeScript buildRequests produces for the same
# form; the test asserts that equality against the committed fixture.
STATES = {
    "baseline": {
        "predict": {
            "keys": [KEY_2050, KEY_2030],
            "policy": {},  # filled with all-zero sliders below
            "techno": {},
        },
        "distribution": {
            "keys": [KEY_2050, KEY_2030],
            "package": "baseline",
            "ambition": 1,
            "n": 4000,
            "seed": 101,
        },
        "robustness": {
            "packages": FIGURE_PACKAGES,
            "ambition": 1,
            "n": 4000,
            "seed": 101,
        },
    },
    "subsidy_carbon": {
        "predict": {
            "keys": [KEY_2050],
            "policy": {},  # sub + cp at 0.6
            "techno": {
                "solar_lead": "fast",
                "onshore_lead": "fast",
                "offshore_lead": "fast",
                "grid_lead": "fast",
                "discount_shift": "low",
                "demand_growth_shift": "high",
            },
        },
        "distribution": {
            "keys": [KEY_2050],
            "package": "sub-cp",
            "ambition": 0.6,
            "n": 4000,
            "lead_band": "fast",
            "lead_bands": 3,
            "discount_band": "low",
            "demand_band": "high",
            "seed": 202,
        },
        "robustness": {
            "packages": FIGURE_PACKAGES,
            "ambition": 0.6,
            "n": 4000,
            "lead_band": "fast",
            "lead_bands": 3,
            "discount_band": "low",
            "demand_band": "high",
            "seed": 202,
        },
    },
    "full_package_slow": {
        "predict": {
            "keys": [KEY_2050],
            "policy": {},  # all three instruments at 1.0
            "techno": {
                "solar_lead": "slow",
                "onshore_lead": "slow",
                "offshore_lead": "slow",
                "grid_lead": "slow",
                "om_mult": 0.25,
            },
        },
        "distribution": {
            "keys": [KEY_2050],
            "package": "sub-cp-phase",
            "ambition": 1,
            "n": 4000,
            "lead_band": "slow",
            "lead_bands": 3,
            "seed": 303,
        },
        "robustness": {
            "packages": FIGURE_PACKAGES,
            "ambition": 1,
            "n": 4000,
            "lead_band": "slow",
            "lead_bands": 3,
            "seed": 303,
        },
    },
}

SLIDER_LEVELS = {
    "baseline": {"subsidy_fit": 0.0, "carbon_price": 0.0, "phase_out": 0.0},
    "subsidy_carbon": {"subsidy_fit": 0.6, "carbon_price": 0.6, "phase_out": 0.0},
    "full_package_slow": {"subsidy_fit": 1.0, "carbon_price": 1.0, "phase_out": 1.0},
}


def build_workspace(ws: Path) -> Path:
    design = ws / "design.csv"
    sim = ws / "sim"
    models = ws / "models"
    assert cli.main(["design", "--n", "60", "--seed", "101",
                     "--out", str(design)]) == 0
    assert cli.main(["simulate", "--design", str(design),
                     "--out", str(sim)]) == 0
    assert cli.main(["fit", "--design", str(design), "--sim", str(sim),
                     "--models-dir", str(models),
                     "--regions", "global", "--outputs", "emissions_Mt",
                     "--years", "2030", "2050",
                     "--restarts", "1", "--seed", "11"]) == 0
    assert cli.main(["fit", "--design", str(design), "--sim", str(sim),
                     "--models-dir", str(models),
                     "--regions", "IN",
                     "--outputs", "solar_capacity_GW", "onshore_capacity_GW",
                     "emissions_Mt", "renewables_share", "weighted_cost",
                     "--years", "2030",
                     "--restarts", "1", "--seed", "11"]) == 0
    return models


def snap(client: TestClient, method: str, path: str, out: Path,
         body: dict | None = None) -> None:
    resp = client.post(path, json=body) if method == "POST" else client.get(path)
    if resp.status_code != 200:
        raise SystemExit(f"{method} {path} -> {resp.status_code}: {resp.text}")
    out.write_bytes(resp.content)
    print(f"wrote {out.relative_to(FIXTURES.parent.parent)}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workspace", default=None,
                        help="reuse an existing workspace instead of a temp dir")
    args = parser.parse_args()

    FIXTURES.mkdir(parents=True, exist_ok=True)
    tmp = None
    if args.workspace:
        ws = Path(args.workspace)
    else:
        tmp = tempfile.mkdtemp(prefix="explorer-fixtures-")
        ws = Path(tmp)
    try:
        models = ws / "models"
        if not models.is_dir():
            models = build_workspace(ws)
        client = TestClient(create_app(models_dir=models))

        snap(client, "GET", "/api/space", FIXTURES / "space.json")
        snap(client, "GET", "/api/sensitivity?output=emissions_Mt&year=2050",
             FIXTURES / "sensitivity_2050.json")
        snap(client, "GET", "/api/sensitivity?output=emissions_Mt&year=2030",
             FIXTURES / "sensitivity_2030.json")

        space = client.get("/api/space").json()
        policy_ids = [d["id"] for d in space["inputs"] if d["kind"] == "policy"]
        instrument = {i: next(g for g in ("subsidy_fit", "carbon_price", "phase_out")
                              if i.endswith(g)) for i in policy_ids}

        for name, reqs in STATES.items():
            reqs = json.loads(json.dumps(reqs))  # deep copy
            reqs["predict"]["policy"] = {
                i: SLIDER_LEVELS[name][instrument[i]] for i in policy_ids}
            state_dir = FIXTURES / name
            state_dir.mkdir(exist_ok=True)
            (state_dir / "requests.json").write_text(
                json.dumps(reqs, indent=2) + "\n", encoding="utf-8")
            snap(client, "POST", "/api/predict", state_dir / "predict.json",
                 reqs["predict"])
            snap(client, "POST", "/api/distribution",
                 state_dir / "distribution.json", reqs["distribution"])
            snap(client, "POST", "/api/distribution",
                 state_dir / "distribution_replay.json", reqs["distribution"])
            first = (state_dir / "distribution.json").read_bytes()
            second = (state_dir / "distribution_replay.json").read_bytes()
            if first != second:
                raise SystemExit(f"{name}: seeded replay differed")
            snap(client, "POST", "/api/robustness",
                 state_dir / "robustness.json", reqs["robustness"])

        # Gauge consistency oracle: the same grid spec through the CLI.
        targets_path = ws / "targets.json"
        targets_path.write_text(json.dumps(CUSTOM_TARGETS, indent=2),
                                encoding="utf-8")
        out_csv = ws / "reports" / "grid.csv"
        assert cli.main(["robustness", "--models-dir", str(models),
                         "--packages", *GRID_SPEC["packages"],
                         "--bands", str(GRID_SPEC["lead_bands"]),
                         "--ambition", str(GRID_SPEC["ambition"]),
                         "--targets", str(targets_path),
                         "--n", str(GRID_SPEC["n"]),
                         "--seed", str(GRID_SPEC["seed"]),
                         "--out", str(out_csv)]) == 0
        shutil.copy(out_csv, FIXTURES / "robustness_grid.csv")
        print("wrote frontend/tests/fixtures/robustness_grid.csv")
        (FIXTURES / "grid_spec.json").write_text(
            json.dumps(GRID_SPEC, indent=2) + "\n", encoding="utf-8")
        snap(client, "POST", "/api/robustness", FIXTURES / "gauge_ui.json",
             dict(GRID_SPEC))
    finally:
        if tmp:
            shutil.rmtree(tmp, ignore_errors=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
