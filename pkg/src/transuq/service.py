"""HTTP decision-support service over fitted emulators.

Serves the parameter space, point predictions, scenario distributions,
robustness grids, and sensitivity tables. Everything is computed from the
loaded model store; the service never runs the simulator. Responses are pure
functions of (loaded artifacts, request, seed), and every sampling endpoint
echoes the seed it used.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from fastapi import Depends, FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from . import __version__, scenarios, sensitivity, space as space_mod
from .cli import load_model_store
from .emulator import GpModel, predict
from .scenarios import ModelKey, ScenarioError
from .space import KIND_POLICY, KIND_TECHNO, ParameterSpace

OUTPUT_UNITS = {
    "solar_capacity_GW": "GW",
    "onshore_capacity_GW": "GW",
    "emissions_Mt": "MtCO2/yr",
    "renewables_share": "fraction",
    "weighted_cost": "currency/MWh",
}

# Band names accepted in place of numeric techno coordinates; values are the
# midpoints of the corresponding normalized subranges.
LEAD_BAND_MIDPOINTS = {"fast": 1.0 / 6.0, "medium": 0.5, "slow": 5.0 / 6.0}
HALF_BAND_MIDPOINTS = {"low": 0.25, "high": 0.75}


class ModelStore:
    """Read-only emulator registry; populated once before serving."""

    def __init__(self) -> None:
        self.space: ParameterSpace | None = None
        self.models: dict[ModelKey, GpModel] = {}
        self.sensitivity_cache: dict[ModelKey, dict] = {}
        self.ready = False

    def load(self, space_path: str | Path | None, models_dir: str | Path) -> None:
        self.space = (space_mod.load_space(space_path) if space_path
                      else space_mod.default_space())
        violations = space_mod.validate_space(self.space)
        if violations:
            raise space_mod.SpaceError(f"space is invalid: {violations}")
        self.models = load_model_store(models_dir)
        baseline = sensitivity.default_baseline(self.space)
        for key, model in sorted(self.models.items()):
            table = sensitivity.sweep_all(model, self.space, baseline=baseline)
            self.sensitivity_cache[key] = {
                "region": key[0],
                "output": key[1],
                "year": key[2],
                "metric": table.metric,
                "indices": {i: float(v)
                            for i, v in zip(table.input_ids, table.indices)},
            }
        self.ready = True


class KeyRef(BaseModel):
    region: str
    output: str
    year: int


class PredictRequest(BaseModel):
    keys: list[KeyRef]
    policy: dict[str, float] = Field(default_factory=dict)
    techno: dict[str, float | str] = Field(default_factory=dict)
    coordinates: list[float] | None = None


class DistributionRequest(BaseModel):
    keys: list[KeyRef]
    package: str = "baseline"
    ambition: float = 1.0
    lead_band: str | None = None
    lead_bands: int = 3
    discount_band: str | None = None
    demand_band: str | None = None
    n: int = 20000
    seed: int | None = None


class RobustnessRequest(BaseModel):
    packages: list[str]
    ambition: float = 1.0
    lead_band: str | None = None
    lead_bands: int = 3
    discount_band: str | None = None
    demand_band: str | None = None
    targets: dict | None = None
    n: int = 20000
    seed: int | None = None


def _fresh_seed() -> int:
    return int(np.random.SeedSequence().entropy % (2 ** 63))


def _resolve_key(store: ModelStore, ref: KeyRef) -> ModelKey:
    key = (ref.region, ref.output, ref.year)
    if key not in store.models:
        years = sorted(y for r, o, y in store.models
                       if r == ref.region and o == ref.output)
        if years:
            detail = (f"no model for year {ref.year}; available years for "
                      f"{ref.region}:{ref.output} are {years}")
        else:
            available = sorted(f"{r}:{o}@{y}" for r, o, y in store.models)
            detail = (f"no model for {ref.region}:{ref.output}@{ref.year}; "
                      f"available keys: {available}")
        raise HTTPException(status_code=404, detail=detail)
    return key


def _coordinates_from_request(space: ParameterSpace, req: PredictRequest
                              ) -> np.ndarray:
    if req.coordinates is not None:
        vec = np.asarray(req.coordinates, dtype=float)
        if vec.shape != (space.dimension,):
            raise HTTPException(
                status_code=400,
                detail=f"coordinates must have length {space.dimension}")
    else:
        vec = sensitivity.default_baseline(space)
        for name, value in req.policy.items():
            idx = _index_of(space, name)
            if space.inputs[idx].kind != KIND_POLICY:
                raise HTTPException(status_code=400,
                                    detail=f"{name} is not a policy input")
            vec[idx] = value
        for name, value in req.techno.items():
            idx = _index_of(space, name)
            if space.inputs[idx].kind != KIND_TECHNO:
                raise HTTPException(status_code=400,
                                    detail=f"{name} is not a techno-economic input")
            vec[idx] = _resolve_techno_value(name, value)
    bad = np.where((vec < 0.0) | (vec > 1.0) | ~np.isfinite(vec))[0]
    if bad.size:
        i = int(bad[0])
        raise HTTPException(
            status_code=400,
            detail=f"coordinate {i} ({space.inputs[i].id}) = {vec[i]} "
            "is outside [0, 1]")
    return vec


def _index_of(space: ParameterSpace, name: str) -> int:
    try:
        return space.index_of(name)
    except space_mod.SpaceError:
        raise HTTPException(status_code=400, detail=f"unknown input id {name!r}")


def _resolve_techno_value(name: str, value: float | str) -> float:
    if isinstance(value, (int, float)):
        return float(value)
    if name in scenarios.LEAD_INPUT_IDS and value in LEAD_BAND_MIDPOINTS:
        return LEAD_BAND_MIDPOINTS[value]
    if (name in (scenarios.DISCOUNT_INPUT_ID, scenarios.DEMAND_INPUT_ID)
            and value in HALF_BAND_MIDPOINTS):
        return HALF_BAND_MIDPOINTS[value]
    raise HTTPException(status_code=400,
                        detail=f"unknown band name {value!r} for input {name}")


def build_app(store: ModelStore) -> FastAPI:
    app = FastAPI(title="transuq service", version=__version__)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"])

    def ready_store() -> ModelStore:
        if not store.ready:
            raise HTTPException(status_code=503, detail="models not loaded yet")
        return store

    @app.get("/api/space")
    def get_space(st: ModelStore = Depends(ready_store)):
        return space_mod.space_to_dict(st.space)

    @app.post("/api/predict")
    def post_predict(req: PredictRequest, st: ModelStore = Depends(ready_store)):
        vec = _coordinates_from_request(st.space, req)
        results = []
        for ref in req.keys:
            key = _resolve_key(st, ref)
            mean, var = predict(st.models[key], vec)
            results.append({
                "region": ref.region, "output": ref.output, "year": ref.year,
                "mean": float(mean), "sd": float(np.sqrt(var)),
                "unit": OUTPUT_UNITS.get(ref.output, ""),
            })
        return {"results": results}

    @app.post("/api/distribution")
    def post_distribution(req: DistributionRequest,
                          st: ModelStore = Depends(ready_store)):
        if req.n > 100000:
            raise HTTPException(status_code=400,
                                detail="n must be at most 100000")
        keys = [_resolve_key(st, ref) for ref in req.keys]
        seed = req.seed if req.seed is not None else _fresh_seed()
        try:
            spec = scenarios.make_scenario(
                st.space, package=req.package, ambition=req.ambition,
                lead_band=req.lead_band, lead_bands=req.lead_bands,
                discount_band=req.discount_band, demand_band=req.demand_band,
                n=req.n, seed=seed)
            samples = scenarios.sample_scenario(spec, st.space)
            draws = scenarios.propagate(
                {k: st.models[k] for k in keys}, samples, seed=seed)
        except ScenarioError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        outputs = [
            {"region": k[0], "output": k[1], "year": k[2],
             "unit": OUTPUT_UNITS.get(k[1], ""),
             **scenarios.distribution_summary(draws[k])}
            for k in keys
        ]
        return {"seed": seed, "n": req.n, "package": req.package,
                "bands": spec.bands, "outputs": outputs}

    @app.post("/api/robustness")
    def post_robustness(req: RobustnessRequest,
                        st: ModelStore = Depends(ready_store)):
        if not req.packages:
            raise HTTPException(status_code=400, detail="packages must be non-empty")
        seed = req.seed if req.seed is not None else _fresh_seed()
        try:
            targets = (scenarios.targets_from_dict(req.targets) if req.targets
                       else scenarios.default_targets())
            missing = [k for k in targets.model_keys() if k not in st.models]
            if missing:
                raise HTTPException(
                    status_code=404,
                    detail=f"missing fitted models for target keys: {missing}")
            cells = [scenarios.make_scenario(
                st.space, package=p, ambition=req.ambition,
                lead_band=req.lead_band, lead_bands=req.lead_bands,
                discount_band=req.discount_band, demand_band=req.demand_band,
                n=req.n, seed=seed) for p in req.packages]
            reports = scenarios.compare_scenarios(cells, st.models, targets,
                                                  st.space)
        except ScenarioError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"seed": seed,
                "reports": [scenarios.report_to_dict(r) for r in reports]}

    @app.get("/api/sensitivity")
    def get_sensitivity(output: str, year: int, region: str = "global",
                        m: int = Query(default=21, ge=11),
                        st: ModelStore = Depends(ready_store)):
        key = _resolve_key(st, KeyRef(region=region, output=output, year=year))
        if m == 21:
            return st.sensitivity_cache[key]
        table = sensitivity.sweep_all(st.models[key], st.space, m=m)
        return {"region": key[0], "output": key[1], "year": key[2],
                "metric": table.metric,
                "indices": {i: float(v)
                            for i, v in zip(table.input_ids, table.indices)}}

    return app


def create_app(space_path: str | Path | None = None,
               models_dir: str | Path = "models") -> FastAPI:
    """Load artifacts eagerly and serve them; malformed inputs abort startup."""
    store = ModelStore()
    store.load(space_path, models_dir)
    return build_app(store)
