"""Uncertainty propagation and policy-robustness scoring.

Scenario cells fix policy coordinates at package levels, restrict chosen
techno-economic inputs to bands, and vary everything else by a truncated
normal on [0,1]. Draws go through the per-output emulators with predictive
variance sampled in, then get scored against named targets.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .emulator import GpModel, predict
from .space import KIND_POLICY, INSTRUMENT_GROUPS, ParameterSpace, lhs_sample

ModelKey = tuple[str, str, int]  # (region, output name, year)


class ScenarioError(ValueError):
    """Raised for invalid distributions, packages, bands, or missing models."""


DIST_FIXED = "fixed"
DIST_UNIFORM = "uniform"
DIST_NORMAL = "normal"

LEAD_INPUT_IDS = ("solar_lead", "onshore_lead", "offshore_lead", "grid_lead")
DISCOUNT_INPUT_ID = "discount_shift"
DEMAND_INPUT_ID = "demand_growth_shift"

PACKAGE_INSTRUMENTS: dict[str, tuple[str, ...]] = {
    "baseline": (),
    "sub": ("subsidy_fit",),
    "cp": ("carbon_price",),
    "phase": ("phase_out",),
    "sub-cp": ("subsidy_fit", "carbon_price"),
    "cp-phase": ("carbon_price", "phase_out"),
    "sub-phase": ("subsidy_fit", "phase_out"),
    "sub-cp-phase": ("subsidy_fit", "carbon_price", "phase_out"),
}

FIGURE_PACKAGES = ("baseline", "sub-cp", "cp-phase", "sub-cp-phase", "sub-phase")

BAND_NAMES_3 = ("fast", "medium", "slow")
BAND_NAMES_2 = ("fast", "slow")
LOW_HIGH = ("low", "high")


@dataclass(frozen=True)
class InputDistribution:
    kind: str
    value: float = 0.0  # fixed
    low: float = 0.0  # uniform subrange
    high: float = 1.0
    mean: float = 0.5  # truncated normal on [0, 1]
    sd: float = 1.0 / 6.0

    def validate(self) -> None:
        if self.kind == DIST_FIXED:
            if not 0.0 <= self.value <= 1.0:
                raise ScenarioError("fixed value must lie in [0, 1]")
        elif self.kind == DIST_UNIFORM:
            if not (0.0 <= self.low < self.high <= 1.0):
                raise ScenarioError("uniform subrange needs 0 <= lo < hi <= 1")
        elif self.kind == DIST_NORMAL:
            if self.sd <= 0:
                raise ScenarioError("sd must be positive")
        else:
            raise ScenarioError(f"unknown distribution kind {self.kind!r}")


def fixed(value: float) -> InputDistribution:
    return InputDistribution(kind=DIST_FIXED, value=value)


def uniform_subrange(low: float, high: float) -> InputDistribution:
    return InputDistribution(kind=DIST_UNIFORM, low=low, high=high)


def truncated_normal(mean: float = 0.5, sd: float = 1.0 / 6.0) -> InputDistribution:
    return InputDistribution(kind=DIST_NORMAL, mean=mean, sd=sd)


@dataclass(frozen=True)
class ScenarioSpec:
    distributions: dict[str, InputDistribution]  # complete over space ids
    package: str = "baseline"
    bands: dict[str, str] = field(default_factory=dict)
    n: int = 20000
    seed: int = 0

    def validate(self, space: ParameterSpace) -> None:
        if self.n < 1:
            raise ScenarioError("sample count must be at least 1")
        missing = [d.id for d in space.inputs if d.id not in self.distributions]
        if missing:
            raise ScenarioError(f"no distribution for inputs: {missing}")
        for dist in self.distributions.values():
            dist.validate()


def band_range(band: str, n_bands: int) -> tuple[float, float]:
    """Equal contiguous subranges of [0,1]; 'fast' is the low-lead end."""
    names = BAND_NAMES_3 if n_bands == 3 else BAND_NAMES_2
    if n_bands not in (2, 3) or band not in names:
        raise ScenarioError(f"unknown band {band!r} for {n_bands}-way split")
    i = names.index(band)
    return i / n_bands, (i + 1) / n_bands


def _half_range(name: str) -> tuple[float, float]:
    if name not in LOW_HIGH:
        raise ScenarioError(f"band must be one of {LOW_HIGH}, got {name!r}")
    return (0.0, 0.5) if name == "low" else (0.5, 1.0)


def make_scenario(space: ParameterSpace, package: str = "baseline",
                  ambition: float = 1.0, lead_band: str | None = None,
                  lead_bands: int = 3, discount_band: str | None = None,
                  demand_band: str | None = None, n: int = 20000,
                  seed: int = 0) -> ScenarioSpec:
    """One comparison cell: the package fixes policy, bands restrict named inputs."""
    if package not in PACKAGE_INSTRUMENTS:
        raise ScenarioError(f"unknown policy package {package!r}")
    active = PACKAGE_INSTRUMENTS[package]
    dists: dict[str, InputDistribution] = {}
    bands: dict[str, str] = {}
    for d in space.inputs:
        if d.kind == KIND_POLICY:
            group = next(g for g in INSTRUMENT_GROUPS if d.id.endswith(g))
            dists[d.id] = fixed(ambition if group in active else 0.0)
        elif d.id in LEAD_INPUT_IDS and lead_band is not None:
            dists[d.id] = uniform_subrange(*band_range(lead_band, lead_bands))
        elif d.id == DISCOUNT_INPUT_ID and discount_band is not None:
            dists[d.id] = uniform_subrange(*_half_range(discount_band))
        elif d.id == DEMAND_INPUT_ID and demand_band is not None:
            dists[d.id] = uniform_subrange(*_half_range(demand_band))
        else:
            dists[d.id] = truncated_normal()
    if lead_band is not None:
        bands["lead"] = lead_band
    if discount_band is not None:
        bands["discount"] = discount_band
    if demand_band is not None:
        bands["demand"] = demand_band
    return ScenarioSpec(distributions=dists, package=package, bands=bands,
                        n=n, seed=seed)


def _truncnorm_ppf(u: np.ndarray, mean: float, sd: float) -> np.ndarray:
    a = norm.cdf((0.0 - mean) / sd)
    b = norm.cdf((1.0 - mean) / sd)
    return mean + sd * norm.ppf(a + u * (b - a))


def sample_scenario(spec: ScenarioSpec, space: ParameterSpace) -> np.ndarray:
    """n x D normalized sample matrix, deterministic under the scenario seed."""
    spec.validate(space)
    rng = np.random.default_rng(spec.seed)
    cols = []
    for d in space.inputs:
        dist = spec.distributions[d.id]
        if dist.kind == DIST_FIXED:
            cols.append(np.full(spec.n, dist.value))
        elif dist.kind == DIST_UNIFORM:
            cols.append(rng.uniform(dist.low, dist.high, size=spec.n))
        else:
            u = rng.random(spec.n)
            cols.append(np.clip(_truncnorm_ppf(u, dist.mean, dist.sd), 0.0, 1.0))
    return np.column_stack(cols)


def support_design(spec: ScenarioSpec, space: ParameterSpace, n: int,
                   seed: int = 0) -> np.ndarray:
    """Stratified design over a scenario's support, for emulator training.

    Fixed inputs are pinned at their values; every other input gets one
    point per 1/n slice of its support (the subrange for uniform inputs,
    [0,1] otherwise). Unlike sample_scenario this ignores distribution
    shape: training coverage should weight the support evenly. Augmenting
    a global design with these rows turns scenario cells that sit on the
    boundary of the input cube into interpolation regions.
    """
    spec.validate(space)
    base = lhs_sample(n, space, seed=seed).points
    cols = []
    for j, d in enumerate(space.inputs):
        dist = spec.distributions[d.id]
        if dist.kind == DIST_FIXED:
            cols.append(np.full(n, dist.value))
        elif dist.kind == DIST_UNIFORM:
            cols.append(dist.low + (dist.high - dist.low) * base[:, j])
        else:
            cols.append(base[:, j])
    return np.column_stack(cols)


def propagate(models: dict[ModelKey, GpModel], samples: np.ndarray,
              seed: int = 0) -> dict[ModelKey, np.ndarray]:
    """Per-output draws y ~ Normal(mean(x), var(x)), independent across outputs.

    Each output key gets its own child random stream in canonical key order,
    so dict insertion order and parallel evaluation cannot change results.
    """
    samples = np.asarray(samples, dtype=float)
    keys = sorted(models)
    streams = np.random.SeedSequence(seed).spawn(len(keys))
    draws: dict[ModelKey, np.ndarray] = {}
    for key, stream in zip(keys, streams):
        model = models[key]
        if samples.shape[1] != model.x.shape[1]:
            raise ScenarioError(
                f"sample dimension {samples.shape[1]} does not match model "
                f"{key} dimension {model.x.shape[1]}")
        mean, var = predict(model, samples)
        eps = np.random.default_rng(stream).standard_normal(samples.shape[0])
        draws[key] = mean + np.sqrt(var) * eps
    return draws


@dataclass(frozen=True)
class Target:
    name: str
    region: str
    year: int
    outputs: tuple[str, ...]  # summed per draw before comparison
    direction: str  # "ge" or "le"
    threshold: float
    unit: str = ""

    def validate(self) -> None:
        if self.direction not in ("ge", "le"):
            raise ScenarioError(f"direction must be 'ge' or 'le', got {self.direction!r}")
        if not np.isfinite(self.threshold):
            raise ScenarioError("threshold must be finite")
        if not self.outputs:
            raise ScenarioError("target needs at least one output")


@dataclass(frozen=True)
class TargetSet:
    targets: tuple[Target, ...]

    def validate(self) -> None:
        for t in self.targets:
            t.validate()

    def model_keys(self) -> list[ModelKey]:
        keys = {(t.region, o, t.year) for t in self.targets for o in t.outputs}
        return sorted(keys)


def default_targets(region: str = "IN", year: int = 2030,
                    cost_threshold: float = 68.0) -> TargetSet:
    """2030 attainment targets; the cost threshold is configuration."""
    return TargetSet(targets=(
        Target("capacity_393GW", region, year,
               ("solar_capacity_GW", "onshore_capacity_GW"), "ge", 393.0, "GW"),
        Target("renewables_share_55pct", region, year,
               ("renewables_share",), "ge", 0.55, "fraction"),
        Target("cost_at_most_68", region, year,
               ("weighted_cost",), "le", cost_threshold, "currency/MWh"),
        Target("emissions_below_1000Mt", region, year,
               ("emissions_Mt",), "le", 1000.0, "MtCO2/yr"),
    ))


@dataclass(frozen=True)
class DrawSummary:
    median: float
    q05: float
    q95: float


@dataclass(frozen=True)
class RobustnessReport:
    package: str
    bands: dict[str, str]
    n: int
    seed: int
    proportions: dict[str, float]  # per target name
    summaries: dict[ModelKey, DrawSummary]


def robustness(draws: dict[ModelKey, np.ndarray], targets: TargetSet,
               package: str = "", bands: dict[str, str] | None = None,
               seed: int = 0) -> RobustnessReport:
    """Score the proportion of draws meeting each target."""
    if not draws:
        raise ScenarioError("no draws to score")
    targets.validate()
    n = len(next(iter(draws.values())))
    proportions: dict[str, float] = {}
    for t in targets.targets:
        combined = np.zeros(n)
        for output in t.outputs:
            key = (t.region, output, t.year)
            if key not in draws:
                raise ScenarioError(f"no draws for model key {key}")
            combined = combined + draws[key]
        meets = combined >= t.threshold if t.direction == "ge" else combined <= t.threshold
        proportions[t.name] = float(np.mean(meets))
    summaries = {
        key: DrawSummary(median=float(np.median(v)),
                         q05=float(np.quantile(v, 0.05)),
                         q95=float(np.quantile(v, 0.95)))
        for key, v in sorted(draws.items())
    }
    return RobustnessReport(package=package, bands=dict(bands or {}), n=n,
                            seed=seed, proportions=proportions,
                            summaries=summaries)


def compare_scenarios(cells: list[ScenarioSpec], models: dict[ModelKey, GpModel],
                      targets: TargetSet, space: ParameterSpace
                      ) -> list[RobustnessReport]:
    """Sample, propagate, and score each cell; identical cells give identical
    reports because every stage is seeded from the cell spec."""
    if not cells:
        raise ScenarioError("need at least one scenario cell")
    reports = []
    for spec in cells:
        samples = sample_scenario(spec, space)
        draws = propagate(models, samples, seed=spec.seed)
        reports.append(robustness(draws, targets, package=spec.package,
                                  bands=spec.bands, seed=spec.seed))
    return reports


def figure_grid(space: ParameterSpace, packages: tuple[str, ...] = FIGURE_PACKAGES,
                lead_bands: int = 3, n: int = 20000, seed: int = 0,
                ambition: float = 1.0) -> list[ScenarioSpec]:
    """Package x lead band x discount band x demand band cell grid."""
    lead_names = BAND_NAMES_3 if lead_bands == 3 else BAND_NAMES_2
    cells = []
    for package in packages:
        for lead in lead_names:
            for disc in LOW_HIGH:
                for dem in LOW_HIGH:
                    cells.append(make_scenario(
                        space, package=package, ambition=ambition,
                        lead_band=lead, lead_bands=lead_bands,
                        discount_band=disc, demand_band=dem, n=n, seed=seed))
    return cells


# ---------------------------------------------------------------------------
# Structured text round trips
# ---------------------------------------------------------------------------

def scenario_to_dict(spec: ScenarioSpec) -> dict:
    return {
        "package": spec.package,
        "bands": spec.bands,
        "n": spec.n,
        "seed": spec.seed,
        "distributions": {k: vars(v) for k, v in spec.distributions.items()},
    }


def scenario_from_dict(data: dict) -> ScenarioSpec:
    return ScenarioSpec(
        distributions={k: InputDistribution(**v)
                       for k, v in data["distributions"].items()},
        package=data.get("package", "baseline"),
        bands=dict(data.get("bands", {})),
        n=int(data.get("n", 20000)),
        seed=int(data.get("seed", 0)))


def targets_to_dict(targets: TargetSet) -> dict:
    return {"targets": [
        {"name": t.name, "region": t.region, "year": t.year,
         "outputs": list(t.outputs), "direction": t.direction,
         "threshold": t.threshold, "unit": t.unit}
        for t in targets.targets]}


def targets_from_dict(data: dict) -> TargetSet:
    ts = TargetSet(targets=tuple(
        Target(name=t["name"], region=t["region"], year=int(t["year"]),
               outputs=tuple(t["outputs"]), direction=t["direction"],
               threshold=float(t["threshold"]), unit=t.get("unit", ""))
        for t in data["targets"]))
    ts.validate()
    return ts


def save_scenario(spec: ScenarioSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(spec), indent=2),
                          encoding="utf-8")


def load_scenario(path: str | Path) -> ScenarioSpec:
    return scenario_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_targets(targets: TargetSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(targets_to_dict(targets), indent=2),
                          encoding="utf-8")


def load_targets(path: str | Path) -> TargetSet:
    return targets_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def report_to_dict(report: RobustnessReport) -> dict:
    return {
        "package": report.package,
        "bands": report.bands,
        "n": report.n,
        "seed": report.seed,
        "proportions": report.proportions,
        "summaries": [
            {"region": k[0], "output": k[1], "year": k[2],
             "median": s.median, "q05": s.q05, "q95": s.q95}
            for k, s in report.summaries.items()
        ],
    }


def reports_to_csv(reports: list[RobustnessReport], path: str | Path) -> None:
    """One row per cell x target."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["package", "lead_band", "discount_band", "demand_band",
                         "target", "proportion", "n", "seed"])
        for r in reports:
            for name, prop in r.proportions.items():
                writer.writerow([r.package, r.bands.get("lead", ""),
                                 r.bands.get("discount", ""),
                                 r.bands.get("demand", ""),
                                 name, f"{prop:.12g}", r.n, r.seed])


def save_reports(reports: list[RobustnessReport], path: str | Path) -> None:
    payload = [report_to_dict(r) for r in reports]
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


def distribution_summary(values: np.ndarray, bins: int = 40) -> dict:
    """Quantiles and a fixed-bin histogram whose counts sum to len(values)."""
    values = np.asarray(values, dtype=float)
    qs = np.quantile(values, [0.05, 0.25, 0.50, 0.75, 0.95])
    counts, edges = np.histogram(values, bins=bins)
    return {
        "quantiles": {"q05": float(qs[0]), "q25": float(qs[1]),
                      "q50": float(qs[2]), "q75": float(qs[3]),
                      "q95": float(qs[4])},
        "histogram": {"bin_edges": [float(e) for e in edges],
                      "counts": [int(c) for c in counts]},
    }


def draws_to_csv(draws: dict[ModelKey, np.ndarray], path: str | Path) -> None:
    keys = sorted(draws)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"{r}:{o}@{y}" for r, o, y in keys])
        for row in np.column_stack([draws[k] for k in keys]):
            writer.writerow([f"{v:.17g}" for v in row])
