"""Desk-scale power-sector diffusion simulator.

Capacity shares evolve by replicator dynamics driven by pairwise levelized
cost comparisons, with endogenous learning-by-doing, lead-time-limited
substitution rates, and policy instruments (phase-outs, feed-in tariffs,
subsidies, carbon pricing).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .space import PhysicalInputs, PolicyLevels

GLOBAL = "global"

CATEGORY_FOSSIL = "fossil"
CATEGORY_RENEWABLE = "renewable"
CATEGORY_OTHER = "other-low-carbon"

DISCOUNT_FLOOR = 0.02

# TWh -> GW at a given capacity factor: K = gen / (8.76 * CF)
HOURS_PER_YEAR_K = 8.760


class SimulationError(RuntimeError):
    """Raised when the simulator rejects inputs or detects an invariant breach."""


@dataclass(frozen=True)
class Technology:
    id: str
    category: str
    investment_cost: float  # currency/kW
    om_cost: float  # currency/MWh
    fuel_cost: float  # currency/MWh
    capacity_factor: float
    lifetime: float  # years
    lead_time: float  # years, technology-specific (grid lead added system-wide)
    emission_factor: float  # tCO2/MWh
    learning_exponent: float  # <= 0
    cumulative_capacity: float  # GW, global


@dataclass(frozen=True)
class RegionState:
    region: str
    shares: dict[str, float]  # capacity shares per technology, sum to 1
    demand: float  # TWh/year
    demand_growth: float  # fraction/year
    discount_rate: dict[str, float]  # per technology, >= DISCOUNT_FLOOR
    gamma: dict[str, float] = field(default_factory=dict)  # currency/MWh offsets


@dataclass(frozen=True)
class SimConfig:
    technologies: tuple[Technology, ...]
    regions: tuple[RegionState, ...]
    start_year: int = 2022
    end_year: int = 2050
    timestep: float = 0.25
    report_years: tuple[int, ...] = (2030, 2040, 2050)
    substitution_speed: float = 1.0  # 1/year
    choice_spread: float = 10.0  # currency/MWh
    grid_lead: float = 0.5  # years, baseline system-wide connection delay

    def validate(self) -> None:
        if not self.start_year < self.end_year:
            raise SimulationError("start_year must precede end_year")
        if self.timestep <= 0:
            raise SimulationError("timestep must be positive")
        for ry in self.report_years:
            offset = (ry - self.start_year) / self.timestep
            if abs(offset - round(offset)) > 1e-9 or not self.start_year <= ry <= self.end_year:
                raise SimulationError(f"report year {ry} not on the timestep grid")
        if self.substitution_speed <= 0 or self.choice_spread <= 0:
            raise SimulationError("substitution_speed and choice_spread must be positive")

    def tech_ids(self) -> list[str]:
        return [t.id for t in self.technologies]


@dataclass(frozen=True)
class RegionYearOutput:
    capacity: dict[str, float]  # GW per technology
    generation: dict[str, float]  # TWh per technology
    emissions: float  # MtCO2/yr
    renewables_share: float  # capacity share, excluding nuclear and hydro
    weighted_cost: float  # currency/MWh, share-weighted LCOE


@dataclass(frozen=True)
class SimOutput:
    years: tuple[int, ...]
    regions: tuple[str, ...]  # region ids, GLOBAL holds the aggregate
    results: dict[tuple[int, str], RegionYearOutput]


def capital_recovery_factor(rate, lifetime):
    """rho (1+rho)^L / ((1+rho)^L - 1), with the rho -> 0 limit of 1/L."""
    rate = np.asarray(rate, dtype=float)
    lifetime = np.asarray(lifetime, dtype=float)
    if np.any(rate < 0):
        raise SimulationError("discount rate must be non-negative")
    if np.any(lifetime <= 0):
        raise SimulationError("lifetime must be positive")
    safe = np.where(rate > 1e-12, rate, 1.0)
    growth = np.power(1.0 + safe, lifetime)
    crf = np.where(rate > 1e-12, safe * growth / (growth - 1.0), 1.0 / lifetime)
    return crf if crf.ndim else float(crf)


def carbon_price_at(policy: PolicyLevels, year: float,
                    start_year: int = 2022, end_year: int = 2050) -> float:
    """Carbon price for a year, linear between the start and end levels."""
    w = (year - start_year) / (end_year - start_year)
    w = min(max(w, 0.0), 1.0)
    return policy.carbon_price_start + w * (policy.carbon_price_end
                                            - policy.carbon_price_start)


def lcoe(tech: Technology, state: RegionState, policy: PolicyLevels, year: float,
         grid_lead: float = 0.0, carbon_years: tuple[int, int] = (2022, 2050)) -> float:
    """Levelized cost including carbon price, calibration offset, and tariffs.

    May be negative when tariffs exceed costs; callers must not clamp.
    """
    if tech.capacity_factor <= 0:
        raise SimulationError(f"{tech.id}: capacity factor must be positive")
    rho = state.discount_rate[tech.id]
    crf = capital_recovery_factor(rho, tech.lifetime)
    subsidy = policy.subsidy_fraction.get(tech.id, 0.0)
    lead = tech.lead_time + grid_lead
    invest_eff = tech.investment_cost * (1.0 - subsidy) * (1.0 + rho) ** lead
    capital = crf * invest_eff * 1000.0 / (8760.0 * tech.capacity_factor)
    cp = carbon_price_at(policy, year, *carbon_years)
    fit = policy.feed_in_tariff.get(tech.id, 0.0)
    gamma = state.gamma.get(tech.id, 0.0)
    return capital + tech.om_cost + tech.fuel_cost + cp * tech.emission_factor \
        + gamma - fit


def preference(lcoe_i: float, lcoe_j: float, choice_spread: float) -> float:
    """Binary-choice probability of picking technology i over j.

    Logistic in the cost difference; preference(a, b) + preference(b, a) == 1
    exactly, including in floating point.
    """
    if choice_spread <= 0:
        raise SimulationError("choice_spread must be positive")
    d = lcoe_i - lcoe_j
    if d <= 0:
        return 1.0 / (1.0 + np.exp(d / choice_spread))
    return 1.0 - preference(lcoe_j, lcoe_i, choice_spread)


def _preference_matrix(costs: np.ndarray, spread: float) -> np.ndarray:
    """Pairwise F[..., i, j] with exact complements F_ij + F_ji = 1."""
    d = costs[..., :, None] - costs[..., None, :]
    fp = 1.0 / (1.0 + np.exp(-np.abs(d) / spread))  # cheap side, >= 0.5
    return np.where(d <= 0, fp, 1.0 - fp)


def _share_delta(shares: np.ndarray, pref: np.ndarray, a_in: np.ndarray,
                 dt: float) -> np.ndarray:
    """Replicator increment; a_in[..., i, j] already carries inflow scaling."""
    gross = shares[..., :, None] * shares[..., None, :] * a_in * pref
    return (gross - np.swapaxes(gross, -1, -2)).sum(axis=-1) * dt


def _advance_shares(shares: np.ndarray, pref: np.ndarray, a_in: np.ndarray,
                    dt: float, depth: int = 0) -> np.ndarray:
    """Apply the replicator step, sub-dividing dt if shares would escape [0,1]."""
    delta = _share_delta(shares, pref, a_in, dt)
    new = shares + delta
    if np.all((new >= -1e-12) & (new <= 1.0 + 1e-12)):
        return np.clip(new, 0.0, None)
    if depth >= 6:  # dt/64 reached
        raise SimulationError(
            f"replicator step unstable below dt/64 (max |dS|={np.abs(delta).max():.3g})")
    half = _advance_shares(shares, pref, a_in, dt / 2.0, depth + 1)
    return _advance_shares(half, pref, a_in, dt / 2.0, depth + 1)


@dataclass
class _RunArrays:
    """Per-run mutable state in array form (regions x technologies)."""

    tech_ids: list[str]
    region_ids: list[str]
    categories: np.ndarray  # (T,) object
    invest0: np.ndarray  # (T,) learned baseline at run start
    om: np.ndarray
    fuel: np.ndarray
    cf: np.ndarray
    life: np.ndarray
    lead: np.ndarray  # technology-specific + grid lead
    emis: np.ndarray
    learn_b: np.ndarray
    w0: np.ndarray  # (T,) cumulative capacity at run start
    rho: np.ndarray  # (R, T)
    gamma: np.ndarray  # (R, T)
    fit: np.ndarray  # (R, T)
    subsidy: np.ndarray  # (R, T)
    cp_start: np.ndarray  # (R,)
    cp_end: np.ndarray  # (R,)
    a_in: np.ndarray  # (R, T, T) substitution rates with phase-out scaling
    shares: np.ndarray  # (R, T)
    demand: np.ndarray  # (R,)
    growth: np.ndarray  # (R,)
    w: np.ndarray  # (T,) cumulative capacity, updated during the run
    invest: np.ndarray  # (T,) current learned investment cost


def _region_policy(inputs: PhysicalInputs | None, region: str) -> PolicyLevels:
    if inputs is not None and region in inputs.policies:
        return inputs.policies[region]
    return PolicyLevels(0.0, {}, {}, 0.0, 0.0)


def apply_inputs(config: SimConfig, inputs: PhysicalInputs | None) -> _RunArrays:
    """Resolve techno-economic inputs and policy levels into run arrays.

    Effective discount rates are floored at DISCOUNT_FLOOR after the shift.
    """
    config.validate()
    vals = dict(inputs.values) if inputs is not None else {}
    techs = list(config.technologies)
    by_id = {t.id: t for t in techs}

    def adjust(tid: str, **changes) -> None:
        if tid in by_id:
            by_id[tid] = replace(by_id[tid], **changes)

    if "solar_learning_exp" in vals:
        adjust("solar", learning_exponent=vals["solar_learning_exp"])
    if "wind_learning_exp" in vals:
        adjust("onshore", learning_exponent=vals["wind_learning_exp"])
        adjust("offshore", learning_exponent=vals["wind_learning_exp"])
    if "solar_lifetime" in vals:
        adjust("solar", lifetime=vals["solar_lifetime"])
    if "wind_lifetime" in vals:
        adjust("onshore", lifetime=vals["wind_lifetime"])
        adjust("offshore", lifetime=vals["wind_lifetime"])
    if "solar_lead" in vals:
        adjust("solar", lead_time=vals["solar_lead"])
    if "onshore_lead" in vals:
        adjust("onshore", lead_time=vals["onshore_lead"])
    if "offshore_lead" in vals:
        adjust("offshore", lead_time=vals["offshore_lead"])
    if "coal_price" in vals:
        adjust("coal", fuel_cost=by_id["coal"].fuel_cost * vals["coal_price"])
    if "gas_price" in vals:
        adjust("ccgt", fuel_cost=by_id["ccgt"].fuel_cost * vals["gas_price"])
    om_mult = vals.get("om_mult", 1.0)
    vre_cf = vals.get("vre_cf_mult", 1.0)
    invest_mult = vals.get("nonvre_invest_mult", 1.0)
    for tid, t in list(by_id.items()):
        changes = {"om_cost": t.om_cost * om_mult}
        if t.category == CATEGORY_RENEWABLE:
            changes["capacity_factor"] = t.capacity_factor * vre_cf
        else:
            changes["investment_cost"] = t.investment_cost * invest_mult
        by_id[tid] = replace(t, **changes)

    techs = [by_id[t.id] for t in techs]
    tech_ids = [t.id for t in techs]
    n_t = len(techs)
    regions = list(config.regions)
    n_r = len(regions)

    grid_lead = config.grid_lead + vals.get("grid_lead", 0.0)
    shift = vals.get("discount_shift", 0.0)
    growth_scale = 1.0 + vals.get("demand_growth_shift", 0.0)

    lead = np.array([t.lead_time for t in techs]) + grid_lead
    life = np.array([t.lifetime for t in techs])
    a_base = config.substitution_speed / (lead[:, None] * life[None, :])

    rho = np.empty((n_r, n_t))
    gamma = np.zeros((n_r, n_t))
    fit = np.zeros((n_r, n_t))
    subsidy = np.zeros((n_r, n_t))
    cp_start = np.zeros(n_r)
    cp_end = np.zeros(n_r)
    a_in = np.empty((n_r, n_t, n_t))
    shares = np.empty((n_r, n_t))
    fossil = np.array([t.category == CATEGORY_FOSSIL for t in techs])

    for r, region in enumerate(regions):
        policy = _region_policy(inputs, region.region)
        for k, tid in enumerate(tech_ids):
            rho[r, k] = max(region.discount_rate[tid] + shift, DISCOUNT_FLOOR)
            gamma[r, k] = region.gamma.get(tid, 0.0)
            fit[r, k] = policy.feed_in_tariff.get(tid, 0.0)
            subsidy[r, k] = policy.subsidy_fraction.get(tid, 0.0)
            shares[r, k] = region.shares[tid]
        cp_start[r] = policy.carbon_price_start
        cp_end[r] = policy.carbon_price_end
        # Phase-out scales fossil inflows from non-fossil sources; reshuffling
        # within the fossil fleet (e.g. coal retiring into gas) stays open so
        # a stricter phase-out can never trap demand on a dirtier technology.
        blocked = fossil[:, None] & ~fossil[None, :]
        a_in[r] = np.where(blocked, a_base * (1.0 - policy.phase_out_fraction), a_base)
        total = shares[r].sum()
        if abs(total - 1.0) > 1e-9:
            raise SimulationError(f"{region.region}: initial shares sum to {total}")

    return _RunArrays(
        tech_ids=tech_ids,
        region_ids=[reg.region for reg in regions],
        categories=np.array([t.category for t in techs], dtype=object),
        invest0=np.array([t.investment_cost for t in techs]),
        om=np.array([t.om_cost for t in techs]),
        fuel=np.array([t.fuel_cost for t in techs]),
        cf=np.array([t.capacity_factor for t in techs]),
        life=life,
        lead=lead,
        emis=np.array([t.emission_factor for t in techs]),
        learn_b=np.array([t.learning_exponent for t in techs]),
        w0=np.array([t.cumulative_capacity for t in techs]),
        rho=rho,
        gamma=gamma,
        fit=fit,
        subsidy=subsidy,
        cp_start=cp_start,
        cp_end=cp_end,
        a_in=a_in,
        shares=shares,
        demand=np.array([reg.demand for reg in regions]),
        growth=np.array([reg.demand_growth * growth_scale for reg in regions]),
        w=np.array([t.cumulative_capacity for t in techs]),
        invest=np.array([t.investment_cost for t in techs]),
    )


def _lcoe_matrix(run: _RunArrays, config: SimConfig, year: float) -> np.ndarray:
    crf = capital_recovery_factor(run.rho, run.life[None, :])
    invest_eff = run.invest[None, :] * (1.0 - run.subsidy) \
        * np.power(1.0 + run.rho, run.lead[None, :])
    capital = crf * invest_eff * 1000.0 / (8760.0 * run.cf[None, :])
    w = (year - config.start_year) / (config.end_year - config.start_year)
    w = min(max(w, 0.0), 1.0)
    cp = run.cp_start + w * (run.cp_end - run.cp_start)
    return capital + run.om[None, :] + run.fuel[None, :] \
        + cp[:, None] * run.emis[None, :] + run.gamma - run.fit


def _capacity(run: _RunArrays) -> np.ndarray:
    """Capacity (R, T) in GW implied by shares, demand, and capacity factors."""
    gen = _generation(run)
    return gen / (HOURS_PER_YEAR_K * run.cf[None, :])


def _generation(run: _RunArrays) -> np.ndarray:
    """Generation (R, T) in TWh: demand dispatched by available energy."""
    avail = run.shares * run.cf[None, :]
    total = avail.sum(axis=1, keepdims=True)
    return run.demand[:, None] * avail / total


def _step_arrays(run: _RunArrays, config: SimConfig, year: float, dt: float) -> None:
    """Advance shares, demand, learning in place by dt starting at `year`."""
    costs = _lcoe_matrix(run, config, year)
    pref = _preference_matrix(costs, config.choice_spread)
    cap_before = _capacity(run)

    new_shares = _advance_shares(run.shares, pref, run.a_in, dt)
    drift = np.abs(new_shares.sum(axis=1) - 1.0)
    worst = int(np.argmax(drift))
    if drift[worst] > 1e-6:
        raise SimulationError(
            f"share sum drifted by {drift[worst]:.3g} in {run.region_ids[worst]} "
            f"at year {year:.2f}")
    run.shares = new_shares / new_shares.sum(axis=1, keepdims=True)
    run.demand = run.demand * np.power(1.0 + run.growth, dt)

    cap_after = _capacity(run)
    additions = np.maximum(cap_after - cap_before, 0.0) \
        + cap_before * (dt / run.life[None, :])
    run.w = run.w + additions.sum(axis=0)
    run.invest = run.invest0 * np.power(run.w / run.w0, run.learn_b)


def step(state: RegionState, technologies: list[Technology], policy: PolicyLevels,
         year: float, dt: float, config: SimConfig | None = None
         ) -> tuple[RegionState, list[Technology]]:
    """Advance one region by dt; returns the new state and updated technologies.

    Learning-by-doing here sees only this region's capacity additions; full
    runs use `simulate`, which couples learning across all regions.
    """
    if dt <= 0:
        raise SimulationError("dt must be positive")
    if config is None:
        config = SimConfig(technologies=tuple(technologies), regions=(state,))
    run_cfg = replace(config, technologies=tuple(technologies), regions=(state,))
    inputs = PhysicalInputs(values={}, policies={state.region: policy})
    run = apply_inputs(run_cfg, inputs)
    _step_arrays(run, run_cfg, year, dt)
    new_state = replace(state,
                        shares=dict(zip(run.tech_ids, run.shares[0].tolist())),
                        demand=float(run.demand[0]))
    new_techs = [replace(t, cumulative_capacity=float(w), investment_cost=float(i))
                 for t, w, i in zip(technologies, run.w, run.invest)]
    return new_state, new_techs


def _snapshot(run: _RunArrays, config: SimConfig, year: int,
              results: dict[tuple[int, str], RegionYearOutput]) -> None:
    gen = _generation(run)
    cap = gen / (HOURS_PER_YEAR_K * run.cf[None, :])
    costs = _lcoe_matrix(run, config, year)
    renewable = run.categories == CATEGORY_RENEWABLE
    emissions = gen @ run.emis  # TWh * tCO2/MWh = MtCO2
    weighted = (run.shares * costs).sum(axis=1)
    renew_share = run.shares[:, renewable].sum(axis=1)

    for r, rid in enumerate(run.region_ids):
        results[(year, rid)] = RegionYearOutput(
            capacity=dict(zip(run.tech_ids, cap[r].tolist())),
            generation=dict(zip(run.tech_ids, gen[r].tolist())),
            emissions=float(emissions[r]),
            renewables_share=float(renew_share[r]),
            weighted_cost=float(weighted[r]),
        )
    cap_tot = cap.sum(axis=0)
    gen_tot = gen.sum(axis=0)
    results[(year, GLOBAL)] = RegionYearOutput(
        capacity=dict(zip(run.tech_ids, cap_tot.tolist())),
        generation=dict(zip(run.tech_ids, gen_tot.tolist())),
        emissions=float(emissions.sum()),
        renewables_share=float(cap_tot[renewable].sum() / cap_tot.sum()),
        weighted_cost=float((weighted * gen.sum(axis=1)).sum() / gen.sum()),
    )


def simulate(config: SimConfig, inputs: PhysicalInputs | None = None,
             share_trace: list | None = None) -> SimOutput:
    """Run the full simulation and report the configured years.

    Deterministic given (config, inputs). `share_trace`, if given, collects
    the (R, T) share matrix after every timestep for invariant checks.
    """
    run = apply_inputs(config, inputs)
    results: dict[tuple[int, str], RegionYearOutput] = {}
    report = set(config.report_years)

    n_steps = round((config.end_year - config.start_year) / config.timestep)
    if abs(n_steps * config.timestep - (config.end_year - config.start_year)) > 1e-9:
        raise SimulationError("timestep must divide the simulation horizon")

    for k in range(n_steps + 1):
        year = config.start_year + k * config.timestep
        nearest = round(year)
        if abs(year - nearest) < 1e-9 and nearest in report:
            _snapshot(run, config, nearest, results)
        if k < n_steps:
            _step_arrays(run, config, year, config.timestep)
            if share_trace is not None:
                share_trace.append(run.shares.copy())

    return SimOutput(years=tuple(sorted(report)),
                     regions=tuple(run.region_ids) + (GLOBAL,),
                     results=results)


OUTPUT_NAMES = ("solar_capacity_GW", "onshore_capacity_GW", "emissions_Mt",
                "renewables_share", "weighted_cost")


def extract_outputs(output: SimOutput, region: str, year: int) -> dict[str, float]:
    """Named scalar outputs for one (region-or-global, report year) pair."""
    key = (year, region)
    if key not in output.results:
        known_years = sorted({y for y, _ in output.results})
        raise SimulationError(
            f"no results for region={region!r}, year={year}; "
            f"report years are {known_years}")
    cell = output.results[key]
    return {
        "solar_capacity_GW": cell.capacity.get("solar", 0.0),
        "onshore_capacity_GW": cell.capacity.get("onshore", 0.0),
        "emissions_Mt": cell.emissions,
        "renewables_share": cell.renewables_share,
        "weighted_cost": cell.weighted_cost,
    }


# ---------------------------------------------------------------------------
# Default desk-scale calibration (illustrative configuration, not asserted
# ground truth)
# ---------------------------------------------------------------------------

def default_technologies() -> tuple[Technology, ...]:
    mk = Technology
    return (
        mk("coal", CATEGORY_FOSSIL, 2200.0, 9.0, 26.0, 0.55, 40.0, 4.0, 0.95, 0.0, 2200.0),
        mk("ccgt", CATEGORY_FOSSIL, 1000.0, 4.0, 45.0, 0.55, 30.0, 2.0, 0.40, 0.0, 1900.0),
        mk("oil", CATEGORY_FOSSIL, 1400.0, 7.0, 95.0, 0.35, 35.0, 2.0, 0.75, 0.0, 440.0),
        mk("nuclear", CATEGORY_OTHER, 6500.0, 24.0, 7.0, 0.85, 50.0, 7.0, 0.0, 0.0, 400.0),
        mk("hydro", CATEGORY_OTHER, 2800.0, 10.0, 0.0, 0.40, 60.0, 5.0, 0.0, 0.0, 1400.0),
        mk("onshore", CATEGORY_RENEWABLE, 1400.0, 11.0, 0.0, 0.33, 30.0, 1.5, 0.0, -0.194, 850.0),
        mk("offshore", CATEGORY_RENEWABLE, 3500.0, 27.0, 0.0, 0.45, 30.0, 3.0, 0.0, -0.194, 60.0),
        mk("solar", CATEGORY_RENEWABLE, 900.0, 8.0, 0.0, 0.20, 30.0, 1.0, 0.0, -0.319, 1050.0),
    )


_BASE_DISCOUNT = {"coal": 0.10, "ccgt": 0.09, "oil": 0.10, "nuclear": 0.08,
                  "hydro": 0.08, "onshore": 0.07, "offshore": 0.08, "solar": 0.065}

_REGION_DEFAULTS = {
    # region: (risk premium, demand TWh, growth/yr, shares per technology)
    "CN": (0.005, 8600.0, 0.045, {"coal": 0.46, "ccgt": 0.045, "oil": 0.005,
                                  "nuclear": 0.022, "hydro": 0.16, "onshore": 0.13,
                                  "offshore": 0.012, "solar": 0.166}),
    "US": (0.0, 4300.0, 0.015, {"coal": 0.19, "ccgt": 0.43, "oil": 0.025,
                                "nuclear": 0.08, "hydro": 0.07, "onshore": 0.12,
                                "offshore": 0.002, "solar": 0.083}),
    "IN": (0.02, 1800.0, 0.055, {"coal": 0.54, "ccgt": 0.06, "oil": 0.01,
                                 "nuclear": 0.017, "hydro": 0.115, "onshore": 0.102,
                                 "offshore": 0.002, "solar": 0.154}),
    "RGN": (-0.005, 7200.0, 0.01, {"coal": 0.14, "ccgt": 0.27, "oil": 0.03,
                                   "nuclear": 0.12, "hydro": 0.15, "onshore": 0.13,
                                   "offshore": 0.03, "solar": 0.13}),
    "RGS": (0.025, 5200.0, 0.04, {"coal": 0.22, "ccgt": 0.33, "oil": 0.09,
                                  "nuclear": 0.015, "hydro": 0.20, "onshore": 0.065,
                                  "offshore": 0.005, "solar": 0.075}),
}


def default_regions() -> tuple[RegionState, ...]:
    regions = []
    for rid, (premium, demand, growth, shares) in _REGION_DEFAULTS.items():
        total = sum(shares.values())
        regions.append(RegionState(
            region=rid,
            shares={t: s / total for t, s in shares.items()},
            demand=demand,
            demand_growth=growth,
            discount_rate={t: b + premium for t, b in _BASE_DISCOUNT.items()},
        ))
    return tuple(regions)


def default_config() -> SimConfig:
    return SimConfig(technologies=default_technologies(), regions=default_regions())


# ---------------------------------------------------------------------------
# Calibration / output files
# ---------------------------------------------------------------------------

def config_to_dict(config: SimConfig) -> dict:
    return {
        "start_year": config.start_year,
        "end_year": config.end_year,
        "timestep": config.timestep,
        "report_years": list(config.report_years),
        "substitution_speed": config.substitution_speed,
        "choice_spread": config.choice_spread,
        "grid_lead": config.grid_lead,
        "technologies": [vars(t) for t in config.technologies],
        "regions": [
            {
                "region": r.region,
                "shares": r.shares,
                "demand": r.demand,
                "demand_growth": r.demand_growth,
                "discount_rate": r.discount_rate,
                "gamma": r.gamma,
            }
            for r in config.regions
        ],
    }


def config_from_dict(data: dict) -> SimConfig:
    config = SimConfig(
        technologies=tuple(Technology(**t) for t in data["technologies"]),
        regions=tuple(RegionState(**r) for r in data["regions"]),
        start_year=int(data.get("start_year", 2022)),
        end_year=int(data.get("end_year", 2050)),
        timestep=float(data.get("timestep", 0.25)),
        report_years=tuple(data.get("report_years", (2030, 2040, 2050))),
        substitution_speed=float(data.get("substitution_speed", 1.0)),
        choice_spread=float(data.get("choice_spread", 10.0)),
        grid_lead=float(data.get("grid_lead", 0.5)),
    )
    config.validate()
    return config


def save_config(config: SimConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2), encoding="utf-8")


def load_config(path: str | Path) -> SimConfig:
    return config_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_sim_output_csv(output: SimOutput, path: str | Path) -> None:
    """One row per region-technology-year with capacity and generation."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region", "technology", "year",
                         "capacity_GW", "generation_TWh"])
        for (year, region), cell in sorted(output.results.items()):
            for tid in cell.capacity:
                writer.writerow([region, tid, year,
                                 f"{cell.capacity[tid]:.17g}",
                                 f"{cell.generation[tid]:.17g}"])


def sim_output_summary(output: SimOutput) -> dict:
    """Named scalar map per (region, report year), JSON-ready."""
    summary: dict[str, dict[str, dict[str, float]]] = {}
    for (year, region) in output.results:
        summary.setdefault(region, {})[str(year)] = extract_outputs(output, region, year)
    return summary
