"""Input space definition, physical decoding, and Latin Hypercube designs.

The shipped space has 30 inputs: 15 techno-economic parameters (learning
exponents, lifetimes, lead times, discount and demand shifts, fuel price
multipliers, cost multipliers) and 15 policy ambition levels (5 region
groups x 3 instrument groups), each normalized to [0,1].
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

REGION_GROUPS = ("CN", "US", "IN", "RGN", "RGS")

KIND_TECHNO = "techno-economic"
KIND_POLICY = "policy"

# Instrument groups, one policy input per (region, group)
INSTRUMENT_GROUPS = ("phase_out", "subsidy_fit", "carbon_price")


class SpaceError(ValueError):
    """Raised for malformed spaces or out-of-range input vectors."""


@dataclass(frozen=True)
class InputDef:
    """One normalized input and its physical meaning."""

    id: str
    kind: str  # KIND_TECHNO or KIND_POLICY
    physical_low: float
    physical_high: float
    unit: str
    applies_to: tuple[tuple[str, str], ...] = ()  # (region, technology) selectors
    special_mapping: str = "none"  # "none" or "us-rollback"


@dataclass(frozen=True)
class PolicyAnchors:
    """Instrument intensities at full ambition plus regional carbon-price data.

    Feed-in tariffs and subsidies scale linearly from 0 at ambition 0 to the
    anchor at ambition 1 (so the mid level sits at half the anchor). Carbon
    prices interpolate through (current, current) -> (31, 345) -> (62, 564)
    at ambition 0 / 0.5 / 1, in currency/tCO2.
    """

    feed_in_tariff_high: dict[str, float] = field(
        default_factory=lambda: {"solar": 30.0, "onshore": 40.0, "offshore": 40.0}
    )
    subsidy_high: dict[str, float] = field(
        default_factory=lambda: {"nuclear": 0.20, "hydro": 0.50}
    )
    carbon_price_mid: tuple[float, float] = (31.0, 345.0)
    carbon_price_high: tuple[float, float] = (62.0, 564.0)
    # Existing carbon-price levels replaced (not added to) by the new policy.
    # Kept at or below the mid anchor so decoding stays monotone in ambition.
    carbon_price_current: dict[str, float] = field(
        default_factory=lambda: {"CN": 10.0, "US": 0.0, "IN": 0.0, "RGN": 30.0, "RGS": 0.0}
    )
    # Negative tariff floor reached at parameter 0 under the US rollback.
    us_rollback_floor: dict[str, float] = field(
        default_factory=lambda: {"solar": -15.0, "onshore": -20.0, "offshore": -20.0}
    )


@dataclass(frozen=True)
class ParameterSpace:
    """Ordered input definitions; order fixes design-matrix column order."""

    inputs: tuple[InputDef, ...]
    anchors: PolicyAnchors = field(default_factory=PolicyAnchors)

    @property
    def dimension(self) -> int:
        return len(self.inputs)

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.inputs]

    def index_of(self, input_id: str) -> int:
        for i, d in enumerate(self.inputs):
            if d.id == input_id:
                return i
        raise SpaceError(f"unknown input id: {input_id!r}")

    def input_def(self, input_id: str) -> InputDef:
        return self.inputs[self.index_of(input_id)]


@dataclass(frozen=True)
class PolicyLevels:
    """Decoded instrument intensities for one region group."""

    phase_out_fraction: float
    feed_in_tariff: dict[str, float]  # currency/MWh per technology
    subsidy_fraction: dict[str, float]  # fraction of investment cost per technology
    carbon_price_start: float  # currency/tCO2 at the start year
    carbon_price_end: float  # currency/tCO2 at the end year


@dataclass(frozen=True)
class PhysicalInputs:
    """Physical-unit values per input id plus policy levels per region group."""

    values: dict[str, float]
    policies: dict[str, PolicyLevels]


@dataclass(frozen=True)
class DesignMatrix:
    points: np.ndarray  # n x dimension, entries in [0,1)
    seed: int


@dataclass(frozen=True)
class Violation:
    input_id: str
    rule: str
    detail: str


def policy_input_id(region: str, group: str) -> str:
    return f"{region}_{group}"


def default_space(fuel_sd_frac: float = 0.15,
                  anchors: PolicyAnchors | None = None) -> ParameterSpace:
    """Build the shipped 30-input space.

    fuel_sd_frac is the fuel-price standard deviation as a fraction of the
    regional mean; the sampled range spans +/- 2 standard deviations.
    """
    lo = 1.0 - 2.0 * fuel_sd_frac
    hi = 1.0 + 2.0 * fuel_sd_frac
    techno = [
        InputDef("solar_learning_exp", KIND_TECHNO, -0.473, -0.165, "dimensionless",
                 (("*", "solar"),)),
        InputDef("wind_learning_exp", KIND_TECHNO, -0.3, -0.088, "dimensionless",
                 (("*", "onshore"), ("*", "offshore"))),
        InputDef("solar_lifetime", KIND_TECHNO, 25.0, 35.0, "years", (("*", "solar"),)),
        InputDef("wind_lifetime", KIND_TECHNO, 25.0, 35.0, "years",
                 (("*", "onshore"), ("*", "offshore"))),
        InputDef("solar_lead", KIND_TECHNO, 0.5, 1.5, "years", (("*", "solar"),)),
        InputDef("onshore_lead", KIND_TECHNO, 1.0, 2.0, "years", (("*", "onshore"),)),
        InputDef("offshore_lead", KIND_TECHNO, 2.0, 4.0, "years", (("*", "offshore"),)),
        InputDef("grid_lead", KIND_TECHNO, 0.0, 1.0, "years", (("*", "*"),)),
        InputDef("discount_shift", KIND_TECHNO, -0.03, 0.03, "fraction/year",
                 (("*", "*"),)),
        InputDef("demand_growth_shift", KIND_TECHNO, -0.2, 0.2,
                 "fraction of growth rate", (("*", "*"),)),
        InputDef("coal_price", KIND_TECHNO, lo, hi, "x regional mean", (("*", "coal"),)),
        InputDef("gas_price", KIND_TECHNO, lo, hi, "x regional mean", (("*", "ccgt"),)),
        InputDef("om_mult", KIND_TECHNO, 0.8, 1.2, "x baseline", (("*", "*"),)),
        InputDef("vre_cf_mult", KIND_TECHNO, 0.9, 1.1, "x baseline",
                 (("*", "solar"), ("*", "onshore"), ("*", "offshore"))),
        InputDef("nonvre_invest_mult", KIND_TECHNO, 0.8, 1.2, "x baseline",
                 (("*", "coal"), ("*", "ccgt"), ("*", "oil"),
                  ("*", "nuclear"), ("*", "hydro"))),
    ]
    policy = []
    for region in REGION_GROUPS:
        for group in INSTRUMENT_GROUPS:
            special = "us-rollback" if (region == "US" and group == "subsidy_fit") else "none"
            policy.append(InputDef(policy_input_id(region, group), KIND_POLICY,
                                   0.0, 1.0, "ambition", ((region, "*"),), special))
    return ParameterSpace(tuple(techno + policy), anchors or PolicyAnchors())


def _check_vector(space: ParameterSpace, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.shape[0] != space.dimension:
        raise SpaceError(
            f"input vector has dimension {u.shape}, expected ({space.dimension},)")
    bad = np.where((u < 0.0) | (u > 1.0))[0]
    if bad.size:
        i = int(bad[0])
        raise SpaceError(f"component {i} ({space.inputs[i].id}) = {u[i]} outside [0,1]")
    return u


def _decode_policy(space: ParameterSpace, region: str,
                   levels: dict[str, float]) -> PolicyLevels:
    a = space.anchors
    p_phase = levels["phase_out"]
    p_sub = levels["subsidy_fit"]
    c = levels["carbon_price"]

    rollback = space.input_def(policy_input_id(region, "subsidy_fit")).special_mapping \
        == "us-rollback"
    if rollback and p_sub < 0.5:
        # Below mid-parameter: baseline for all grouped instruments except
        # feed-in tariffs, which slide linearly down to the negative floor.
        ambition = 0.0
        shortfall = (0.5 - p_sub) / 0.5
        fit = {t: shortfall * f for t, f in a.us_rollback_floor.items()}
    else:
        ambition = 2.0 * (p_sub - 0.5) if rollback else p_sub
        fit = {t: ambition * f for t, f in a.feed_in_tariff_high.items()}
    subsidy = {t: ambition * s for t, s in a.subsidy_high.items()}

    current = a.carbon_price_current.get(region, 0.0)
    if c <= 0.5:
        w = c / 0.5
        start = current + w * (a.carbon_price_mid[0] - current)
        end = current + w * (a.carbon_price_mid[1] - current)
    else:
        w = (c - 0.5) / 0.5
        start = a.carbon_price_mid[0] + w * (a.carbon_price_high[0] - a.carbon_price_mid[0])
        end = a.carbon_price_mid[1] + w * (a.carbon_price_high[1] - a.carbon_price_mid[1])

    return PolicyLevels(phase_out_fraction=p_phase, feed_in_tariff=fit,
                        subsidy_fraction=subsidy, carbon_price_start=start,
                        carbon_price_end=end)


def denormalize(space: ParameterSpace, u: np.ndarray) -> PhysicalInputs:
    """Map a normalized input vector to physical units and policy levels.

    Techno-economic components map linearly onto [physical_low,
    physical_high]. Policy components map instrument intensities linearly
    from baseline at 0 to the high anchor at 1 (mid level at 0.5), with the
    US subsidy/feed-in input handling the rollback below 0.5.
    """
    u = _check_vector(space, u)
    values: dict[str, float] = {}
    by_region: dict[str, dict[str, float]] = {r: {} for r in REGION_GROUPS}
    for i, d in enumerate(space.inputs):
        x = d.physical_low + u[i] * (d.physical_high - d.physical_low)
        values[d.id] = float(x)
        if d.kind == KIND_POLICY:
            region, group = d.id.split("_", 1)
            by_region.setdefault(region, {})[group] = float(u[i])
    policies = {}
    for region, levels in by_region.items():
        if len(levels) == len(INSTRUMENT_GROUPS):
            policies[region] = _decode_policy(space, region, levels)
    return PhysicalInputs(values=values, policies=policies)


def lhs_sample(n: int, space: ParameterSpace, seed: int) -> DesignMatrix:
    """Latin Hypercube design: one point per 1/n bin in every dimension.

    Bin order and within-bin positions are randomized independently per
    column; identical (n, space, seed) reproduce the matrix bit-for-bit.
    """
    if n < 1:
        raise SpaceError("design size n must be >= 1")
    rng = np.random.default_rng(seed)
    d = space.dimension
    points = np.empty((n, d))
    for j in range(d):
        points[:, j] = (rng.permutation(n) + rng.random(n)) / n
    return DesignMatrix(points=points, seed=seed)


def validate_space(space: ParameterSpace) -> list[Violation]:
    """Collect invariant breaches; an empty list means the space is valid."""
    violations: list[Violation] = []
    seen: set[str] = set()
    rollbacks = []
    for d in space.inputs:
        if d.id in seen:
            violations.append(Violation(d.id, "duplicate id", "input id repeats"))
        seen.add(d.id)
        if d.kind not in (KIND_TECHNO, KIND_POLICY):
            violations.append(Violation(d.id, "unknown kind", f"kind={d.kind!r}"))
        if not d.physical_low < d.physical_high:
            violations.append(Violation(
                d.id, "degenerate range",
                f"physical_low={d.physical_low} !< physical_high={d.physical_high}"))
        if d.special_mapping not in ("none", "us-rollback"):
            violations.append(Violation(d.id, "unknown special mapping",
                                        d.special_mapping))
        if d.special_mapping == "us-rollback":
            rollbacks.append(d.id)
            if d.kind != KIND_POLICY:
                violations.append(Violation(d.id, "rollback on non-policy input",
                                            f"kind={d.kind}"))
    if len(rollbacks) > 1:
        for rid in rollbacks[1:]:
            violations.append(Violation(rid, "multiple us-rollback",
                                        f"also on {rollbacks[0]}"))
    return violations


# ---------------------------------------------------------------------------
# File formats: space definition (JSON), design matrix (CSV)
# ---------------------------------------------------------------------------

def space_to_dict(space: ParameterSpace) -> dict:
    return {
        "inputs": [
            {
                "id": d.id,
                "kind": d.kind,
                "physical_low": d.physical_low,
                "physical_high": d.physical_high,
                "unit": d.unit,
                "applies_to": [list(sel) for sel in d.applies_to],
                "special_mapping": d.special_mapping,
            }
            for d in space.inputs
        ],
        "policy_anchors": {
            "feed_in_tariff_high": space.anchors.feed_in_tariff_high,
            "subsidy_high": space.anchors.subsidy_high,
            "carbon_price_mid": list(space.anchors.carbon_price_mid),
            "carbon_price_high": list(space.anchors.carbon_price_high),
            "carbon_price_current": space.anchors.carbon_price_current,
            "us_rollback_floor": space.anchors.us_rollback_floor,
        },
    }


def space_from_dict(data: dict) -> ParameterSpace:
    try:
        inputs = tuple(
            InputDef(
                id=rec["id"],
                kind=rec["kind"],
                physical_low=float(rec["physical_low"]),
                physical_high=float(rec["physical_high"]),
                unit=rec["unit"],
                applies_to=tuple(tuple(sel) for sel in rec.get("applies_to", [])),
                special_mapping=rec.get("special_mapping", "none"),
            )
            for rec in data["inputs"]
        )
    except (KeyError, TypeError) as exc:
        raise SpaceError(f"malformed space definition: {exc}") from exc
    anchors = PolicyAnchors()
    if "policy_anchors" in data:
        pa = data["policy_anchors"]
        anchors = PolicyAnchors(
            feed_in_tariff_high={k: float(v) for k, v in pa["feed_in_tariff_high"].items()},
            subsidy_high={k: float(v) for k, v in pa["subsidy_high"].items()},
            carbon_price_mid=tuple(float(v) for v in pa["carbon_price_mid"]),
            carbon_price_high=tuple(float(v) for v in pa["carbon_price_high"]),
            carbon_price_current={k: float(v) for k, v in pa["carbon_price_current"].items()},
            us_rollback_floor={k: float(v) for k, v in pa["us_rollback_floor"].items()},
        )
    return ParameterSpace(inputs, anchors)


def save_space(space: ParameterSpace, path: str | Path) -> None:
    Path(path).write_text(json.dumps(space_to_dict(space), indent=2), encoding="utf-8")


def load_space(path: str | Path) -> ParameterSpace:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpaceError(f"space file is not valid JSON: {exc}") from exc
    space = space_from_dict(data)
    violations = validate_space(space)
    if violations:
        raise SpaceError("invalid space: " +
                         "; ".join(f"{v.input_id}: {v.rule}" for v in violations))
    return space


def save_design(design: DesignMatrix, space: ParameterSpace, path: str | Path) -> None:
    """Write the design as CSV: header of input ids, >=12 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(space.ids)
        for row in design.points:
            writer.writerow([f"{x:.17g}" for x in row])


def load_design(path: str | Path, space: ParameterSpace | None = None,
                seed: int = -1) -> DesignMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    if space is not None and header != space.ids:
        raise SpaceError("design columns do not match the parameter space ids")
    points = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return DesignMatrix(points=points, seed=seed)
