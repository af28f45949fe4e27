// Scenario form state and its translation into service requests. The
// sliders drive point predictions directly; distribution and robustness
// sampling work at the package level, so the slider pattern must be
// region-uniform per instrument and share one ambition level across the
// active instruments. Anything else is a client-side validation error and
// no request is sent.

import {
  DEMAND_INPUT_ID,
  DISCOUNT_INPUT_ID,
  HalfBand,
  LEAD_INPUT_IDS,
  LeadBand,
} from "./bands.js";
import {
  DistributionRequest,
  OutputKey,
  PredictRequest,
  RobustnessRequest,
  SpaceInput,
  SpaceResponse,
} from "./types.js";

// Instrument suffix order fixed by the package naming scheme
// (sub-cp-phase, cp-phase, ...).
export const INSTRUMENTS = ["subsidy_fit", "carbon_price", "phase_out"] as const;
export type Instrument = (typeof INSTRUMENTS)[number];
const INSTRUMENT_TOKEN: Record<Instrument, string> = {
  subsidy_fit: "sub",
  carbon_price: "cp",
  phase_out: "phase",
};

export const FIGURE_PACKAGES = [
  "baseline",
  "sub-cp",
  "cp-phase",
  "sub-cp-phase",
  "sub-phase",
] as const;

export interface ScenarioForm {
  sliders: Record<string, number>;
  leadBand: LeadBand | null;
  discountBand: HalfBand | null;
  demandBand: HalfBand | null;
  technoOverrides: Record<string, number>;
  targetsOn: Record<string, boolean>;
  n: number;
  seed: number | null;
  keys: OutputKey[];
}

export interface RequestBundle {
  predict: PredictRequest;
  distribution: DistributionRequest;
  robustness: RobustnessRequest;
}

export interface FormError {
  error: string;
}

export function isFormError(x: RequestBundle | FormError): x is FormError {
  return (x as FormError).error !== undefined;
}

export function policyInputs(space: SpaceResponse): SpaceInput[] {
  return space.inputs.filter((d) => d.kind === "policy");
}

export function clampSlider(value: number): number {
  if (!Number.isFinite(value)) {
    return 0;
  }
  return Math.min(1, Math.max(0, value));
}

export function defaultForm(space: SpaceResponse, keys: OutputKey[]): ScenarioForm {
  const sliders: Record<string, number> = {};
  for (const d of policyInputs(space)) {
    sliders[d.id] = 0;
  }
  return {
    sliders,
    leadBand: null,
    discountBand: null,
    demandBand: null,
    technoOverrides: {},
    targetsOn: {},
    n: 20000,
    seed: null,
    keys,
  };
}

export function instrumentOf(id: string): Instrument | null {
  for (const g of INSTRUMENTS) {
    if (id.endsWith(g)) {
      return g;
    }
  }
  return null;
}

export function regionOf(id: string): string {
  const g = instrumentOf(id);
  return g ? id.slice(0, id.length - g.length - 1) : id;
}

export interface SliderGroup {
  region: string;
  entries: { instrument: Instrument; input: SpaceInput }[];
}

// Region x instrument layout for the slider panel, in space order.
export function sliderGroups(space: SpaceResponse): SliderGroup[] {
  const byRegion = new Map<string, SliderGroup>();
  for (const d of policyInputs(space)) {
    const instrument = instrumentOf(d.id);
    if (!instrument) {
      continue;
    }
    const region = regionOf(d.id);
    let group = byRegion.get(region);
    if (!group) {
      group = { region, entries: [] };
      byRegion.set(region, group);
    }
    group.entries.push({ instrument, input: d });
  }
  return [...byRegion.values()];
}

// The US subsidy slider reads as rollback below the midpoint.
export function sliderLabel(input: SpaceInput, value: number): string {
  if (input.special_mapping === "us-rollback" && value < 0.5) {
    return "rollback";
  }
  return "";
}

export interface PackageChoice {
  package: string;
  ambition: number;
}

// Maps a region-uniform slider pattern onto a named package; mixed patterns
// are reported as errors rather than approximated.
export function packageFromSliders(
  space: SpaceResponse,
  sliders: Record<string, number>,
): PackageChoice | FormError {
  const levels = new Map<Instrument, number>();
  for (const g of INSTRUMENTS) {
    const values = policyInputs(space)
      .filter((d) => instrumentOf(d.id) === g)
      .map((d) => sliders[d.id] ?? 0);
    const lo = Math.min(...values);
    const hi = Math.max(...values);
    if (hi - lo > 1e-12) {
      return {
        error:
          `${g} sliders differ across regions; ` +
          "distribution sampling needs region-uniform instrument levels",
      };
    }
    levels.set(g, hi);
  }
  const active = INSTRUMENTS.filter((g) => (levels.get(g) ?? 0) > 0);
  const ambitions = new Set(active.map((g) => levels.get(g)));
  if (ambitions.size > 1) {
    return {
      error: "active instruments must share one ambition level",
    };
  }
  const name = active.length
    ? active.map((g) => INSTRUMENT_TOKEN[g]).join("-")
    : "baseline";
  return { package: name, ambition: active.length ? levels.get(active[0])! : 1 };
}

export function buildRequests(
  space: SpaceResponse,
  form: ScenarioForm,
): RequestBundle | FormError {
  for (const [id, v] of Object.entries(form.sliders)) {
    if (v < 0 || v > 1 || !Number.isFinite(v)) {
      return { error: `slider ${id} outside [0, 1]` };
    }
  }
  if (form.keys.length === 0) {
    return { error: "select at least one output" };
  }

  const techno: Record<string, number | string> = {};
  if (form.leadBand) {
    for (const id of LEAD_INPUT_IDS) {
      techno[id] = form.leadBand;
    }
  }
  if (form.discountBand) {
    techno[DISCOUNT_INPUT_ID] = form.discountBand;
  }
  if (form.demandBand) {
    techno[DEMAND_INPUT_ID] = form.demandBand;
  }
  for (const [id, v] of Object.entries(form.technoOverrides)) {
    techno[id] = clampSlider(v);
  }

  const choice = packageFromSliders(space, form.sliders);
  if ("error" in choice) {
    return choice;
  }

  const distribution: DistributionRequest = {
    keys: form.keys,
    package: choice.package,
    ambition: choice.ambition,
    n: form.n,
  };
  if (form.leadBand) {
    distribution.lead_band = form.leadBand;
    distribution.lead_bands = 3;
  }
  if (form.discountBand) {
    distribution.discount_band = form.discountBand;
  }
  if (form.demandBand) {
    distribution.demand_band = form.demandBand;
  }
  if (form.seed !== null) {
    distribution.seed = form.seed;
  }

  const packages = FIGURE_PACKAGES.includes(
    choice.package as (typeof FIGURE_PACKAGES)[number],
  )
    ? [...FIGURE_PACKAGES]
    : [choice.package, ...FIGURE_PACKAGES];
  const robustness: RobustnessRequest = {
    packages,
    ambition: choice.ambition,
    n: form.n,
  };
  if (form.leadBand) {
    robustness.lead_band = form.leadBand;
    robustness.lead_bands = 3;
  }
  if (form.discountBand) {
    robustness.discount_band = form.discountBand;
  }
  if (form.demandBand) {
    robustness.demand_band = form.demandBand;
  }
  if (form.seed !== null) {
    robustness.seed = form.seed;
  }

  return {
    predict: { keys: form.keys, policy: { ...form.sliders }, techno },
    distribution,
    robustness,
  };
}
