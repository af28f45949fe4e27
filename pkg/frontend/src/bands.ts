// Band partitions for techno-economic inputs. Names and subranges mirror the
// service: lead-time bands split [0,1] into thirds (or halves), the
// discount and demand bands split it into halves.

export const LEAD_BANDS = ["fast", "medium", "slow"] as const;
export const LEAD_BANDS_2 = ["fast", "slow"] as const;
export const HALF_BANDS = ["low", "high"] as const;

export type LeadBand = (typeof LEAD_BANDS)[number];
export type HalfBand = (typeof HALF_BANDS)[number];

export const LEAD_INPUT_IDS = [
  "solar_lead",
  "onshore_lead",
  "offshore_lead",
  "grid_lead",
] as const;
export const DISCOUNT_INPUT_ID = "discount_shift";
export const DEMAND_INPUT_ID = "demand_growth_shift";

export function leadBandRange(name: LeadBand, nBands: 2 | 3 = 3): [number, number] {
  const names: readonly string[] = nBands === 3 ? LEAD_BANDS : LEAD_BANDS_2;
  const i = names.indexOf(name);
  if (i < 0) {
    throw new Error(`unknown lead band ${name} for ${nBands} bands`);
  }
  return [i / names.length, (i + 1) / names.length];
}

export function halfBandRange(name: HalfBand): [number, number] {
  if (name === "low") {
    return [0, 0.5];
  }
  if (name === "high") {
    return [0.5, 1];
  }
  throw new Error(`unknown band ${name}`);
}

export function bandMidpoint(range: [number, number]): number {
  return (range[0] + range[1]) / 2;
}

// Gauge annotations for the service's built-in target set. Thresholds are
// request-side configuration, not response data, so they live here as copy.
export const TARGET_ANNOTATIONS: Record<string, string> = {
  capacity_393GW: "solar + onshore >= 393 GW",
  renewables_share_55pct: "renewables share >= 0.55",
  cost_at_most_68: "weighted cost <= 68 currency/MWh",
  emissions_below_1000Mt: "emissions <= 1000 MtCO2/yr",
};
