// Wire types mirroring the scenario service's JSON schemas. Field names
// match the HTTP payloads exactly; optional request fields are omitted
// (not sent as null) so request bodies stay canonical.

export type InputKind = "policy" | "techno-economic";

export interface SpaceInput {
  id: string;
  kind: InputKind;
  physical_low: number;
  physical_high: number;
  unit: string;
  applies_to: string[][];
  special_mapping: "none" | "us-rollback";
}

export interface SpaceResponse {
  inputs: SpaceInput[];
  [extra: string]: unknown;
}

export interface OutputKey {
  region: string;
  output: string;
  year: number;
}

export interface PredictRequest {
  keys: OutputKey[];
  policy: Record<string, number>;
  techno: Record<string, number | string>;
}

export interface PredictResult extends OutputKey {
  mean: number;
  sd: number;
  unit: string;
}

export interface PredictResponse {
  results: PredictResult[];
}

export interface DistributionRequest {
  keys: OutputKey[];
  package: string;
  ambition: number;
  lead_band?: string;
  lead_bands?: number;
  discount_band?: string;
  demand_band?: string;
  n: number;
  seed?: number;
}

export interface Quantiles {
  q05: number;
  q25: number;
  q50: number;
  q75: number;
  q95: number;
}

export interface Histogram {
  bin_edges: number[];
  counts: number[];
}

export interface DistributionOutput extends OutputKey {
  unit: string;
  quantiles: Quantiles;
  histogram: Histogram;
}

export interface DistributionResponse {
  seed: number;
  n: number;
  package: string;
  bands: Record<string, string>;
  outputs: DistributionOutput[];
}

export interface TargetSpec {
  name: string;
  region: string;
  year: number;
  outputs: string[];
  direction: "ge" | "le";
  threshold: number;
  unit?: string;
}

export interface RobustnessRequest {
  packages: string[];
  ambition: number;
  lead_band?: string;
  lead_bands?: number;
  discount_band?: string;
  demand_band?: string;
  targets?: { targets: TargetSpec[] };
  n: number;
  seed?: number;
}

export interface ReportSummary extends OutputKey {
  median: number;
  q05: number;
  q95: number;
}

export interface RobustnessReport {
  package: string;
  bands: Record<string, string>;
  n: number;
  seed: number;
  proportions: Record<string, number>;
  summaries: ReportSummary[];
}

export interface RobustnessResponse {
  seed: number;
  reports: RobustnessReport[];
}

export interface SensitivityResponse {
  region: string;
  output: string;
  year: number;
  metric: string;
  indices: Record<string, number>;
}
