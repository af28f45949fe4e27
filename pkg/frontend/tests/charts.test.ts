import { describe, expect, it } from "vitest";

import {
  distributionView,
  gaugeView,
  heatmapView,
  predictView,
} from "../src/charts.js";
import { formatSig } from "../src/format.js";
import {
  DistributionOutput,
  DistributionResponse,
  PredictResponse,
  SensitivityResponse,
} from "../src/types.js";
import { loadFixture } from "./helpers.js";

describe("distributionView", () => {
  const resp = loadFixture<DistributionResponse>("baseline/distribution.json");

  it("renders quantile and median labels from the response", () => {
    for (const out of resp.outputs) {
      const view = distributionView(out, resp.seed);
      expect(view.labels.median).toBe(formatSig(out.quantiles.q50));
      expect(view.labels.q05).toBe(formatSig(out.quantiles.q05));
      expect(view.labels.q95).toBe(formatSig(out.quantiles.q95));
      expect(view.svg).toContain(view.labels.median);
      expect(view.svg).toContain("stroke-dasharray");
      expect(view.bars).toHaveLength(out.histogram.counts.length);
      expect(view.degenerate).toBe(false);
    }
  });

  it("marks a point mass with a single value", () => {
    const out: DistributionOutput = {
      region: "global",
      output: "emissions_Mt",
      year: 2050,
      unit: "MtCO2/yr",
      quantiles: { q05: 5, q25: 5, q50: 5, q75: 5, q95: 5 },
      histogram: { bin_edges: [4.5, 5.5], counts: [4000] },
    };
    const view = distributionView(out, 1);
    expect(view.degenerate).toBe(true);
    expect(view.svg).toContain("point mass at 5");
  });
});

describe("gaugeView", () => {
  it("shows the raw proportion at display rounding", () => {
    const view = gaugeView("emissions_below_1765Mt", 0.0825);
    expect(view.proportionLabel).toBe("0.0825");
    expect(view.full).toBe(false);
    expect(view.svg).toContain("0.0825");
  });

  it("renders proportion 1 as a full gauge", () => {
    const view = gaugeView("capacity_190GW", 1.0, "solar + onshore >= 190 GW");
    expect(view.full).toBe(true);
    expect(view.fraction).toBe(1);
    expect(view.svg).toContain("gauge-full");
    expect(view.svg).toContain("solar + onshore &gt;= 190 GW");
  });
});

describe("heatmapView", () => {
  const tables = [
    loadFixture<SensitivityResponse>("sensitivity_2030.json"),
    loadFixture<SensitivityResponse>("sensitivity_2050.json"),
  ];

  it("renders every input row present in the responses", () => {
    const view = heatmapView(tables);
    expect(view.inputIds).toHaveLength(30);
    expect(view.columns).toEqual([
      "global:emissions_Mt@2030",
      "global:emissions_Mt@2050",
    ]);
    for (const [i, id] of view.inputIds.entries()) {
      for (const [j, t] of tables.entries()) {
        const cell = view.rows[i][j];
        expect(cell.inputId).toBe(id);
        expect(cell.value).toBe(t.indices[id]);
        expect(cell.label).toBe(formatSig(t.indices[id]));
      }
    }
  });

  it("normalizes shading to the largest index", () => {
    const view = heatmapView(tables);
    const shades = view.rows.flat().map((c) => c.shade);
    expect(Math.max(...shades)).toBeCloseTo(1, 12);
    expect(Math.min(...shades)).toBeGreaterThanOrEqual(0);
  });
});

describe("predictView", () => {
  it("formats means and standard deviations from the response", () => {
    const resp = loadFixture<PredictResponse>("baseline/predict.json");
    const rows = predictView(resp);
    expect(rows).toHaveLength(resp.results.length);
    for (const [i, r] of resp.results.entries()) {
      expect(rows[i].meanLabel).toBe(formatSig(r.mean));
      expect(rows[i].sdLabel).toBe(formatSig(r.sd));
      expect(rows[i].unit).toBe(r.unit);
    }
  });
});
