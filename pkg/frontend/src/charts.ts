// Pure view models for the three panels, plus SVG renderers over them. All
// numeric text is produced by formatSig from response values, never from
// intermediate arithmetic, so what the analyst reads is the service answer
// at display rounding.

import { formatKey, formatSig } from "./format.js";
import {
  DistributionOutput,
  PredictResponse,
  SensitivityResponse,
} from "./types.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface PredictRow {
  key: string;
  meanLabel: string;
  sdLabel: string;
  unit: string;
}

export function predictView(resp: PredictResponse): PredictRow[] {
  return resp.results.map((r) => ({
    key: formatKey(r),
    meanLabel: formatSig(r.mean),
    sdLabel: formatSig(r.sd),
    unit: r.unit,
  }));
}

export interface DistributionView {
  key: string;
  unit: string;
  degenerate: boolean;
  labels: {
    median: string;
    q05: string;
    q25: string;
    q75: string;
    q95: string;
  };
  seedLabel: string;
  bars: { x: number; width: number; height: number }[];
  svg: string;
}

const CHART_W = 420;
const CHART_H = 160;
const PAD = 34;

export function distributionView(out: DistributionOutput, seed: number): DistributionView {
  const q = out.quantiles;
  const labels = {
    median: formatSig(q.q50),
    q05: formatSig(q.q05),
    q25: formatSig(q.q25),
    q75: formatSig(q.q75),
    q95: formatSig(q.q95),
  };
  const seedLabel = String(seed);
  const key = formatKey(out);
  const edges = out.histogram.bin_edges;
  const counts = out.histogram.counts;
  const lo = edges[0];
  const hi = edges[edges.length - 1];
  // A point mass keeps q05 == q95 even though the service pads the
  // histogram range around a constant sample.
  const degenerate = q.q05 === q.q95 || !(hi > lo);

  const view: DistributionView = {
    key,
    unit: out.unit,
    degenerate,
    labels,
    seedLabel,
    bars: [],
    svg: "",
  };

  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${CHART_W}" height="${CHART_H}" role="img">`,
    `<text x="${PAD}" y="14" class="chart-title">${esc(key)} (${esc(out.unit)})</text>`,
  ];

  if (degenerate) {
    // Point mass: a single marked value instead of a histogram.
    const x = CHART_W / 2;
    parts.push(
      `<line x1="${x}" y1="30" x2="${x}" y2="${CHART_H - 30}" class="median-line" stroke-dasharray="4 3"/>`,
      `<text x="${x + 6}" y="${CHART_H / 2}" class="median-label">${esc(labels.median)}</text>`,
      `<text x="${PAD}" y="${CHART_H - 8}" class="axis-label">point mass at ${esc(labels.median)}</text>`,
    );
  } else {
    const span = hi - lo;
    const xOf = (v: number) => PAD + ((v - lo) / span) * (CHART_W - 2 * PAD);
    const maxCount = Math.max(...counts, 1);
    const floorY = CHART_H - 26;
    const plotH = floorY - 24;
    for (let i = 0; i < counts.length; i += 1) {
      const x = xOf(edges[i]);
      const w = Math.max(xOf(edges[i + 1]) - x, 0.5);
      const h = (counts[i] / maxCount) * plotH;
      view.bars.push({ x, width: w, height: h });
      parts.push(
        `<rect x="${x.toFixed(2)}" y="${(floorY - h).toFixed(2)}" width="${w.toFixed(2)}" height="${h.toFixed(2)}" class="hist-bar"/>`,
      );
    }
    // Uncertainty bands: q05-q95 light, q25-q75 dark, median dotted.
    parts.push(
      `<rect x="${xOf(q.q05).toFixed(2)}" y="24" width="${(xOf(q.q95) - xOf(q.q05)).toFixed(2)}" height="${plotH}" class="band-outer"/>`,
      `<rect x="${xOf(q.q25).toFixed(2)}" y="24" width="${(xOf(q.q75) - xOf(q.q25)).toFixed(2)}" height="${plotH}" class="band-inner"/>`,
      `<line x1="${xOf(q.q50).toFixed(2)}" y1="20" x2="${xOf(q.q50).toFixed(2)}" y2="${floorY}" class="median-line" stroke-dasharray="4 3"/>`,
      `<text x="${xOf(q.q50).toFixed(2)}" y="${CHART_H - 16}" text-anchor="middle" class="median-label">${esc(labels.median)}</text>`,
      `<text x="${PAD}" y="${CHART_H - 4}" class="axis-label">q05 ${esc(labels.q05)}</text>`,
      `<text x="${CHART_W - PAD}" y="${CHART_H - 4}" text-anchor="end" class="axis-label">q95 ${esc(labels.q95)}</text>`,
    );
  }
  parts.push("</svg>");
  view.svg = parts.join("");
  return view;
}

export interface GaugeView {
  target: string;
  proportionLabel: string;
  annotation: string;
  fraction: number;
  full: boolean;
  svg: string;
}

export function gaugeView(target: string, proportion: number, annotation = ""): GaugeView {
  const fraction = Math.min(1, Math.max(0, proportion));
  const full = proportion >= 1;
  const r = 26;
  const circumference = 2 * Math.PI * r;
  const label = formatSig(proportion);
  const svg = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="110" height="96" role="img">`,
    `<circle cx="55" cy="42" r="${r}" class="gauge-track" fill="none"/>`,
    `<circle cx="55" cy="42" r="${r}" class="${full ? "gauge-arc gauge-full" : "gauge-arc"}" fill="none"`,
    ` stroke-dasharray="${(fraction * circumference).toFixed(3)} ${circumference.toFixed(3)}"`,
    ` transform="rotate(-90 55 42)"/>`,
    `<text x="55" y="47" text-anchor="middle" class="gauge-value">${esc(label)}</text>`,
    `<text x="55" y="78" text-anchor="middle" class="gauge-target">${esc(target)}</text>`,
    annotation
      ? `<text x="55" y="90" text-anchor="middle" class="gauge-annotation">${esc(annotation)}</text>`
      : "",
    "</svg>",
  ].join("");
  return { target, proportionLabel: label, annotation, fraction, full, svg };
}

export interface HeatmapCell {
  inputId: string;
  column: string;
  value: number | null;
  label: string;
  shade: number;
}

export interface HeatmapView {
  inputIds: string[];
  columns: string[];
  rows: HeatmapCell[][];
  svg: string;
}

export function heatmapView(tables: SensitivityResponse[]): HeatmapView {
  const inputIds: string[] = [];
  for (const t of tables) {
    for (const id of Object.keys(t.indices)) {
      if (!inputIds.includes(id)) {
        inputIds.push(id);
      }
    }
  }
  const columns = tables.map((t) => formatKey(t));
  let maxValue = 0;
  for (const t of tables) {
    for (const v of Object.values(t.indices)) {
      maxValue = Math.max(maxValue, v);
    }
  }
  const rows = inputIds.map((id) =>
    tables.map((t) => {
      const value = id in t.indices ? t.indices[id] : null;
      return {
        inputId: id,
        column: formatKey(t),
        value,
        label: value === null ? "" : formatSig(value),
        shade: value === null || maxValue === 0 ? 0 : value / maxValue,
      };
    }),
  );

  const cellW = 86;
  const cellH = 16;
  const labelW = 150;
  const headerH = 54;
  const width = labelW + columns.length * cellW;
  const height = headerH + inputIds.length * cellH;
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" role="img">`,
  ];
  columns.forEach((c, j) => {
    parts.push(
      `<text x="${labelW + j * cellW + cellW / 2}" y="${headerH - 8}" text-anchor="middle" class="heatmap-col">${esc(c)}</text>`,
    );
  });
  rows.forEach((row, i) => {
    const y = headerH + i * cellH;
    parts.push(
      `<text x="${labelW - 6}" y="${y + cellH - 4}" text-anchor="end" class="heatmap-row">${esc(row[0].inputId)}</text>`,
    );
    row.forEach((cell, j) => {
      const x = labelW + j * cellW;
      const alpha = (0.08 + 0.92 * cell.shade).toFixed(3);
      parts.push(
        `<rect x="${x}" y="${y}" width="${cellW - 1}" height="${cellH - 1}" fill="rgba(31,98,161,${alpha})"/>`,
        `<text x="${x + cellW / 2}" y="${y + cellH - 4}" text-anchor="middle" class="heatmap-cell">${esc(cell.label)}</text>`,
      );
    });
  });
  parts.push("</svg>");
  return { inputIds, columns, rows, svg: parts.join("") };
}
