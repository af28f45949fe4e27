// Browser entry point: builds the form from /api/space, debounces changes
// into service requests, and renders the four panels. All computation
// happens server-side; this file is DOM plumbing over the pure modules.

import { HALF_BANDS, HalfBand, LEAD_BANDS, LeadBand, TARGET_ANNOTATIONS } from "./bands.js";
import {
  distributionView,
  gaugeView,
  heatmapView,
  predictView,
} from "./charts.js";
import { ServiceClient } from "./client.js";
import { DEBOUNCE_MS, debounce, responseGate } from "./debounce.js";
import {
  FIGURE_PACKAGES,
  ScenarioForm,
  buildRequests,
  clampSlider,
  defaultForm,
  isFormError,
  sliderGroups,
  sliderLabel,
} from "./form.js";
import { formatKey } from "./format.js";
import {
  DistributionResponse,
  OutputKey,
  PredictResponse,
  RobustnessResponse,
  SensitivityResponse,
  SpaceResponse,
} from "./types.js";

const DEFAULT_KEYS: OutputKey[] = [
  { region: "global", output: "emissions_Mt", year: 2050 },
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

function panelRoot(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing panel mount #${id}`);
  }
  return node;
}

class ExplorerApp {
  private form!: ScenarioForm;
  private space!: SpaceResponse;
  private readonly gates = {
    predict: responseGate<PredictResponse>(),
    distribution: responseGate<DistributionResponse>(),
    robustness: responseGate<RobustnessResponse>(),
  };
  private sliderInputs = new Map<string, HTMLInputElement>();
  private sliderNotes = new Map<string, HTMLElement>();
  private seedEcho: number | null = null;
  private readonly submitSoon = debounce(DEBOUNCE_MS, () => this.submit());

  constructor(private readonly client: ServiceClient) {}

  async start(): Promise<void> {
    this.space = await this.client.getSpace();
    this.form = defaultForm(this.space, DEFAULT_KEYS);
    this.buildForm();
    await this.loadHeatmap();
    this.submit();
  }

  private buildForm(): void {
    const root = panelRoot("form-panel");
    root.replaceChildren();

    // Package selector applies the named pattern to the sliders.
    const packageRow = el("div", "form-row");
    packageRow.appendChild(el("label", "", "package"));
    const packageSelect = el("select");
    for (const name of FIGURE_PACKAGES) {
      const opt = el("option", "", name);
      opt.value = name;
      packageSelect.appendChild(opt);
    }
    const ambition = el("input") as HTMLInputElement;
    ambition.type = "range";
    ambition.min = "0";
    ambition.max = "1";
    ambition.step = "0.05";
    ambition.value = "1";
    const applyPackage = () => {
      const active = packageSelect.value;
      const level = Number(ambition.value);
      for (const group of sliderGroups(this.space)) {
        for (const entry of group.entries) {
          const token = { subsidy_fit: "sub", carbon_price: "cp", phase_out: "phase" }[
            entry.instrument
          ];
          const on = active !== "baseline" && active.split("-").includes(token);
          this.setSlider(entry.input.id, on ? level : 0);
        }
      }
      this.formChanged();
    };
    packageSelect.addEventListener("change", applyPackage);
    ambition.addEventListener("input", applyPackage);
    packageRow.appendChild(packageSelect);
    packageRow.appendChild(el("label", "", "ambition"));
    packageRow.appendChild(ambition);
    root.appendChild(packageRow);

    // Policy sliders, one block per region.
    const sliderPanel = el("div", "slider-grid");
    for (const group of sliderGroups(this.space)) {
      const block = el("div", "region-block");
      block.appendChild(el("div", "region-title", group.region));
      for (const entry of group.entries) {
        const row = el("div", "slider-row");
        row.appendChild(el("label", "", entry.instrument));
        const input = el("input") as HTMLInputElement;
        input.type = "range";
        input.min = "0";
        input.max = "1";
        input.step = "0.01";
        input.value = "0";
        const note = el("span", "slider-note");
        input.addEventListener("input", () => {
          this.form.sliders[entry.input.id] = clampSlider(Number(input.value));
          note.textContent = sliderLabel(entry.input, this.form.sliders[entry.input.id]);
          this.formChanged();
        });
        this.sliderInputs.set(entry.input.id, input);
        this.sliderNotes.set(entry.input.id, note);
        note.textContent = sliderLabel(entry.input, 0);
        row.appendChild(input);
        row.appendChild(note);
        block.appendChild(row);
      }
      sliderPanel.appendChild(block);
    }
    root.appendChild(sliderPanel);

    // Band selectors and sampling controls.
    const bands = el("div", "form-row");
    bands.appendChild(el("label", "", "lead"));
    bands.appendChild(
      this.bandSelect(["", ...LEAD_BANDS], (v) => {
        this.form.leadBand = (v || null) as LeadBand | null;
      }),
    );
    bands.appendChild(el("label", "", "discount"));
    bands.appendChild(
      this.bandSelect(["", ...HALF_BANDS], (v) => {
        this.form.discountBand = (v || null) as HalfBand | null;
      }),
    );
    bands.appendChild(el("label", "", "demand"));
    bands.appendChild(
      this.bandSelect(["", ...HALF_BANDS], (v) => {
        this.form.demandBand = (v || null) as HalfBand | null;
      }),
    );
    const seedInput = el("input") as HTMLInputElement;
    seedInput.type = "number";
    seedInput.placeholder = "seed (blank = fresh)";
    seedInput.addEventListener("input", () => {
      this.form.seed = seedInput.value === "" ? null : Number(seedInput.value);
      this.formChanged();
    });
    bands.appendChild(el("label", "", "seed"));
    bands.appendChild(seedInput);
    const replay = el("button", "", "replay echoed seed");
    replay.addEventListener("click", () => {
      if (this.seedEcho !== null) {
        seedInput.value = String(this.seedEcho);
        this.form.seed = this.seedEcho;
        this.formChanged();
      }
    });
    bands.appendChild(replay);
    root.appendChild(bands);

    const status = el("div", "form-status");
    status.id = "form-status";
    root.appendChild(status);
  }

  private bandSelect(options: string[], onChange: (value: string) => void): HTMLSelectElement {
    const select = el("select");
    for (const name of options) {
      const opt = el("option", "", name === "" ? "(free)" : name);
      opt.value = name;
      select.appendChild(opt);
    }
    select.addEventListener("change", () => {
      onChange(select.value);
      this.formChanged();
    });
    return select;
  }

  private setSlider(id: string, value: number): void {
    this.form.sliders[id] = value;
    const input = this.sliderInputs.get(id);
    if (input) {
      input.value = String(value);
    }
    const note = this.sliderNotes.get(id);
    const def = this.space.inputs.find((d) => d.id === id);
    if (note && def) {
      note.textContent = sliderLabel(def, value);
    }
  }

  private formChanged(): void {
    this.submitSoon();
  }

  private markStale(pending: boolean): void {
    for (const id of ["predict-panel", "distribution-panel", "gauge-panel"]) {
      panelRoot(id).classList.toggle("stale", pending);
    }
  }

  private submit(): void {
    const bundle = buildRequests(this.space, this.form);
    const status = panelRoot("form-status");
    if (isFormError(bundle)) {
      status.textContent = bundle.error;
      return;
    }
    status.textContent = "";
    this.markStale(true);
    this.gates.predict.dispatch(
      this.client.predict(bundle.predict),
      (resp) => this.renderPredict(resp),
      (err) => this.renderError("predict-panel", err),
    );
    this.gates.distribution.dispatch(
      this.client.distribution(bundle.distribution),
      (resp) => {
        this.seedEcho = resp.seed;
        this.renderDistribution(resp);
      },
      (err) => this.renderError("distribution-panel", err),
    );
    this.gates.robustness.dispatch(
      this.client.robustness(bundle.robustness),
      (resp) => this.renderGauges(resp),
      (err) => this.renderError("gauge-panel", err),
    );
  }

  private renderError(panelId: string, err: unknown): void {
    // Keep the previous chart; surface the message alongside it.
    const panel = panelRoot(panelId);
    panel.classList.remove("stale");
    let note = panel.querySelector(".panel-error");
    if (!note) {
      note = el("div", "panel-error");
      panel.prepend(note);
    }
    note.textContent = err instanceof Error ? err.message : String(err);
  }

  private clearError(panelId: string): void {
    panelRoot(panelId).querySelector(".panel-error")?.remove();
  }

  private renderPredict(resp: PredictResponse): void {
    const panel = panelRoot("predict-panel");
    panel.classList.remove("stale");
    this.clearError("predict-panel");
    const table = el("table", "predict-table");
    const head = el("tr");
    for (const h of ["output", "mean", "sd", "unit"]) {
      head.appendChild(el("th", "", h));
    }
    table.appendChild(head);
    for (const row of predictView(resp)) {
      const tr = el("tr");
      tr.appendChild(el("td", "", row.key));
      tr.appendChild(el("td", "num", row.meanLabel));
      tr.appendChild(el("td", "num", row.sdLabel));
      tr.appendChild(el("td", "", row.unit));
      table.appendChild(tr);
    }
    panel.querySelector("table")?.remove();
    panel.appendChild(table);
  }

  private renderDistribution(resp: DistributionResponse): void {
    const panel = panelRoot("distribution-panel");
    panel.classList.remove("stale");
    this.clearError("distribution-panel");
    const holder = el("div", "charts");
    for (const out of resp.outputs) {
      const view = distributionView(out, resp.seed);
      const fig = el("figure");
      fig.innerHTML = view.svg;
      fig.appendChild(el("figcaption", "", `seed ${view.seedLabel}, n ${resp.n}`));
      holder.appendChild(fig);
    }
    panel.querySelector(".charts")?.remove();
    panel.appendChild(holder);
  }

  private renderGauges(resp: RobustnessResponse): void {
    const panel = panelRoot("gauge-panel");
    panel.classList.remove("stale");
    this.clearError("gauge-panel");
    const holder = el("div", "gauges");
    for (const report of resp.reports) {
      const block = el("div", "gauge-block");
      block.appendChild(el("div", "gauge-package", report.package));
      for (const [target, proportion] of Object.entries(report.proportions)) {
        if (this.form.targetsOn[target] === false) {
          continue;
        }
        const g = gaugeView(target, proportion, TARGET_ANNOTATIONS[target] ?? "");
        const cell = el("span");
        cell.innerHTML = g.svg;
        block.appendChild(cell);
      }
      holder.appendChild(block);
    }
    panel.querySelector(".gauges")?.remove();
    panel.appendChild(holder);
  }

  private async loadHeatmap(): Promise<void> {
    const panel = panelRoot("heatmap-panel");
    try {
      const tables: SensitivityResponse[] = [];
      for (const key of this.form.keys) {
        tables.push(await this.client.sensitivity(key.output, key.year, key.region));
      }
      const view = heatmapView(tables);
      const holder = el("div", "heatmap");
      holder.innerHTML = view.svg;
      panel.querySelector(".heatmap")?.remove();
      panel.appendChild(holder);
      panel.appendChild(el("div", "heatmap-note", `columns: ${tables.map(formatKey).join(", ")}`));
    } catch (err) {
      this.renderError("heatmap-panel", err);
    }
  }
}

const serviceUrl =
  new URLSearchParams(window.location.search).get("service") ?? "";
new ExplorerApp(new ServiceClient(serviceUrl)).start().catch((err) => {
  panelRoot("form-panel").textContent = `failed to load: ${err}`;
});
