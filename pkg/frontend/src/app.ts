import { ApiClient } from "./api";
import { clear, el, markStale, showBanner } from "./dom";
import { renderFilterPanel } from "./filterPanel";
import { renderFilamentPanel } from "./filamentsView";
import { renderGlyphPanel } from "./glyphsView";
import { MemberShape, renderShapesPanel } from "./shapesView";
import { nodeTooltip, renderTrackingPanel } from "./trackingView";
import { VolumePanel } from "./volumeView";
import { DEFAULT_STATE, ViewState, decodeState, encodeState, normalizeState } from "./state";
import type { EnsembleSchema, GlyphGroups, RunDescriptor } from "./types";

const PANEL_IDS = ["glyph-panel", "filament-panel", "volume-panel", "tracking-panel", "shapes-panel"];

export class App {
  state: ViewState = JSON.parse(JSON.stringify(DEFAULT_STATE));
  runs: RunDescriptor[] = [];
  schema!: EnsembleSchema;
  glyphs!: GlyphGroups;
  matching: Set<string> | null = null;
  volumePanels: [VolumePanel, VolumePanel];
  private animating = false;

  constructor(public root: HTMLElement, public api: ApiClient) {
    for (const id of ["banners", "filter-panel", ...PANEL_IDS]) {
      if (!root.querySelector(`#${id}`)) {
        root.appendChild(el("div", { id, class: "panel" }));
      }
    }
    this.volumePanels = [new VolumePanel("3D view A"), new VolumePanel("3D view B")];
  }

  panel(id: string): HTMLElement {
    return this.root.querySelector(`#${id}`) as HTMLElement;
  }

  /** Load ensemble-level data and render everything for the given state. */
  async init(state?: ViewState): Promise<void> {
    this.state = normalizeState(state ?? this.readStateFromUrl());
    [this.runs, this.schema, this.glyphs] = await Promise.all([
      this.api.runs(),
      this.api.schema(),
      this.api.glyphs(),
    ]);
    const ok = this.runs.filter((r) => r.status === "ok").map((r) => r.run_id);
    if (!this.state.selectedRuns.length && ok.length) {
      this.state.selectedRuns = ok.slice(0, 2);
    }
    if (Object.keys(this.state.filters.categorical).length ||
        Object.keys(this.state.filters.numeric).length) {
      await this.evaluateFilter(false);
    }
    await this.renderAll();
  }

  readStateFromUrl(): ViewState {
    return decodeState(typeof location !== "undefined" ? location.hash : "");
  }

  writeStateToUrl(): void {
    if (typeof location !== "undefined") {
      const fragment = encodeState(this.state);
      if (location.hash.replace(/^#/, "") !== fragment) {
        location.hash = fragment;
      }
    }
  }

  async update(mutate: (state: ViewState) => void): Promise<void> {
    mutate(this.state);
    this.state = normalizeState(this.state);
    this.writeStateToUrl();
    await this.renderAll();
  }

  async evaluateFilter(render = true): Promise<void> {
    const spec = this.state.filters;
    const empty = !Object.keys(spec.categorical).length && !Object.keys(spec.numeric).length;
    try {
      this.matching = empty ? null : new Set(await this.api.filter(spec));
    } catch (err) {
      showBanner(`filter failed: ${err}`);
      this.matching = null;
    }
    if (render) await this.renderAll();
  }

  async renderAll(): Promise<void> {
    await Promise.all([
      this.renderFilter(),
      this.renderGlyphs(),
      this.renderFilaments(),
      this.renderVolumes(),
      this.renderTracking(),
      this.renderShapes(),
    ]);
  }

  private async renderFilter(): Promise<void> {
    renderFilterPanel(this.panel("filter-panel"), this.schema, this.glyphs.diff_attributes,
      this.state.filters, {
        onApply: async (spec) => {
          this.state.filters = spec;
          this.writeStateToUrl();
          await this.evaluateFilter();
        },
        onClear: async () => {
          this.state.filters = { categorical: {}, numeric: {} };
          this.matching = null;
          this.writeStateToUrl();
          await this.renderAll();
        },
      });
  }

  private async renderGlyphs(): Promise<void> {
    renderGlyphPanel(this.panel("glyph-panel"), this.schema, this.glyphs,
      this.matching, this.state.selectedRuns, {
        onSelectGroup: (runIds) =>
          void this.update((s) => { s.selectedRuns = runIds.slice(0, 2); }),
      });
  }

  private async renderFilaments(): Promise<void> {
    const panel = this.panel("filament-panel");
    markStale(panel, true);
    try {
      const series = await this.api.filaments(this.state.filamentAttribute);
      renderFilamentPanel(panel, series, this.matching, this.state.selectedRuns, {
        onSelectRun: (rid) => void this.update((s) => { s.selectedRuns = [rid]; }),
      });
      const picker = el("select", { class: "filament-attr" });
      for (const attr of ["mean_temperature", "ice_count", "total_mass", "length"]) {
        const option = el("option", { value: attr }, attr);
        if (attr === this.state.filamentAttribute) option.selected = true;
        picker.appendChild(option);
      }
      picker.addEventListener("change", () =>
        void this.update((s) => { s.filamentAttribute = picker.value; }));
      panel.prepend(picker);
    } catch (err) {
      showBanner(`filaments unavailable: ${err}`);
    } finally {
      markStale(panel, false);
    }
  }

  private async renderVolumes(): Promise<void> {
    const panel = this.panel("volume-panel");
    clear(panel);
    const controls = el("div", { class: "volume-controls" });
    const shaderPick = el("select", { class: "shader-pick" });
    for (const shader of ["mip", "emission"] as const) {
      const option = el("option", { value: shader },
        shader === "mip" ? "MIP" : "emission-absorption");
      if (shader === this.state.shader) option.selected = true;
      shaderPick.appendChild(option);
    }
    shaderPick.addEventListener("change", () =>
      void this.update((s) => { s.shader = shaderPick.value as "mip" | "emission"; }));
    controls.appendChild(shaderPick);

    const attrPick = el("select", { class: "attr-pick" });
    for (const attr of ["temperature", "diameter", "ice_label", "group"]) {
      const option = el("option", { value: attr }, attr);
      if (attr === this.state.volumeAttribute) option.selected = true;
      attrPick.appendChild(option);
    }
    attrPick.addEventListener("change", () =>
      void this.update((s) => { s.volumeAttribute = attrPick.value; }));
    controls.appendChild(attrPick);

    const threshold = el("input", {
      type: "range", min: "0", max: "0.95", step: "0.01", value: "0.02",
      class: "threshold-slider", title: "attribute filter",
    });
    controls.appendChild(threshold);

    const animate = el("button", { class: "animate" }, this.animating ? "stop" : "animate");
    animate.addEventListener("click", () => {
      this.animating = !this.animating;
      if (this.animating) void this.runAnimation();
      animate.textContent = this.animating ? "stop" : "animate";
    });
    controls.appendChild(animate);
    panel.appendChild(controls);

    const row = el("div", { class: "volume-row" });
    for (let side = 0; side < 2; side++) {
      const runId = this.state.selectedRuns[side];
      const vp = this.volumePanels[side];
      row.appendChild(vp.root);
      if (!runId) continue;
      const run = this.runs.find((r) => r.run_id === runId);
      const labels = run?.timesteps ?? [];
      if (!labels.length) continue;
      const tIndex = Math.min(this.state.timesteps[side], labels.length - 1);

      const slider = el("input", {
        type: "range", min: "0", max: String(labels.length - 1), step: "1",
        value: String(tIndex), class: "time-slider", "data-side": String(side),
      });
      slider.addEventListener("change", () =>
        void this.update((s) => { s.timesteps[side] = parseInt(slider.value, 10); }));
      vp.root.appendChild(el("div", { class: "panel-note" },
        `${runId} t=${labels[tIndex]}`));
      vp.root.appendChild(slider);

      markStale(vp.root, true);
      try {
        const grid = await this.api.volume(runId, labels[tIndex], this.state.volumeAttribute);
        vp.setGrid(grid);
        vp.render({
          shader: this.state.shader,
          threshold: parseFloat(threshold.value),
          rotationY: 0.6,
        });
      } catch (err) {
        showBanner(`volume ${runId} unavailable: ${err}`);
      } finally {
        markStale(vp.root, false);
      }
    }
    panel.appendChild(row);
  }

  private async runAnimation(): Promise<void> {
    while (this.animating) {
      const run = this.runs.find((r) => r.run_id === this.state.selectedRuns[0]);
      const n = run?.timesteps?.length ?? 0;
      if (!n) break;
      await this.update((s) => { s.timesteps[0] = (s.timesteps[0] + 1) % n; });
      await new Promise((resolve) => setTimeout(resolve, 400));
    }
  }

  private async renderTracking(): Promise<void> {
    const panel = this.panel("tracking-panel");
    const runId = this.state.selectedRuns[0];
    if (!runId) {
      clear(panel);
      panel.appendChild(el("div", { class: "panel-note" }, "select a run"));
      return;
    }
    markStale(panel, true);
    try {
      const graph = await this.api.tracking(runId);
      renderTrackingPanel(panel, graph, (node) => {
        void this.update((s) => { s.hovered = node ? node.id : null; });
        const status = this.root.querySelector("#hover-status");
        if (status) status.textContent = node ? nodeTooltip(node) : "";
      });
      panel.prepend(el("div", { class: "panel-note" }, `evolution of ${runId}`));
    } catch (err) {
      showBanner(`tracking unavailable: ${err}`);
    } finally {
      markStale(panel, false);
    }
  }

  private async renderShapes(): Promise<void> {
    const panel = this.panel("shapes-panel");
    const runId = this.state.selectedRuns[0];
    if (!runId) {
      clear(panel);
      return;
    }
    markStale(panel, true);
    try {
      const neighborList = await this.api.similar(runId, this.state.similarityMode);
      const wanted = [runId, ...neighborList.neighbors.map(([rid]) => rid)];
      const members = await Promise.all(wanted.map(async (rid): Promise<MemberShape> => {
        const run = this.runs.find((r) => r.run_id === rid);
        const labels = run?.timesteps ?? [];
        const finalT = labels[labels.length - 1];
        const [shape, summaries] = await Promise.all([
          finalT !== undefined ? this.api.shape(rid, finalT).catch(() => null) : null,
          this.api.summaries(rid).catch(() => null),
        ]);
        return {
          runId: rid,
          shape,
          finalSummary: summaries ? summaries[summaries.length - 1] : null,
        };
      }));
      renderShapesPanel(panel, members[0], neighborList, members);

      const modePick = el("select", { class: "mode-pick" });
      for (const mode of ["parameters", "shape", "hausdorff"] as const) {
        const option = el("option", { value: mode }, mode);
        if (mode === this.state.similarityMode) option.selected = true;
        modePick.appendChild(option);
      }
      modePick.addEventListener("change", () =>
        void this.update((s) => { s.similarityMode = modePick.value as ViewState["similarityMode"]; }));
      panel.prepend(modePick);
    } catch (err) {
      showBanner(`similar shapes unavailable: ${err}`);
    } finally {
      markStale(panel, false);
    }
  }
}

export function apiBaseFromLocation(): string {
  if (typeof location === "undefined") return "/api/v1";
  const override = new URLSearchParams(location.search).get("api");
  return override ?? "/api/v1";
}
