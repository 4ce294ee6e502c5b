import type { FilterSpec } from "./types";

/**
 * Everything the panels need to render, serializable to the URL fragment so
 * sessions are shareable: reloading the same URL reproduces the same panels
 * against the same bundle.
 */
export interface ViewState {
  filters: FilterSpec;
  selectedRuns: string[]; // at most 2, for side-by-side 3D
  timesteps: [number, number]; // per 3D panel: index into the run's labels
  volumeAttribute: string;
  shader: "mip" | "emission";
  filamentAttribute: string;
  similarityMode: "parameters" | "shape" | "hausdorff";
  hovered?: string | null;
}

export const DEFAULT_STATE: ViewState = {
  filters: { categorical: {}, numeric: {} },
  selectedRuns: [],
  timesteps: [0, 0],
  volumeAttribute: "ice_label",
  shader: "mip",
  filamentAttribute: "mean_temperature",
  similarityMode: "shape",
  hovered: null,
};

const MAX_SELECTED = 2;

export function normalizeState(state: ViewState): ViewState {
  return {
    ...state,
    selectedRuns: state.selectedRuns.slice(0, MAX_SELECTED),
    timesteps: [Math.max(0, state.timesteps[0] | 0), Math.max(0, state.timesteps[1] | 0)],
  };
}

/** Encode into a URL fragment (no leading '#'). */
export function encodeState(state: ViewState): string {
  const s = normalizeState(state);
  const params = new URLSearchParams();
  if (s.selectedRuns.length) params.set("runs", s.selectedRuns.join(","));
  params.set("t", s.timesteps.join(","));
  params.set("attr", s.volumeAttribute);
  params.set("shader", s.shader);
  params.set("fil", s.filamentAttribute);
  params.set("sim", s.similarityMode);
  const cat = Object.entries(s.filters.categorical);
  if (cat.length) {
    params.set("fc", cat.map(([k, v]) => `${k}:${v}`).join(";"));
  }
  const num = Object.entries(s.filters.numeric);
  if (num.length) {
    params.set("fn", num.map(([k, r]) => `${k}:${r.lo ?? ""}:${r.hi ?? ""}`).join(";"));
  }
  return params.toString();
}

/** Decode a URL fragment produced by encodeState; unknown keys are ignored. */
export function decodeState(fragment: string): ViewState {
  const params = new URLSearchParams(fragment.replace(/^#/, ""));
  const state: ViewState = JSON.parse(JSON.stringify(DEFAULT_STATE));
  const runs = params.get("runs");
  if (runs) state.selectedRuns = runs.split(",").filter(Boolean);
  const t = params.get("t");
  if (t) {
    const parts = t.split(",").map((x) => parseInt(x, 10));
    state.timesteps = [parts[0] || 0, parts[1] || 0];
  }
  const attr = params.get("attr");
  if (attr) state.volumeAttribute = attr;
  const shader = params.get("shader");
  if (shader === "mip" || shader === "emission") state.shader = shader;
  const fil = params.get("fil");
  if (fil) state.filamentAttribute = fil;
  const sim = params.get("sim");
  if (sim === "parameters" || sim === "shape" || sim === "hausdorff") state.similarityMode = sim;
  const fc = params.get("fc");
  if (fc) {
    for (const pair of fc.split(";")) {
      const i = pair.indexOf(":");
      if (i > 0) state.filters.categorical[pair.slice(0, i)] = pair.slice(i + 1);
    }
  }
  const fn = params.get("fn");
  if (fn) {
    for (const triple of fn.split(";")) {
      const [name, lo, hi] = triple.split(":");
      if (!name) continue;
      state.filters.numeric[name] = {
        lo: lo === "" || lo === undefined ? null : parseFloat(lo),
        hi: hi === "" || hi === undefined ? null : parseFloat(hi),
      };
    }
  }
  return normalizeState(state);
}
