import { clear, el } from "./dom";
import type { EnsembleSchema, FilterSpec } from "./types";

export interface FilterCallbacks {
  onApply(spec: FilterSpec): void;
  onClear(): void;
}

/** Filtering panel: categorical selects over the ensemble-differing
 * attributes plus numeric ranges over the final-timestep summary attributes;
 * matches are highlighted across every panel. */
export function renderFilterPanel(
  container: Element,
  schema: EnsembleSchema,
  diffAttributes: string[],
  current: FilterSpec,
  callbacks: FilterCallbacks,
): void {
  clear(container);
  const form = el("div", { class: "filter-form" });

  const selects = new Map<string, HTMLSelectElement>();
  for (const name of diffAttributes) {
    const row = el("label", { class: "filter-row" }, name);
    const select = el("select", { "data-attr": name });
    select.appendChild(el("option", { value: "" }, "(any)"));
    for (const value of schema.categorical[name] ?? []) {
      const option = el("option", { value }, value);
      if (current.categorical[name] === value) option.selected = true;
      select.appendChild(option);
    }
    row.appendChild(select);
    selects.set(name, select);
    form.appendChild(row);
  }

  const numeric = new Map<string, [HTMLInputElement, HTMLInputElement]>();
  for (const name of schema.numeric_attributes) {
    const [lo, hi] = schema.numeric_ranges[name] ?? [0, 0];
    const row = el("label", { class: "filter-row" }, `${name} ∈ [${lo.toPrecision(3)}, ${hi.toPrecision(3)}]`);
    const loBox = el("input", { type: "text", placeholder: "min", "data-attr": `${name}:lo` });
    const hiBox = el("input", { type: "text", placeholder: "max", "data-attr": `${name}:hi` });
    const bounds = current.numeric[name];
    if (bounds?.lo != null) loBox.value = String(bounds.lo);
    if (bounds?.hi != null) hiBox.value = String(bounds.hi);
    row.appendChild(loBox);
    row.appendChild(hiBox);
    numeric.set(name, [loBox, hiBox]);
    form.appendChild(row);
  }

  const apply = el("button", { class: "apply" }, "apply filter");
  apply.addEventListener("click", () => {
    const spec: FilterSpec = { categorical: {}, numeric: {} };
    for (const [name, select] of selects) {
      if (select.value) spec.categorical[name] = select.value;
    }
    for (const [name, [loBox, hiBox]] of numeric) {
      const lo = loBox.value.trim() === "" ? null : parseFloat(loBox.value);
      const hi = hiBox.value.trim() === "" ? null : parseFloat(hiBox.value);
      if (lo != null || hi != null) spec.numeric[name] = { lo, hi };
    }
    callbacks.onApply(spec);
  });
  const reset = el("button", {}, "clear");
  reset.addEventListener("click", () => callbacks.onClear());
  form.appendChild(apply);
  form.appendChild(reset);
  container.appendChild(form);
}
