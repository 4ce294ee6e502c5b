import { clear, el, svg } from "./dom";
import { SHARED_TILE, valueColor } from "./colors";
import type { EnsembleSchema, GlyphGroups } from "./types";

const TILE = 14;
const COLS = 8;

export interface GlyphCallbacks {
  onSelectGroup(runIds: string[]): void;
}

/**
 * Parameter-view tile glyphs: one glyph per group of runs sharing identical
 * parameter maps, as a schema-ordered grid of tiles. Only the attributes that
 * differ across the ensemble are colored; shared attributes stay gray. A
 * legend of the colored attributes is rendered alongside.
 */
export function renderGlyphPanel(
  container: Element,
  schema: EnsembleSchema,
  glyphs: GlyphGroups,
  matching: Set<string> | null,
  selected: string[],
  callbacks: GlyphCallbacks,
): void {
  clear(container);
  const names = Object.keys(schema.categorical).sort();
  const diff = new Set(glyphs.diff_attributes);

  const list = el("div", { class: "glyph-list" });
  for (const group of glyphs.groups) {
    const isMatch =
      matching === null || group.run_ids.some((rid) => matching.has(rid));
    const card = el("div", {
      class:
        "glyph-card" +
        (isMatch ? "" : " filtered-out") +
        (group.run_ids.some((r) => selected.includes(r)) ? " selected" : ""),
    });
    const rows = Math.ceil(names.length / COLS);
    const image = svg("svg", {
      width: String(COLS * TILE),
      height: String(rows * TILE),
      class: "glyph",
      role: "img",
    });
    names.forEach((name, i) => {
      const value = group.representative[name];
      const colored = diff.has(name) && value !== undefined;
      const tile = svg("rect", {
        x: String((i % COLS) * TILE + 1),
        y: String(Math.floor(i / COLS) * TILE + 1),
        width: String(TILE - 2),
        height: String(TILE - 2),
        fill: colored ? valueColor(schema.categorical[name], value) : SHARED_TILE,
        "data-attr": name,
      });
      const tip = svg("title");
      tip.textContent = `${name} = ${value ?? "(shared)"}`;
      tile.appendChild(tip);
      image.appendChild(tile);
    });
    card.appendChild(image);
    card.appendChild(
      el("div", { class: "glyph-caption" },
         group.run_ids.length === 1 ? group.run_ids[0] : `${group.run_ids.length} runs`),
    );
    card.title = group.run_ids.join(", ");
    card.addEventListener("click", () => callbacks.onSelectGroup(group.run_ids));
    list.appendChild(card);
  }
  container.appendChild(list);

  const legend = el("div", { class: "glyph-legend" });
  legend.appendChild(el("div", { class: "legend-title" }, "differing attributes"));
  for (const name of glyphs.diff_attributes) {
    const row = el("div", { class: "legend-row" });
    row.appendChild(el("span", { class: "legend-name" }, name));
    for (const value of schema.categorical[name] ?? []) {
      const chip = el("span", { class: "legend-chip" }, value);
      chip.style.background = valueColor(schema.categorical[name], value);
      row.appendChild(chip);
    }
    legend.appendChild(row);
  }
  if (!glyphs.diff_attributes.length) {
    legend.appendChild(el("div", { class: "legend-row" }, "all runs share every parameter"));
  }
  container.appendChild(legend);
}
