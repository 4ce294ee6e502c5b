import { clear, el, svg } from "./dom";
import { KIVIAT_AXES, KiviatValues, buildNormalizer, normalize, polygonPoints } from "./kiviat";
import { runColor } from "./colors";
import type { NeighborList, ShapeRecord, Summary } from "./types";

const SHAPE_W = 220;
const SHAPE_H = 130;
const KIVIAT_R = 42;

export interface MemberShape {
  runId: string;
  shape: ShapeRecord | null;
  finalSummary: Summary | null;
}

export function kiviatValues(member: MemberShape): KiviatValues {
  const chars = member.shape?.characteristics;
  const s = member.finalSummary;
  return {
    mean_temperature: s?.mean_temperature ?? 0,
    total_area: chars?.area ?? 0,
    total_length: chars?.length ?? 0,
    total_mass: s?.total_mass ?? 0,
    total_particles: s?.ice_count ?? 0,
  };
}

function shapeThumb(member: MemberShape, highlight: boolean, color: string): Element {
  const card = el("div", { class: "shape-card" + (highlight ? " selected" : "") });
  card.appendChild(el("div", { class: "shape-caption" }, member.runId));
  const image = svg("svg", {
    width: String(SHAPE_W), height: String(SHAPE_H),
    class: "shape-outline", role: "img", "data-run": member.runId,
  });
  const boundary = member.shape?.boundary;
  if (boundary && boundary.length >= 3) {
    const xs = boundary.map((p) => p[0]);
    const ys = boundary.map((p) => p[1]);
    const lo = [Math.min(...xs), Math.min(...ys)];
    const hi = [Math.max(...xs), Math.max(...ys)];
    const scale = Math.min(
      (SHAPE_W - 16) / Math.max(hi[0] - lo[0], 1e-9),
      (SHAPE_H - 16) / Math.max(hi[1] - lo[1], 1e-9),
    );
    const path = boundary
      .map((p, i) => {
        const x = 8 + (p[0] - lo[0]) * scale;
        const y = SHAPE_H - 8 - (p[1] - lo[1]) * scale;
        return `${i ? "L" : "M"}${x.toFixed(1)},${y.toFixed(1)}`;
      })
      .join("") + "Z";
    image.appendChild(svg("path", {
      d: path, fill: color, "fill-opacity": "0.25", stroke: color, "stroke-width": "1.5",
    }));
  } else {
    const note = svg("text", { x: "10", y: "22", class: "axis-label" });
    note.textContent = member.shape?.no_shape ?? "no shape";
    image.appendChild(note);
  }
  card.appendChild(image);
  return card;
}

function kiviatThumb(member: MemberShape, values: number[], color: string): Element {
  const card = el("div", { class: "kiviat-card" });
  const size = KIVIAT_R * 2 + 18;
  const image = svg("svg", {
    width: String(size), height: String(size), class: "kiviat", "data-run": member.runId,
  });
  const cx = size / 2;
  const cy = size / 2;
  for (const frac of [0.33, 0.66, 1.0]) {
    image.appendChild(svg("circle", {
      cx: String(cx), cy: String(cy), r: String(KIVIAT_R * frac),
      fill: "none", stroke: "#dde", "stroke-width": "0.7",
    }));
  }
  const pts = polygonPoints(values, KIVIAT_R, cx, cy);
  image.appendChild(svg("polygon", {
    points: pts.map(([x, y]) => `${x.toFixed(1)},${y.toFixed(1)}`).join(" "),
    fill: color, "fill-opacity": "0.35", stroke: color, "stroke-width": "1.5",
  }));
  const tipLines = KIVIAT_AXES.map((axis, i) => {
    const raw = kiviatValues(member)[axis];
    return `${axis}: ${Number.isFinite(raw) ? raw.toPrecision(5) : "n/a"} (${values[i].toFixed(2)})`;
  });
  const tip = svg("title");
  tip.textContent = `${member.runId}\n` + tipLines.join("\n");
  image.appendChild(tip);
  card.appendChild(image);
  card.appendChild(el("div", { class: "shape-caption" }, member.runId));
  return card;
}

/**
 * Similar-shape exploration view: the selected member's boundary polyline,
 * its neighbors' shapes, and Kiviat small multiples of the contrail
 * attributes normalized per ensemble min-max.
 */
export function renderShapesPanel(
  container: Element,
  selected: MemberShape,
  neighborList: NeighborList,
  members: MemberShape[],
): void {
  clear(container);
  container.appendChild(el("div", { class: "panel-note" },
    `${neighborList.mode} neighbors of ${selected.runId}`));

  const shapeRow = el("div", { class: "shape-row" });
  shapeRow.appendChild(shapeThumb(selected, true, runColor(0)));
  const byId = new Map(members.map((m) => [m.runId, m]));
  neighborList.neighbors.forEach(([rid], i) => {
    const member = byId.get(rid);
    if (member) shapeRow.appendChild(shapeThumb(member, false, runColor(i + 1)));
  });
  container.appendChild(shapeRow);

  const norm = buildNormalizer(members.map(kiviatValues));
  const kiviatRow = el("div", { class: "kiviat-row" });
  kiviatRow.appendChild(kiviatThumb(selected, normalize(kiviatValues(selected), norm), runColor(0)));
  neighborList.neighbors.forEach(([rid], i) => {
    const member = byId.get(rid);
    if (member) {
      kiviatRow.appendChild(kiviatThumb(member, normalize(kiviatValues(member), norm), runColor(i + 1)));
    }
  });
  container.appendChild(kiviatRow);

  const legend = el("div", { class: "panel-note" }, "axes: " + KIVIAT_AXES.join(" · "));
  container.appendChild(legend);
}
