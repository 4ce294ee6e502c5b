import { clear, el, svg } from "./dom";
import type { TrackingGraph, TrackingNode } from "./types";

const COL_W = 86;
const ROW_H = 52;
const MARGIN = 36;
const MAX_R = 18;
const MIN_R = 3;

/** Hover tooltip body: the five contracted fields. */
export function nodeTooltip(node: TrackingNode): string {
  return [
    `group id: ${node.group_id}`,
    `mean temperature: ${node.mean_temperature.toFixed(2)} K`,
    `ice particles: ${node.count}`,
    `mass: ${node.mass.toExponential(3)} kg`,
    `length: ${node.length.toFixed(3)} m`,
  ].join("\n");
}

/**
 * Contrail evolution view: the persisted (column, row) layout left to right,
 * one column per timestep, node radius scaled by particle count, links for
 * particle-overlap continuations (merges and splits fan in/out).
 */
export function renderTrackingPanel(
  container: Element,
  graph: TrackingGraph,
  onHover?: (node: TrackingNode | null) => void,
): void {
  clear(container);
  if (!graph.nodes.length) {
    container.appendChild(el("div", { class: "panel-note" }, "no groups tracked"));
    return;
  }
  const nCols = Math.max(...graph.nodes.map((n) => n.column)) + 1;
  const nRows = Math.max(...graph.nodes.map((n) => n.row)) + 1;
  const image = svg("svg", {
    width: String(nCols * COL_W + MARGIN * 2),
    height: String(nRows * ROW_H + MARGIN * 2),
    class: "tracking",
    role: "img",
  });

  const pos = new Map(graph.nodes.map((n) => [
    n.id,
    { x: MARGIN + n.column * COL_W + COL_W / 2, y: MARGIN + n.row * ROW_H + ROW_H / 2 },
  ]));

  for (const edge of graph.edges) {
    const a = pos.get(edge.from);
    const b = pos.get(edge.to);
    if (!a || !b) continue;
    image.appendChild(svg("line", {
      x1: String(a.x), y1: String(a.y), x2: String(b.x), y2: String(b.y),
      stroke: edge.approximate ? "#c99" : "#9ab",
      "stroke-width": String(1 + 3 * edge.overlap_fraction),
      "stroke-dasharray": edge.approximate ? "4 3" : "",
      opacity: "0.8",
    }));
  }

  const times = [...new Set(graph.nodes.map((n) => n.time))].sort((x, y) => x - y);
  times.forEach((t, i) => {
    const label = svg("text", {
      x: String(MARGIN + i * COL_W + COL_W / 2),
      y: String(MARGIN - 16),
      "text-anchor": "middle",
      class: "axis-label",
    });
    label.textContent = `t=${t}`;
    image.appendChild(label);
  });

  for (const node of graph.nodes) {
    const p = pos.get(node.id)!;
    const r = MIN_R + (MAX_R - MIN_R) * Math.sqrt(Math.max(0, Math.min(1, node.radius_hint)));
    const circle = svg("circle", {
      cx: String(p.x), cy: String(p.y), r: r.toFixed(1),
      fill: "#4e79a7", stroke: "#26415e", "stroke-width": "1",
      class: "tracking-node",
      "data-node": node.id,
    });
    const tip = svg("title");
    tip.textContent = nodeTooltip(node);
    circle.appendChild(tip);
    if (onHover) {
      circle.addEventListener("mouseenter", () => onHover(node));
      circle.addEventListener("mouseleave", () => onHover(null));
    }
    image.appendChild(circle);
  }

  container.appendChild(image);
}
