import { clear, svg, el } from "./dom";
import { calibrateGain, traceFilament } from "./filament";
import { runColor } from "./colors";
import type { FilamentSeries } from "./types";

const WIDTH = 460;
const HEIGHT = 260;

export interface FilamentCallbacks {
  onSelectRun(runId: string): void;
}

/**
 * Filament plot: every run's series emanates from a common root and proceeds
 * left to right, one dot per timestep; segment curvature encodes the relative
 * change (upward turns for increases). Selected runs are highlighted, runs
 * outside the active filter are dimmed.
 */
export function renderFilamentPanel(
  container: Element,
  series: FilamentSeries,
  matching: Set<string> | null,
  selected: string[],
  callbacks: FilamentCallbacks,
): void {
  clear(container);
  const runIds = Object.keys(series).sort();
  const gain = calibrateGain(
    runIds.flatMap((rid) => series[rid].map((row) => row[2])),
  );

  const traces = runIds.map((rid) => traceFilament(series[rid], gain));
  const maxX = Math.max(1, ...traces.flat().map((p) => p.x));
  const spanY = Math.max(1, ...traces.flat().map((p) => Math.abs(p.y)));
  const sx = (WIDTH - 40) / maxX;
  const sy = (HEIGHT / 2 - 20) / spanY;

  const image = svg("svg", {
    width: String(WIDTH),
    height: String(HEIGHT),
    class: "filaments",
    role: "img",
  });
  const origin = { x: 20, y: HEIGHT / 2 };

  runIds.forEach((rid, i) => {
    const pts = traces[i].map((p) => ({
      x: origin.x + p.x * sx,
      y: origin.y - p.y * sy, // screen y grows downward; upward turn = increase
      time: p.time,
      value: p.value,
    }));
    const isSelected = selected.includes(rid);
    const isMatch = matching === null || matching.has(rid);
    const path = svg("path", {
      d: pts.map((p, j) => `${j ? "L" : "M"}${p.x.toFixed(2)},${p.y.toFixed(2)}`).join(""),
      fill: "none",
      stroke: isSelected ? runColor(i) : isMatch ? "#667" : "#ccd",
      "stroke-width": isSelected ? "2.5" : "1.2",
      opacity: isMatch ? "1" : "0.35",
      "data-run": rid,
      class: "filament" + (isSelected ? " selected" : ""),
    });
    const tip = svg("title");
    tip.textContent = rid;
    path.appendChild(tip);
    path.addEventListener("click", () => callbacks.onSelectRun(rid));
    image.appendChild(path);
    for (const p of pts) {
      const dot = svg("circle", {
        cx: p.x.toFixed(2),
        cy: p.y.toFixed(2),
        r: isSelected ? "3" : "1.8",
        fill: isSelected ? runColor(i) : "#99a",
        opacity: isMatch ? "1" : "0.35",
        "data-run": rid,
        "data-time": String(p.time),
      });
      const dotTip = svg("title");
      dotTip.textContent = `${rid} t=${p.time}: ${p.value.toPrecision(5)}`;
      dot.appendChild(dotTip);
      image.appendChild(dot);
    }
  });

  container.appendChild(image);
  container.appendChild(el("div", { class: "panel-note" },
    "curvature ∝ relative change; upward = increase"));
}
