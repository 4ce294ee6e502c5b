// @vitest-environment jsdom
//
// End-to-end: generate a narrow + wide fixture ensemble through the primary
// CLI, preprocess it, boot the real HTTP service, and drive the full app
// against it inside jsdom. WebGL is unavailable here, so the 3D panels run
// their data fallback; the wide-vs-narrow assertion reads the grid headers,
// which is exactly what it is specified against.
import { execFileSync, spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { App } from "../src/app";
import { encodeState, decodeState } from "../src/state";
import { nodeTooltip } from "../src/trackingView";
import { gridExtents } from "../src/gridFormat";

const PYTHON = process.env.CONTRAILSCOPE_PYTHON ?? "python3";

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = createServer();
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address && typeof address === "object") {
        const port = address.port;
        server.close(() => resolve(port));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

const FIXTURE_CONFIG = {
  seed: 777,
  runs: [
    {
      run_id: "NARROW1",
      params: { engine_streams: "two-stream", grid_resolution: "coarse" },
      exhaust: [580.0, 1300.0],
      ambient: [215.0, 2.0],
      timesteps: 3,
      particles_per_step: 1200,
      n_blobs: 2,
      shape_family: "narrow",
    },
    {
      run_id: "WIDE1",
      params: { engine_streams: "single-stream", grid_resolution: "coarse" },
      exhaust: [580.0, 1300.0],
      ambient: [218.0, 2.5],
      timesteps: 3,
      particles_per_step: 1500,
      n_blobs: 3,
      shape_family: "wide",
    },
  ],
};

let workdir: string;
let service: ChildProcess | null = null;
let baseUrl: string;

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "contrailscope-ui-"));
  const configPath = join(workdir, "config.json");
  writeFileSync(configPath, JSON.stringify(FIXTURE_CONFIG));
  execFileSync(PYTHON, ["-m", "contrailscope.cli", "generate",
    "--config", configPath, "--out", join(workdir, "ens")], { stdio: "pipe" });
  execFileSync(PYTHON, ["-m", "contrailscope.cli", "preprocess",
    "--ensemble", join(workdir, "ens"), "--out", join(workdir, "bundle"),
    "--workers", "1"], { stdio: "pipe" });

  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}/api/v1`;
  service = spawn(PYTHON, ["-m", "contrailscope.cli", "serve",
    "--bundle", join(workdir, "bundle"), "--bind", `127.0.0.1:${port}`],
    { stdio: "ignore" });

  const deadline = Date.now() + 60_000;
  for (;;) {
    try {
      const r = await fetch(baseUrl + "/runs");
      if (r.ok) break;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
});

afterAll(() => {
  service?.kill();
  if (workdir) rmSync(workdir, { recursive: true, force: true });
});

function freshApp(): App {
  document.body.innerHTML = '<div id="banners"></div><div id="app"></div>';
  const root = document.getElementById("app") as HTMLElement;
  return new App(root, new ApiClient(baseUrl));
}

describe("end-to-end against the live service", () => {
  it("renders all five panels without console errors", async () => {
    const errors = vi.spyOn(console, "error").mockImplementation(() => {});
    const app = freshApp();
    await app.init();

    expect(app.root.querySelectorAll("#glyph-panel .glyph-card").length).toBeGreaterThan(0);
    expect(app.root.querySelectorAll("#filament-panel path.filament").length).toBe(2);
    expect(app.root.querySelectorAll("#volume-panel canvas").length).toBe(2);
    expect(app.root.querySelectorAll("#tracking-panel circle.tracking-node").length)
      .toBeGreaterThan(0);
    expect(app.root.querySelectorAll("#shapes-panel .kiviat").length).toBeGreaterThan(0);
    expect(document.querySelectorAll("#banners .banner").length).toBe(0);
    expect(errors).not.toHaveBeenCalled();
    errors.mockRestore();
  });

  it("round-trips panel state through the URL fragment", async () => {
    const app = freshApp();
    await app.init();
    await app.update((s) => {
      s.selectedRuns = ["WIDE1", "NARROW1"];
      s.timesteps = [2, 1];
      s.volumeAttribute = "group";
      s.shader = "emission";
      s.filamentAttribute = "total_mass";
      s.similarityMode = "parameters";
      s.filters = { categorical: { engine_streams: "two-stream" }, numeric: {} };
    });
    const fragment = encodeState(app.state);
    expect(location.hash.replace(/^#/, "")).toBe(fragment);

    const reloaded = freshApp();
    await reloaded.init(decodeState(fragment));
    expect(reloaded.state).toEqual(app.state);
    expect(reloaded.root.querySelector("#volume-panel .attr-pick") as HTMLSelectElement)
      .toBeTruthy();
    expect((reloaded.root.querySelector(".attr-pick") as HTMLSelectElement).value).toBe("group");
  });

  it("tracking tooltips show the five contracted fields", async () => {
    const app = freshApp();
    await app.init(decodeState(""));
    const title = app.root.querySelector("#tracking-panel circle.tracking-node title");
    expect(title).toBeTruthy();
    const text = title!.textContent ?? "";
    for (const field of ["group id:", "mean temperature:", "ice particles:", "mass:", "length:"]) {
      expect(text).toContain(field);
    }
    const graph = await app.api.tracking(app.state.selectedRuns[0]);
    expect(nodeTooltip(graph.nodes[0]).split("\n")).toHaveLength(5);
  });

  it("side-by-side 3D of narrow vs wide shows grid y-extent ratio >= 2", async () => {
    const app = freshApp();
    await app.init(decodeState(""));
    await app.update((s) => {
      s.selectedRuns = ["NARROW1", "WIDE1"];
      s.timesteps = [2, 2];
      s.volumeAttribute = "ice_label";
    });
    const narrow = app.volumePanels[0].lastGrid;
    const wide = app.volumePanels[1].lastGrid;
    expect(narrow && wide).toBeTruthy();
    const narrowY = gridExtents(narrow!.header)[1];
    const wideY = gridExtents(wide!.header)[1];
    expect(wideY / narrowY).toBeGreaterThanOrEqual(2);
    // the fallback info line carries the same numbers for the analyst
    const infos = [...app.root.querySelectorAll(".volume-info")];
    expect(infos.some((n) => n.textContent?.includes("ice_label"))).toBe(true);
  });

  it("filtering narrows the highlighted member set across panels", async () => {
    const app = freshApp();
    await app.init(decodeState(""));
    await app.update((s) => {
      s.filters = { categorical: { engine_streams: "two-stream" }, numeric: {} };
    });
    await app.evaluateFilter();
    expect([...(app.matching ?? [])]).toEqual(["NARROW1"]);
    const dimmed = app.root.querySelectorAll("#glyph-panel .glyph-card.filtered-out");
    expect(dimmed.length).toBeGreaterThan(0);
  });
});
