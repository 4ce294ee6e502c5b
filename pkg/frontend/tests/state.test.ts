import { describe, expect, it } from "vitest";
import { DEFAULT_STATE, ViewState, decodeState, encodeState } from "../src/state";

describe("view state codec", () => {
  it("round-trips the default state", () => {
    expect(decodeState(encodeState(DEFAULT_STATE))).toEqual(DEFAULT_STATE);
  });

  it("round-trips a fully populated state", () => {
    const state: ViewState = {
      filters: {
        categorical: { engine_streams: "two-stream", grid_resolution: "coarse" },
        numeric: { mean_temperature: { lo: 210.5, hi: null }, ice_count: { lo: null, hi: 900 } },
      },
      selectedRuns: ["R001", "R104"],
      timesteps: [3, 7],
      volumeAttribute: "group",
      shader: "emission",
      filamentAttribute: "total_mass",
      similarityMode: "hausdorff",
      hovered: null,
    };
    expect(decodeState(encodeState(state))).toEqual(state);
  });

  it("caps selected runs at two", () => {
    const state = { ...DEFAULT_STATE, selectedRuns: ["A", "B", "C"] };
    expect(decodeState(encodeState(state)).selectedRuns).toEqual(["A", "B"]);
  });

  it("ignores junk fragments", () => {
    expect(decodeState("#nonsense=42&t=zz")).toEqual(DEFAULT_STATE);
    expect(decodeState("")).toEqual(DEFAULT_STATE);
  });

  it("tolerates a leading hash", () => {
    const fragment = "#" + encodeState({ ...DEFAULT_STATE, selectedRuns: ["X"] });
    expect(decodeState(fragment).selectedRuns).toEqual(["X"]);
  });
});
