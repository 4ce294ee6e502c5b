/** Categorical palette for parameter values; gray marks ensemble-shared values. */

export const SHARED_TILE = "#b9b9b9";

const PALETTE = [
  "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
  "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
  "#86bcb6", "#d37295", "#fabfd2", "#b6992d", "#499894",
];

/** Stable color per (attribute, value): indexed within the attribute's values. */
export function valueColor(values: string[], value: string): string {
  const i = values.indexOf(value);
  return PALETTE[(i >= 0 ? i : values.length) % PALETTE.length];
}

export function runColor(index: number): string {
  return PALETTE[index % PALETTE.length];
}
