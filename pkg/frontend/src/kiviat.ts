/**
 * Kiviat (radar) diagrams of contrail attributes. Axes are normalized by the
 * ensemble min-max per attribute so polygons are comparable across members.
 */

export const KIVIAT_AXES = [
  "mean_temperature",
  "total_area",
  "total_length",
  "total_mass",
  "total_particles",
] as const;

export type KiviatAxis = (typeof KIVIAT_AXES)[number];

export type KiviatValues = Record<KiviatAxis, number>;

export interface KiviatNormalizer {
  lo: KiviatValues;
  hi: KiviatValues;
}

export function buildNormalizer(members: KiviatValues[]): KiviatNormalizer {
  const lo = {} as KiviatValues;
  const hi = {} as KiviatValues;
  for (const axis of KIVIAT_AXES) {
    const vals = members.map((m) => m[axis]);
    lo[axis] = Math.min(...vals);
    hi[axis] = Math.max(...vals);
  }
  return { lo, hi };
}

export function normalize(values: KiviatValues, norm: KiviatNormalizer): number[] {
  return KIVIAT_AXES.map((axis) => {
    const span = norm.hi[axis] - norm.lo[axis];
    if (span <= 0) return 0.5; // constant axis: park everyone mid-scale
    const z = (values[axis] - norm.lo[axis]) / span;
    return Math.max(0, Math.min(1, z));
  });
}

/** Polygon vertices on a radius-r star, one spoke per axis, first spoke up. */
export function polygonPoints(normalized: number[], r: number, cx = 0, cy = 0): [number, number][] {
  const n = normalized.length;
  return normalized.map((v, i) => {
    const angle = -Math.PI / 2 + (2 * Math.PI * i) / n;
    return [cx + r * v * Math.cos(angle), cy + r * v * Math.sin(angle)];
  });
}
