/**
 * Filament plot geometry. Each run is one polyline emanating from a shared
 * root, marching left to right with one segment per timestep; the segment
 * direction rotates from the previous direction by an angle proportional to
 * the relative change of the attribute, upward for increases and downward
 * for decreases, clamped to +-45 degrees. The gain is calibrated so the
 * ensemble's 90th-percentile |relative change| maps to 30 degrees.
 */

export const MAX_TURN_DEG = 45;
export const CALIBRATION_DEG = 30;

export interface FilamentPoint {
  x: number;
  y: number;
  time: number;
  value: number;
}

export function percentile(sorted: number[], q: number): number {
  if (sorted.length === 0) return 0;
  const pos = q * (sorted.length - 1);
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  const frac = pos - lo;
  return sorted[lo] * (1 - frac) + sorted[hi] * frac;
}

/** Degrees per unit relative change, from the ensemble's change magnitudes. */
export function calibrateGain(allChanges: number[]): number {
  const magnitudes = allChanges.map(Math.abs).filter((m) => m > 0).sort((a, b) => a - b);
  const p90 = percentile(magnitudes, 0.9);
  if (p90 <= 0) return 0;
  return CALIBRATION_DEG / p90;
}

export function turnAngleDeg(relativeChange: number, gainDegPerUnit: number): number {
  const angle = gainDegPerUnit * relativeChange;
  return Math.max(-MAX_TURN_DEG, Math.min(MAX_TURN_DEG, angle));
}

/**
 * Trace one run's filament. series rows are [time, value, relative_change];
 * all filaments share the root (0, 0) and a unit segment length.
 */
export function traceFilament(
  series: [number, number, number][],
  gainDegPerUnit: number,
  segment = 1.0,
): FilamentPoint[] {
  const pts: FilamentPoint[] = [];
  let x = 0;
  let y = 0;
  let headingDeg = 0; // 0 = due right; positive = upward (screen y flipped by the view)
  for (const [time, value, change] of series) {
    if (pts.length === 0) {
      pts.push({ x, y, time, value });
      continue;
    }
    headingDeg += turnAngleDeg(change, gainDegPerUnit);
    const rad = (headingDeg * Math.PI) / 180;
    x += segment * Math.cos(rad);
    y += segment * Math.sin(rad);
    pts.push({ x, y, time, value });
  }
  return pts;
}
