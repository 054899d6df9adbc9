/**
 * Edit distance on real sequences, matching the simulator's definition:
 * unit insert/delete/substitute cost, points strictly closer than the match
 * radius treated as equal.
 */

import type { Trajectory } from './types.js';

export const EDR_MATCH_RADIUS = 20.0;

export function edr(a: Trajectory, b: Trajectory, matchRadius: number = EDR_MATCH_RADIUS): number {
  const n = a.xy.length;
  const m = b.xy.length;
  if (n === 0 || m === 0) return Math.max(n, m);
  let prev = new Float64Array(m + 1);
  let cur = new Float64Array(m + 1);
  for (let j = 0; j <= m; j++) prev[j] = j;
  for (let i = 1; i <= n; i++) {
    cur[0] = i;
    const [ax, ay] = a.xy[i - 1];
    for (let j = 1; j <= m; j++) {
      const [bx, by] = b.xy[j - 1];
      const close = Math.hypot(ax - bx, ay - by) < matchRadius;
      const sub = prev[j - 1] + (close ? 0 : 1);
      cur[j] = Math.min(sub, prev[j] + 1, cur[j - 1] + 1);
    }
    [prev, cur] = [cur, prev];
  }
  return prev[m];
}

/** Mean over `generated` of the minimum EDR against any reference trajectory. */
export function minMatchEdr(
  generated: Trajectory[],
  references: Trajectory[],
  matchRadius: number = EDR_MATCH_RADIUS,
): number {
  if (generated.length === 0) throw new Error('no generated trajectories to score');
  if (references.length === 0) throw new Error('no reference trajectories to score against');
  let total = 0;
  for (const g of generated) {
    let best = Infinity;
    for (const ref of references) best = Math.min(best, edr(g, ref, matchRadius));
    total += best;
  }
  return total / generated.length;
}
