/**
 * Image-to-sequence reconstruction: find an endpoint of the drawn curve,
 * walk the active pixel set to the far end, and place timestamps with one
 * constant speed per trajectory drawn from a speed window.
 */

import type { Rng } from './rng.js';
import type { BBox, SpeedModel, Trajectory } from './types.js';

export const ACTIVE_THRESHOLD = 0.5;

export function activePixels(img: Float32Array, grid: number): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  for (let r = 0; r < grid; r++) {
    for (let c = 0; c < grid; c++) if (img[r * grid + c] > ACTIVE_THRESHOLD) out.push([r, c]);
  }
  return out;
}

function neighborKeys(r: number, c: number, grid: number): number[] {
  // 4-adjacent first, diagonals after, each group in row-major order, so the
  // walk is deterministic and prefers straight continuation over corner cuts
  const orth: number[] = [];
  const diag: number[] = [];
  for (let dr = -1; dr <= 1; dr++) {
    for (let dc = -1; dc <= 1; dc++) {
      if (dr === 0 && dc === 0) continue;
      const rr = r + dr;
      const cc = c + dc;
      if (rr < 0 || rr >= grid || cc < 0 || cc >= grid) continue;
      (dr === 0 || dc === 0 ? orth : diag).push(rr * grid + cc);
    }
  }
  return orth.concat(diag);
}

/**
 * Reconstruct the pixel sequence of a single drawn curve. Endpoints are
 * active pixels with exactly one active 8-neighbor; the walk starts at the
 * row-major smallest endpoint, or the smallest active pixel when the curve
 * has none (a loop), and greedily follows unvisited active neighbors.
 */
export function tracePixels(img: Float32Array, grid: number): Array<[number, number]> {
  const active = new Set<number>();
  for (let i = 0; i < img.length; i++) if (img[i] > ACTIVE_THRESHOLD) active.add(i);
  if (active.size === 0) throw new Error('empty trajectory image: no active pixels');

  let start = -1;
  for (const key of active) {
    const r = Math.floor(key / grid);
    const c = key % grid;
    let deg = 0;
    for (const nk of neighborKeys(r, c, grid)) if (active.has(nk)) deg++;
    if (deg === 1 && (start === -1 || key < start)) start = key;
  }
  if (start === -1) start = Math.min(...active);

  const visited = new Set<number>([start]);
  const order: number[] = [start];
  let cur = start;
  for (;;) {
    const r = Math.floor(cur / grid);
    const c = cur % grid;
    let next = -1;
    for (const nk of neighborKeys(r, c, grid)) {
      if (active.has(nk) && !visited.has(nk)) {
        next = nk;
        break;
      }
    }
    if (next === -1) break;
    visited.add(next);
    order.push(next);
    cur = next;
  }
  return order.map((key) => [Math.floor(key / grid), key % grid]);
}

export function pixelCenter(row: number, col: number, bbox: BBox, grid: number): [number, number] {
  const [x0, y0, x1, y1] = bbox;
  return [x0 + ((col + 0.5) * (x1 - x0)) / grid, y0 + ((row + 0.5) * (y1 - y0)) / grid];
}

export function imageToSequence(
  img: Float32Array,
  grid: number,
  bbox: BBox,
  speed: SpeedModel,
  rng: Rng,
): Trajectory {
  const pixels = tracePixels(img, grid);
  const xy = pixels.map(([r, c]) => pixelCenter(r, c, bbox, grid));
  const v = rng.uniform(speed.vMin, speed.vMax);
  const t: number[] = [0];
  for (let i = 1; i < xy.length; i++) {
    const d = Math.hypot(xy[i][0] - xy[i - 1][0], xy[i][1] - xy[i - 1][1]);
    t.push(t[i - 1] + d / v);
  }
  return { t, xy };
}
