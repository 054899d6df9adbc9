/**
 * Joint map/trajectory augmentation: one dihedral-group element (rotation by
 * a multiple of 90 degrees, optionally composed with a horizontal mirror)
 * applied identically to every map channel and the trajectory image, so the
 * on-street relationship is untouched.
 */

import type { Rng } from './rng.js';

export interface AugmentDraw {
  quarterTurns: number; // 0..3, counterclockwise
  flip: boolean; // horizontal mirror, applied before the rotation
}

export function drawAugment(rng: Rng): AugmentDraw {
  return { quarterTurns: rng.int(4), flip: rng.next() < 0.5 };
}

function rot90(img: Float32Array, grid: number): Float32Array {
  const out = new Float32Array(grid * grid);
  for (let r = 0; r < grid; r++) {
    for (let c = 0; c < grid; c++) out[c * grid + (grid - 1 - r)] = img[r * grid + c];
  }
  return out;
}

function mirror(img: Float32Array, grid: number): Float32Array {
  const out = new Float32Array(grid * grid);
  for (let r = 0; r < grid; r++) {
    for (let c = 0; c < grid; c++) out[r * grid + (grid - 1 - c)] = img[r * grid + c];
  }
  return out;
}

export function applyTransform(img: Float32Array, grid: number, d: AugmentDraw): Float32Array {
  let out = d.flip ? mirror(img, grid) : img.slice();
  for (let k = 0; k < d.quarterTurns; k++) out = rot90(out, grid);
  return out;
}

export function augment(
  mapChannels: Float32Array[],
  traj: Float32Array,
  grid: number,
  rng: Rng,
): { map: Float32Array[]; traj: Float32Array; draw: AugmentDraw } {
  const draw = drawAugment(rng);
  return {
    map: mapChannels.map((ch) => applyTransform(ch, grid, draw)),
    traj: applyTransform(traj, grid, draw),
    draw,
  };
}
