/**
 * Rasterization to and from the grid-image form: street graphs to map
 * channels, trajectory polylines to single-channel images, and loading the
 * per-channel PNG rasters the map tooling saves.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import { decodeGrayPng } from './png.js';
import type { BBox, MapImage } from './types.js';

export interface StreetGraph {
  nodes: Array<[number, number]>;
  edges: Array<[number, number, number]>; // node a, node b, road class
}

export const ROAD_CLASS_COUNT = 3;

export function loadStreetGraph(file: string): StreetGraph {
  const doc = JSON.parse(fs.readFileSync(file, 'utf-8'));
  if (!Array.isArray(doc.nodes) || !Array.isArray(doc.edges)) {
    throw new Error(`${file} is not a street graph (missing nodes/edges)`);
  }
  return { nodes: doc.nodes, edges: doc.edges };
}

function markSegment(
  data: Float32Array,
  grid: number,
  bbox: BBox,
  ax: number,
  ay: number,
  bx: number,
  by: number,
): void {
  const [x0, y0, x1, y1] = bbox;
  const cw = (x1 - x0) / grid;
  const ch = (y1 - y0) / grid;
  const length = Math.hypot(bx - ax, by - ay);
  // sample at quarter-cell spacing so no crossed cell is skipped
  const nSteps = Math.max(2, Math.floor(length / (Math.min(cw, ch) / 4.0)) + 1);
  for (let k = 0; k < nSteps; k++) {
    const s = k / (nSteps - 1);
    const px = ax + (bx - ax) * s;
    const py = ay + (by - ay) * s;
    const col = Math.min(grid - 1, Math.max(0, Math.floor((px - x0) / cw)));
    const row = Math.min(grid - 1, Math.max(0, Math.floor((py - y0) / ch)));
    data[row * grid + col] = 1;
  }
}

/** One binary channel per road class; a cell is 1 if any class-c edge crosses it. */
export function rasterizeGraph(
  g: StreetGraph,
  bbox: BBox,
  grid: number,
  nClasses: number = ROAD_CLASS_COUNT,
): Float32Array[] {
  const channels: Float32Array[] = [];
  for (let c = 0; c < nClasses; c++) channels.push(new Float32Array(grid * grid));
  for (const [a, b, c] of g.edges) {
    if (c < 0 || c >= nClasses) throw new Error(`road class ${c} out of range`);
    const [ax, ay] = g.nodes[a];
    const [bx, by] = g.nodes[b];
    markSegment(channels[c], grid, bbox, ax, ay, bx, by);
  }
  return channels;
}

export function rasterizeTrajectory(
  xy: Array<[number, number]>,
  bbox: BBox,
  grid: number,
): Float32Array {
  const data = new Float32Array(grid * grid);
  if (xy.length === 1) {
    markSegment(data, grid, bbox, xy[0][0], xy[0][1], xy[0][0], xy[0][1]);
    return data;
  }
  for (let i = 0; i + 1 < xy.length; i++) {
    markSegment(data, grid, bbox, xy[i][0], xy[i][1], xy[i + 1][0], xy[i + 1][1]);
  }
  return data;
}

export function unionMask(channels: Float32Array[]): Float32Array {
  const out = new Float32Array(channels[0].length);
  for (const ch of channels) {
    for (let i = 0; i < ch.length; i++) if (ch[i] > 0) out[i] = 1;
  }
  return out;
}

/** Nearest-neighbor upscale by an integer factor (e.g. 48 -> 192 for export). */
export function upsample(img: Float32Array, grid: number, factor: number): Float32Array {
  if (!Number.isInteger(factor) || factor < 1) throw new RangeError(`bad upsample factor ${factor}`);
  const g2 = grid * factor;
  const out = new Float32Array(g2 * g2);
  for (let r = 0; r < g2; r++) {
    const sr = Math.floor(r / factor);
    for (let c = 0; c < g2; c++) out[r * g2 + c] = img[sr * grid + Math.floor(c / factor)];
  }
  return out;
}

/** Max-pool downscale by an integer factor; keeps thin street lines present. */
export function downsampleMax(img: Float32Array, grid: number, factor: number): Float32Array {
  if (grid % factor !== 0) throw new RangeError(`grid ${grid} not divisible by ${factor}`);
  const g2 = grid / factor;
  const out = new Float32Array(g2 * g2);
  for (let r = 0; r < grid; r++) {
    const tr = Math.floor(r / factor);
    for (let c = 0; c < grid; c++) {
      const i = tr * g2 + Math.floor(c / factor);
      if (img[r * grid + c] > out[i]) out[i] = img[r * grid + c];
    }
  }
  return out;
}

/**
 * Load a `<prefix>_raster.json` + `<prefix>_c<k>.png` channel set. PNG row 0
 * is the top of the bbox; grid row 0 is the bottom, so rows are flipped here.
 * `targetGrid`, when given, max-pools each channel down to that size.
 */
export function loadMapRaster(prefix: string, targetGrid?: number): MapImage {
  const dir = path.dirname(prefix);
  const name = path.basename(prefix);
  const meta = JSON.parse(fs.readFileSync(path.join(dir, `${name}_raster.json`), 'utf-8'));
  const grid: number = meta.grid;
  const bbox = meta.bbox as BBox;
  const channels: Float32Array[] = [];
  for (let k = 0; k < meta.channels; k++) {
    const png = decodeGrayPng(fs.readFileSync(path.join(dir, `${name}_c${k}.png`)));
    if (png.width !== grid || png.height !== grid) {
      throw new Error(`channel ${k} is ${png.width}x${png.height}, expected ${grid}`);
    }
    const data = new Float32Array(grid * grid);
    for (let r = 0; r < grid; r++) {
      for (let c = 0; c < grid; c++) {
        data[(grid - 1 - r) * grid + c] = png.data[r * grid + c] >= 128 ? 1 : 0;
      }
    }
    channels.push(data);
  }
  if (targetGrid !== undefined && targetGrid !== grid) {
    if (grid % targetGrid !== 0) throw new RangeError(`cannot reduce grid ${grid} to ${targetGrid}`);
    const factor = grid / targetGrid;
    return { grid: targetGrid, channels: channels.map((c) => downsampleMax(c, grid, factor)), bbox };
  }
  return { grid, channels, bbox };
}
