/**
 * Training corpus assembly: pair each street map with the trajectory images
 * drawn on it, all rasterized at the working grid.
 */

import * as fs from 'node:fs';

import { loadStreetGraph, rasterizeGraph, rasterizeTrajectory, type StreetGraph } from './raster.js';
import { loadTraces } from './traces.js';
import type { BBox, Trajectory } from './types.js';

export interface MapEntry {
  /** one mask per road class, [grid*grid] each */
  mapChannels: Float32Array[];
  /** one binary image per observed trajectory */
  trajImages: Float32Array[];
  bbox: BBox;
}

export interface Corpus {
  grid: number;
  entries: MapEntry[];
}

export function graphBBox(g: StreetGraph): BBox {
  if (g.nodes.length === 0) throw new Error('street graph has no nodes');
  let x0 = Infinity;
  let y0 = Infinity;
  let x1 = -Infinity;
  let y1 = -Infinity;
  for (const [x, y] of g.nodes) {
    if (x < x0) x0 = x;
    if (y < y0) y0 = y;
    if (x > x1) x1 = x;
    if (y > y1) y1 = y;
  }
  return [x0, y0, x1, y1];
}

export function buildMapEntry(
  graphPath: string,
  tracePath: string | null,
  grid: number,
): MapEntry {
  const g = loadStreetGraph(graphPath);
  const bbox = graphBBox(g);
  const mapChannels = rasterizeGraph(g, bbox, grid);
  const trajImages: Float32Array[] = [];
  if (tracePath !== null) {
    for (const traj of loadTraces(tracePath)) {
      trajImages.push(rasterizeTrajectory(traj.xy, bbox, grid));
    }
  }
  return { mapChannels, trajImages, bbox };
}

/**
 * Load a corpus from parallel lists of graph JSON paths and trace CSV paths.
 * Lists must be the same length; entry i pairs graphs[i] with traces[i].
 */
export function loadCorpus(graphPaths: string[], tracePaths: string[], grid: number): Corpus {
  if (graphPaths.length !== tracePaths.length) {
    throw new Error(
      `got ${graphPaths.length} graphs but ${tracePaths.length} trace files`,
    );
  }
  if (graphPaths.length === 0) throw new Error('empty corpus');
  const entries = graphPaths.map((gp, i) => buildMapEntry(gp, tracePaths[i], grid));
  for (const [i, e] of entries.entries()) {
    if (e.trajImages.length === 0) {
      throw new Error(`${tracePaths[i]}: no trajectories`);
    }
  }
  return { grid, entries };
}

/** Expand a comma-separated list or a directory into sorted file paths. */
export function resolvePathList(arg: string, suffix: string): string[] {
  if (fs.existsSync(arg) && fs.statSync(arg).isDirectory()) {
    return fs
      .readdirSync(arg)
      .filter((f) => f.endsWith(suffix))
      .sort()
      .map((f) => `${arg}/${f}`);
  }
  return arg.split(',').map((s) => s.trim()).filter((s) => s.length > 0);
}

export type { Trajectory };
