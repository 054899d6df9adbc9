// x0, y0, x1, y1 in meters
export type BBox = [number, number, number, number];

/**
 * Square single-channel image, row-major Float32Array of length grid*grid.
 * Row 0 is the bottom edge of the covered bbox, matching the raster layout
 * the street-map tooling produces (PNG files are flipped on save/load).
 */
export interface GridImage {
  grid: number;
  data: Float32Array;
}

/** Multi-channel street-map raster: one binary channel per road class. */
export interface MapImage {
  grid: number;
  channels: Float32Array[];
  bbox: BBox;
}

export interface Trajectory {
  t: number[];
  xy: Array<[number, number]>;
}

export interface SpeedModel {
  vMin: number;
  vMax: number;
}
