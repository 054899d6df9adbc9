import { describe, expect, it } from 'vitest';

import { activePixels, imageToSequence, tracePixels } from '../src/sequence.js';
import { Rng } from '../src/rng.js';
import type { BBox } from '../src/types.js';

const BBOX: BBox = [0, 0, 80, 80];

function lineImage(grid: number, cells: Array<[number, number]>): Float32Array {
  const img = new Float32Array(grid * grid);
  for (const [r, c] of cells) img[r * grid + c] = 1;
  return img;
}

describe('tracePixels', () => {
  it('orders three collinear pixels end to end', () => {
    const img = lineImage(8, [
      [2, 3],
      [2, 4],
      [2, 5],
    ]);
    expect(tracePixels(img, 8)).toEqual([
      [2, 3],
      [2, 4],
      [2, 5],
    ]);
  });

  it('visits every active pixel of an L-shaped curve exactly once', () => {
    const cells: Array<[number, number]> = [
      [1, 1],
      [2, 1],
      [3, 1],
      [3, 2],
      [3, 3],
    ];
    const order = tracePixels(lineImage(8, cells), 8);
    expect(order).toHaveLength(cells.length);
    const asKeys = order.map(([r, c]) => r * 8 + c).sort((a, b) => a - b);
    const want = cells.map(([r, c]) => r * 8 + c).sort((a, b) => a - b);
    expect(asKeys).toEqual(want);
    // consecutive pixels are 8-adjacent
    for (let i = 1; i < order.length; i++) {
      expect(Math.abs(order[i][0] - order[i - 1][0])).toBeLessThanOrEqual(1);
      expect(Math.abs(order[i][1] - order[i - 1][1])).toBeLessThanOrEqual(1);
    }
  });

  it('falls back to the smallest active pixel on a loop', () => {
    // 2x2 block: every pixel has 3 active neighbors, no endpoint exists
    const img = lineImage(6, [
      [2, 2],
      [2, 3],
      [3, 2],
      [3, 3],
    ]);
    const order = tracePixels(img, 6);
    expect(order[0]).toEqual([2, 2]);
    expect(order).toHaveLength(4);
  });

  it('throws on an image with no active pixels', () => {
    expect(() => tracePixels(new Float32Array(16), 4)).toThrow(/no active pixels/);
  });
});

describe('imageToSequence', () => {
  it('produces strictly increasing timestamps at one constant speed', () => {
    const img = lineImage(8, [
      [0, 0],
      [0, 1],
      [0, 2],
      [1, 3],
    ]);
    const rng = new Rng(4);
    const traj = imageToSequence(img, 8, BBOX, { vMin: 1.0, vMax: 1.0 }, rng);
    expect(traj.xy).toHaveLength(4);
    expect(traj.t[0]).toBe(0);
    for (let i = 1; i < traj.t.length; i++) {
      expect(traj.t[i]).toBeGreaterThan(traj.t[i - 1]);
      // with v=1 the time delta equals the distance
      const d = Math.hypot(
        traj.xy[i][0] - traj.xy[i - 1][0],
        traj.xy[i][1] - traj.xy[i - 1][1],
      );
      expect(traj.t[i] - traj.t[i - 1]).toBeCloseTo(d, 9);
    }
  });

  it('places points at pixel centers inside the bbox', () => {
    const img = lineImage(8, [
      [0, 0],
      [0, 1],
    ]);
    const traj = imageToSequence(img, 8, BBOX, { vMin: 0.5, vMax: 2.0 }, new Rng(1));
    // cell size is 10; centers at 5, 15, ...
    expect(traj.xy[0]).toEqual([5, 5]);
    expect(traj.xy[1]).toEqual([15, 5]);
  });

  it('draws the speed from the given window', () => {
    const img = lineImage(8, [
      [0, 0],
      [0, 1],
    ]);
    for (let seed = 0; seed < 10; seed++) {
      const traj = imageToSequence(img, 8, BBOX, { vMin: 0.5, vMax: 2.0 }, new Rng(seed));
      const v = 10 / traj.t[1]; // distance between adjacent centers is 10
      expect(v).toBeGreaterThanOrEqual(0.5);
      expect(v).toBeLessThanOrEqual(2.0);
    }
  });
});

describe('activePixels', () => {
  it('lists active cells in row-major order', () => {
    const img = lineImage(4, [
      [2, 1],
      [0, 3],
    ]);
    expect(activePixels(img, 4)).toEqual([
      [0, 3],
      [2, 1],
    ]);
  });
});
