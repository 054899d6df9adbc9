import * as tf from '@tensorflow/tfjs';
import { beforeAll, describe, expect, it } from 'vitest';

import {
  BINARY_THRESHOLD,
  blankMap,
  denoiseStepBatch,
  diffusionLoss,
  sample,
  stackMaps,
  trainingStep,
  type DenoiserLike,
  type TrainBatch,
} from '../src/diffusion.js';
import { alphaAt, gammaAt, makeSchedule } from '../src/schedule.js';
import { setupBackend } from '../src/backend.js';
import { Denoiser, type DenoiserPreset } from '../src/unet.js';
import { trainModel } from '../src/train.js';
import { Rng } from '../src/rng.js';
import type { Corpus } from '../src/dataset.js';

const GRID = 8;
const S = makeSchedule(10, 0.05, 0.3);

/** Test double that returns a fixed function of its inputs. */
function stub(fn: (m: tf.Tensor4D, lt: tf.Tensor4D, t: ArrayLike<number>) => tf.Tensor4D): DenoiserLike {
  return { forward: fn };
}

function makeBatch(seed: number, batch = 3): TrainBatch {
  const rng = new Rng(seed);
  const t: number[] = [];
  for (let i = 0; i < batch; i++) t.push(1 + rng.int(S.T));
  return {
    m: tf.tensor(rng.normals(batch * GRID * GRID * 2), [batch, GRID, GRID, 2]) as tf.Tensor4D,
    l0: tf.tensor(rng.normals(batch * GRID * GRID), [batch, GRID, GRID, 1]) as tf.Tensor4D,
    t,
    eps: tf.tensor(rng.normals(batch * GRID * GRID), [batch, GRID, GRID, 1]) as tf.Tensor4D,
  };
}

beforeAll(async () => {
  await setupBackend();
});

describe('diffusionLoss', () => {
  it('is zero when the network predicts the injected noise exactly', () => {
    const batch = makeBatch(1);
    const oracle = stub((_m, _lt, t) => {
      // reconstruct eps from lt via the closed-form marginal
      const n = t.length;
      const a = new Float32Array(n);
      const b = new Float32Array(n);
      for (let i = 0; i < n; i++) {
        const g = gammaAt(S, t[i]);
        a[i] = Math.sqrt(g);
        b[i] = Math.sqrt(1 - g);
      }
      const lt = tf.add(
        tf.mul(batch.l0, tf.tensor(a, [n, 1, 1, 1])),
        tf.mul(batch.eps, tf.tensor(b, [n, 1, 1, 1])),
      );
      return tf.div(tf.sub(lt, tf.mul(batch.l0, tf.tensor(a, [n, 1, 1, 1]))), tf.tensor(b, [n, 1, 1, 1])) as tf.Tensor4D;
    });
    const loss = diffusionLoss(oracle, batch, S).dataSync()[0];
    expect(loss).toBeLessThan(1e-10);
  });

  it('equals the mean squared noise for an all-zero prediction', () => {
    const batch = makeBatch(2);
    const zero = stub((_m, lt) => tf.zerosLike(lt) as tf.Tensor4D);
    const loss = diffusionLoss(zero, batch, S).dataSync()[0];
    const want = tf.mean(tf.square(batch.eps)).dataSync()[0];
    expect(loss).toBeCloseTo(want, 5);
  });
});

describe('denoiseStepBatch', () => {
  it('reduces to lt/sqrt(alpha_t) for a zero prediction and t=1', () => {
    const rng = new Rng(3);
    const lt = tf.tensor(rng.normals(GRID * GRID), [1, GRID, GRID, 1]) as tf.Tensor4D;
    const m = tf.zeros([1, GRID, GRID, 2]) as tf.Tensor4D;
    const zero = stub((_m, x) => tf.zerosLike(x) as tf.Tensor4D);
    const out = denoiseStepBatch(zero, m, lt, 1, S, new Rng(0));
    const want = tf.div(lt, Math.sqrt(alphaAt(S, 1)));
    const diff = tf.max(tf.abs(tf.sub(out, want))).dataSync()[0];
    expect(diff).toBeLessThan(1e-6);
    lt.dispose();
    m.dispose();
    out.dispose();
  });

  it('is deterministic at t=1 (no noise added on the final step)', () => {
    const rng = new Rng(4);
    const lt = tf.tensor(rng.normals(GRID * GRID), [1, GRID, GRID, 1]) as tf.Tensor4D;
    const m = tf.zeros([1, GRID, GRID, 2]) as tf.Tensor4D;
    const zero = stub((_m, x) => tf.zerosLike(x) as tf.Tensor4D);
    const a = denoiseStepBatch(zero, m, lt, 1, S, new Rng(1));
    const b = denoiseStepBatch(zero, m, lt, 1, S, new Rng(999));
    expect(Array.from(a.dataSync())).toEqual(Array.from(b.dataSync()));
    lt.dispose();
    m.dispose();
    a.dispose();
    b.dispose();
  });

  it('adds schedule-scaled noise at t > 1', () => {
    const lt = tf.zeros([1, GRID, GRID, 1]) as tf.Tensor4D;
    const m = tf.zeros([1, GRID, GRID, 2]) as tf.Tensor4D;
    const zero = stub((_m, x) => tf.zerosLike(x) as tf.Tensor4D);
    const t = 5;
    const out = denoiseStepBatch(zero, m, lt, t, S, new Rng(12));
    // mean is zero here, so the output is sqrt(1 - alpha_t) times the draw
    const vals = Array.from(out.dataSync());
    const std = Math.sqrt(vals.reduce((acc, v) => acc + v * v, 0) / vals.length);
    const want = Math.sqrt(1 - alphaAt(S, t));
    expect(std).toBeGreaterThan(want * 0.7);
    expect(std).toBeLessThan(want * 1.3);
    lt.dispose();
    m.dispose();
    out.dispose();
  });

  it('recovers sqrt(gamma_{t-1}) l0 when the prediction is the exact noise', () => {
    // substituting the true eps into the update gives
    // sqrt(gamma_{t-1}) l0 + sqrt(1 - gamma_{t-1}) eps deterministically at t=1
    const rng = new Rng(6);
    const l0 = rng.normals(GRID * GRID);
    const eps = rng.normals(GRID * GRID);
    const t = 1;
    const g = gammaAt(S, t);
    const ltArr = new Float32Array(GRID * GRID);
    for (let i = 0; i < ltArr.length; i++) {
      ltArr[i] = Math.sqrt(g) * l0[i] + Math.sqrt(1 - g) * eps[i];
    }
    const lt = tf.tensor(ltArr, [1, GRID, GRID, 1]) as tf.Tensor4D;
    const m = tf.zeros([1, GRID, GRID, 2]) as tf.Tensor4D;
    const epsT = tf.tensor(eps, [1, GRID, GRID, 1]) as tf.Tensor4D;
    const oracle = stub(() => epsT.clone() as tf.Tensor4D);
    const out = denoiseStepBatch(oracle, m, lt, t, S, new Rng(0));
    // gamma_0 = 1, so the exact update returns l0 itself at the last step
    const got = Array.from(out.dataSync());
    for (let i = 0; i < got.length; i++) expect(got[i]).toBeCloseTo(l0[i], 4);
    lt.dispose();
    m.dispose();
    epsT.dispose();
    out.dispose();
  });
});

describe('sample', () => {
  it('returns binary images of the requested count and size', () => {
    const zero = stub((_m, x) => tf.zerosLike(x) as tf.Tensor4D);
    const imgs = sample(zero, blankMap(2, GRID), S, new Rng(2), GRID, { count: 3 });
    expect(imgs).toHaveLength(3);
    for (const img of imgs) {
      expect(img).toHaveLength(GRID * GRID);
      for (const v of img) expect(v === 0 || v === 1).toBe(true);
    }
  });

  it('thresholds at the documented level', () => {
    expect(BINARY_THRESHOLD).toBe(0.5);
  });

  it('is reproducible for a fixed rng seed', () => {
    const zero = stub((_m, x) => tf.zerosLike(x) as tf.Tensor4D);
    const a = sample(zero, blankMap(2, GRID), S, new Rng(42), GRID, { count: 2 });
    const b = sample(zero, blankMap(2, GRID), S, new Rng(42), GRID, { count: 2 });
    for (let i = 0; i < a.length; i++) {
      expect(Array.from(a[i])).toEqual(Array.from(b[i]));
    }
  });
});

describe('trainingStep and trainModel', () => {
  const TINY: DenoiserPreset = {
    name: 'tiny',
    grid: GRID,
    mapChannels: 2,
    base: 8,
    channelMult: [1, 2],
    attnLevels: [],
    embedDim: 32,
    groups: 4,
  };

  it('takes an optimizer step and reports a finite loss', () => {
    const net = new Denoiser(TINY, 0);
    const before = net.weights().map((w) => w.data.slice());
    const optimizer = tf.train.adam(1e-3);
    const batch = makeBatch(5, 2);
    const loss = trainingStep(net, optimizer, batch, S);
    expect(Number.isFinite(loss)).toBe(true);
    // zero-init output means the first loss is the squared noise norm
    const want = tf.mean(tf.square(batch.eps)).dataSync()[0];
    expect(loss).toBeCloseTo(want, 5);
    const after = net.weights();
    let changed = 0;
    for (let i = 0; i < after.length; i++) {
      if (!after[i].data.every((v, j) => v === before[i][j])) changed++;
    }
    expect(changed).toBeGreaterThan(0);
    batch.m.dispose();
    batch.l0.dispose();
    batch.eps.dispose();
    optimizer.dispose();
    net.dispose();
  });

  it('drives the loss down on a tiny synthetic corpus', () => {
    const net = new Denoiser(TINY, 1);
    // single map, single trajectory: a line the model can overfit quickly
    const mapCh = [new Float32Array(GRID * GRID), new Float32Array(GRID * GRID)];
    const traj = new Float32Array(GRID * GRID);
    for (let c = 0; c < GRID; c++) {
      mapCh[0][3 * GRID + c] = 1;
      traj[3 * GRID + c] = 1;
    }
    const corpus: Corpus = {
      grid: GRID,
      entries: [{ mapChannels: mapCh, trajImages: [traj], bbox: [0, 0, 80, 80] }],
    };
    const losses = trainModel(net, corpus, S, {
      steps: 120,
      batch: 4,
      lr: 3e-3,
      seed: 0,
      augment: false,
    });
    expect(losses).toHaveLength(120);
    const head = losses.slice(0, 10).reduce((a, b) => a + b, 0) / 10;
    const tail = losses.slice(-10).reduce((a, b) => a + b, 0) / 10;
    expect(tail).toBeLessThan(head * 0.8);
    net.dispose();
  });

  it('rejects a corpus at the wrong grid', () => {
    const net = new Denoiser(TINY, 0);
    const corpus: Corpus = { grid: 32, entries: [] };
    expect(() => trainModel(net, corpus, S, { steps: 1, batch: 1 })).toThrow(/grid/);
    net.dispose();
  });
});

describe('stackMaps', () => {
  it('interleaves channels into NHWC layout', () => {
    const g = 2;
    const ch0 = Float32Array.from([1, 2, 3, 4]);
    const ch1 = Float32Array.from([5, 6, 7, 8]);
    const t = stackMaps([[ch0, ch1]], g);
    expect(t.shape).toEqual([1, 2, 2, 2]);
    expect(Array.from(t.dataSync())).toEqual([1, 5, 2, 6, 3, 7, 4, 8]);
    t.dispose();
  });

  it('rejects ragged channel lists', () => {
    const g = 2;
    const a = [new Float32Array(4), new Float32Array(4)];
    const b = [new Float32Array(4)];
    expect(() => stackMaps([a, b], g)).toThrow();
  });
});
