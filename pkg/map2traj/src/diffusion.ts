/**
 * The diffusion operations around the denoiser: the noise-prediction
 * training objective and the reverse-process sampler.
 */

import * as tf from '@tensorflow/tfjs';

import { alphaAt, gammaAt, type NoiseSchedule } from './schedule.js';
import { Rng } from './rng.js';

/** Anything that predicts noise from (map, noisy image, step). */
export interface DenoiserLike {
  forward(m: tf.Tensor4D, lt: tf.Tensor4D, t: ArrayLike<number>): tf.Tensor4D;
}

/** Sampler output is binarized at this level. */
export const BINARY_THRESHOLD = 0.5;

export interface TrainBatch {
  /** [batch, grid, grid, mapChannels] */
  m: tf.Tensor4D;
  /** [batch, grid, grid, 1] */
  l0: tf.Tensor4D;
  /** one step per sample, each in [1, T] */
  t: number[];
  /** standard normal, shaped like l0 */
  eps: tf.Tensor4D;
}

/** Mean squared error between the noise prediction and the true noise. */
export function diffusionLoss(net: DenoiserLike, batch: TrainBatch, s: NoiseSchedule): tf.Scalar {
  const n = batch.t.length;
  const sqrtG = new Float32Array(n);
  const sqrtOneMinusG = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    const g = gammaAt(s, batch.t[i]);
    sqrtG[i] = Math.sqrt(g);
    sqrtOneMinusG[i] = Math.sqrt(1 - g);
  }
  const a = tf.tensor(sqrtG, [n, 1, 1, 1]);
  const b = tf.tensor(sqrtOneMinusG, [n, 1, 1, 1]);
  const lt = tf.add(tf.mul(batch.l0, a), tf.mul(batch.eps, b)) as tf.Tensor4D;
  const pred = net.forward(batch.m, lt, batch.t);
  return tf.mean(tf.square(tf.sub(pred, batch.eps))) as tf.Scalar;
}

/**
 * One optimizer step on the noise-prediction objective. Returns the loss
 * value; throws if it is not finite.
 */
export function trainingStep(
  net: { trainables(): tf.Variable[] } & DenoiserLike,
  optimizer: tf.Optimizer,
  batch: TrainBatch,
  s: NoiseSchedule,
): number {
  const lossTensor = optimizer.minimize(
    () => diffusionLoss(net, batch, s),
    true,
    net.trainables(),
  );
  const loss = lossTensor!.dataSync()[0];
  lossTensor!.dispose();
  if (!Number.isFinite(loss)) throw new Error(`training loss is not finite: ${loss}`);
  return loss;
}

/**
 * One reverse step on a batch of images:
 * l_{t-1} = (1/sqrt(a_t)) (l_t - ((1-a_t)/sqrt(1-g_t)) f(m, l_t, t)) + sqrt(1-a_t) e.
 * The noise term is omitted at t=1 so the final step is deterministic.
 */
export function denoiseStepBatch(
  net: DenoiserLike,
  m: tf.Tensor4D,
  lt: tf.Tensor4D,
  t: number,
  s: NoiseSchedule,
  rng: Rng,
): tf.Tensor4D {
  const alpha = alphaAt(s, t);
  const gamma = gammaAt(s, t);
  return tf.tidy(() => {
    const ts = new Array(lt.shape[0]).fill(t);
    const pred = net.forward(m, lt, ts);
    const mean = tf.mul(
      tf.sub(lt, tf.mul(pred, (1 - alpha) / Math.sqrt(1 - gamma))),
      1 / Math.sqrt(alpha),
    );
    if (t === 1) return mean as tf.Tensor4D;
    const noise = tf.tensor(rng.normals(lt.size), lt.shape);
    return tf.add(mean, tf.mul(noise, Math.sqrt(1 - alpha))) as tf.Tensor4D;
  });
}

/** Single-image wrapper over denoiseStepBatch operating on flat arrays. */
export function denoiseStep(
  net: DenoiserLike,
  mapChannels: Float32Array[],
  lt: Float32Array,
  t: number,
  s: NoiseSchedule,
  rng: Rng,
  grid: number,
): Float32Array {
  const m = stackMaps([mapChannels], grid);
  const x = tf.tensor(lt, [1, grid, grid, 1]) as tf.Tensor4D;
  const out = denoiseStepBatch(net, m, x, t, s, rng);
  const data = out.dataSync() as Float32Array;
  m.dispose();
  x.dispose();
  out.dispose();
  return Float32Array.from(data);
}

/** [n, grid, grid, C] tensor from n per-image channel lists. */
export function stackMaps(maps: Float32Array[][], grid: number): tf.Tensor4D {
  const n = maps.length;
  const c = maps[0].length;
  const data = new Float32Array(n * grid * grid * c);
  for (let i = 0; i < n; i++) {
    if (maps[i].length !== c) throw new Error('inconsistent channel counts across maps');
    for (let k = 0; k < c; k++) {
      const ch = maps[i][k];
      for (let px = 0; px < grid * grid; px++) {
        data[((i * grid * grid) + px) * c + k] = ch[px];
      }
    }
  }
  return tf.tensor(data, [n, grid, grid, c]) as tf.Tensor4D;
}

export interface SampleOptions {
  /** images to draw in one reverse pass (same conditioning map) */
  count?: number;
  /** report progress every so many steps */
  onStep?: (t: number) => void;
}

/**
 * Draw trajectory images for one conditioning map: start from pure noise at
 * t=T, iterate the reverse step down to t=1, then binarize.
 */
export function sample(
  net: DenoiserLike,
  mapChannels: Float32Array[],
  s: NoiseSchedule,
  rng: Rng,
  grid: number,
  opts: SampleOptions = {},
): Float32Array[] {
  const n = opts.count ?? 1;
  const m = stackMaps(Array(n).fill(mapChannels), grid);
  let lt = tf.tensor(rng.normals(n * grid * grid), [n, grid, grid, 1]) as tf.Tensor4D;
  for (let t = s.T; t >= 1; t--) {
    const next = denoiseStepBatch(net, m, lt, t, s, rng);
    lt.dispose();
    lt = next;
    opts.onStep?.(t);
  }
  const raw = lt.dataSync() as Float32Array;
  lt.dispose();
  m.dispose();
  const images: Float32Array[] = [];
  for (let i = 0; i < n; i++) {
    const img = new Float32Array(grid * grid);
    for (let px = 0; px < grid * grid; px++) {
      img[px] = raw[i * grid * grid + px] >= BINARY_THRESHOLD ? 1 : 0;
    }
    images.push(img);
  }
  return images;
}

/** All-zero conditioning channels: sampling with no map information. */
export function blankMap(mapChannels: number, grid: number): Float32Array[] {
  return Array.from({ length: mapChannels }, () => new Float32Array(grid * grid));
}
