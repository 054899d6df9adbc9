/**
 * Training loop: sample (map, trajectory) pairs from the corpus, apply a
 * shared dihedral augmentation, draw a step and a noise image, and take one
 * Adam step on the noise-prediction loss.
 */

import * as tf from '@tensorflow/tfjs';

import { augment } from './augment.js';
import { trainingStep, stackMaps, type TrainBatch } from './diffusion.js';
import { Rng } from './rng.js';
import type { NoiseSchedule } from './schedule.js';
import { Denoiser } from './unet.js';
import type { Corpus } from './dataset.js';

export interface TrainOptions {
  steps: number;
  batch: number;
  lr?: number;
  seed?: number;
  /** random rotations/flips of each (map, trajectory) pair; on by default */
  augment?: boolean;
  logEvery?: number;
}

export interface TrainLogEntry {
  step: number;
  loss: number;
}

export function trainModel(
  net: Denoiser,
  corpus: Corpus,
  schedule: NoiseSchedule,
  opts: TrainOptions,
  onLog?: (e: TrainLogEntry) => void,
): number[] {
  const grid = corpus.grid;
  if (grid !== net.preset.grid) {
    throw new Error(`corpus grid ${grid} does not match model grid ${net.preset.grid}`);
  }
  const rng = new Rng(opts.seed ?? 0);
  const useAug = opts.augment ?? true;
  const optimizer = tf.train.adam(opts.lr ?? 1e-3);
  const losses: number[] = [];
  const logEvery = opts.logEvery ?? 50;

  for (let step = 1; step <= opts.steps; step++) {
    const maps: Float32Array[][] = [];
    const l0 = new Float32Array(opts.batch * grid * grid);
    const t: number[] = [];
    for (let i = 0; i < opts.batch; i++) {
      const entry = corpus.entries[rng.int(corpus.entries.length)];
      const traj = entry.trajImages[rng.int(entry.trajImages.length)];
      let mapCh = entry.mapChannels;
      let img = traj;
      if (useAug) {
        const out = augment(entry.mapChannels, traj, grid, rng);
        mapCh = out.map;
        img = out.traj;
      }
      maps.push(mapCh);
      l0.set(img, i * grid * grid);
      t.push(1 + rng.int(schedule.T));
    }
    const batch: TrainBatch = {
      m: stackMaps(maps, grid),
      l0: tf.tensor(l0, [opts.batch, grid, grid, 1]) as tf.Tensor4D,
      t,
      eps: tf.tensor(rng.normals(opts.batch * grid * grid), [opts.batch, grid, grid, 1]) as tf.Tensor4D,
    };
    try {
      const loss = trainingStep(net, optimizer, batch, schedule);
      losses.push(loss);
      if (onLog && (step % logEvery === 0 || step === opts.steps)) {
        onLog({ step, loss });
      }
    } finally {
      batch.m.dispose();
      batch.l0.dispose();
      batch.eps.dispose();
    }
  }
  optimizer.dispose();
  return losses;
}
