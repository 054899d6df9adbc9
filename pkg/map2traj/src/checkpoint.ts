/**
 * Model checkpoints: a flat binary weight file next to a JSON manifest that
 * records the preset, the noise schedule, and where each tensor lives in
 * the binary.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import { Denoiser, DESK_PRESET, FULL_PRESET, type DenoiserPreset, type WeightEntry } from './unet.js';
import { makeSchedule, type NoiseSchedule } from './schedule.js';

export interface ScheduleSpec {
  T: number;
  betaStart: number;
  betaEnd: number;
}

interface WeightSpec {
  name: string;
  shape: number[];
  /** element offset into the float32 weight buffer */
  offset: number;
}

interface Manifest {
  format: 'map2traj-checkpoint';
  version: 1;
  preset: DenoiserPreset;
  schedule: ScheduleSpec;
  seed: number;
  steps: number;
  weights: WeightSpec[];
}

export interface Checkpoint {
  net: Denoiser;
  preset: DenoiserPreset;
  schedule: NoiseSchedule;
  scheduleSpec: ScheduleSpec;
  seed: number;
  steps: number;
}

export function saveCheckpoint(
  dir: string,
  net: Denoiser,
  scheduleSpec: ScheduleSpec,
  seed: number,
  steps: number,
): void {
  fs.mkdirSync(dir, { recursive: true });
  const entries = net.weights();
  let total = 0;
  for (const e of entries) total += e.data.length;
  const buf = new Float32Array(total);
  const specs: WeightSpec[] = [];
  let offset = 0;
  for (const e of entries) {
    buf.set(e.data, offset);
    specs.push({ name: e.name, shape: e.shape, offset });
    offset += e.data.length;
  }
  const manifest: Manifest = {
    format: 'map2traj-checkpoint',
    version: 1,
    preset: net.preset,
    schedule: scheduleSpec,
    seed,
    steps,
    weights: specs,
  };
  fs.writeFileSync(path.join(dir, 'weights.bin'), Buffer.from(buf.buffer, buf.byteOffset, buf.byteLength));
  fs.writeFileSync(path.join(dir, 'model.json'), JSON.stringify(manifest, null, 2) + '\n');
}

export function loadCheckpoint(dir: string): Checkpoint {
  const manifestPath = path.join(dir, 'model.json');
  const manifest = JSON.parse(fs.readFileSync(manifestPath, 'utf8')) as Manifest;
  if (manifest.format !== 'map2traj-checkpoint') {
    throw new Error(`${manifestPath}: not a checkpoint manifest`);
  }
  const raw = fs.readFileSync(path.join(dir, 'weights.bin'));
  const flat = new Float32Array(raw.buffer, raw.byteOffset, raw.byteLength / 4);
  const entries: WeightEntry[] = manifest.weights.map((w) => {
    let count = 1;
    for (const d of w.shape) count *= d;
    return { name: w.name, shape: w.shape, data: flat.slice(w.offset, w.offset + count) };
  });
  const net = new Denoiser(manifest.preset);
  net.setWeights(entries);
  const spec = manifest.schedule;
  return {
    net,
    preset: manifest.preset,
    schedule: makeSchedule(spec.T, spec.betaStart, spec.betaEnd),
    scheduleSpec: spec,
    seed: manifest.seed,
    steps: manifest.steps,
  };
}

export function presetByName(name: string): DenoiserPreset {
  if (name === 'full') return FULL_PRESET;
  if (name === 'desk') return DESK_PRESET;
  throw new Error(`unknown preset '${name}' (expected 'full' or 'desk')`);
}

/** Default schedule for a preset, scaled so gamma_T is near zero at either depth. */
export function defaultScheduleSpec(preset: DenoiserPreset): ScheduleSpec {
  return preset.name === 'full'
    ? { T: 1000, betaStart: 1e-4, betaEnd: 0.02 }
    : { T: 200, betaStart: 1e-3, betaEnd: 0.1 };
}
