#!/usr/bin/env node
/**
 * Command line front end: train a model on (map, trace) corpora, draw
 * trajectory images for a map, and export drawn images as trace CSV.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { setupBackend } from './backend.js';
import {
  defaultScheduleSpec,
  loadCheckpoint,
  presetByName,
  saveCheckpoint,
  type ScheduleSpec,
} from './checkpoint.js';
import { loadCorpus, resolvePathList, graphBBox } from './dataset.js';
import { sample } from './diffusion.js';
import { decodeGrayPng, encodeGrayPng } from './png.js';
import { loadMapRaster, loadStreetGraph, rasterizeGraph, downsampleMax } from './raster.js';
import { Rng } from './rng.js';
import { makeSchedule } from './schedule.js';
import { imageToSequence } from './sequence.js';
import { exportTraces } from './traces.js';
import { trainModel } from './train.js';
import { Denoiser } from './unet.js';
import type { BBox, Trajectory } from './types.js';

interface SamplesManifest {
  grid: number;
  bbox: BBox;
  images: string[];
  seed: number;
  model: string;
}

function log(msg: string): void {
  process.stderr.write(msg + '\n');
}

/** Write one binary image as an 8-bit PNG, active=255, image row 0 on top. */
function writeImagePng(file: string, img: Float32Array, grid: number): void {
  const bytes = new Uint8Array(grid * grid);
  for (let r = 0; r < grid; r++) {
    for (let c = 0; c < grid; c++) {
      bytes[(grid - 1 - r) * grid + c] = img[r * grid + c] > 0 ? 255 : 0;
    }
  }
  fs.writeFileSync(file, encodeGrayPng(bytes, grid, grid));
}

function readImagePng(file: string): { img: Float32Array; grid: number } {
  const { data, width, height } = decodeGrayPng(fs.readFileSync(file));
  if (width !== height) throw new Error(`${file}: expected a square image`);
  const img = new Float32Array(width * height);
  for (let r = 0; r < height; r++) {
    for (let c = 0; c < width; c++) {
      img[r * width + c] = data[(height - 1 - r) * width + c] >= 128 ? 1 : 0;
    }
  }
  return { img, grid: width };
}

/** Load conditioning channels for sampling from either input form. */
function loadConditioning(
  graphArg: string | undefined,
  rasterArg: string | undefined,
  grid: number,
): { channels: Float32Array[]; bbox: BBox } {
  if (graphArg !== undefined) {
    const g = loadStreetGraph(graphArg);
    const bbox = graphBBox(g);
    return { channels: rasterizeGraph(g, bbox, grid), bbox };
  }
  if (rasterArg !== undefined) {
    const m = loadMapRaster(rasterArg);
    if (m.grid === grid) return { channels: m.channels, bbox: m.bbox };
    if (m.grid % grid !== 0) {
      throw new Error(`raster grid ${m.grid} is not a multiple of model grid ${grid}`);
    }
    const factor = m.grid / grid;
    return { channels: m.channels.map((ch) => downsampleMax(ch, m.grid, factor)), bbox: m.bbox };
  }
  throw new Error('one of --graph or --raster is required');
}

function imagesToTrajectories(
  images: Float32Array[],
  grid: number,
  bbox: BBox,
  vMin: number,
  vMax: number,
  seed: number,
): Trajectory[] {
  const rng = new Rng(seed);
  const out: Trajectory[] = [];
  for (const img of images) {
    let traj: Trajectory;
    try {
      traj = imageToSequence(img, grid, bbox, { vMin, vMax }, rng);
    } catch {
      continue; // blank image, nothing to export
    }
    if (traj.xy.length < 2) continue;
    out.push(traj);
  }
  log(`exporting ${out.length}/${images.length} images with at least two points`);
  return out;
}

async function runTrain(argv: {
  graphs: string;
  traces: string;
  preset: string;
  steps: number;
  batch: number;
  lr: number;
  seed: number;
  augment: boolean;
  backend: string;
  out: string;
  tSteps?: number;
  betaStart?: number;
  betaEnd?: number;
}): Promise<void> {
  const backend = await setupBackend(argv.backend);
  log(`backend: ${backend}`);
  const preset = presetByName(argv.preset);
  const base = defaultScheduleSpec(preset);
  const spec: ScheduleSpec = {
    T: argv.tSteps ?? base.T,
    betaStart: argv.betaStart ?? base.betaStart,
    betaEnd: argv.betaEnd ?? base.betaEnd,
  };
  const schedule = makeSchedule(spec.T, spec.betaStart, spec.betaEnd);
  const graphPaths = resolvePathList(argv.graphs, '.json');
  const tracePaths = resolvePathList(argv.traces, '.csv');
  const corpus = loadCorpus(graphPaths, tracePaths, preset.grid);
  const nTraj = corpus.entries.reduce((s, e) => s + e.trajImages.length, 0);
  log(`corpus: ${corpus.entries.length} maps, ${nTraj} trajectories at grid ${preset.grid}`);
  const net = new Denoiser(preset, argv.seed);
  log(`model: ${preset.name} preset, ${net.paramCount()} parameters, T=${spec.T}`);
  const t0 = Date.now();
  trainModel(
    net,
    corpus,
    schedule,
    {
      steps: argv.steps,
      batch: argv.batch,
      lr: argv.lr,
      seed: argv.seed,
      augment: argv.augment,
    },
    (e) => log(`step ${e.step}/${argv.steps} loss ${e.loss.toFixed(4)}`),
  );
  log(`trained ${argv.steps} steps in ${((Date.now() - t0) / 1000).toFixed(1)}s`);
  saveCheckpoint(argv.out, net, spec, argv.seed, argv.steps);
  net.dispose();
  log(`checkpoint written to ${argv.out}`);
}

async function runSample(argv: {
  model: string;
  graph?: string;
  raster?: string;
  count: number;
  seed: number;
  backend: string;
  out: string;
  tracesOut?: string;
  vMin: number;
  vMax: number;
}): Promise<void> {
  const backend = await setupBackend(argv.backend);
  log(`backend: ${backend}`);
  const ckpt = loadCheckpoint(argv.model);
  const grid = ckpt.preset.grid;
  const { channels, bbox } = loadConditioning(argv.graph, argv.raster, grid);
  const rng = new Rng(argv.seed);
  log(`sampling ${argv.count} images of ${grid}x${grid}, ${ckpt.schedule.T} steps each`);
  const t0 = Date.now();
  const images = sample(ckpt.net, channels, ckpt.schedule, rng, grid, {
    count: argv.count,
    onStep: (t) => {
      if (t % 50 === 0) log(`  step ${t}`);
    },
  });
  log(`sampled in ${((Date.now() - t0) / 1000).toFixed(1)}s`);
  fs.mkdirSync(argv.out, { recursive: true });
  const names: string[] = [];
  for (const [i, img] of images.entries()) {
    const name = `sample_${String(i).padStart(3, '0')}.png`;
    writeImagePng(path.join(argv.out, name), img, grid);
    names.push(name);
  }
  const manifest: SamplesManifest = {
    grid,
    bbox,
    images: names,
    seed: argv.seed,
    model: path.resolve(argv.model),
  };
  fs.writeFileSync(path.join(argv.out, 'samples.json'), JSON.stringify(manifest, null, 2) + '\n');
  log(`wrote ${names.length} images to ${argv.out}`);
  if (argv.tracesOut !== undefined) {
    const trajs = imagesToTrajectories(images, grid, bbox, argv.vMin, argv.vMax, argv.seed);
    exportTraces(trajs, argv.tracesOut);
    log(`traces written to ${argv.tracesOut}`);
  }
  ckpt.net.dispose();
}

function runExport(argv: {
  samples: string;
  out: string;
  vMin: number;
  vMax: number;
  seed: number;
}): void {
  const manifestPath = path.join(argv.samples, 'samples.json');
  const manifest = JSON.parse(fs.readFileSync(manifestPath, 'utf8')) as SamplesManifest;
  const images: Float32Array[] = [];
  for (const name of manifest.images) {
    const { img, grid } = readImagePng(path.join(argv.samples, name));
    if (grid !== manifest.grid) throw new Error(`${name}: grid ${grid} != manifest ${manifest.grid}`);
    images.push(img);
  }
  const trajs = imagesToTrajectories(
    images,
    manifest.grid,
    manifest.bbox,
    argv.vMin,
    argv.vMax,
    argv.seed,
  );
  exportTraces(trajs, argv.out);
  log(`traces written to ${argv.out}`);
}

export async function main(args: string[]): Promise<void> {
  await yargs(args)
    .scriptName('map2traj')
    .command(
      'train',
      'train a trajectory model on street maps and observed traces',
      (y) =>
        y
          .option('graphs', { type: 'string', demandOption: true, describe: 'street graph JSONs: directory or comma list' })
          .option('traces', { type: 'string', demandOption: true, describe: 'trace CSVs, parallel to --graphs' })
          .option('preset', { type: 'string', default: 'desk', choices: ['desk', 'full'] })
          .option('steps', { type: 'number', default: 800 })
          .option('batch', { type: 'number', default: 8 })
          .option('lr', { type: 'number', default: 1e-3 })
          .option('seed', { type: 'number', default: 0 })
          .option('augment', { type: 'boolean', default: true })
          .option('backend', { type: 'string', default: 'wasm', choices: ['wasm', 'cpu'] })
          .option('t-steps', { type: 'number', describe: 'override schedule depth' })
          .option('beta-start', { type: 'number' })
          .option('beta-end', { type: 'number' })
          .option('out', { type: 'string', demandOption: true, describe: 'checkpoint directory' }),
      (argv) => runTrain(argv as Parameters<typeof runTrain>[0]),
    )
    .command(
      'sample',
      'draw trajectory images for a map from a trained model',
      (y) =>
        y
          .option('model', { type: 'string', demandOption: true, describe: 'checkpoint directory' })
          .option('graph', { type: 'string', describe: 'street graph JSON to condition on' })
          .option('raster', { type: 'string', describe: 'map raster prefix to condition on' })
          .option('count', { type: 'number', default: 10 })
          .option('seed', { type: 'number', default: 0 })
          .option('backend', { type: 'string', default: 'wasm', choices: ['wasm', 'cpu'] })
          .option('out', { type: 'string', demandOption: true, describe: 'output directory for PNGs' })
          .option('traces-out', { type: 'string', describe: 'also export traces to this CSV' })
          .option('v-min', { type: 'number', default: 0.5 })
          .option('v-max', { type: 'number', default: 2.0 }),
      (argv) => runSample(argv as Parameters<typeof runSample>[0]),
    )
    .command(
      'export',
      'convert sampled trajectory images to a trace CSV',
      (y) =>
        y
          .option('samples', { type: 'string', demandOption: true, describe: 'directory written by sample' })
          .option('out', { type: 'string', demandOption: true, describe: 'output CSV path' })
          .option('v-min', { type: 'number', default: 0.5 })
          .option('v-max', { type: 'number', default: 2.0 })
          .option('seed', { type: 'number', default: 0 }),
      (argv) => runExport(argv as Parameters<typeof runExport>[0]),
    )
    .demandCommand(1, 'specify a command: train, sample, or export')
    .strict()
    .help()
    .parseAsync();
}

const isDirect = process.argv[1] !== undefined
  && path.resolve(process.argv[1]).replace(/\.(js|ts)$/, '')
    === new URL(import.meta.url).pathname.replace(/\.(js|ts)$/, '');
if (isDirect) {
  main(hideBin(process.argv)).catch((err) => {
    console.error(err instanceof Error ? err.message : err);
    process.exit(1);
  });
}
