/**
 * Noise-prediction U-Net: the noisy trajectory image concatenated with the
 * street-map channels runs through convolution stacks with group
 * normalization, a self-attention bottleneck, and a sinusoidal time-step
 * embedding injected into every residual block. Output is the single-channel
 * noise estimate at input resolution.
 */

import * as tf from '@tensorflow/tfjs';

import { Rng } from './rng.js';

export interface DenoiserPreset {
  name: string;
  grid: number;
  mapChannels: number;
  /** channel width at the top level */
  base: number;
  /** per-level width multipliers; length = number of resolutions */
  channelMult: number[];
  /** level indices that get a self-attention block (bottleneck always has one) */
  attnLevels: number[];
  embedDim: number;
  groups: number;
}

export const FULL_PRESET: DenoiserPreset = {
  name: 'full',
  grid: 192,
  mapChannels: 3,
  base: 64,
  channelMult: [1, 2, 3, 4],
  attnLevels: [2, 3],
  embedDim: 256,
  groups: 8,
};

/** Reduced width/depth so training fits a laptop CPU; same block structure. */
export const DESK_PRESET: DenoiserPreset = {
  name: 'desk',
  grid: 48,
  mapChannels: 3,
  base: 16,
  channelMult: [1, 2, 3],
  attnLevels: [],
  embedDim: 64,
  groups: 8,
};

export interface WeightEntry {
  name: string;
  shape: number[];
  data: Float32Array;
}

function silu(x: tf.Tensor): tf.Tensor {
  return tf.mul(x, tf.sigmoid(x));
}

let instanceCounter = 0;

export class Denoiser {
  readonly preset: DenoiserPreset;
  readonly inputChannels: number;
  private vars = new Map<string, tf.Variable>();
  private rng: Rng;
  // registered tensor names must be unique across live instances
  private scope = `denoiser${instanceCounter++}`;

  constructor(preset: DenoiserPreset, seed = 0) {
    const levels = preset.channelMult.length;
    if (preset.grid % 2 ** (levels - 1) !== 0) {
      throw new RangeError(`grid ${preset.grid} not divisible by 2^${levels - 1}`);
    }
    this.preset = preset;
    this.inputChannels = 1 + preset.mapChannels;
    this.rng = new Rng(seed);
    this.build();
  }

  // -- variable creation -----------------------------------------------------

  private heInit(shape: number[], fanIn: number): tf.Tensor {
    const std = Math.sqrt(2.0 / fanIn);
    const n = shape.reduce((a, b) => a * b, 1);
    const data = new Float32Array(n);
    for (let i = 0; i < n; i++) data[i] = this.rng.normal() * std;
    return tf.tensor(data, shape);
  }

  private addVar(name: string, init: tf.Tensor): void {
    if (this.vars.has(name)) throw new Error(`duplicate variable ${name}`);
    this.vars.set(name, tf.variable(init, true, `${this.scope}/${name}`));
    init.dispose();
  }

  private conv(name: string, k: number, cIn: number, cOut: number, zero = false): void {
    const shape = [k, k, cIn, cOut];
    this.addVar(`${name}/kernel`, zero ? tf.zeros(shape) : this.heInit(shape, k * k * cIn));
    this.addVar(`${name}/bias`, tf.zeros([cOut]));
  }

  private dense(name: string, dIn: number, dOut: number): void {
    this.addVar(`${name}/kernel`, this.heInit([dIn, dOut], dIn));
    this.addVar(`${name}/bias`, tf.zeros([dOut]));
  }

  private norm(name: string, c: number): void {
    this.addVar(`${name}/scale`, tf.ones([c]));
    this.addVar(`${name}/shift`, tf.zeros([c]));
  }

  private resBlockVars(name: string, cIn: number, cOut: number): void {
    this.norm(`${name}/norm1`, cIn);
    this.conv(`${name}/conv1`, 3, cIn, cOut);
    this.dense(`${name}/temb`, this.preset.embedDim, cOut);
    this.norm(`${name}/norm2`, cOut);
    this.conv(`${name}/conv2`, 3, cOut, cOut, true);
    if (cIn !== cOut) this.conv(`${name}/skip`, 1, cIn, cOut);
  }

  private attnVars(name: string, c: number): void {
    this.norm(`${name}/norm`, c);
    this.conv(`${name}/q`, 1, c, c);
    this.conv(`${name}/k`, 1, c, c);
    this.conv(`${name}/v`, 1, c, c);
    this.conv(`${name}/proj`, 1, c, c, true);
  }

  private build(): void {
    const p = this.preset;
    const levels = p.channelMult.length;
    const ch = p.channelMult.map((m) => p.base * m);

    this.dense('temb/dense1', p.embedDim, p.embedDim);
    this.dense('temb/dense2', p.embedDim, p.embedDim);
    this.conv('stem', 3, this.inputChannels, ch[0]);

    for (let i = 0; i < levels; i++) {
      this.resBlockVars(`enc${i}`, i === 0 ? ch[0] : ch[i - 1], ch[i]);
      if (p.attnLevels.includes(i)) this.attnVars(`enc${i}/attn`, ch[i]);
      if (i < levels - 1) this.conv(`down${i}`, 3, ch[i], ch[i]);
    }

    const cMid = ch[levels - 1];
    this.resBlockVars('mid1', cMid, cMid);
    this.attnVars('midattn', cMid);
    this.resBlockVars('mid2', cMid, cMid);

    let cBelow = cMid;
    for (let i = levels - 1; i >= 0; i--) {
      if (i < levels - 1) this.conv(`up${i}`, 3, cBelow, cBelow);
      this.resBlockVars(`dec${i}`, cBelow + ch[i], ch[i]);
      if (p.attnLevels.includes(i)) this.attnVars(`dec${i}/attn`, ch[i]);
      cBelow = ch[i];
    }

    this.norm('head/norm', ch[0]);
    this.conv('head/conv', 3, ch[0], 1, true);
  }

  // -- forward pass ----------------------------------------------------------

  private v(name: string): tf.Variable {
    const found = this.vars.get(name);
    if (!found) throw new Error(`unknown variable ${name}`);
    return found;
  }

  private applyConv(name: string, x: tf.Tensor4D, stride = 1): tf.Tensor4D {
    const y = tf.conv2d(x, this.v(`${name}/kernel`) as unknown as tf.Tensor4D, stride, 'same');
    return tf.add(y, this.v(`${name}/bias`)) as tf.Tensor4D;
  }

  private applyDense(name: string, x: tf.Tensor2D): tf.Tensor2D {
    return tf.add(tf.matMul(x, this.v(`${name}/kernel`) as unknown as tf.Tensor2D), this.v(`${name}/bias`)) as tf.Tensor2D;
  }

  private groupNorm(name: string, x: tf.Tensor4D): tf.Tensor4D {
    const [b, h, w, c] = x.shape;
    let g = Math.min(this.preset.groups, c);
    while (c % g !== 0) g--;
    const grouped = tf.reshape(x, [b, h, w, g, c / g]);
    const { mean, variance } = tf.moments(grouped, [1, 2, 4], true);
    const normed = tf.div(tf.sub(grouped, mean), tf.sqrt(tf.add(variance, 1e-5)));
    const flat = tf.reshape(normed, [b, h, w, c]);
    return tf.add(tf.mul(flat, this.v(`${name}/scale`)), this.v(`${name}/shift`)) as tf.Tensor4D;
  }

  private resBlock(name: string, x: tf.Tensor4D, temb: tf.Tensor2D, cIn: number, cOut: number): tf.Tensor4D {
    let h = this.applyConv(`${name}/conv1`, silu(this.groupNorm(`${name}/norm1`, x)) as tf.Tensor4D);
    const proj = this.applyDense(`${name}/temb`, silu(temb) as tf.Tensor2D);
    h = tf.add(h, tf.reshape(proj, [proj.shape[0], 1, 1, cOut])) as tf.Tensor4D;
    h = this.applyConv(`${name}/conv2`, silu(this.groupNorm(`${name}/norm2`, h)) as tf.Tensor4D);
    const skip = cIn === cOut ? x : this.applyConv(`${name}/skip`, x);
    return tf.add(h, skip) as tf.Tensor4D;
  }

  private attention(name: string, x: tf.Tensor4D): tf.Tensor4D {
    const [b, h, w, c] = x.shape;
    const normed = this.groupNorm(`${name}/norm`, x);
    const q = tf.reshape(this.applyConv(`${name}/q`, normed), [b, h * w, c]);
    const k = tf.reshape(this.applyConv(`${name}/k`, normed), [b, h * w, c]);
    const vv = tf.reshape(this.applyConv(`${name}/v`, normed), [b, h * w, c]);
    const scores = tf.mul(tf.matMul(q, k, false, true), 1 / Math.sqrt(c));
    const att = tf.softmax(scores, -1);
    const out = tf.reshape(tf.matMul(att, vv), [b, h, w, c]) as tf.Tensor4D;
    return tf.add(this.applyConv(`${name}/proj`, out), x) as tf.Tensor4D;
  }

  private timeEmbedding(t: ArrayLike<number>): tf.Tensor2D {
    const dim = this.preset.embedDim;
    const half = dim / 2;
    const data = new Float32Array(t.length * dim);
    for (let i = 0; i < t.length; i++) {
      for (let j = 0; j < half; j++) {
        const freq = Math.exp((-Math.log(10000) * j) / (half - 1));
        data[i * dim + j] = Math.sin(t[i] * freq);
        data[i * dim + half + j] = Math.cos(t[i] * freq);
      }
    }
    let emb = tf.tensor2d(data, [t.length, dim]);
    emb = this.applyDense('temb/dense1', emb);
    emb = this.applyDense('temb/dense2', silu(emb) as tf.Tensor2D);
    return emb;
  }

  /**
   * Predict the noise component of `lt` given map channels `m` and per-sample
   * steps `t`. m: [batch, grid, grid, mapChannels]; lt: [batch, grid, grid, 1].
   */
  forward(m: tf.Tensor4D, lt: tf.Tensor4D, t: ArrayLike<number>): tf.Tensor4D {
    const p = this.preset;
    const levels = p.channelMult.length;
    const ch = p.channelMult.map((mult) => p.base * mult);
    if (m.shape[3] !== p.mapChannels || lt.shape[3] !== 1) {
      throw new Error(
        `expected ${p.mapChannels} map channels and 1 image channel, got ${m.shape[3]} and ${lt.shape[3]}`,
      );
    }
    if (m.shape[0] !== lt.shape[0] || m.shape[0] !== t.length) {
      throw new Error('batch sizes of m, lt, and t differ');
    }

    const temb = this.timeEmbedding(t);
    let h = this.applyConv('stem', tf.concat([lt, m], -1) as tf.Tensor4D);

    const skips: tf.Tensor4D[] = [];
    for (let i = 0; i < levels; i++) {
      h = this.resBlock(`enc${i}`, h, temb, i === 0 ? ch[0] : ch[i - 1], ch[i]);
      if (p.attnLevels.includes(i)) h = this.attention(`enc${i}/attn`, h);
      skips.push(h);
      if (i < levels - 1) h = this.applyConv(`down${i}`, h, 2);
    }

    h = this.resBlock('mid1', h, temb, ch[levels - 1], ch[levels - 1]);
    h = this.attention('midattn', h);
    h = this.resBlock('mid2', h, temb, ch[levels - 1], ch[levels - 1]);

    let cBelow = ch[levels - 1];
    for (let i = levels - 1; i >= 0; i--) {
      if (i < levels - 1) {
        const [b, hh, ww] = [h.shape[0], h.shape[1], h.shape[2]];
        h = tf.image.resizeNearestNeighbor(h, [hh * 2, ww * 2]) as tf.Tensor4D;
        h = this.applyConv(`up${i}`, h);
        void b;
      }
      h = this.resBlock(`dec${i}`, tf.concat([h, skips[i]], -1) as tf.Tensor4D, temb, cBelow + ch[i], ch[i]);
      if (p.attnLevels.includes(i)) h = this.attention(`dec${i}/attn`, h);
      cBelow = ch[i];
    }

    return this.applyConv('head/conv', silu(this.groupNorm('head/norm', h)) as tf.Tensor4D);
  }

  // -- bookkeeping -----------------------------------------------------------

  trainables(): tf.Variable[] {
    return [...this.vars.values()];
  }

  paramCount(): number {
    let n = 0;
    for (const v of this.vars.values()) n += v.size;
    return n;
  }

  weights(): WeightEntry[] {
    return [...this.vars.entries()].map(([name, v]) => ({
      name,
      shape: v.shape.slice(),
      data: v.dataSync() as Float32Array,
    }));
  }

  setWeights(entries: WeightEntry[]): void {
    const byName = new Map(entries.map((e) => [e.name, e]));
    if (byName.size !== this.vars.size) {
      throw new Error(`expected ${this.vars.size} weight entries, got ${byName.size}`);
    }
    for (const [name, v] of this.vars.entries()) {
      const entry = byName.get(name);
      if (!entry) throw new Error(`missing weights for ${name}`);
      if (entry.shape.join(',') !== v.shape.join(',')) {
        throw new Error(`shape mismatch for ${name}: ${entry.shape} vs ${v.shape}`);
      }
      const t = tf.tensor(entry.data, entry.shape);
      v.assign(t);
      t.dispose();
    }
  }

  dispose(): void {
    for (const v of this.vars.values()) v.dispose();
    this.vars.clear();
  }
}
