import * as path from 'node:path';
import { fileURLToPath } from 'node:url';

import { describe, expect, it } from 'vitest';

import { buildMapEntry } from '../src/dataset.js';
import { forwardMarginal, gammaAt, makeSchedule, posteriorCoefficients } from '../src/schedule.js';
import { Rng } from '../src/rng.js';

const FIXTURES = path.join(path.dirname(fileURLToPath(import.meta.url)), 'fixtures');

describe('acceptance: forward-process moments', () => {
  // the marginal says l_t ~ N(sqrt(gamma_t) l0, (1 - gamma_t) I); check the
  // empirical mean and variance of the residual l_t - sqrt(gamma_t) l0
  // against that over 1e4 draws at the start, middle, and end of the chain
  const s = makeSchedule(200, 1e-3, 0.1);
  const entry = buildMapEntry(
    path.join(FIXTURES, 'maps', 'graph_00.json'),
    path.join(FIXTURES, 'traces', 'traces_00.csv'),
    48,
  );
  const l0 = entry.trajImages[0];
  const draws = 10_000;

  for (const t of [1, s.T / 2, s.T]) {
    it(`matches the stated mean and variance at t=${t}`, () => {
      const rng = new Rng(1234 + t);
      const g = gammaAt(s, t);
      const sqrtG = Math.sqrt(g);
      const n = l0.length;
      let sum = 0;
      let sumSq = 0;
      // also pin three individual pixels (one on the curve, two off) so the
      // check is per-coordinate and not only in aggregate
      const pinned = [0, 1, 2].map(() => ({ idx: -1, sum: 0, sumSq: 0 }));
      pinned[0].idx = l0.findIndex((v) => v > 0);
      pinned[1].idx = l0.findIndex((v) => v === 0);
      pinned[2].idx = n - 1;
      for (let d = 0; d < draws; d++) {
        const lt = forwardMarginal(l0, t, rng.normals(n), s);
        for (let i = 0; i < n; i++) {
          const r = lt[i] - sqrtG * l0[i];
          sum += r;
          sumSq += r * r;
        }
        for (const p of pinned) {
          p.sum += lt[p.idx];
          p.sumSq += lt[p.idx] * lt[p.idx];
        }
      }
      const count = draws * n;
      const mean = sum / count;
      const variance = sumSq / count - mean * mean;
      const wantVar = 1 - g;
      const seMean = Math.sqrt(wantVar / count);
      const seVar = wantVar * Math.sqrt(2 / (count - 1));
      expect(Math.abs(mean)).toBeLessThan(3 * seMean);
      expect(Math.abs(variance - wantVar)).toBeLessThan(3 * seVar);

      for (const p of pinned) {
        const pMean = p.sum / draws;
        const pVar = p.sumSq / draws - pMean * pMean;
        const pSeMean = Math.sqrt(wantVar / draws);
        const pSeVar = wantVar * Math.sqrt(2 / (draws - 1));
        expect(Math.abs(pMean - sqrtG * l0[p.idx])).toBeLessThan(3 * pSeMean);
        expect(Math.abs(pVar - wantVar)).toBeLessThan(3 * pSeVar);
      }
    });
  }
});

describe('acceptance: posterior formula', () => {
  it('matches direct evaluation of the stated equations on 100 random schedules', () => {
    const rng = new Rng(77);
    for (let k = 0; k < 100; k++) {
      const T = 2 + rng.int(400);
      const betaStart = rng.uniform(1e-5, 5e-3);
      const betaEnd = rng.uniform(betaStart, 0.25);
      const s = makeSchedule(T, betaStart, betaEnd);
      const t = 1 + rng.int(T);
      const got = posteriorCoefficients(t, s);
      // direct evaluation from first principles, independent of the library's
      // internal gamma bookkeeping
      const beta = (i: number) =>
        T === 1 ? betaStart : betaStart + ((betaEnd - betaStart) * (i - 1)) / (T - 1);
      const alphaT = 1 - beta(t);
      let gammaT = 1;
      for (let i = 1; i <= t; i++) gammaT *= 1 - beta(i);
      const gammaPrev = gammaT / alphaT;
      const c0 = (Math.sqrt(gammaPrev) * (1 - alphaT)) / (1 - gammaT);
      const ct = (Math.sqrt(alphaT) * (1 - gammaPrev)) / (1 - gammaT);
      const variance = ((1 - gammaPrev) * (1 - alphaT)) / (1 - gammaT);
      expect(Math.abs(got.c0 - c0)).toBeLessThan(1e-12);
      expect(Math.abs(got.ct - ct)).toBeLessThan(1e-12);
      expect(Math.abs(got.variance - variance)).toBeLessThan(1e-12);
    }
  });

  it('reproduces the worked example', () => {
    const s = {
      T: 2,
      alpha: Float64Array.from([0.5, 0.9]),
      gamma: Float64Array.from([0.5, 0.45]),
    };
    const { c0, ct, variance } = posteriorCoefficients(2, s);
    expect(c0).toBeCloseTo(0.12857, 4);
    expect(ct).toBeCloseTo(0.86244, 4);
    expect(variance).toBeCloseTo(0.09091, 4);
  });
});
