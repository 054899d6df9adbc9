/**
 * Noising-process hyper-parameters and the closed-form Gaussians built from
 * them: the marginal of the forward process and the posterior of one step
 * given the clean image.
 */

export interface NoiseSchedule {
  T: number;
  /** alpha[i] is the step-survival factor at t = i + 1. */
  alpha: Float64Array;
  /** gamma[i] is the cumulative product of alpha up to t = i + 1. */
  gamma: Float64Array;
}

/**
 * Linear beta ramp from betaStart (t=1) to betaEnd (t=T); alpha_t = 1 - beta_t,
 * gamma_t = prod alpha_i. gamma at t=0 is treated as 1 by convention.
 */
export function makeSchedule(T: number, betaStart: number, betaEnd: number): NoiseSchedule {
  if (!Number.isInteger(T) || T < 1) throw new RangeError(`T must be a positive integer, got ${T}`);
  if (!(betaStart > 0 && betaStart <= betaEnd && betaEnd < 1)) {
    throw new RangeError(`need 0 < betaStart <= betaEnd < 1, got ${betaStart}, ${betaEnd}`);
  }
  const alpha = new Float64Array(T);
  const gamma = new Float64Array(T);
  let prod = 1.0;
  for (let i = 0; i < T; i++) {
    const beta = T === 1 ? betaStart : betaStart + ((betaEnd - betaStart) * i) / (T - 1);
    alpha[i] = 1.0 - beta;
    prod *= alpha[i];
    gamma[i] = prod;
  }
  return { T, alpha, gamma };
}

/** gamma_t with the gamma_0 = 1 convention. */
export function gammaAt(s: NoiseSchedule, t: number): number {
  if (t === 0) return 1.0;
  checkStep(s, t);
  return s.gamma[t - 1];
}

export function alphaAt(s: NoiseSchedule, t: number): number {
  checkStep(s, t);
  return s.alpha[t - 1];
}

function checkStep(s: NoiseSchedule, t: number): void {
  if (!Number.isInteger(t) || t < 1 || t > s.T) {
    throw new RangeError(`step t must be in [1, ${s.T}], got ${t}`);
  }
}

/** l_t = sqrt(gamma_t) l0 + sqrt(1 - gamma_t) eps. */
export function forwardMarginal(
  l0: Float32Array,
  t: number,
  eps: Float32Array,
  s: NoiseSchedule,
): Float32Array {
  checkStep(s, t);
  if (eps.length !== l0.length) {
    throw new RangeError(`eps length ${eps.length} does not match image length ${l0.length}`);
  }
  const g = s.gamma[t - 1];
  const a = Math.sqrt(g);
  const b = Math.sqrt(1 - g);
  const out = new Float32Array(l0.length);
  for (let i = 0; i < l0.length; i++) out[i] = a * l0[i] + b * eps[i];
  return out;
}

export interface PosteriorCoefficients {
  /** weight on l0 */
  c0: number;
  /** weight on lt */
  ct: number;
  variance: number;
}

/**
 * Coefficients of the exact one-step posterior q(l_{t-1} | l_t, l0):
 * mean = c0 l0 + ct l_t, isotropic variance as returned.
 */
export function posteriorCoefficients(t: number, s: NoiseSchedule): PosteriorCoefficients {
  checkStep(s, t);
  const alphaT = s.alpha[t - 1];
  const gammaT = s.gamma[t - 1];
  const gammaPrev = gammaAt(s, t - 1);
  const denom = 1 - gammaT;
  if (denom <= 0) throw new RangeError(`gamma at t=${t} is 1; posterior undefined`);
  return {
    c0: (Math.sqrt(gammaPrev) * (1 - alphaT)) / denom,
    ct: (Math.sqrt(alphaT) * (1 - gammaPrev)) / denom,
    variance: ((1 - gammaPrev) * (1 - alphaT)) / denom,
  };
}

export interface PosteriorParams {
  mean: Float32Array;
  variance: number;
}

export function posteriorParams(
  l0: Float32Array,
  lt: Float32Array,
  t: number,
  s: NoiseSchedule,
): PosteriorParams {
  if (lt.length !== l0.length) {
    throw new RangeError(`lt length ${lt.length} does not match l0 length ${l0.length}`);
  }
  const { c0, ct, variance } = posteriorCoefficients(t, s);
  const mean = new Float32Array(l0.length);
  for (let i = 0; i < l0.length; i++) mean[i] = c0 * l0[i] + ct * lt[i];
  return { mean, variance };
}
