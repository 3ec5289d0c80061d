/**
 * Deterministic synthetic objective, bit-compatible with the orchestrator's
 * built-in evaluator.
 *
 * All randomness flows through a splitmix64-style chain hash over 64-bit
 * integers (BigInt here, plain ints on the Python side), so both sides see
 * identical uniforms; the remaining float arithmetic is IEEE-754 doubles in
 * a fixed evaluation order, keeping loss series within 1e-9 across runtimes.
 */

const MASK64 = (1n << 64n) - 1n;
const GOLDEN = 0x9e3779b97f4a7c15n;

// hash stream tags; the Python evaluator mirrors these constants
const TAG_WEIGHT = 1;
const TAG_OPTIMUM = 2;
const TAG_NOISE = 3;
const TAG_DURATION = 4;

export const DECAY_FLOOR = 0.3;
export const DECAY_SCALE = 0.7;
export const DECAY_RATE = 5.0;
export const DEFAULT_NOISE_AMPLITUDE = 0.01;

export interface Domain {
  name: string;
  values: number[];
}

/** The shipped VSR architecture space (10 x 8 x 10 = 800 configurations). */
export const DEFAULT_DOMAINS: Domain[] = [
  { name: "res_channels", values: [32, 64, 96, 128, 160, 192, 224, 256, 288, 320] },
  { name: "n_res", values: [1, 2, 3, 4, 5, 6, 7, 8] },
  { name: "up_channels", values: [32, 64, 96, 128, 160, 192, 224, 256, 288, 320] },
];

function mix64(z: bigint): bigint {
  z &= MASK64;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  return z ^ (z >> 31n);
}

export function hashU64(parts: number[]): bigint {
  let h = 0n;
  for (const p of parts) {
    h = mix64((h + GOLDEN + (BigInt(p) & MASK64)) & MASK64);
  }
  return h;
}

/** Uniform in [0, 1) from the top 53 bits of the chain hash. */
export function unitFloat(parts: number[]): number {
  return Number(hashU64(parts) >> 11n) * 2 ** -53;
}

export interface Profile {
  weights: number[];
  optima: number[];
}

export function profileFromSeed(seed: number, nDims: number): Profile {
  const weights: number[] = [];
  const optima: number[] = [];
  for (let d = 0; d < nDims; d++) {
    weights.push(0.5 + unitFloat([seed, TAG_WEIGHT, d]));
    optima.push(0.05 + 0.9 * unitFloat([seed, TAG_OPTIMUM, d]));
  }
  return { weights, optima };
}

/** Per-domain ordinal indices of the chosen values; throws on unknown ones. */
export function encodeConfig(
  domains: Domain[],
  config: Record<string, number>,
): number[] {
  return domains.map((domain) => {
    const idx = domain.values.indexOf(config[domain.name]);
    if (idx < 0) {
      throw new Error(
        `value ${config[domain.name]} not in domain ${domain.name}`,
      );
    }
    return idx;
  });
}

export function baseError(
  domains: Domain[],
  indices: number[],
  profile: Profile,
): number {
  let total = 0.0;
  for (let d = 0; d < indices.length; d++) {
    const n = domains[d].values.length;
    const pos = n > 1 ? indices[d] / (n - 1) : 0.0;
    const diff = pos - profile.optima[d];
    total += profile.weights[d] * diff * diff;
  }
  return total;
}

export function decay(epoch: number): number {
  return DECAY_FLOOR + DECAY_SCALE * Math.exp(-epoch / DECAY_RATE);
}

export function evaluateLoss(
  domains: Domain[],
  indices: number[],
  epoch: number,
  profileSeed: number,
  noiseAmplitude: number = DEFAULT_NOISE_AMPLITUDE,
): number {
  const profile = profileFromSeed(profileSeed, domains.length);
  const base = baseError(domains, indices, profile);
  const u = unitFloat([profileSeed, TAG_NOISE, ...indices, epoch]);
  const noise = base * noiseAmplitude * (2.0 * u - 1.0);
  return base * decay(epoch) + noise;
}

export function epochDuration(
  indices: number[],
  epoch: number,
  profileSeed: number,
  baseSeconds: number,
  jitter: number,
): number {
  if (jitter === 0.0) {
    return baseSeconds;
  }
  const u = unitFloat([profileSeed, TAG_DURATION, ...indices, epoch]);
  return baseSeconds * (1.0 + jitter * (2.0 * u - 1.0));
}
