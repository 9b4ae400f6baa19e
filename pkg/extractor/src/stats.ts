/**
 * Per-sample statistic computations.
 *
 * VAE statistics (all in nats):
 *   xent        cross-entropy between the Gaussian posterior and the
 *               standard normal prior, closed form
 *   ent         posterior entropy, closed form
 *   rate        posterior/prior KL divergence; for Gaussian posteriors this
 *               is exactly xent - ent, and it is computed as that
 *               difference so the identity holds bit for bit
 *   distortion  Monte Carlo posterior expectation of the decoder
 *               log-likelihood
 *   iwae        importance-weighted evidence estimate over the same draws
 *               as distortion (the draws are shared deliberately)
 *
 * Flow statistics: latent log-probability under the standard normal base,
 * the log-determinant of the observation-to-latent Jacobian, and their sum
 * as the log-likelihood.
 */
import { FlowCheckpoint, ShapeMismatchError, VaeCheckpoint } from "./checkpoint";
import { drawSeed, standardNormals } from "./rand";

const LOG_2PI = Math.log(2 * Math.PI);

export const VAE_STATISTICS = ["xent", "ent", "rate", "distortion", "iwae"] as const;
export const FLOW_STATISTICS = ["like", "latent", "jac"] as const;

function matVec(w: number[][], x: number[]): number[] {
  return w.map((row) => row.reduce((acc, wij, j) => acc + wij * x[j], 0));
}

function logSumExp(values: number[]): number {
  const top = Math.max(...values);
  if (!Number.isFinite(top)) return top;
  let total = 0;
  for (const v of values) total += Math.exp(v - top);
  return top + Math.log(total);
}

function diagGaussianLogPdf(x: number[], mean: number[], logvar: number[]): number {
  let acc = 0;
  for (let i = 0; i < x.length; i++) {
    const z = (x[i] - mean[i]) / Math.exp(0.5 * logvar[i]);
    acc += -0.5 * z * z - 0.5 * logvar[i] - 0.5 * LOG_2PI;
  }
  return acc;
}

function standardNormalLogPdf(z: number[]): number {
  let acc = 0;
  for (const v of z) acc += -0.5 * v * v;
  return acc - 0.5 * z.length * LOG_2PI;
}

export interface VaeStatRow {
  xent: number;
  ent: number;
  rate: number;
  distortion: number;
  iwae: number;
}

export function vaeStats(
  ckpt: VaeCheckpoint,
  x: number[],
  sampleId: string,
  seed: number,
  mcSamples: number,
): VaeStatRow {
  if (x.length !== ckpt.obs_dim) {
    throw new ShapeMismatchError(
      `sample ${sampleId} has ${x.length} dims, checkpoint expects ${ckpt.obs_dim}`,
    );
  }
  const mu = matVec(ckpt.encoder.w_mean, x).map((v, i) => v + ckpt.encoder.b_mean[i]);
  const logvar = matVec(ckpt.encoder.w_logvar, x).map((v, i) => v + ckpt.encoder.b_logvar[i]);

  let ent = 0;
  let xent = 0;
  for (let j = 0; j < ckpt.latent_dim; j++) {
    ent += 0.5 * (1 + LOG_2PI + logvar[j]);
    xent += 0.5 * (mu[j] * mu[j] + Math.exp(logvar[j]) + LOG_2PI);
  }
  const rate = xent - ent; // exact KL identity for Gaussian posterior/prior

  const logliks: number[] = [];
  const weights: number[] = [];
  for (let t = 0; t < mcSamples; t++) {
    const eps = standardNormals(drawSeed(seed, sampleId, t), ckpt.latent_dim);
    const z = mu.map((m, j) => m + Math.exp(0.5 * logvar[j]) * eps[j]);
    const decoded = matVec(ckpt.decoder.w_mean, z).map((v, i) => v + ckpt.decoder.b_mean[i]);
    const loglik = diagGaussianLogPdf(x, decoded, ckpt.decoder.logvar);
    logliks.push(loglik);
    weights.push(loglik + standardNormalLogPdf(z) - diagGaussianLogPdf(z, mu, logvar.slice()));
  }
  const distortion = logliks.reduce((a, b) => a + b, 0) / mcSamples;
  const iwae = logSumExp(weights) - Math.log(mcSamples);
  return { xent, ent, rate, distortion, iwae };
}

export interface FlowStatRow {
  like: number;
  latent: number;
  jac: number;
}

/** Invert the generative layers: observation -> latent with log|dz/dx|. */
export function flowToLatent(ckpt: FlowCheckpoint, x: number[]): { z: number[]; logdet: number } {
  let z = x.slice();
  let logdet = 0;
  for (let i = ckpt.layers.length - 1; i >= 0; i--) {
    const layer = ckpt.layers[i];
    if (layer.type === "affine_diag") {
      z = z.map((v, j) => (v - layer.shift[j]) * Math.exp(-layer.log_scale[j]));
      logdet -= layer.log_scale.reduce((a, b) => a + b, 0);
    } else {
      const undone = new Array<number>(z.length);
      layer.order.forEach((src, dst) => {
        undone[src] = z[dst];
      });
      z = undone;
    }
  }
  return { z, logdet };
}

export function flowStats(ckpt: FlowCheckpoint, x: number[], sampleId: string): FlowStatRow {
  if (x.length !== ckpt.dim) {
    throw new ShapeMismatchError(
      `sample ${sampleId} has ${x.length} dims, checkpoint expects ${ckpt.dim}`,
    );
  }
  const { z, logdet } = flowToLatent(ckpt, x);
  const latent = standardNormalLogPdf(z);
  return { like: flowLogDensity(ckpt, x), latent, jac: logdet };
}

/**
 * Log-density through the change of variables in a single fused pass.
 * Kept separate from flowStats' latent/jac decomposition so the
 * like = latent + jac identity is exercised across two code paths.
 */
export function flowLogDensity(ckpt: FlowCheckpoint, x: number[]): number {
  let value = -0.5 * x.length * LOG_2PI;
  let z = x.slice();
  for (let i = ckpt.layers.length - 1; i >= 0; i--) {
    const layer = ckpt.layers[i];
    if (layer.type === "affine_diag") {
      for (let j = 0; j < z.length; j++) {
        z[j] = (z[j] - layer.shift[j]) * Math.exp(-layer.log_scale[j]);
        value -= layer.log_scale[j];
      }
    } else {
      const undone = new Array<number>(z.length);
      layer.order.forEach((src, dst) => {
        undone[src] = z[dst];
      });
      z = undone;
    }
  }
  for (const v of z) value += -0.5 * v * v;
  return value;
}
