import { describe, expect, it } from "vitest";

import { VaeCheckpoint } from "../src/checkpoint";
import { drawSeed, standardNormals } from "../src/rand";
import { vaeStats } from "../src/stats";

const LOG_2PI = Math.log(2 * Math.PI);

// obs_dim 3, latent_dim 2, hand-sized weights
const CKPT: VaeCheckpoint = {
  kind: "vae",
  obs_dim: 3,
  latent_dim: 2,
  encoder: {
    w_mean: [
      [0.5, -0.2, 0.1],
      [0.0, 0.3, -0.4],
    ],
    b_mean: [0.1, -0.2],
    w_logvar: [
      [0.05, 0.0, -0.05],
      [0.0, 0.1, 0.0],
    ],
    b_logvar: [-1.0, -0.5],
  },
  decoder: {
    w_mean: [
      [1.0, 0.0],
      [-0.5, 0.8],
      [0.2, 0.4],
    ],
    b_mean: [0.0, 0.1, -0.1],
    logvar: [-0.2, -0.2, -0.2],
  },
};

const X = [0.7, -0.4, 1.1];

function encoderMoments(x: number[]) {
  const mu = CKPT.encoder.w_mean.map(
    (row, j) => row.reduce((acc, w, k) => acc + w * x[k], 0) + CKPT.encoder.b_mean[j],
  );
  const logvar = CKPT.encoder.w_logvar.map(
    (row, j) => row.reduce((acc, w, k) => acc + w * x[k], 0) + CKPT.encoder.b_logvar[j],
  );
  return { mu, logvar };
}

describe("vae statistics", () => {
  it("cross-entropy and entropy match their closed forms", () => {
    const { mu, logvar } = encoderMoments(X);
    const stats = vaeStats(CKPT, X, "r0", 0, 4);
    const ent = logvar.reduce((acc, lv) => acc + 0.5 * (1 + LOG_2PI + lv), 0);
    const xent = mu.reduce(
      (acc, m, j) => acc + 0.5 * (m * m + Math.exp(logvar[j]) + LOG_2PI),
      0,
    );
    expect(stats.ent).toBeCloseTo(ent, 12);
    expect(stats.xent).toBeCloseTo(xent, 12);
  });

  it("rate equals xent minus ent exactly", () => {
    for (const x of [X, [0, 0, 0], [2, -3, 0.25]]) {
      const stats = vaeStats(CKPT, x, "r0", 0, 2);
      expect(stats.rate).toBe(stats.xent - stats.ent);
    }
  });

  it("analytic columns ignore the Monte Carlo sample count", () => {
    const one = vaeStats(CKPT, X, "r0", 0, 1);
    const sixteen = vaeStats(CKPT, X, "r0", 0, 16);
    expect(one.xent).toBe(sixteen.xent);
    expect(one.ent).toBe(sixteen.ent);
    expect(one.rate).toBe(sixteen.rate);
    expect(one.distortion).not.toBe(sixteen.distortion);
    expect(one.iwae).not.toBe(sixteen.iwae);
  });

  it("shares draws between distortion and iwae", () => {
    // with a single draw, iwae - distortion must equal
    // log p(z) - log q(z|x) for exactly the seeded z
    const seed = 9;
    const stats = vaeStats(CKPT, X, "sample-7", seed, 1);
    const { mu, logvar } = encoderMoments(X);
    const eps = standardNormals(drawSeed(seed, "sample-7", 0), 2);
    const z = mu.map((m, j) => m + Math.exp(0.5 * logvar[j]) * eps[j]);
    const logPrior = z.reduce((acc, v) => acc - 0.5 * v * v, -0.5 * 2 * LOG_2PI);
    const logPosterior = z.reduce(
      (acc, v, j) =>
        acc - 0.5 * ((v - mu[j]) ** 2) / Math.exp(logvar[j]) - 0.5 * logvar[j] - 0.5 * LOG_2PI,
      0,
    );
    expect(stats.iwae - stats.distortion).toBeCloseTo(logPrior - logPosterior, 10);
  });

  it("single-draw iwae averages to the analytic ELBO", () => {
    const { mu, logvar } = encoderMoments(X);
    // analytic expected decoder log-likelihood under the posterior
    const decoded = CKPT.decoder.w_mean.map(
      (row, i) => row.reduce((acc, w, j) => acc + w * mu[j], 0) + CKPT.decoder.b_mean[i],
    );
    let expectedLoglik = 0;
    for (let i = 0; i < 3; i++) {
      const variance = Math.exp(CKPT.decoder.logvar[i]);
      let propagated = 0;
      for (let j = 0; j < 2; j++) {
        propagated += CKPT.decoder.w_mean[i][j] ** 2 * Math.exp(logvar[j]);
      }
      const gap = X[i] - decoded[i];
      expectedLoglik +=
        -0.5 * LOG_2PI - 0.5 * CKPT.decoder.logvar[i] - 0.5 * (gap * gap + propagated) / variance;
    }
    const stats = vaeStats(CKPT, X, "r0", 0, 1);
    const elbo = expectedLoglik - stats.rate;

    let total = 0;
    const trials = 4000;
    for (let t = 0; t < trials; t++) {
      total += vaeStats(CKPT, X, `avg-${t}`, 1, 1).iwae;
    }
    const mean = total / trials;
    // MC standard error of the mean is ~0.01 here; allow 5 sigma
    expect(Math.abs(mean - elbo)).toBeLessThan(0.05);
  });

  it("rejects wrong input dimension", () => {
    expect(() => vaeStats(CKPT, [1, 2], "r0", 0, 1)).toThrow(/dims/);
  });
});
