/**
 * Checkpoint formats the extractor understands.
 *
 * A VAE checkpoint carries linear encoder/decoder weights with diagonal
 * Gaussian posteriors and a diagonal Gaussian likelihood; the prior is
 * standard normal.  A flow checkpoint lists invertible layers in the
 * generative direction (latent -> observation); statistics are computed
 * through the inverse map, so the reported Jacobian term is
 * log |d latent / d observation|.
 */
import * as fs from "fs";

export class CheckpointLoadError extends Error {}
export class ShapeMismatchError extends Error {}

export interface VaeCheckpoint {
  kind: "vae";
  obs_dim: number;
  latent_dim: number;
  encoder: {
    w_mean: number[][]; // latent_dim x obs_dim
    b_mean: number[];
    w_logvar: number[][];
    b_logvar: number[];
  };
  decoder: {
    w_mean: number[][]; // obs_dim x latent_dim
    b_mean: number[];
    logvar: number[]; // per observed dimension
  };
}

export type FlowLayer =
  | { type: "affine_diag"; log_scale: number[]; shift: number[] }
  | { type: "permute"; order: number[] };

export interface FlowCheckpoint {
  kind: "flow";
  dim: number;
  layers: FlowLayer[];
}

export type Checkpoint = VaeCheckpoint | FlowCheckpoint;

function requireMatrix(value: unknown, rows: number, cols: number, name: string): number[][] {
  if (!Array.isArray(value) || value.length !== rows) {
    throw new CheckpointLoadError(`${name} must be a ${rows}x${cols} matrix`);
  }
  for (const row of value) {
    if (!Array.isArray(row) || row.length !== cols || row.some((x) => typeof x !== "number" || !Number.isFinite(x))) {
      throw new CheckpointLoadError(`${name} must be a ${rows}x${cols} matrix of finite numbers`);
    }
  }
  return value as number[][];
}

function requireVector(value: unknown, length: number, name: string): number[] {
  if (!Array.isArray(value) || value.length !== length || value.some((x) => typeof x !== "number" || !Number.isFinite(x))) {
    throw new CheckpointLoadError(`${name} must be a length-${length} vector of finite numbers`);
  }
  return value as number[];
}

export function loadCheckpoint(path: string): Checkpoint {
  let raw: string;
  try {
    raw = fs.readFileSync(path, "utf-8");
  } catch (err) {
    throw new CheckpointLoadError(`cannot read checkpoint ${path}: ${err}`);
  }
  let payload: any;
  try {
    payload = JSON.parse(raw);
  } catch (err) {
    throw new CheckpointLoadError(`checkpoint ${path} is not valid JSON: ${err}`);
  }
  if (payload.kind === "vae") {
    const obs = payload.obs_dim;
    const lat = payload.latent_dim;
    if (!Number.isInteger(obs) || obs < 1 || !Number.isInteger(lat) || lat < 1) {
      throw new CheckpointLoadError("vae checkpoint needs positive integer obs_dim and latent_dim");
    }
    return {
      kind: "vae",
      obs_dim: obs,
      latent_dim: lat,
      encoder: {
        w_mean: requireMatrix(payload.encoder?.w_mean, lat, obs, "encoder.w_mean"),
        b_mean: requireVector(payload.encoder?.b_mean, lat, "encoder.b_mean"),
        w_logvar: requireMatrix(payload.encoder?.w_logvar, lat, obs, "encoder.w_logvar"),
        b_logvar: requireVector(payload.encoder?.b_logvar, lat, "encoder.b_logvar"),
      },
      decoder: {
        w_mean: requireMatrix(payload.decoder?.w_mean, obs, lat, "decoder.w_mean"),
        b_mean: requireVector(payload.decoder?.b_mean, obs, "decoder.b_mean"),
        logvar: requireVector(payload.decoder?.logvar, obs, "decoder.logvar"),
      },
    };
  }
  if (payload.kind === "flow") {
    const dim = payload.dim;
    if (!Number.isInteger(dim) || dim < 1) {
      throw new CheckpointLoadError("flow checkpoint needs a positive integer dim");
    }
    const layers: FlowLayer[] = [];
    if (!Array.isArray(payload.layers)) {
      throw new CheckpointLoadError("flow checkpoint needs a layers array");
    }
    for (const layer of payload.layers) {
      if (layer?.type === "affine_diag") {
        layers.push({
          type: "affine_diag",
          log_scale: requireVector(layer.log_scale, dim, "layer.log_scale"),
          shift: requireVector(layer.shift, dim, "layer.shift"),
        });
      } else if (layer?.type === "permute") {
        const order = requireVector(layer.order, dim, "layer.order");
        const sorted = [...order].sort((a, b) => a - b);
        if (!sorted.every((v, i) => v === i)) {
          throw new CheckpointLoadError("layer.order must be a permutation of 0..dim-1");
        }
        layers.push({ type: "permute", order });
      } else {
        throw new CheckpointLoadError(`unknown flow layer type ${layer?.type}`);
      }
    }
    return { kind: "flow", dim, layers };
  }
  throw new CheckpointLoadError(`unknown checkpoint kind ${payload.kind}`);
}
