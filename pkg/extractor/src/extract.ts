/** High-level extraction: checkpoint + dataset -> statistic table files. */
import { Checkpoint, loadCheckpoint } from "./checkpoint";
import { Dataset, readDataset } from "./dataset";
import { FLOW_STATISTICS, VAE_STATISTICS, flowStats, vaeStats } from "./stats";
import { EmittedTable, Role, writeStatTable } from "./table";

export interface ExtractionSpec {
  kind: "vae" | "flow";
  checkpointPath: string;
  datasetPath: string;
  outputPrefix: string;
  seed: number;
  mcSamples: number;
  role: Role;
  modelId: string | null;
}

export const DEFAULT_MC_SAMPLES = 16;

export function extractTable(spec: ExtractionSpec): EmittedTable {
  const ckpt = loadCheckpoint(spec.checkpointPath);
  if (ckpt.kind !== spec.kind) {
    throw new Error(`checkpoint is a ${ckpt.kind} model but --kind was ${spec.kind}`);
  }
  const expectedDim = ckpt.kind === "vae" ? ckpt.obs_dim : ckpt.dim;
  const data = readDataset(spec.datasetPath, expectedDim);
  const { names, rows } = computeRows(ckpt, data, spec.seed, spec.mcSamples);
  return writeStatTable(spec.outputPrefix, spec.role, names, spec.modelId, data.sampleIds, rows);
}

export function computeRows(
  ckpt: Checkpoint,
  data: Dataset,
  seed: number,
  mcSamples: number,
): { names: readonly string[]; rows: number[][] } {
  if (ckpt.kind === "vae") {
    const rows = data.rows.map((x, i) => {
      const s = vaeStats(ckpt, x, data.sampleIds[i], seed, mcSamples);
      return [s.xent, s.ent, s.rate, s.distortion, s.iwae];
    });
    return { names: VAE_STATISTICS, rows };
  }
  const rows = data.rows.map((x, i) => {
    const s = flowStats(ckpt, x, data.sampleIds[i]);
    return [s.like, s.latent, s.jac];
  });
  return { names: FLOW_STATISTICS, rows };
}
