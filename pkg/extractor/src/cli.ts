#!/usr/bin/env node
/**
 * dose-extract: emit per-sample generative-model statistics as a
 * dose-toolkit statistic table.
 *
 *   dose-extract --kind vae|flow --ckpt model.json --data inputs.csv \
 *                --out prefix [--seed 0] [--mc 16] [--role test] \
 *                [--model-id m0]
 *
 * Ensembles and likelihood-ratio background models are handled by running
 * the extractor once per checkpoint with distinct --model-id values; the
 * resulting per-model `stat@model` columns share sample ids and can be
 * merged column-wise.
 */
import { CheckpointLoadError, ShapeMismatchError } from "./checkpoint";
import { DEFAULT_MC_SAMPLES, ExtractionSpec, extractTable } from "./extract";
import { Role } from "./table";

function parseArgs(argv: string[]): ExtractionSpec {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key?.startsWith("--") || value === undefined) {
      throw new Error(`malformed arguments near ${key ?? "(end)"}`);
    }
    flags.set(key.slice(2), value);
  }
  const need = (name: string): string => {
    const value = flags.get(name);
    if (value === undefined) throw new Error(`missing required flag --${name}`);
    return value;
  };
  const kind = need("kind");
  if (kind !== "vae" && kind !== "flow") {
    throw new Error(`--kind must be vae or flow, got ${kind}`);
  }
  const role = (flags.get("role") ?? "test") as Role;
  if (!["train", "val", "test", "ood"].includes(role)) {
    throw new Error(`--role must be train|val|test|ood, got ${role}`);
  }
  const seed = Number(flags.get("seed") ?? "0");
  const mc = Number(flags.get("mc") ?? String(DEFAULT_MC_SAMPLES));
  if (!Number.isInteger(seed) || !Number.isInteger(mc) || mc < 1) {
    throw new Error("--seed must be an integer and --mc a positive integer");
  }
  return {
    kind,
    checkpointPath: need("ckpt"),
    datasetPath: need("data"),
    outputPrefix: need("out"),
    seed,
    mcSamples: mc,
    role,
    modelId: flags.get("model-id") ?? null,
  };
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    const emitted = extractTable(spec);
    process.stdout.write(`${emitted.csvPath}\n${emitted.manifestPath}\n`);
    return 0;
  } catch (err) {
    const kind =
      err instanceof CheckpointLoadError
        ? "CheckpointLoadError"
        : err instanceof ShapeMismatchError
          ? "ShapeMismatch"
          : "Error";
    process.stderr.write(JSON.stringify({ error: kind, message: String((err as Error).message ?? err) }) + "\n");
    return err instanceof CheckpointLoadError || err instanceof ShapeMismatchError ? 2 : 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
