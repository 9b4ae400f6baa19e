/**
 * Emission of statistic tables in the dose-toolkit on-disk format:
 * `<prefix>.csv` with header `sample_id,<col>,...` plus
 * `<prefix>.csv.manifest.json` naming role, statistic_names, and
 * model_ids.  Numbers serialize with JavaScript's shortest round-trip
 * representation, which the toolkit parses back bit-exactly.  Files are
 * written to a temporary name and renamed into place; nothing ever
 * appends.
 */
import * as fs from "fs";
import * as path from "path";

export type Role = "train" | "val" | "test" | "ood";

export interface EmittedTable {
  csvPath: string;
  manifestPath: string;
}

export function formatReal(x: number): string {
  if (!Number.isFinite(x)) {
    throw new Error(`refusing to serialize non-finite value ${x}`);
  }
  return String(x);
}

function writeAtomic(target: string, payload: string): void {
  const tmp = `${target}.tmp-${process.pid}`;
  fs.writeFileSync(tmp, payload, "utf-8");
  fs.renameSync(tmp, target);
}

export function writeStatTable(
  prefix: string,
  role: Role,
  statisticNames: readonly string[],
  modelId: string | null,
  sampleIds: readonly string[],
  rows: readonly (readonly number[])[],
): EmittedTable {
  const columns = modelId === null
    ? [...statisticNames]
    : statisticNames.map((s) => `${s}@${modelId}`);
  const lines = [["sample_id", ...columns].join(",")];
  sampleIds.forEach((sid, i) => {
    if (rows[i].length !== columns.length) {
      throw new Error(`row ${sid} has ${rows[i].length} values, expected ${columns.length}`);
    }
    lines.push([sid, ...rows[i].map(formatReal)].join(","));
  });
  const csvPath = `${prefix}.csv`;
  const manifestPath = `${csvPath}.manifest.json`;
  const dir = path.dirname(csvPath);
  if (dir && !fs.existsSync(dir)) {
    fs.mkdirSync(dir, { recursive: true });
  }
  writeAtomic(csvPath, lines.join("\n") + "\n");
  const manifest = {
    model_ids: modelId === null ? [] : [modelId],
    role,
    statistic_names: [...statisticNames],
  };
  writeAtomic(manifestPath, JSON.stringify(manifest, Object.keys(manifest).sort(), 2) + "\n");
  return { csvPath, manifestPath };
}
