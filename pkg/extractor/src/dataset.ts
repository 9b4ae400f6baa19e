/**
 * Dataset files are plain CSVs with header `sample_id,x0,x1,...` holding
 * the raw model inputs, one row per sample.
 */
import * as fs from "fs";

import { ShapeMismatchError } from "./checkpoint";

export interface Dataset {
  sampleIds: string[];
  rows: number[][];
}

export function readDataset(path: string, expectedDim: number): Dataset {
  let raw: string;
  try {
    raw = fs.readFileSync(path, "utf-8");
  } catch (err) {
    throw new ShapeMismatchError(`cannot read dataset ${path}: ${err}`);
  }
  const lines = raw.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length < 2) {
    throw new ShapeMismatchError(`dataset ${path} has no rows`);
  }
  const header = lines[0].split(",");
  if (header[0] !== "sample_id" || header.length - 1 !== expectedDim) {
    throw new ShapeMismatchError(
      `dataset ${path} header carries ${header.length - 1} feature columns, expected ${expectedDim}`,
    );
  }
  const sampleIds: string[] = [];
  const rows: number[][] = [];
  const seen = new Set<string>();
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== header.length) {
      throw new ShapeMismatchError(`dataset ${path}: ragged row ${parts[0]}`);
    }
    const sid = parts[0];
    if (seen.has(sid)) {
      throw new ShapeMismatchError(`dataset ${path}: duplicate sample id ${sid}`);
    }
    seen.add(sid);
    const values = parts.slice(1).map(Number);
    if (values.some((v) => !Number.isFinite(v))) {
      throw new ShapeMismatchError(`dataset ${path}: non-finite value in row ${sid}`);
    }
    sampleIds.push(sid);
    rows.push(values);
  }
  return { sampleIds, rows };
}
