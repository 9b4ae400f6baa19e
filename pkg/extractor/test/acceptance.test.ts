/**
 * End-to-end checks of the emitted artifacts: identity columns, byte
 * determinism, and validation by the Python toolkit that consumes the
 * files (spawned as a subprocess; these tests require `python3` with the
 * dose package installed, which is how the two packages integrate).
 */
import { spawnSync } from "child_process";
import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { main } from "../src/cli";
import { FlowCheckpoint, VaeCheckpoint } from "../src/checkpoint";

let workdir: string;

const VAE: VaeCheckpoint = {
  kind: "vae",
  obs_dim: 2,
  latent_dim: 2,
  encoder: {
    w_mean: [
      [0.6, -0.1],
      [0.2, 0.4],
    ],
    b_mean: [0.05, -0.05],
    w_logvar: [
      [0.02, 0.0],
      [0.0, -0.03],
    ],
    b_logvar: [-0.8, -1.1],
  },
  decoder: {
    w_mean: [
      [1.1, 0.0],
      [-0.3, 0.9],
    ],
    b_mean: [0.0, 0.0],
    logvar: [-0.4, -0.4],
  },
};

const FLOW: FlowCheckpoint = {
  kind: "flow",
  dim: 2,
  layers: [
    { type: "affine_diag", log_scale: [0.3, -0.2], shift: [1.0, -0.5] },
    { type: "permute", order: [1, 0] },
    { type: "affine_diag", log_scale: [-0.1, 0.25], shift: [0.0, 2.0] },
  ],
};

function writeDataset(file: string, dim: number, n: number): void {
  const header = ["sample_id", ...Array.from({ length: dim }, (_, j) => `x${j}`)];
  const lines = [header.join(",")];
  let state = 1234;
  const rand = () => {
    state = (state * 1103515245 + 12345) % 2147483648;
    return state / 2147483648;
  };
  for (let i = 0; i < n; i++) {
    const row = Array.from({ length: dim }, () => (rand() * 4 - 2).toFixed(6));
    lines.push([`s${i}`, ...row].join(","));
  }
  fs.writeFileSync(file, lines.join("\n") + "\n");
}

function runCli(args: string[]): number {
  return main(args);
}

function python(code: string): { status: number; stdout: string; stderr: string } {
  const proc = spawnSync("python3", ["-c", code], { encoding: "utf-8" });
  return { status: proc.status ?? 1, stdout: proc.stdout, stderr: proc.stderr };
}

beforeAll(() => {
  workdir = fs.mkdtempSync(path.join(os.tmpdir(), "dose-extract-"));
  fs.writeFileSync(path.join(workdir, "vae.json"), JSON.stringify(VAE));
  fs.writeFileSync(path.join(workdir, "flow.json"), JSON.stringify(FLOW));
  writeDataset(path.join(workdir, "data2.csv"), 2, 40);
});

afterAll(() => {
  fs.rmSync(workdir, { recursive: true, force: true });
});

describe("dose-extract end to end", () => {
  it("emits vae tables whose rate column is exactly xent - ent", () => {
    const out = path.join(workdir, "vae_stats");
    const code = runCli([
      "--kind", "vae", "--ckpt", path.join(workdir, "vae.json"),
      "--data", path.join(workdir, "data2.csv"), "--out", out,
      "--seed", "3", "--mc", "16", "--role", "train",
    ]);
    expect(code).toBe(0);
    const lines = fs.readFileSync(`${out}.csv`, "utf-8").trim().split("\n");
    expect(lines[0]).toBe("sample_id,xent,ent,rate,distortion,iwae");
    for (const line of lines.slice(1)) {
      const [, xent, ent, rate] = line.split(",").map(Number);
      expect(rate).toBe(xent - ent);
    }
  });

  it("emits flow tables satisfying like = latent + jac within 1e-4", () => {
    const out = path.join(workdir, "flow_stats");
    const code = runCli([
      "--kind", "flow", "--ckpt", path.join(workdir, "flow.json"),
      "--data", path.join(workdir, "data2.csv"), "--out", out,
    ]);
    expect(code).toBe(0);
    const lines = fs.readFileSync(`${out}.csv`, "utf-8").trim().split("\n");
    expect(lines[0]).toBe("sample_id,like,latent,jac");
    for (const line of lines.slice(1)) {
      const [, like, latent, jac] = line.split(",").map(Number);
      expect(Math.abs(like - (latent + jac))).toBeLessThan(1e-4);
    }
  });

  it("writes byte-identical files on rerun with the same seed", () => {
    const a = path.join(workdir, "det_a");
    const b = path.join(workdir, "det_b");
    for (const out of [a, b]) {
      expect(
        runCli([
          "--kind", "vae", "--ckpt", path.join(workdir, "vae.json"),
          "--data", path.join(workdir, "data2.csv"), "--out", out,
          "--seed", "11", "--mc", "8",
        ]),
      ).toBe(0);
    }
    expect(fs.readFileSync(`${a}.csv`)).toEqual(fs.readFileSync(`${b}.csv`));
    expect(fs.readFileSync(`${a}.csv.manifest.json`)).toEqual(
      fs.readFileSync(`${b}.csv.manifest.json`),
    );
  });

  it("supports per-model column naming for ensembles", () => {
    const out = path.join(workdir, "vae_m0");
    runCli([
      "--kind", "vae", "--ckpt", path.join(workdir, "vae.json"),
      "--data", path.join(workdir, "data2.csv"), "--out", out,
      "--model-id", "m0",
    ]);
    const header = fs.readFileSync(`${out}.csv`, "utf-8").split("\n")[0];
    expect(header).toBe("sample_id,xent@m0,ent@m0,rate@m0,distortion@m0,iwae@m0");
    const manifest = JSON.parse(fs.readFileSync(`${out}.csv.manifest.json`, "utf-8"));
    expect(manifest.model_ids).toEqual(["m0"]);
  });

  it("exits 2 with a JSON error on a broken checkpoint", () => {
    fs.writeFileSync(path.join(workdir, "broken.json"), "{not json");
    const code = runCli([
      "--kind", "vae", "--ckpt", path.join(workdir, "broken.json"),
      "--data", path.join(workdir, "data2.csv"), "--out", path.join(workdir, "x"),
    ]);
    expect(code).toBe(2);
  });

  it("exits 2 on a dataset whose width disagrees with the checkpoint", () => {
    writeDataset(path.join(workdir, "data3.csv"), 3, 5);
    const code = runCli([
      "--kind", "vae", "--ckpt", path.join(workdir, "vae.json"),
      "--data", path.join(workdir, "data3.csv"), "--out", path.join(workdir, "y"),
    ]);
    expect(code).toBe(2);
  });

  it("passes primary-side table validation and fitting", () => {
    const probe = python("import dose");
    if (probe.status !== 0) {
      throw new Error("python3 with the dose package is required for integration tests");
    }
    const out = path.join(workdir, "interop");
    runCli([
      "--kind", "vae", "--ckpt", path.join(workdir, "vae.json"),
      "--data", path.join(workdir, "data2.csv"), "--out", out,
      "--seed", "5", "--role", "train",
    ]);
    const check = python(
      [
        "from dose.stat_tables import read_stat_table",
        `t = read_stat_table(${JSON.stringify(out + ".csv")}, expected_role="train")`,
        "assert t.n == 40 and t.column_names == ('xent', 'ent', 'rate', 'distortion', 'iwae')",
        "print('validated', t.n)",
      ].join("\n"),
    );
    expect(check.stderr).toBe("");
    expect(check.status).toBe(0);
    expect(check.stdout).toContain("validated 40");

    const fitDir = path.join(workdir, "interop_fit");
    const fit = spawnSync(
      "python3",
      ["-m", "dose", "fit", "--train", `${out}.csv`, "--estimator", "kde", "--out", fitDir],
      { encoding: "utf-8" },
    );
    expect(fit.status).toBe(0);
    expect(fs.existsSync(path.join(fitDir, "model.json"))).toBe(true);
  });
});
