export { CheckpointLoadError, ShapeMismatchError, loadCheckpoint } from "./checkpoint";
export type { Checkpoint, FlowCheckpoint, FlowLayer, VaeCheckpoint } from "./checkpoint";
export { readDataset } from "./dataset";
export type { Dataset } from "./dataset";
export { DEFAULT_MC_SAMPLES, computeRows, extractTable } from "./extract";
export type { ExtractionSpec } from "./extract";
export { drawSeed, fnv1a, mulberry32, standardNormals } from "./rand";
export { FLOW_STATISTICS, VAE_STATISTICS, flowLogDensity, flowStats, flowToLatent, vaeStats } from "./stats";
export { formatReal, writeStatTable } from "./table";
export type { Role } from "./table";
