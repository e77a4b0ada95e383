/**
 * In-process surface over the selection engine.
 *
 * Containers are read and written natively (see container.ts); selection,
 * scoring and evaluation delegate to the engine CLI, so results are
 * identical to running the commands by hand on the same files.
 */

import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import {
  BindingDataset,
  fromArrays,
  loadContainer,
  readContainer,
  saveContainer,
  writeContainer,
} from "./container.js";
import { runCli } from "./cli.js";
import { parseScoresCsv, ScoreRow } from "./csv.js";

export * from "./container.js";
export * from "./cli.js";
export * from "./csv.js";

export interface EngineOptions {
  k?: number;
  lambda?: number;
  threads?: number | "auto";
  wardVariant?: "classical" | "paper_literal";
  uniquenessAggregation?: "mean" | "sum";
  configPath?: string;
}

export interface TaskPlanEntry {
  task: string;
  x_p: number;
  size: number;
  k_p: number;
  count: number;
}

export interface PrincipleMetrics {
  mean_informativeness: number;
  uniqueness_proxy: number;
  representativeness_proxy: number;
  cluster_coverage: number;
}

export interface SelectOutput {
  config: Record<string, unknown>;
  plan: TaskPlanEntry[];
  selected: number[];
  metrics: PrincipleMetrics | null;
  scores: ScoreRow[];
}

function optionFlags(options: EngineOptions): string[] {
  const flags: string[] = [];
  if (options.configPath !== undefined) flags.push("--config", options.configPath);
  if (options.k !== undefined) flags.push("--k", String(options.k));
  if (options.lambda !== undefined) flags.push("--lambda", String(options.lambda));
  if (options.threads !== undefined) flags.push("--threads", String(options.threads));
  if (options.wardVariant !== undefined) flags.push("--ward-variant", options.wardVariant);
  if (options.uniquenessAggregation !== undefined) {
    flags.push("--uniqueness-aggregation", options.uniquenessAggregation);
  }
  return flags;
}

function withWorkdir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "datatailor-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function resolveContainer(input: string | BindingDataset, dir: string): string {
  if (typeof input === "string") return input;
  const path = join(dir, "dataset.dtlr");
  saveContainer(input, path);
  return path;
}

/** Run selection; accepts a container path or an in-memory dataset. */
export function select(input: string | BindingDataset, options: EngineOptions = {}): SelectOutput {
  return withWorkdir((dir) => {
    const container = resolveContainer(input, dir);
    const out = join(dir, "out");
    runCli(["select", container, "--out", out, ...optionFlags(options)]);
    const payload = JSON.parse(readFileSync(join(out, "selection.json"), "utf-8"));
    const scores = parseScoresCsv(readFileSync(join(out, "scores.csv"), "utf-8"));
    return {
      config: payload.config,
      plan: payload.plan,
      selected: payload.selected,
      metrics: payload.metrics,
      scores,
    };
  });
}

/** Per-sample score table without performing a selection. */
export function score(input: string | BindingDataset, options: EngineOptions = {}): ScoreRow[] {
  return withWorkdir((dir) => {
    const container = resolveContainer(input, dir);
    const out = join(dir, "scores.csv");
    runCli(["score", container, "--out", out, ...optionFlags(options)]);
    return parseScoresCsv(readFileSync(out, "utf-8"));
  });
}

export interface EvaluateOutput extends PrincipleMetrics {
  subset_size: number;
}

/** Principle metrics for a subset of sample ids. */
export function evaluate(
  input: string | BindingDataset,
  ids: number[],
  options: EngineOptions = {},
): EvaluateOutput {
  if (ids.length === 0) throw new Error("subset must be non-empty");
  return withWorkdir((dir) => {
    const container = resolveContainer(input, dir);
    const subset = join(dir, "subset.txt");
    writeFileSync(subset, ids.map((i) => `${i}\n`).join(""));
    const out = join(dir, "metrics.json");
    runCli(["evaluate", container, subset, "--out", out, ...optionFlags(options)]);
    return JSON.parse(readFileSync(out, "utf-8"));
  });
}

export const load = loadContainer;
export { fromArrays, readContainer, writeContainer, saveContainer };
