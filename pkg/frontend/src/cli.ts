/** Thin driver around the engine's command-line interface. */

import { spawnSync } from "node:child_process";

export interface CliResult {
  stdout: string;
  stderr: string;
}

export class CliError extends Error {
  constructor(
    message: string,
    public readonly exitCode: number,
    public readonly stderr: string,
  ) {
    super(message);
    this.name = "CliError";
  }
}

/** Command used to invoke the engine; override with DATATAILOR_CLI. */
export function cliCommand(): string[] {
  const override = process.env.DATATAILOR_CLI;
  if (override) return override.split(" ");
  return ["python3", "-m", "datatailor.cli"];
}

export function runCli(args: string[]): CliResult {
  const [cmd, ...prefix] = cliCommand();
  const proc = spawnSync(cmd, [...prefix, ...args], { encoding: "utf-8" });
  if (proc.error) throw proc.error;
  if (proc.status !== 0) {
    const kind = proc.status === 2 ? "input error" : proc.status === 3 ? "config error" : "error";
    throw new CliError(
      `datatailor ${kind} (exit ${proc.status}): ${proc.stderr.trim()}`,
      proc.status ?? -1,
      proc.stderr,
    );
  }
  return { stdout: proc.stdout, stderr: proc.stderr };
}
