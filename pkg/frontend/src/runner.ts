/** Spawn the Python CLI and hand back its single JSON output line. */

import { spawnSync } from "node:child_process";

export class CwmiCliError extends Error {
  constructor(
    message: string,
    public readonly exitCode: number | null,
    public readonly stderr: string,
  ) {
    super(message);
    this.name = "CwmiCliError";
  }
}

export function pythonCommand(): string[] {
  const override = process.env.CWMI_PYTHON;
  return override ? override.split(" ") : ["python3"];
}

export function runCli(args: string[]): Record<string, unknown> {
  const [command, ...prefix] = pythonCommand();
  const result = spawnSync(command, [...prefix, "-m", "cwmi", ...args], {
    encoding: "utf8",
    maxBuffer: 1 << 28,
  });
  if (result.error) {
    throw new CwmiCliError(
      `failed to launch the cwmi CLI: ${result.error.message}`,
      null,
      "",
    );
  }
  if (result.status !== 0) {
    throw new CwmiCliError(
      `cwmi ${args[0]} exited with ${result.status}: ${result.stderr.trim()}`,
      result.status,
      result.stderr,
    );
  }
  return JSON.parse(result.stdout) as Record<string, unknown>;
}
