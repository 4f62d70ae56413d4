/**
 * Node bindings for the paneval evaluation toolkit.
 *
 * The bindings are deliberately coarse-grained: each call runs one whole
 * evaluation through the CLI and returns the parsed report, so the Python
 * core stays the single source of numeric truth and reports are
 * value-identical to `paneval eval-ps` / `paneval eval-pt`. Calls spawn a
 * child process and await it, so the Node event loop is never blocked.
 */

import { spawn } from "node:child_process";

export const version = "0.1.0";

/** Options mirroring the CLI flags of eval-ps / eval-pt. */
export interface EvalOptions {
  /** Class filter: all | thing | stuff | known | unknown. */
  subset?: "all" | "thing" | "stuff" | "known" | "unknown";
  /** Drop and report unresolved predicted class names instead of failing. */
  openWorld?: boolean;
  /** eval-ps only: also evaluate per mask-scale bucket. */
  scaleBreakdown?: boolean;
  /** eval-ps only: flatten multi-label ground truth before the OSPA pass. */
  flatten?: "on" | "off";
  /** eval-pt only: time-averaging domain for track distances. */
  window?: "union" | "sequence";
  /** Parallel sequence workers. */
  workers?: number;
  /**
   * Command used to invoke the CLI. Defaults to $PANEVAL_CLI (split on
   * whitespace) or ["python3", "-m", "paneval"].
   */
  command?: string[];
}

export interface OspaComponents {
  total: number;
  loc: number;
  card: number;
}

/** Parsed report; metric blocks follow the CLI JSON schema. */
export interface EvalReport {
  schema_version: number;
  tool: { name: string; version: string };
  mode: "ps" | "pt";
  dataset: { gt: string; pred: string };
  config: Record<string, unknown>;
  metrics: Record<string, unknown>;
  sequences: { id: string; frames: number }[];
  warnings: string[];
}

export interface ErrorEntry {
  code: string;
  message: string;
  where?: Record<string, unknown>;
}

/** Inputs failed schema or invariant checks (CLI exit code 2). */
export class ValidationError extends Error {
  readonly errors: ErrorEntry[];

  constructor(errors: ErrorEntry[]) {
    super(errors.map((e) => `${e.code}: ${e.message}`).join("; ") || "validation failed");
    this.name = "ValidationError";
    this.errors = errors;
  }
}

/** The evaluator crashed or produced unusable output (CLI exit code 1). */
export class InternalError extends Error {
  readonly stderr: string;

  constructor(message: string, stderr: string) {
    super(message);
    this.name = "InternalError";
    this.stderr = stderr;
  }
}

function cliCommand(options: EvalOptions): string[] {
  if (options.command && options.command.length > 0) return options.command;
  const fromEnv = process.env.PANEVAL_CLI;
  if (fromEnv && fromEnv.trim()) return fromEnv.trim().split(/\s+/);
  return ["python3", "-m", "paneval"];
}

function evalArgs(
  subcommand: "eval-ps" | "eval-pt",
  gtPath: string,
  predPath: string,
  taxonomyPath: string,
  options: EvalOptions,
): string[] {
  const args = [
    subcommand,
    "--gt", gtPath,
    "--pred", predPath,
    "--taxonomy", taxonomyPath,
    "--format", "json",
  ];
  if (options.subset) args.push("--subset", options.subset);
  if (options.openWorld) args.push("--open-world");
  if (options.workers !== undefined) args.push("--workers", String(options.workers));
  if (subcommand === "eval-ps") {
    if (options.scaleBreakdown) args.push("--scale-breakdown");
    if (options.flatten) args.push("--flatten", options.flatten);
  } else if (options.window) {
    args.push("--window", options.window);
  }
  return args;
}

interface CliResult {
  code: number | null;
  stdout: string;
  stderr: string;
}

function runCli(command: string[], args: string[]): Promise<CliResult> {
  return new Promise((resolve, reject) => {
    const child = spawn(command[0], [...command.slice(1), ...args], {
      stdio: ["ignore", "pipe", "pipe"],
    });
    let stdout = "";
    let stderr = "";
    child.stdout.setEncoding("utf8");
    child.stderr.setEncoding("utf8");
    child.stdout.on("data", (chunk: string) => (stdout += chunk));
    child.stderr.on("data", (chunk: string) => (stderr += chunk));
    child.on("error", reject);
    child.on("close", (code) => resolve({ code, stdout, stderr }));
  });
}

function parseErrors(stderr: string): ErrorEntry[] {
  try {
    const parsed = JSON.parse(stderr) as { errors?: ErrorEntry[] };
    if (Array.isArray(parsed.errors)) return parsed.errors;
  } catch {
    // fall through: not a machine-readable error list
  }
  return [];
}

async function evaluate(
  subcommand: "eval-ps" | "eval-pt",
  gtPath: string,
  predPath: string,
  taxonomyPath: string,
  options: EvalOptions,
): Promise<EvalReport> {
  const command = cliCommand(options);
  const result = await runCli(command, evalArgs(subcommand, gtPath, predPath, taxonomyPath, options));
  if (result.code === 0) {
    try {
      return JSON.parse(result.stdout) as EvalReport;
    } catch (cause) {
      throw new InternalError(`evaluator produced unparseable output: ${cause}`, result.stderr);
    }
  }
  if (result.code === 2) {
    const errors = parseErrors(result.stderr);
    if (errors.length > 0) throw new ValidationError(errors);
    throw new ValidationError([{ code: "usage", message: result.stderr.trim() || "invalid arguments" }]);
  }
  throw new InternalError(
    `evaluator exited with code ${result.code}`,
    result.stderr,
  );
}

/** Panoptic segmentation report, value-identical to `paneval eval-ps`. */
export function evaluatePs(
  gtPath: string,
  predPath: string,
  taxonomyPath: string,
  options: EvalOptions = {},
): Promise<EvalReport> {
  return evaluate("eval-ps", gtPath, predPath, taxonomyPath, options);
}

/** Panoptic tracking report, value-identical to `paneval eval-pt`. */
export function evaluatePt(
  gtPath: string,
  predPath: string,
  taxonomyPath: string,
  options: EvalOptions = {},
): Promise<EvalReport> {
  return evaluate("eval-pt", gtPath, predPath, taxonomyPath, options);
}
