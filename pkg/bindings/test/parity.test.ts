/**
 * Parity harness: for each fixture the binding result must equal the CLI
 * JSON field-by-field, numbers compared as decimal strings at 12
 * significant digits.
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { beforeAll, describe, expect, it } from "vitest";

import { evaluatePs, evaluatePt, ValidationError, version } from "../src/index.js";

const PYTHON = ["python3", "-m", "paneval"];

function cli(args: string[], cwd?: string): string {
  return execFileSync(PYTHON[0], [...PYTHON.slice(1), ...args], {
    encoding: "utf8",
    cwd,
  });
}

function assertParity(a: unknown, b: unknown, path = "$"): void {
  if (typeof a === "number" && typeof b === "number") {
    if (a !== b) {
      expect(a.toPrecision(12), `at ${path}`).toBe(b.toPrecision(12));
    }
    return;
  }
  if (Array.isArray(a) && Array.isArray(b)) {
    expect(a.length, `array length at ${path}`).toBe(b.length);
    a.forEach((value, i) => assertParity(value, b[i], `${path}[${i}]`));
    return;
  }
  if (a !== null && b !== null && typeof a === "object" && typeof b === "object") {
    const keysA = Object.keys(a as object).sort();
    const keysB = Object.keys(b as object).sort();
    expect(keysA, `keys at ${path}`).toEqual(keysB);
    for (const key of keysA) {
      assertParity(
        (a as Record<string, unknown>)[key],
        (b as Record<string, unknown>)[key],
        `${path}.${key}`,
      );
    }
    return;
  }
  expect(a, `at ${path}`).toEqual(b);
}

interface Fixture {
  dir: string;
  gt: string;
  pred: string;
  taxonomy: string;
}

function synthFixture(root: string, name: string, extra: string[]): Fixture {
  const dir = join(root, name);
  cli(["synth", "--out", dir, "--seed", name.length.toString(), "--frames", "6",
       "--thing-classes", "2", "--stuff-classes", "1", "--with-pred", ...extra]);
  return {
    dir,
    gt: join(dir, "gt_manifest.json"),
    pred: join(dir, "pred_manifest.json"),
    taxonomy: join(dir, "taxonomy.json"),
  };
}

let segmentation: Fixture;
let tracking: Fixture;
let multilabel: Fixture;

beforeAll(() => {
  const root = mkdtempSync(join(tmpdir(), "paneval-bindings-"));
  segmentation = synthFixture(root, "segmentation", ["--drop-prob", "0.25", "--shift-px", "1"]);
  tracking = synthFixture(root, "tracking", ["--drop-prob", "0.1", "--id-switch-prob", "0.4"]);
  // The default synthetic scene layers full-width stuff bands behind the
  // thing objects, so every covered thing pixel is multi-label.
  multilabel = synthFixture(root, "multilabel", ["--iou-jitter", "1"]);
}, 120_000);

describe("report parity with the CLI", () => {
  it("matches eval-ps on the segmentation fixture", async () => {
    const fromCli = JSON.parse(
      cli(["eval-ps", "--gt", segmentation.gt, "--pred", segmentation.pred,
           "--taxonomy", segmentation.taxonomy, "--format", "json", "--scale-breakdown"]),
    );
    const bound = await evaluatePs(segmentation.gt, segmentation.pred, segmentation.taxonomy, {
      scaleBreakdown: true,
    });
    assertParity(bound, fromCli);
  });

  it("matches eval-pt on the tracking fixture", async () => {
    const fromCli = JSON.parse(
      cli(["eval-pt", "--gt", tracking.gt, "--pred", tracking.pred,
           "--taxonomy", tracking.taxonomy, "--format", "json"]),
    );
    const bound = await evaluatePt(tracking.gt, tracking.pred, tracking.taxonomy);
    assertParity(bound, fromCli);
  });

  it("matches eval-ps on the multi-label fixture, flattened and not", async () => {
    for (const flatten of ["off", "on"] as const) {
      const fromCli = JSON.parse(
        cli(["eval-ps", "--gt", multilabel.gt, "--pred", multilabel.pred,
             "--taxonomy", multilabel.taxonomy, "--format", "json", "--flatten", flatten]),
      );
      const bound = await evaluatePs(multilabel.gt, multilabel.pred, multilabel.taxonomy, {
        flatten,
      });
      assertParity(bound, fromCli);
    }
  });

  it("honors subset and worker options identically", async () => {
    const fromCli = JSON.parse(
      cli(["eval-ps", "--gt", segmentation.gt, "--pred", segmentation.pred,
           "--taxonomy", segmentation.taxonomy, "--format", "json",
           "--subset", "thing", "--workers", "2"]),
    );
    const bound = await evaluatePs(segmentation.gt, segmentation.pred, segmentation.taxonomy, {
      subset: "thing",
      workers: 2,
    });
    assertParity(bound, fromCli);
  });
});

describe("error mapping", () => {
  it("raises ValidationError for an invalid taxonomy", async () => {
    const bad = join(segmentation.dir, "bad_taxonomy.json");
    writeFileSync(bad, JSON.stringify({
      classes: [
        { name: "a", id: 0, kind: "thing", split: "known" },
        { name: "a", id: 1, kind: "stuff", split: "known" },
      ],
      aliases: {},
    }));
    const failure = evaluatePs(segmentation.gt, segmentation.pred, bad);
    await expect(failure).rejects.toBeInstanceOf(ValidationError);
    await expect(failure).rejects.toMatchObject({
      errors: [{ code: "duplicate-name" }],
    });
  });

  it("raises ValidationError for corrupted run lengths", async () => {
    const dir = segmentation.dir;
    const gtFile = join(dir, "gt.json");
    const broken = JSON.parse(readFileSync(gtFile, "utf8"));
    broken.frames[0].segments[0].rle.counts = [1, 2, 3];
    const brokenFile = join(dir, "broken.json");
    writeFileSync(brokenFile, JSON.stringify(broken));
    writeFileSync(join(dir, "broken_manifest.json"), JSON.stringify({
      dataset: "broken",
      sequences: [{ id: "synth-000", path: "broken.json" }],
    }));
    const failure = evaluatePs(join(dir, "broken_manifest.json"), segmentation.pred, segmentation.taxonomy);
    await expect(failure).rejects.toMatchObject({
      errors: [{ code: "malformed-counts" }],
    });
  });
});

describe("surface", () => {
  it("exports a version string", () => {
    expect(version).toMatch(/^\d+\.\d+\.\d+$/);
  });

  it("perfect prediction scores zero error through the binding", async () => {
    const report = await evaluatePs(segmentation.gt, segmentation.gt, segmentation.taxonomy);
    const ospa = report.metrics["ospa_ps"] as { all: { total: number } };
    expect(ospa.all.total).toBe(0);
  });
});
