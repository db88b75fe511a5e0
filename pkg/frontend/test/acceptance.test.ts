/**
 * Figure-suite acceptance: render the four-panel analogs of both figure
 * layouts from real sweep CSVs produced by the primary package, plus the
 * shifted-reciprocal panel whose lambda comes from the asymptote-fit CSV.
 */

import { existsSync, mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { parseFitCsv, parseSweepCsv } from "../src/csv.js";
import { renderComposite } from "../src/render.js";
import { run } from "../src/cli.js";

const FULL = join(__dirname, "fixtures", "full");

function fixture(name: string): string {
  return join(FULL, name);
}

describe("criterion 11: figure suite from primary CSVs", () => {
  it("has the eight primary-produced sweep fixtures", () => {
    for (const name of [
      "causal_a1.csv",
      "causal_covariate.csv",
      "causal_concept.csv",
      "causal_ssl.csv",
      "anticausal_a1.csv",
      "anticausal_target.csv",
      "anticausal_conditional.csv",
      "anticausal_ssl.csv",
    ]) {
      expect(existsSync(fixture(name)), name).toBe(true);
    }
  });

  it("renders all four panels of the causal figure analog", () => {
    const panels = [
      { file: "causal_a1.csv", kind: "risk" as const },
      { file: "causal_covariate.csv", kind: "reciprocal" as const },
      { file: "causal_concept.csv", kind: "risk" as const },
      { file: "causal_ssl.csv", kind: "reciprocal" as const },
    ].map(({ file, kind }) => ({
      rows: parseSweepCsv(readFileSync(fixture(file), "utf8")),
      spec: { kind, title: file.replace(".csv", "") },
    }));
    const svg = renderComposite(panels);
    expect((svg.match(/<g transform/g) ?? []).length).toBe(4);
    expect(svg).toContain("#1f4e9c");
    expect(svg).toContain("#c23b22");
  });

  it("renders all four panels of the anti-causal figure analog", () => {
    const lambdaTarget = parseFitCsv(readFileSync(fixture("anticausal_target_fit.csv"), "utf8")).lambda;
    const lambdaCond = parseFitCsv(
      readFileSync(fixture("anticausal_conditional_fit.csv"), "utf8")
    ).lambda;
    expect(lambdaTarget).toBeGreaterThan(0);
    const panels = [
      { file: "anticausal_a1.csv", kind: "reciprocal" as const, lambda: undefined },
      { file: "anticausal_target.csv", kind: "shifted_reciprocal" as const, lambda: lambdaTarget },
      { file: "anticausal_conditional.csv", kind: "shifted_reciprocal" as const, lambda: lambdaCond },
      { file: "anticausal_ssl.csv", kind: "reciprocal" as const, lambda: undefined },
    ].map(({ file, kind, lambda }) => ({
      rows: parseSweepCsv(readFileSync(fixture(file), "utf8")),
      spec: { kind, lambda, title: file.replace(".csv", "") },
    }));
    const svg = renderComposite(panels);
    expect((svg.match(/<g transform/g) ?? []).length).toBe(4);
    expect(svg).toContain("1 / (risk - lambda)");
  });

  it("drives the CLI end to end on the shifted panel", () => {
    const dir = mkdtempSync(join(tmpdir(), "figs-acceptance-"));
    const out = join(dir, "target_shifted.svg");
    const code = run([
      fixture("anticausal_target.csv"),
      "--panel",
      "shifted",
      "--lambda-csv",
      fixture("anticausal_target_fit.csv"),
      "--out",
      out,
    ]);
    expect(code).toBe(0);
    const svg = readFileSync(out, "utf8");
    expect(svg).toContain("<svg");
    expect(svg).toContain("#c23b22");
  });

  it("composes the full figure via the CLI", () => {
    const dir = mkdtempSync(join(tmpdir(), "figs-acceptance-"));
    const out = join(dir, "anticausal_quartet.svg");
    const code = run([
      "compose",
      "--out",
      out,
      `${fixture("anticausal_a1.csv")}:reciprocal`,
      `${fixture("anticausal_target.csv")}:shifted:${fixture("anticausal_target_fit.csv")}`,
      `${fixture("anticausal_conditional.csv")}:shifted:${fixture("anticausal_conditional_fit.csv")}`,
      `${fixture("anticausal_ssl.csv")}:reciprocal`,
    ]);
    expect(code).toBe(0);
    expect(readFileSync(out, "utf8")).toContain('width="1680"');
  });
});
