/**
 * figs: render risk-sweep CSVs to SVG.
 *
 * Single panel:
 *   figs <sweep.csv> --panel risk|reciprocal|shifted --out fig.svg
 *        [--lambda-csv fit.csv] [--axis m|n|m_plus_n] [--title TEXT]
 *
 * Composite (one panel per entry, left to right):
 *   figs compose --out fig.svg <sweep.csv>:<panel>[:<fit.csv>] ...
 *
 * The shifted panel subtracts the lambda read from a fit CSV before taking
 * reciprocals.  All numbers come from the CSVs; nothing is recomputed here.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { Axis, EmptyInput, MissingColumn, parseFitCsv, parseSweepCsv } from "./csv.js";
import { ComposePanel, PanelKind, renderComposite, renderPanel } from "./render.js";

const PANEL_NAMES: Record<string, PanelKind> = {
  risk: "risk",
  reciprocal: "reciprocal",
  shifted: "shifted_reciprocal",
  shifted_reciprocal: "shifted_reciprocal",
};

function usage(): string {
  return (
    "usage: figs <sweep.csv> --panel risk|reciprocal|shifted --out FILE.svg " +
    "[--lambda-csv FIT.csv] [--axis m|n|m_plus_n] [--title TEXT]\n" +
    "       figs compose --out FILE.svg <sweep.csv>:<panel>[:<fit.csv>] ...\n"
  );
}

function lambdaFrom(path: string): number {
  return parseFitCsv(readFileSync(path, "utf8")).lambda;
}

function parseFlagArgs(argv: string[]): { positional: string[]; flags: Map<string, string> } {
  const positional: string[] = [];
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a.startsWith("--")) {
      const value = argv[i + 1];
      if (value === undefined) throw new Error(`flag ${a} needs a value`);
      flags.set(a.slice(2), value);
      i++;
    } else {
      positional.push(a);
    }
  }
  return { positional, flags };
}

export function run(argv: string[]): number {
  try {
    const { positional, flags } = parseFlagArgs(argv);
    if (positional.length === 0) {
      process.stderr.write(usage());
      return 2;
    }
    const out = flags.get("out");
    if (!out) {
      process.stderr.write("error: --out is required\n" + usage());
      return 2;
    }

    let svg: string;
    if (positional[0] === "compose") {
      const panels: ComposePanel[] = positional.slice(1).map((entry) => {
        const [csvPath, panelName, fitPath] = entry.split(":");
        const kind = PANEL_NAMES[panelName ?? "risk"];
        if (!kind) throw new Error(`unknown panel kind '${panelName}'`);
        return {
          rows: parseSweepCsv(readFileSync(csvPath, "utf8")),
          spec: {
            kind,
            lambda: fitPath ? lambdaFrom(fitPath) : undefined,
            title: csvPath.split("/").pop()?.replace(/\.csv$/, ""),
          },
        };
      });
      if (panels.length === 0) throw new EmptyInput("compose needs at least one panel");
      svg = renderComposite(panels);
    } else {
      const kind = PANEL_NAMES[flags.get("panel") ?? "risk"];
      if (!kind) {
        process.stderr.write(`error: unknown panel '${flags.get("panel")}'\n` + usage());
        return 2;
      }
      const rows = parseSweepCsv(readFileSync(positional[0], "utf8"));
      svg = renderPanel(rows, {
        kind,
        lambda: flags.has("lambda-csv") ? lambdaFrom(flags.get("lambda-csv")!) : undefined,
        axis: flags.get("axis") as Axis | undefined,
        title: flags.get("title"),
      });
    }
    writeFileSync(out, svg, "utf8");
    return 0;
  } catch (err) {
    if (err instanceof EmptyInput || err instanceof MissingColumn) {
      process.stderr.write(`error: ${err.message}\n`);
      return 2;
    }
    process.stderr.write(`error: ${String(err)}\n`);
    return 2;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(run(process.argv.slice(2)));
}
