/**
 * SVG panel rendering.
 *
 * Panel kinds follow the house figure conventions: plain risk curves draw
 * in blue; reciprocal and shifted-reciprocal transforms draw in red.  Error
 * bars are +/- 2 standard errors, propagated through the reciprocal by the
 * delta method.  Output is plain SVG text with fixed geometry and number
 * formatting, so identical inputs render byte-identical files.
 */

import { Axis, SweepRow, axisValue, detectAxis } from "./csv.js";
import { fmt, linearScale } from "./scale.js";

export type PanelKind = "risk" | "reciprocal" | "shifted_reciprocal";

export interface PanelSpec {
  kind: PanelKind;
  lambda?: number;
  axis?: Axis;
  title?: string;
}

export const PANEL_WIDTH = 420;
export const PANEL_HEIGHT = 320;
const MARGIN = { left: 70, right: 16, top: 34, bottom: 46 };

const BLUE = "#1f4e9c";
const RED = "#c23b22";

interface Point {
  x: number;
  y: number;
  err: number;
}

function transformed(rows: SweepRow[], spec: PanelSpec): { pts: Point[]; axis: Axis } {
  const axis = spec.axis ?? detectAxis(rows);
  const lambda = spec.kind === "shifted_reciprocal" ? spec.lambda ?? 0 : 0;
  const pts = rows
    .slice()
    .sort((a, b) => axisValue(a, axis) - axisValue(b, axis))
    .map((r) => {
      if (spec.kind === "risk") {
        return { x: axisValue(r, axis), y: r.risk_nats, err: 2 * r.stderr_nats };
      }
      const shifted = r.risk_nats - lambda;
      // delta method: se(1/(R - lambda)) = se(R) / (R - lambda)^2
      return {
        x: axisValue(r, axis),
        y: 1 / shifted,
        err: (2 * r.stderr_nats) / (shifted * shifted),
      };
    });
  return { pts, axis };
}

function yLabel(kind: PanelKind): string {
  if (kind === "risk") return "excess risk (nats)";
  if (kind === "reciprocal") return "1 / risk";
  return "1 / (risk - lambda)";
}

/** Render one panel as a standalone SVG group; origin at (0, 0). */
export function panelGroup(rows: SweepRow[], spec: PanelSpec): string {
  const { pts, axis } = transformed(rows, spec);
  const color = spec.kind === "risk" ? BLUE : RED;
  const xs = pts.map((p) => p.x);
  const lows = pts.map((p) => p.y - p.err);
  const highs = pts.map((p) => p.y + p.err);
  const x = linearScale(Math.min(0, ...xs), Math.max(...xs), MARGIN.left, PANEL_WIDTH - MARGIN.right);
  const y = linearScale(
    Math.min(0, ...lows),
    Math.max(...highs),
    PANEL_HEIGHT - MARGIN.bottom,
    MARGIN.top
  );

  const parts: string[] = [];
  parts.push(`<rect x="0" y="0" width="${PANEL_WIDTH}" height="${PANEL_HEIGHT}" fill="white"/>`);
  // frame
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${PANEL_WIDTH - MARGIN.left - MARGIN.right}" ` +
      `height="${PANEL_HEIGHT - MARGIN.top - MARGIN.bottom}" fill="none" stroke="#444" stroke-width="1"/>`
  );
  for (const t of x.ticks) {
    const px = fmt(x.map(t));
    parts.push(
      `<line x1="${px}" y1="${PANEL_HEIGHT - MARGIN.bottom}" x2="${px}" y2="${PANEL_HEIGHT - MARGIN.bottom + 4}" stroke="#444"/>`,
      `<text x="${px}" y="${PANEL_HEIGHT - MARGIN.bottom + 16}" font-size="10" text-anchor="middle">${fmt(t)}</text>`
    );
  }
  for (const t of y.ticks) {
    const py = fmt(y.map(t));
    parts.push(
      `<line x1="${MARGIN.left - 4}" y1="${py}" x2="${MARGIN.left}" y2="${py}" stroke="#444"/>`,
      `<text x="${MARGIN.left - 7}" y="${py}" font-size="10" text-anchor="end" dominant-baseline="middle">${fmt(t)}</text>`
    );
  }
  // axis labels and title
  const xName = axis === "m_plus_n" ? "m + n" : axis;
  parts.push(
    `<text x="${(MARGIN.left + PANEL_WIDTH - MARGIN.right) / 2}" y="${PANEL_HEIGHT - 10}" font-size="11" text-anchor="middle">${xName}</text>`,
    `<text x="14" y="${(MARGIN.top + PANEL_HEIGHT - MARGIN.bottom) / 2}" font-size="11" text-anchor="middle" transform="rotate(-90 14 ${(MARGIN.top + PANEL_HEIGHT - MARGIN.bottom) / 2})">${yLabel(spec.kind)}</text>`
  );
  if (spec.title) {
    parts.push(
      `<text x="${PANEL_WIDTH / 2}" y="18" font-size="12" text-anchor="middle" font-weight="bold">${spec.title}</text>`
    );
  }
  // error bars
  for (const p of pts) {
    if (p.err > 0) {
      const px = fmt(x.map(p.x));
      parts.push(
        `<line x1="${px}" y1="${fmt(y.map(p.y - p.err))}" x2="${px}" y2="${fmt(y.map(p.y + p.err))}" stroke="${color}" stroke-width="1"/>`
      );
    }
  }
  // polyline through points (suppressed for a single point)
  if (pts.length > 1) {
    const path = pts.map((p) => `${fmt(x.map(p.x))},${fmt(y.map(p.y))}`).join(" ");
    parts.push(`<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
  }
  for (const p of pts) {
    parts.push(`<circle cx="${fmt(x.map(p.x))}" cy="${fmt(y.map(p.y))}" r="3" fill="${color}"/>`);
  }
  return parts.join("\n");
}

function svgDocument(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">\n` +
    body +
    "\n</svg>\n"
  );
}

export function renderPanel(rows: SweepRow[], spec: PanelSpec): string {
  return svgDocument(PANEL_WIDTH, PANEL_HEIGHT, panelGroup(rows, spec));
}

export interface ComposePanel {
  rows: SweepRow[];
  spec: PanelSpec;
}

/** Side-by-side multi-panel figure in one SVG. */
export function renderComposite(panels: ComposePanel[]): string {
  const groups = panels.map(
    (p, i) =>
      `<g transform="translate(${i * PANEL_WIDTH} 0)">\n${panelGroup(p.rows, p.spec)}\n</g>`
  );
  return svgDocument(PANEL_WIDTH * panels.length, PANEL_HEIGHT, groups.join("\n"));
}
