/** Minimal linear scale with round tick marks. */

export interface Scale {
  domain: [number, number];
  range: [number, number];
  map(v: number): number;
  ticks: number[];
}

function niceStep(span: number, target: number): number {
  const raw = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const mult of [1, 2, 5, 10]) {
    if (raw <= mult * mag) return mult * mag;
  }
  return 10 * mag;
}

export function linearScale(lo: number, hi: number, r0: number, r1: number, tickTarget = 5): Scale {
  if (!(hi > lo)) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.5 : 1;
    lo -= pad;
    hi += pad;
  }
  const step = niceStep(hi - lo, tickTarget);
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let t = first; t <= hi + step * 1e-9; t += step) {
    ticks.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  const map = (v: number) => r0 + ((v - lo) / (hi - lo)) * (r1 - r0);
  return { domain: [lo, hi], range: [r0, r1], map, ticks };
}

/** Shortest stable decimal label (no locale, no exponent for mid-range). */
export function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-4) return v.toExponential(2).replace("e", "e");
  const s = v.toPrecision(6);
  return s.includes(".") ? s.replace(/0+$/, "").replace(/\.$/, "") : s;
}
