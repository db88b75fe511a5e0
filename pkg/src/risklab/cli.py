"""Command-line surface: sweeps, oracles, information matrices, fits, advice.

Subcommands
-----------
simulate  run a configured sweep and emit one CSV row per sweep value
oracle    exact risk / exact information identity on a desk-scale instance
fisher    information matrices and rate constants for a configured model
fit       reciprocal / asymptote fits over a sweep CSV
advise    direction recommendation from sample sizes and shift flags

Seed priority: ``--seed`` flag, then the config's ``sweep.base_seed``, then
the ``RISK_LAB_SEED`` environment variable.  Per-point seeds mix the base
seed with the point's (m, n) sizes so adding sweep values never perturbs
existing rows.  Data goes to ``--out`` (default stdout); diagnostics go to
stderr; exit status is 0 exactly when no error occurred.

The ``wall_ms`` column is 0 by default so that reruns of the same config
are byte-identical; pass ``--timing`` to record real wall-clock times.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .bayes import PriorSpec
from .config import ExperimentConfig, load_config
from .errors import RiskLabError, UnsupportedScenario
from .fisher import (
    fisher_anticausal_labeled,
    fisher_anticausal_unlabeled,
    fisher_causal_conditional,
    rate_constants,
)
from .models import CAUSAL
from .oracle import EnumSpec, exact_cmi, exact_excess_risk
from .rates import FitReport, RiskCurve, compare_directions, fit_asymptote, fit_reciprocal_linear
from .risk import RiskEstimate, excess_risk_mc

CSV_COLUMNS = (
    "direction",
    "scenario",
    "estimator",
    "m",
    "n",
    "repeats",
    "failures",
    "risk_nats",
    "stderr_nats",
    "seed",
    "wall_ms",
)


def point_seed(base_seed: int, m: int, n: int) -> int:
    """Documented mixing function: SHA-256 of 'base/m/n', top 63 bits."""
    digest = hashlib.sha256(f"{base_seed}/{m}/{n}".encode("utf8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def run_sweep(
    cfg: ExperimentConfig,
    repeats: int | None = None,
    base_seed: int | None = None,
    threads: int = 0,
    timing: bool = False,
) -> list[dict]:
    """One row per sweep value, ordered by sweep value."""
    pair = cfg.domain_pair()
    scen = cfg.scenario_obj()
    est = cfg.estimator_spec()
    reps = repeats if repeats is not None else cfg.sweep.repeats
    seed0 = base_seed if base_seed is not None else cfg.sweep.base_seed

    def one_point(value: int) -> dict:
        m, n = cfg.point_sizes(value)
        seed = point_seed(seed0, m, n)
        t0 = time.perf_counter()
        estimate: RiskEstimate = excess_risk_mc(pair, scen, m, n, est, reps, seed)
        wall_ms = int(round((time.perf_counter() - t0) * 1000)) if timing else 0
        return {
            "direction": pair.direction,
            "scenario": scen.name,
            "estimator": est.kind,
            "m": m,
            "n": n,
            "repeats": estimate.repeats,
            "failures": estimate.failures,
            "risk_nats": estimate.mean,
            "stderr_nats": estimate.stderr,
            "seed": seed,
            "wall_ms": wall_ms,
        }

    if threads == 1 or len(cfg.sweep.values) == 1:
        return [one_point(v) for v in cfg.sweep.values]
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one_point, cfg.sweep.values))


def rows_to_csv(rows: list[dict]) -> str:
    """Stable schema, '.' decimals, LF line endings."""
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def _write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf8", newline="\n") as fh:
            fh.write(text)


def read_sweep_csv(path: str) -> list[dict]:
    with open(path, "r", encoding="utf8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise RiskLabError(f"empty CSV: {path}")
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        rows.append(dict(zip(header, ln.split(","))))
    return rows


def curve_from_rows(rows: list[dict], axis: str) -> RiskCurve:
    required = {"m", "n", "risk_nats", "stderr_nats", "repeats", "failures"}
    if rows and not required <= set(rows[0]):
        missing = sorted(required - set(rows[0]))
        raise RiskLabError(f"sweep CSV missing columns: {', '.join(missing)}")
    pts = []
    for row in rows:
        if axis == "m":
            size = int(row["m"])
        elif axis == "n":
            size = int(row["n"])
        else:
            size = int(row["m"]) + int(row["n"])
        est = RiskEstimate(
            mean=float(row["risk_nats"]),
            stderr=float(row["stderr_nats"]),
            repeats=int(row["repeats"]),
            failures=int(row["failures"]),
        )
        pts.append((size, est))
    pts.sort(key=lambda p: p[0])
    return RiskCurve(points=tuple(pts), axis=axis if axis in ("m", "n") else "m_plus_n")


def _env_seed() -> int:
    return int(os.environ.get("RISK_LAB_SEED", "0"))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else (cfg.sweep.base_seed or _env_seed())
    rows = run_sweep(cfg, repeats=args.repeats, base_seed=seed, threads=args.threads, timing=args.timing)
    out = args.out or cfg.output
    _write_output(rows_to_csv(rows), out)
    return 0


def _cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    pair = cfg.domain_pair()
    scen = cfg.scenario_obj()
    spec = EnumSpec(m=args.m, n=args.n, direction=pair.direction, k=pair.target.k)
    prior = PriorSpec(anticausal_grid=args.grid, prior_kind=cfg.estimator.grid.prior)
    from .risk import EstimatorSpec

    bayes = EstimatorSpec(kind="bayes_mixture", prior=prior)
    risk_exact = exact_excess_risk(pair, scen, spec, bayes)
    cmi_exact = exact_cmi(pair, scen, spec, prior)
    buf = io.StringIO()
    buf.write(f"scenario: {pair.direction}/{scen.name}  m={args.m} n={args.n}\n")
    buf.write(f"exact_excess_risk_bayes_nats: {risk_exact!r}\n")
    buf.write(f"exact_cmi_nats:               {cmi_exact!r}\n")
    buf.write(f"abs_difference:               {abs(risk_exact - cmi_exact)!r}\n")
    _write_output(buf.getvalue(), args.out)
    return 0


def _fmt_matrix(name: str, matrix: np.ndarray, labels) -> str:
    width = max(len(l) for l in labels) + 2
    out = [f"{name}:"]
    header = " " * width + "".join(f"{l:>14}" for l in labels)
    out.append(header)
    for lab, row in zip(labels, matrix):
        out.append(f"{lab:<{width}}" + "".join(f"{v:14.6f}" for v in row))
    return "\n".join(out) + "\n"


def _cmd_fisher(args) -> int:
    cfg = load_config(args.config)
    pair = cfg.domain_pair()
    scen = cfg.scenario_obj()
    buf = io.StringIO()
    csv_rows = ["kind,row,col,label_row,label_col,value"]

    def emit(name: str, report) -> None:
        buf.write(_fmt_matrix(name, report.matrix, report.labels))
        for i, li in enumerate(report.labels):
            for j, lj in enumerate(report.labels):
                csv_rows.append(f"{name},{i},{j},{li},{lj},{report.matrix[i, j]!r}")

    if pair.direction == CAUSAL:
        emit("labeled_source", fisher_causal_conditional(pair.source, pair.source.theta_x, "labeled_source"))
        emit("labeled_target", fisher_causal_conditional(pair.target, pair.target.theta_x, "labeled_target"))
    else:
        emit("labeled_target", fisher_anticausal_labeled(pair.target))
        emit("unlabeled_target", fisher_anticausal_unlabeled(pair.target))
    try:
        constants = rate_constants(scen, pair)
        buf.write("rate constants (risk x size -> value):\n")
        for c in constants:
            buf.write(f"  {c.formula_id:<36} x {c.size_label:<24} -> {c.predicted_risk_times_size:.6f}\n")
            csv_rows.append(
                f"rate_constant,,,{c.formula_id},{c.size_label.replace(',', ';')},{c.predicted_risk_times_size!r}"
            )
    except UnsupportedScenario as exc:
        buf.write(f"no vanishing rate for {scen.direction}/{scen.name}; risk plateaus:\n")
        for name, value in exc.plateaus.items():
            buf.write(f"  plateau[{name}] = {value!r}\n")
            csv_rows.append(f"plateau,,,{name},,{value!r}")
    sys.stdout.write(buf.getvalue())
    if args.out:
        _write_output("\n".join(csv_rows) + "\n", args.out)
    return 0


def _cmd_fit(args) -> int:
    rows = read_sweep_csv(args.csv)
    curve = curve_from_rows(rows, args.axis)
    report: FitReport = fit_asymptote(curve) if args.kind == "asymptote" else fit_reciprocal_linear(curve)
    text = "kind,slope,intercept,lambda,r2\n" + (
        f"{report.kind},{report.slope!r},{report.intercept!r},{report.lam!r},{report.r2!r}\n"
    )
    _write_output(text, args.out)
    return 0


def _cmd_advise(args) -> int:
    shared = {
        "ssl": (True, True),
        "covariate": (False, True),
        "concept": (True, False),
        "general": (False, False),
        "target": (False, True),
        "conditional": (True, False),
    }
    cm, cc = shared[args.causal_scenario]
    am, ac = shared[args.anticausal_scenario]
    advice = compare_directions(args.k, args.kp, args.m, args.n, cm, cc, am, ac)
    _write_output(
        f"recommendation: {advice.recommendation}\n"
        f"causal_predicted_rate:     {advice.causal_rate!r}\n"
        f"anticausal_predicted_rate: {advice.anticausal_rate!r}\n",
        args.out,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="risklab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configured sweep, emit CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=0, help="0 = all cores")
    p.add_argument("--timing", action="store_true", help="record real wall_ms (breaks byte-identity)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("oracle", help="exact risk and exact information on a tiny instance")
    p.add_argument("--config", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--grid", type=int, default=41)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("fisher", help="information matrices and rate constants")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="also write CSV rows here")
    p.set_defaults(func=_cmd_fisher)

    p = sub.add_parser("fit", help="fit a rate to a sweep CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--kind", choices=("reciprocal_linear", "asymptote"), default="reciprocal_linear")
    p.add_argument("--axis", choices=("m", "n", "m_plus_n"), default="m")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("advise", help="recommend a modeling direction")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--kp", type=int, required=True)
    p.add_argument("--causal-scenario", default="ssl", choices=("ssl", "covariate", "concept", "general"))
    p.add_argument("--anticausal-scenario", default="ssl", choices=("ssl", "target", "conditional", "general"))
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_advise)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RiskLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
