"""Experiment configuration: YAML schema, validation, serialization.

A config names one model (both domains' parameter tables), one shift
scenario, one estimator, and one sweep.  All invariants are enforced at
parse time: probability tables must validate, the scenario's parameter
equalities must hold, sweep values must strictly increase.

Schema (YAML mapping):

    model:
      direction: causal | anticausal
      # causal:
      source: {theta_x: [..k..], theta_y_given_x: [..k..]}
      target: {theta_x: [..k..], theta_y_given_x: [..k..]}
      # anticausal (components are affine-constrained categoricals;
      # free probability tables are rejected):
      constraints: [{base: [..k..], coef: [..k..]}, {base: ..., coef: ...}]
      source_constraints: ...   # optional override, defaults to `constraints`
      target_constraints: ...   # optional override
      source: {theta_y: s, component_thetas: [t0, t1]}
      target: {theta_y: s, component_thetas: [t0, t1]}
    scenario: general | covariate | concept | target | conditional | ssl
    estimator:
      kind: plugin_kt | plugin_mle | bayes_mixture | source_truth
      mle_clamp: 0.001
      em: {tol: 1.0e-9, max_iter: 500, restarts: 5, inner_tol: 1.0e-10}
      grid: {points_per_axis: 201, prior: jeffreys | uniform}
    sweep:
      axis: m | n | mn
      values: [500, 1000, ...]
      fixed: 2000            # the non-swept size; ignored for axis mn
      repeats: 3000
      base_seed: 1
    output: path.csv          # optional default output path
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import yaml

from .bayes import PriorSpec
from .errors import ParseError, ScenarioParameterMismatch
from .estimators import EmOptions
from .models import (
    ANTICAUSAL,
    CAUSAL,
    AntiCausalParams,
    CausalParams,
    Categorical,
    DomainPair,
    MixtureComponent,
    Scenario,
    affine_constraint,
    scenario,
    validate_scenario,
)
from .risk import ESTIMATOR_KINDS, EstimatorSpec


@dataclass(frozen=True)
class ConstraintBlock:
    base: tuple[float, ...]
    coef: tuple[float, ...]
    lo: float | None = None
    hi: float | None = None


@dataclass(frozen=True)
class CausalModel:
    source_theta_x: tuple[float, ...]
    source_theta_y_given_x: tuple[float, ...]
    target_theta_x: tuple[float, ...]
    target_theta_y_given_x: tuple[float, ...]

    direction: str = CAUSAL

    @property
    def k(self) -> int:
        return len(self.target_theta_x)


@dataclass(frozen=True)
class AntiCausalModel:
    source_constraints: tuple[ConstraintBlock, ConstraintBlock]
    target_constraints: tuple[ConstraintBlock, ConstraintBlock]
    source_theta_y: float
    source_component_thetas: tuple[float, float]
    target_theta_y: float
    target_component_thetas: tuple[float, float]

    direction: str = ANTICAUSAL

    @property
    def k(self) -> int:
        return len(self.target_constraints[0].base)


@dataclass(frozen=True)
class EmBlock:
    tol: float = 1e-9
    max_iter: int = 500
    restarts: int = 5
    inner_tol: float = 1e-10


@dataclass(frozen=True)
class GridBlock:
    points_per_axis: int = 201
    prior: str = "jeffreys"


@dataclass(frozen=True)
class EstimatorBlock:
    kind: str = "plugin_kt"
    mle_clamp: float = 1e-3
    em: EmBlock = field(default_factory=EmBlock)
    grid: GridBlock = field(default_factory=GridBlock)


@dataclass(frozen=True)
class SweepBlock:
    axis: str
    values: tuple[int, ...]
    fixed: int
    repeats: int
    base_seed: int


@dataclass(frozen=True)
class ExperimentConfig:
    model: CausalModel | AntiCausalModel
    scenario_name: str
    estimator: EstimatorBlock
    sweep: SweepBlock
    output: str | None = None

    def scenario_obj(self) -> Scenario:
        return scenario(self.model.direction, self.scenario_name)

    def domain_pair(self) -> DomainPair:
        m = self.model
        if isinstance(m, CausalModel):
            src = CausalParams(Categorical(m.source_theta_x), list(m.source_theta_y_given_x))
            tgt = CausalParams(Categorical(m.target_theta_x), list(m.target_theta_y_given_x))
            return DomainPair(src, tgt, CAUSAL)
        src_cons = [affine_constraint(c.base, c.coef, c.lo, c.hi) for c in m.source_constraints]
        tgt_cons = [affine_constraint(c.base, c.coef, c.lo, c.hi) for c in m.target_constraints]
        src = AntiCausalParams(
            m.source_theta_y,
            tuple(MixtureComponent(c, t) for c, t in zip(src_cons, m.source_component_thetas)),
        )
        tgt = AntiCausalParams(
            m.target_theta_y,
            tuple(MixtureComponent(c, t) for c, t in zip(tgt_cons, m.target_component_thetas)),
        )
        return DomainPair(src, tgt, ANTICAUSAL)

    def estimator_spec(self) -> EstimatorSpec:
        e = self.estimator
        return EstimatorSpec(
            kind=e.kind,
            mle_clamp=e.mle_clamp,
            em=EmOptions(e.em.tol, e.em.max_iter, e.em.restarts, e.em.inner_tol),
            prior=PriorSpec(anticausal_grid=e.grid.points_per_axis, prior_kind=e.grid.prior),
        )

    def point_sizes(self, value: int) -> tuple[int, int]:
        """(m, n) for one sweep value under the configured axis."""
        if self.sweep.axis == "m":
            return value, self.sweep.fixed
        if self.sweep.axis == "n":
            return self.sweep.fixed, value
        return value, value  # joint growth


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _require(mapping: dict, key: str, path: str):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ParseError(f"missing required key {key!r}", field=f"{path}.{key}" if path else key)
    return mapping[key]


def _floats(value, path: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or not value:
        raise ParseError("expected a nonempty list of numbers", field=path)
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ParseError("expected numbers", field=path) from None


def _constraints(value, path: str) -> tuple[ConstraintBlock, ConstraintBlock]:
    if not isinstance(value, list) or len(value) != 2:
        raise ParseError("expected exactly two component constraints", field=path)
    out = []
    for i, c in enumerate(value):
        if not isinstance(c, dict) or "base" not in c or "coef" not in c:
            raise ParseError(
                "components must be affine constraints with base/coef tables; "
                "free categorical components are not supported",
                field=f"{path}[{i}]",
            )
        out.append(
            ConstraintBlock(
                base=_floats(c["base"], f"{path}[{i}].base"),
                coef=_floats(c["coef"], f"{path}[{i}].coef"),
                lo=float(c["lo"]) if "lo" in c and c["lo"] is not None else None,
                hi=float(c["hi"]) if "hi" in c and c["hi"] is not None else None,
            )
        )
    return tuple(out)


def _parse_model(raw: dict) -> CausalModel | AntiCausalModel:
    direction = _require(raw, "direction", "model")
    if direction == CAUSAL:
        for side in ("source", "target"):
            block = _require(raw, side, "model")
            _require(block, "theta_x", f"model.{side}")
            _require(block, "theta_y_given_x", f"model.{side}")
        return CausalModel(
            source_theta_x=_floats(raw["source"]["theta_x"], "model.source.theta_x"),
            source_theta_y_given_x=_floats(
                raw["source"]["theta_y_given_x"], "model.source.theta_y_given_x"
            ),
            target_theta_x=_floats(raw["target"]["theta_x"], "model.target.theta_x"),
            target_theta_y_given_x=_floats(
                raw["target"]["theta_y_given_x"], "model.target.theta_y_given_x"
            ),
        )
    if direction == ANTICAUSAL:
        if "components" in raw:
            raise ParseError(
                "free categorical components are rejected; use affine `constraints`",
                field="model.components",
            )
        shared = _constraints(raw["constraints"], "model.constraints") if "constraints" in raw else None
        src_cons = (
            _constraints(raw["source_constraints"], "model.source_constraints")
            if "source_constraints" in raw
            else shared
        )
        tgt_cons = (
            _constraints(raw["target_constraints"], "model.target_constraints")
            if "target_constraints" in raw
            else shared
        )
        if src_cons is None or tgt_cons is None:
            raise ParseError("anticausal model needs `constraints` tables", field="model.constraints")
        sb = _require(raw, "source", "model")
        tb = _require(raw, "target", "model")
        return AntiCausalModel(
            source_constraints=src_cons,
            target_constraints=tgt_cons,
            source_theta_y=float(_require(sb, "theta_y", "model.source")),
            source_component_thetas=_floats(
                _require(sb, "component_thetas", "model.source"), "model.source.component_thetas"
            ),
            target_theta_y=float(_require(tb, "theta_y", "model.target")),
            target_component_thetas=_floats(
                _require(tb, "component_thetas", "model.target"), "model.target.component_thetas"
            ),
        )
    raise ParseError(f"unknown direction {direction!r}", field="model.direction")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate a config document."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        line = getattr(getattr(exc, "problem_mark", None), "line", None)
        raise ParseError(f"invalid YAML: {exc}", line=None if line is None else line + 1) from None
    if not isinstance(raw, dict):
        raise ParseError("config must be a mapping")

    model = _parse_model(_require(raw, "model", ""))
    scenario_name = str(_require(raw, "scenario", ""))

    eraw = raw.get("estimator", {}) or {}
    em_raw = eraw.get("em", {}) or {}
    grid_raw = eraw.get("grid", {}) or {}
    estimator = EstimatorBlock(
        kind=str(eraw.get("kind", "plugin_kt")),
        mle_clamp=float(eraw.get("mle_clamp", 1e-3)),
        em=EmBlock(
            tol=float(em_raw.get("tol", 1e-9)),
            max_iter=int(em_raw.get("max_iter", 500)),
            restarts=int(em_raw.get("restarts", 5)),
            inner_tol=float(em_raw.get("inner_tol", 1e-10)),
        ),
        grid=GridBlock(
            points_per_axis=int(grid_raw.get("points_per_axis", 201)),
            prior=str(grid_raw.get("prior", "jeffreys")),
        ),
    )
    if estimator.kind not in ESTIMATOR_KINDS:
        raise ParseError(f"unknown estimator kind {estimator.kind!r}", field="estimator.kind")

    sraw = _require(raw, "sweep", "")
    values = tuple(int(v) for v in _require(sraw, "values", "sweep"))
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ParseError("sweep values must be strictly increasing", field="sweep.values")
    axis = str(_require(sraw, "axis", "sweep"))
    if axis not in ("m", "n", "mn"):
        raise ParseError(f"axis must be m, n, or mn, got {axis!r}", field="sweep.axis")
    sweep = SweepBlock(
        axis=axis,
        values=values,
        fixed=int(sraw.get("fixed", 0)),
        repeats=int(sraw.get("repeats", 3000)),
        base_seed=int(sraw.get("base_seed", 0)),
    )
    if sweep.repeats < 1:
        raise ParseError("repeats must be >= 1", field="sweep.repeats")

    cfg = ExperimentConfig(
        model=model,
        scenario_name=scenario_name,
        estimator=estimator,
        sweep=sweep,
        output=str(raw["output"]) if raw.get("output") else None,
    )

    # semantic validation: tables, scenario equalities, estimator knobs
    try:
        pair = cfg.domain_pair()
        validate_scenario(cfg.scenario_obj(), pair)
        cfg.estimator_spec()
    except ParseError:
        raise
    except ScenarioParameterMismatch:
        raise
    except Exception as exc:  # model-level errors keep their own types
        raise type(exc)(f"{exc} [in config model block]") from None
    return cfg


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf8") as fh:
        return parse_config(fh.read())


def serialize_config(cfg: ExperimentConfig) -> str:
    """Render a config back to YAML; parse(serialize(cfg)) == cfg."""
    m = cfg.model
    if isinstance(m, CausalModel):
        model_raw = {
            "direction": CAUSAL,
            "source": {
                "theta_x": list(m.source_theta_x),
                "theta_y_given_x": list(m.source_theta_y_given_x),
            },
            "target": {
                "theta_x": list(m.target_theta_x),
                "theta_y_given_x": list(m.target_theta_y_given_x),
            },
        }
    else:
        def cons_raw(cons):
            out = []
            for c in cons:
                entry = {"base": list(c.base), "coef": list(c.coef)}
                if c.lo is not None:
                    entry["lo"] = c.lo
                if c.hi is not None:
                    entry["hi"] = c.hi
                out.append(entry)
            return out

        model_raw = {
            "direction": ANTICAUSAL,
            "source_constraints": cons_raw(m.source_constraints),
            "target_constraints": cons_raw(m.target_constraints),
            "source": {
                "theta_y": m.source_theta_y,
                "component_thetas": list(m.source_component_thetas),
            },
            "target": {
                "theta_y": m.target_theta_y,
                "component_thetas": list(m.target_component_thetas),
            },
        }
    raw = {
        "model": model_raw,
        "scenario": cfg.scenario_name,
        "estimator": {
            "kind": cfg.estimator.kind,
            "mle_clamp": cfg.estimator.mle_clamp,
            "em": asdict(cfg.estimator.em),
            "grid": asdict(cfg.estimator.grid),
        },
        "sweep": {
            "axis": cfg.sweep.axis,
            "values": list(cfg.sweep.values),
            "fixed": cfg.sweep.fixed,
            "repeats": cfg.sweep.repeats,
            "base_seed": cfg.sweep.base_seed,
        },
    }
    if cfg.output:
        raw["output"] = cfg.output
    return yaml.safe_dump(raw, sort_keys=False)
