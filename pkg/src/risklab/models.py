"""Discrete potential-outcome generative models for two causal directions.

Causal direction (feature causes label): a categorical cause ``X`` over k
values selects one of k Bernoulli potential outcomes, so the joint factorizes
as ``P(x, y) = theta_x[x] * Ber(theta_y_given_x[x])(y)``.

Anti-causal direction (label causes feature): a Bernoulli label selects one
of two categorical potential-outcome components over the k feature values,
``P(x, y) = Ber(theta_y)(y) * p_y(x)``.  Each component is an
affine-constrained categorical ``base + coef * theta`` with ``sum(coef) = 0``,
which pins the component shapes and removes the label-swapping ambiguity of
free mixtures: the label posterior is identified from unlabeled features
alone.

All types are immutable after construction; sampling is a pure function of
``(params, count, seed)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    IndexOutOfRange,
    InfeasibleConstraint,
    NegativeProbability,
    NotNormalized,
    ScenarioParameterMismatch,
    ThetaOutOfFeasibleRange,
    ZeroMarginalMass,
)
from . import rng

CAUSAL = "causal"
ANTICAUSAL = "anticausal"

NORMALIZATION_ATOL = 1e-12


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# probability vectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Categorical:
    """Probability vector over a finite support."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen_array(self.probs))
        if self.probs.ndim != 1 or self.probs.size == 0:
            raise NegativeProbability("probability vector must be a nonempty 1-D array")
        if np.any(self.probs < 0):
            raise NegativeProbability(f"negative entry in probability vector: {self.probs}")
        total = float(np.sum(self.probs))
        if abs(total - 1.0) > NORMALIZATION_ATOL:
            raise NotNormalized(f"probabilities sum to {total!r}, not 1")

    @property
    def size(self) -> int:
        return int(self.probs.size)

    def __eq__(self, other):
        return isinstance(other, Categorical) and np.array_equal(self.probs, other.probs)


def make_categorical(probs) -> Categorical:
    """Validate a raw vector into a :class:`Categorical`."""
    return Categorical(np.asarray(probs, dtype=float))


# ---------------------------------------------------------------------------
# affine-constrained mixture components
# ---------------------------------------------------------------------------


def _natural_interval(base: np.ndarray, coef: np.ndarray) -> tuple[float, float]:
    """Closed interval on which every entry of ``base + coef*theta`` is >= 0."""
    lo, hi = -np.inf, np.inf
    for b, c in zip(base, coef):
        if c > 0:
            lo = max(lo, -b / c)
        elif c < 0:
            hi = min(hi, -b / c)
    return lo, hi


@dataclass(frozen=True, eq=False)
class AffineConstraint:
    """One-parameter categorical family ``base + coef * theta``.

    ``coef`` sums to zero so the family stays normalized; the feasible
    interval is the nonnegativity region of all entries, optionally narrowed
    by user bounds.
    """

    base: np.ndarray
    coef: np.ndarray
    feasible_lo: float
    feasible_hi: float

    def __post_init__(self):
        object.__setattr__(self, "base", _frozen_array(self.base))
        object.__setattr__(self, "coef", _frozen_array(self.coef))
        if self.base.shape != self.coef.shape or self.base.ndim != 1:
            raise InfeasibleConstraint("base and coef must be 1-D vectors of equal length")
        if abs(float(np.sum(self.base)) - 1.0) > NORMALIZATION_ATOL:
            raise NotNormalized(f"constraint base sums to {float(np.sum(self.base))!r}, not 1")
        if abs(float(np.sum(self.coef))) > NORMALIZATION_ATOL:
            raise InfeasibleConstraint("coef entries must sum to 0")
        if not self.feasible_lo <= self.feasible_hi:
            raise InfeasibleConstraint(
                f"empty feasible interval [{self.feasible_lo}, {self.feasible_hi}]"
            )
        for theta in (self.feasible_lo, self.feasible_hi):
            if np.min(self.base + self.coef * theta) < -NORMALIZATION_ATOL:
                raise InfeasibleConstraint(
                    f"entries negative at declared endpoint theta={theta}"
                )

    @property
    def size(self) -> int:
        return int(self.base.size)

    def __eq__(self, other):
        return (
            isinstance(other, AffineConstraint)
            and np.array_equal(self.base, other.base)
            and np.array_equal(self.coef, other.coef)
            and self.feasible_lo == other.feasible_lo
            and self.feasible_hi == other.feasible_hi
        )


def affine_constraint(base, coef, lo: float | None = None, hi: float | None = None) -> AffineConstraint:
    """Build a constraint, deriving the feasible interval automatically.

    User bounds may only narrow the natural nonnegativity interval.
    """
    base = np.asarray(base, dtype=float)
    coef = np.asarray(coef, dtype=float)
    nat_lo, nat_hi = _natural_interval(base, coef)
    if not np.isfinite(nat_lo) or not np.isfinite(nat_hi):
        raise InfeasibleConstraint("feasible interval is unbounded; coef must mix signs")
    use_lo = nat_lo if lo is None else max(lo, nat_lo)
    use_hi = nat_hi if hi is None else min(hi, nat_hi)
    if use_lo > use_hi:
        raise InfeasibleConstraint(f"narrowed interval [{use_lo}, {use_hi}] is empty")
    return AffineConstraint(base, coef, float(use_lo), float(use_hi))


def realize_constraint(c: AffineConstraint, theta: float) -> Categorical:
    """Evaluate the component at ``theta`` (endpoints included)."""
    if not c.feasible_lo <= theta <= c.feasible_hi:
        raise ThetaOutOfFeasibleRange(
            f"theta={theta} outside feasible [{c.feasible_lo}, {c.feasible_hi}]"
        )
    probs = c.base + c.coef * theta
    # Endpoint arithmetic can undershoot zero by an ulp; the construction
    # guarantees the exact value is nonnegative.
    probs = np.where(probs < 0, 0.0, probs)
    return Categorical(probs)


# ---------------------------------------------------------------------------
# parameter bundles
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CausalParams:
    """Cause marginal over k values plus one Bernoulli mean per cause value."""

    theta_x: Categorical
    theta_y_given_x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta_y_given_x", _frozen_array(self.theta_y_given_x))
        if self.theta_y_given_x.shape != (self.theta_x.size,):
            raise IndexOutOfRange("theta_y_given_x length must equal the cause support size")
        if np.any(self.theta_y_given_x < 0) or np.any(self.theta_y_given_x > 1):
            raise NegativeProbability("Bernoulli means must lie in [0, 1]")

    @property
    def k(self) -> int:
        return self.theta_x.size

    def joint(self) -> np.ndarray:
        """(k, 2) joint cell probabilities P(x, y)."""
        t = self.theta_y_given_x
        return self.theta_x.probs[:, None] * np.stack([1.0 - t, t], axis=1)

    def __eq__(self, other):
        return (
            isinstance(other, CausalParams)
            and self.theta_x == other.theta_x
            and np.array_equal(self.theta_y_given_x, other.theta_y_given_x)
        )


@dataclass(frozen=True)
class MixtureComponent:
    """Affine-constrained potential-outcome component and its parameter."""

    constraint: AffineConstraint
    theta: float

    def __post_init__(self):
        if not self.constraint.feasible_lo <= self.theta <= self.constraint.feasible_hi:
            raise ThetaOutOfFeasibleRange(
                f"component theta={self.theta} outside "
                f"[{self.constraint.feasible_lo}, {self.constraint.feasible_hi}]"
            )

    def probs(self) -> np.ndarray:
        return realize_constraint(self.constraint, self.theta).probs


@dataclass(frozen=True, eq=False)
class AntiCausalParams:
    """Bernoulli label prior plus two constrained feature components.

    ``components[i]`` is the feature distribution given label ``i``; the
    Bernoulli label parameterization fixes the label alphabet at two values.
    """

    theta_y: float
    components: tuple[MixtureComponent, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not 0.0 <= self.theta_y <= 1.0:
            raise NegativeProbability(f"theta_y={self.theta_y} outside [0, 1]")
        if len(self.components) != 2:
            raise IndexOutOfRange("binary labels require exactly two components")
        sizes = {c.constraint.size for c in self.components}
        if len(sizes) != 1:
            raise IndexOutOfRange("components must share one feature support size")

    @property
    def k(self) -> int:
        return self.components[0].constraint.size

    def label_prior(self) -> np.ndarray:
        return np.array([1.0 - self.theta_y, self.theta_y])

    def component_probs(self) -> np.ndarray:
        """(2, k) matrix of per-label feature distributions."""
        return np.stack([c.probs() for c in self.components])

    def marginal_x(self) -> np.ndarray:
        return self.label_prior() @ self.component_probs()

    def joint(self) -> np.ndarray:
        """(2, k) joint cell probabilities P(y, x)."""
        return self.label_prior()[:, None] * self.component_probs()

    def __eq__(self, other):
        return (
            isinstance(other, AntiCausalParams)
            and self.theta_y == other.theta_y
            and self.components == other.components
        )


Params = CausalParams | AntiCausalParams


def direction_of(params: Params) -> str:
    return CAUSAL if isinstance(params, CausalParams) else ANTICAUSAL


# ---------------------------------------------------------------------------
# conditional label distributions
# ---------------------------------------------------------------------------


def causal_label_dist(p: CausalParams, x: int) -> float:
    """P(Y=1 | X=x): the selected potential outcome's Bernoulli mean."""
    if not 0 <= x < p.k:
        raise IndexOutOfRange(f"x={x} outside support of size {p.k}")
    return float(p.theta_y_given_x[x])


def anticausal_label_posterior(p: AntiCausalParams, x: int) -> float:
    """P(Y=1 | X=x) by Bayes rule over the two components."""
    if not 0 <= x < p.k:
        raise IndexOutOfRange(f"x={x} outside support of size {p.k}")
    probs = p.component_probs()
    num = p.theta_y * probs[1, x]
    den = num + (1.0 - p.theta_y) * probs[0, x]
    if den == 0.0:
        raise ZeroMarginalMass(f"x={x} has zero probability under both components")
    return float(num / den)


def anticausal_posterior_vector(p: AntiCausalParams) -> np.ndarray:
    """P(Y=1 | X=x) for every x; zero-marginal cells map to NaN."""
    probs = p.component_probs()
    num = p.theta_y * probs[1]
    den = num + (1.0 - p.theta_y) * probs[0]
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, num / den, np.nan)
    return out


# ---------------------------------------------------------------------------
# datasets and sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Paired (feature index, label index) observations."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xs", _frozen_array(self.xs, dtype=np.int64))
        object.__setattr__(self, "ys", _frozen_array(self.ys, dtype=np.int64))
        if self.xs.shape != self.ys.shape or self.xs.ndim != 1:
            raise IndexOutOfRange("xs and ys must be 1-D arrays of equal length")
        if self.xs.size and (self.xs.min() < 0 or self.ys.min() < 0):
            raise IndexOutOfRange("negative index in dataset")

    def __len__(self) -> int:
        return int(self.xs.size)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.xs.tolist(), self.ys.tolist()))

    def __eq__(self, other):
        return (
            isinstance(other, LabeledDataset)
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.ys, other.ys)
        )


@dataclass(frozen=True, eq=False)
class UnlabeledDataset:
    """Feature-only observations."""

    xs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xs", _frozen_array(self.xs, dtype=np.int64))
        if self.xs.ndim != 1:
            raise IndexOutOfRange("xs must be a 1-D array")
        if self.xs.size and self.xs.min() < 0:
            raise IndexOutOfRange("negative index in dataset")

    def __len__(self) -> int:
        return int(self.xs.size)

    def __eq__(self, other):
        return isinstance(other, UnlabeledDataset) and np.array_equal(self.xs, other.xs)


def inverse_cdf(cumulative: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Map uniforms through the categorical inverse CDF."""
    return np.searchsorted(cumulative, u, side="right").astype(np.int64)


def sample_causal(p: CausalParams, count: int, seed: int) -> LabeledDataset:
    """IID pairs: draw the cause, then the selected potential outcome."""
    if count < 0:
        raise IndexOutOfRange("count must be nonnegative")
    gen = rng.generator(seed, "sample", CAUSAL)
    cum = np.cumsum(p.theta_x.probs)
    cum[-1] = 1.0
    xs = inverse_cdf(cum, gen.random(count))
    ys = (gen.random(count) < p.theta_y_given_x[xs]).astype(np.int64)
    return LabeledDataset(xs, ys)


def sample_anticausal(p: AntiCausalParams, count: int, seed: int) -> LabeledDataset:
    """IID pairs: draw the label, then the selected component's feature."""
    if count < 0:
        raise IndexOutOfRange("count must be nonnegative")
    gen = rng.generator(seed, "sample", ANTICAUSAL)
    ys = (gen.random(count) < p.theta_y).astype(np.int64)
    cums = np.cumsum(p.component_probs(), axis=1)
    cums[:, -1] = 1.0
    u = gen.random(count)
    x0 = inverse_cdf(cums[0], u)
    x1 = inverse_cdf(cums[1], u)
    xs = np.where(ys == 1, x1, x0)
    return LabeledDataset(xs, ys)


def strip_labels(d: LabeledDataset) -> UnlabeledDataset:
    """Project a labeled dataset onto its features, order preserved."""
    return UnlabeledDataset(d.xs)


# ---------------------------------------------------------------------------
# shift scenarios
# ---------------------------------------------------------------------------

_SCENARIO_NAMES = {
    CAUSAL: {
        (False, False): "general",
        (False, True): "covariate",
        (True, False): "concept",
        (True, True): "ssl",
    },
    ANTICAUSAL: {
        (False, False): "general",
        (False, True): "target",
        (True, False): "conditional",
        (True, True): "ssl",
    },
}


@dataclass(frozen=True)
class Scenario:
    """One distribution-shift regime.

    ``marginal_shared`` ties the cause/label marginal across domains;
    ``conditional_shared`` ties the potential-outcome parameters.  The name
    is redundant with the booleans and validated against them.
    """

    direction: str
    marginal_shared: bool
    conditional_shared: bool
    name: str

    def __post_init__(self):
        if self.direction not in (CAUSAL, ANTICAUSAL):
            raise ScenarioParameterMismatch(f"unknown direction {self.direction!r}")
        expected = _SCENARIO_NAMES[self.direction][(self.marginal_shared, self.conditional_shared)]
        if self.name != expected:
            raise ScenarioParameterMismatch(
                f"scenario name {self.name!r} inconsistent with shared flags; expected {expected!r}"
            )


def scenario(direction: str, name: str) -> Scenario:
    """Look up a scenario by its per-direction name."""
    if direction not in _SCENARIO_NAMES:
        raise ScenarioParameterMismatch(f"unknown direction {direction!r}")
    for flags, nm in _SCENARIO_NAMES[direction].items():
        if nm == name:
            return Scenario(direction, flags[0], flags[1], name)
    raise ScenarioParameterMismatch(f"unknown scenario {name!r} for direction {direction!r}")


ALL_SCENARIOS = tuple(
    scenario(d, nm) for d in (CAUSAL, ANTICAUSAL) for nm in _SCENARIO_NAMES[d].values()
)


@dataclass(frozen=True)
class DomainPair:
    """Source and target parameter bundles of one causal direction."""

    source: Params
    target: Params
    direction: str

    def __post_init__(self):
        if direction_of(self.source) != self.direction or direction_of(self.target) != self.direction:
            raise ScenarioParameterMismatch("source/target kind must match the declared direction")
        if isinstance(self.source, CausalParams):
            if self.source.k != self.target.k:
                raise ScenarioParameterMismatch("source and target alphabet sizes differ")
        else:
            if self.source.k != self.target.k:
                raise ScenarioParameterMismatch("source and target alphabet sizes differ")


def validate_scenario(s: Scenario, d: DomainPair) -> None:
    """Check the parameter equalities implied by the scenario, element-wise.

    Only the equalities are enforced; declared-shifted parameters are allowed
    to coincide (the plan is then merely conservative).
    """
    if s.direction != d.direction:
        raise ScenarioParameterMismatch(
            f"scenario direction {s.direction!r} != pair direction {d.direction!r}"
        )
    if s.direction == CAUSAL:
        src, tgt = d.source, d.target
        if s.marginal_shared and not np.array_equal(src.theta_x.probs, tgt.theta_x.probs):
            raise ScenarioParameterMismatch(
                "scenario requires equal cause marginals but theta_x differs"
            )
        if s.conditional_shared and not np.array_equal(src.theta_y_given_x, tgt.theta_y_given_x):
            raise ScenarioParameterMismatch(
                "scenario requires equal label mechanisms but theta_y_given_x differs"
            )
    else:
        src, tgt = d.source, d.target
        if s.marginal_shared and src.theta_y != tgt.theta_y:
            raise ScenarioParameterMismatch(
                "scenario requires equal label priors but theta_y differs"
            )
        if s.conditional_shared:
            for i, (cs, ct) in enumerate(zip(src.components, tgt.components)):
                if cs.constraint != ct.constraint:
                    raise ScenarioParameterMismatch(
                        f"scenario requires shared component {i} but constraint tables differ"
                    )
                if cs.theta != ct.theta:
                    raise ScenarioParameterMismatch(
                        f"scenario requires equal component {i} parameters "
                        f"but {cs.theta} != {ct.theta}"
                    )
