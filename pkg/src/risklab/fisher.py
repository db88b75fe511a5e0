"""Analytic Fisher information for the toy families and asymptotic rate constants.

Per-observation information matrices:

* causal conditional block: the label mechanisms are independent Bernoullis
  selected by the cause, so the matrix is diagonal with entries
  ``weight(x) / (theta_x (1 - theta_x))`` under any cause-weighting.
* anti-causal labeled block: label prior and components decouple, giving
  ``diag(1/(ty(1-ty)), P(y=0) * sum coef^2/p0, P(y=1) * sum coef^2/p1)``.
* anti-causal unlabeled block: the full matrix of the mixture marginal,
  ``sum_x grad P(x) grad P(x)^T / P(x)`` with analytic gradients.

The rate constants assemble these blocks into the leading coefficient of
the excess risk for each shift scenario, i.e. the limit of risk times the
relevant sample-size expression.  Every analytic matrix is cross-checkable
against a central-difference Hessian of the frozen-truth expected
log-density (``numeric_fisher``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BoundaryParameter, StepTooLarge, UnsupportedScenario
from .models import (
    ANTICAUSAL,
    CAUSAL,
    AntiCausalParams,
    CausalParams,
    Categorical,
    DomainPair,
    Scenario,
    validate_scenario,
)
from .risk import conditional_risk_rows

SYMMETRY_ATOL = 1e-10


@dataclass(frozen=True)
class FisherReport:
    """Per-observation information matrix with parameter labels."""

    matrix: np.ndarray
    labels: tuple[str, ...]
    kind: str  # 'labeled_source' | 'labeled_target' | 'unlabeled_target'

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(self.labels):
            raise BoundaryParameter("matrix must be square with one label per row")
        if np.max(np.abs(m - m.T), initial=0.0) > SYMMETRY_ATOL:
            raise BoundaryParameter("information matrix must be symmetric")
        if m.size and np.min(np.linalg.eigvalsh((m + m.T) / 2)) < -SYMMETRY_ATOL:
            raise BoundaryParameter("information matrix must be positive semi-definite")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class RateConstant:
    """Limit of excess risk times the named sample-size expression."""

    scenario: str
    predicted_risk_times_size: float
    formula_id: str
    size_label: str


# ---------------------------------------------------------------------------
# analytic blocks
# ---------------------------------------------------------------------------


def fisher_causal_conditional(p: CausalParams, weight_marginal: Categorical, kind: str = "labeled_source") -> FisherReport:
    """Diagonal information of the label mechanisms under a cause-weighting.

    Zero-weight cells contribute zero information regardless of their
    Bernoulli mean; boundary means with positive weight are undefined.
    """
    if weight_marginal.size != p.k:
        raise BoundaryParameter("weight marginal must match the cause support size")
    t = p.theta_y_given_x
    w = weight_marginal.probs
    if np.any((w > 0) & ((t <= 0) | (t >= 1))):
        raise BoundaryParameter("Bernoulli mean at 0 or 1 with positive weight")
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = np.where(w > 0, w / (t * (1.0 - t)), 0.0)
    labels = tuple(f"theta_y|x{i}" for i in range(p.k))
    return FisherReport(np.diag(diag), labels, kind)


_ANTI_LABELS = ("theta_y", "theta_x|y0", "theta_x|y1")


def fisher_anticausal_labeled(p: AntiCausalParams, kind: str = "labeled_target") -> FisherReport:
    """Block-diagonal information of one labeled (feature, label) pair."""
    ty = p.theta_y
    if ty <= 0.0 or ty >= 1.0:
        raise BoundaryParameter("label prior at 0 or 1")
    diag = [1.0 / (ty * (1.0 - ty))]
    for weight, comp in zip((1.0 - ty, ty), p.components):
        probs = comp.probs()
        coef = comp.constraint.coef
        bad = (probs <= 0) & (coef != 0)
        if np.any(bad):
            raise BoundaryParameter("zero-mass cell with nonzero sensitivity")
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(coef != 0, coef**2 / np.where(probs > 0, probs, 1.0), 0.0)
        diag.append(weight * float(terms.sum()))
    return FisherReport(np.diag(diag), _ANTI_LABELS, kind)


def _marginal_and_gradients(p: AntiCausalParams) -> tuple[np.ndarray, np.ndarray]:
    probs0 = p.components[0].probs()
    probs1 = p.components[1].probs()
    mix = (1.0 - p.theta_y) * probs0 + p.theta_y * probs1
    grads = np.stack(
        [
            probs1 - probs0,
            (1.0 - p.theta_y) * p.components[0].constraint.coef,
            p.theta_y * p.components[1].constraint.coef,
        ]
    )  # (3, k)
    return mix, grads


def fisher_anticausal_unlabeled(p: AntiCausalParams, kind: str = "unlabeled_target") -> FisherReport:
    """Full information of one unlabeled feature under the mixture marginal.

    Zero-mass cells with zero gradient contribute nothing; a zero-mass cell
    with nonzero gradient makes the information infinite (boundary case).
    """
    mix, grads = _marginal_and_gradients(p)
    out = np.zeros((3, 3))
    for x in range(p.k):
        if mix[x] > 0:
            g = grads[:, x]
            out += np.outer(g, g) / mix[x]
        elif np.any(grads[:, x] != 0):
            raise BoundaryParameter(f"zero-mass cell x={x} with nonzero gradient")
    return FisherReport(out, _ANTI_LABELS, kind)


# ---------------------------------------------------------------------------
# finite-difference cross-check
# ---------------------------------------------------------------------------


def numeric_fisher(
    logp: Callable[[np.ndarray], float],
    theta: np.ndarray,
    h: float = 1e-5,
    lo: np.ndarray | None = None,
    hi: np.ndarray | None = None,
    richardson: bool = False,
) -> np.ndarray:
    """Negated central-difference Hessian of a frozen-truth expected log-density.

    ``logp`` maps a parameter vector to ``E_{x ~ truth}[log p(x | theta)]``
    with the truth held fixed; its negated Hessian at the truth is the
    information matrix.  When bounds are supplied, the evaluation cross
    requires an interior margin of at least ``2h``.  ``richardson`` (off by
    default) extrapolates the h and h/2 estimates, trading a second pass
    for fourth-order truncation near steep boundaries.
    """
    theta = np.asarray(theta, dtype=float)
    if h <= 0:
        raise StepTooLarge("h must be positive")
    if lo is not None and np.any(theta - 2 * h < np.asarray(lo, dtype=float)):
        raise StepTooLarge("theta closer than 2h to the lower bound")
    if hi is not None and np.any(theta + 2 * h > np.asarray(hi, dtype=float)):
        raise StepTooLarge("theta closer than 2h to the upper bound")
    if richardson:
        coarse = numeric_fisher(logp, theta, h, lo, hi, richardson=False)
        fine = numeric_fisher(logp, theta, h / 2, lo, hi, richardson=False)
        return (4.0 * fine - coarse) / 3.0
    d = theta.size
    hess = np.empty((d, d))
    f0 = logp(theta)

    def at(**offsets) -> float:
        t = theta.copy()
        for idx, mult in offsets.items():
            t[int(idx)] += mult * h
        return logp(t)

    for i in range(d):
        fp = at(**{str(i): 1})
        fm = at(**{str(i): -1})
        hess[i, i] = (fp + fm - 2.0 * f0) / h**2
        for j in range(i + 1, d):
            fpp = at(**{str(i): 1, str(j): 1})
            fpm = at(**{str(i): 1, str(j): -1})
            fmp = at(**{str(i): -1, str(j): 1})
            fmm = at(**{str(i): -1, str(j): -1})
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h**2)
    return -hess


def expected_logdensity_causal(truth: CausalParams, weight_marginal: Categorical) -> Callable[[np.ndarray], float]:
    """Frozen-truth expected log-density of the label mechanisms."""
    w = weight_marginal.probs
    t = truth.theta_y_given_x

    def logp(theta: np.ndarray) -> float:
        theta = np.asarray(theta, dtype=float)
        return float(np.sum(w * (t * np.log(theta) + (1 - t) * np.log(1 - theta))))

    return logp


def _anticausal_at(template: AntiCausalParams, theta: np.ndarray) -> AntiCausalParams:
    from .models import MixtureComponent

    return AntiCausalParams(
        float(theta[0]),
        (
            MixtureComponent(template.components[0].constraint, float(theta[1])),
            MixtureComponent(template.components[1].constraint, float(theta[2])),
        ),
    )


def expected_logdensity_anticausal_labeled(truth: AntiCausalParams) -> Callable[[np.ndarray], float]:
    truth_joint = truth.joint()

    def logp(theta: np.ndarray) -> float:
        cand = _anticausal_at(truth, np.asarray(theta, dtype=float))
        with np.errstate(divide="ignore"):
            logs = np.log(cand.joint())
        return float(np.sum(np.where(truth_joint > 0, truth_joint * logs, 0.0)))

    return logp


def expected_logdensity_anticausal_unlabeled(truth: AntiCausalParams) -> Callable[[np.ndarray], float]:
    truth_marg = truth.marginal_x()

    def logp(theta: np.ndarray) -> float:
        cand = _anticausal_at(truth, np.asarray(theta, dtype=float))
        with np.errstate(divide="ignore"):
            logs = np.log(cand.marginal_x())
        return float(np.sum(np.where(truth_marg > 0, truth_marg * logs, 0.0)))

    return logp


def anticausal_param_bounds(p: AntiCausalParams) -> tuple[np.ndarray, np.ndarray]:
    lo = np.array([0.0, p.components[0].constraint.feasible_lo, p.components[1].constraint.feasible_lo])
    hi = np.array([1.0, p.components[0].constraint.feasible_hi, p.components[1].constraint.feasible_hi])
    return lo, hi


# ---------------------------------------------------------------------------
# rate constants
# ---------------------------------------------------------------------------


def _plateau_risks(d: DomainPair) -> dict[str, float]:
    prior_q = np.full((1, d.target.k), 0.5)
    source_q = d.source.theta_y_given_x[None, :]
    return {
        "prior_predictive": float(conditional_risk_rows(d.target, prior_q)[0]),
        "source_truth": float(conditional_risk_rows(d.target, source_q)[0]),
    }


def rate_constants(s: Scenario, d: DomainPair) -> list[RateConstant]:
    """Leading excess-risk coefficients for a scenario.

    Each entry predicts the limit of risk multiplied by its ``size_label``
    expression.  The non-convergent causal scenarios have no such constant
    and raise, carrying the closed-form plateau values instead.
    """
    validate_scenario(s, d)
    if s.direction == CAUSAL:
        if not s.conditional_shared:
            raise UnsupportedScenario(
                f"causal {s.name}: excess risk does not vanish; see attached plateaus",
                plateaus=_plateau_risks(d),
            )
        i_t = fisher_causal_conditional(d.target, d.target.theta_x, kind="labeled_target")
        i_s = fisher_causal_conditional(d.source, d.source.theta_x, kind="labeled_source")
        diag_t = np.diag(i_t.matrix)
        diag_s = np.diag(i_s.matrix)
        if np.any((diag_t > 0) & (diag_s == 0)):
            raise BoundaryParameter("target mass on a cause value the source never emits")
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(diag_s > 0, diag_t / diag_s, 0.0)
        return [
            RateConstant(
                scenario=s.name,
                predicted_risk_times_size=float(ratio.sum()) / 2.0,
                formula_id="causal_source_trace",
                size_label="m",
            )
        ]

    i_t = fisher_anticausal_unlabeled(d.target).matrix
    i_xy = fisher_anticausal_labeled(d.target).matrix
    if s.name == "general":
        value = float(np.trace((i_xy - i_t) @ np.linalg.inv(i_t))) / 2.0
        return [RateConstant(s.name, value, "anticausal_unlabeled_trace", "n+1")]

    i_y = i_xy[0, 0]
    i_yu = i_t[0, 0]
    i_comp = i_xy[1:, 1:]
    i_comp_u = i_t[1:, 1:]

    if s.name == "conditional":
        comp_term = float(np.trace((i_comp - i_comp_u) @ np.linalg.inv(i_comp_u))) / 2.0
        label_gap = float(i_y - i_yu) / 2.0
        return [
            RateConstant(s.name, comp_term, "anticausal_conditional_components", "n+1"),
            RateConstant(
                s.name,
                label_gap,
                "anticausal_conditional_label",
                "(n+1)*Delta_u + m*Delta_s",
            ),
        ]
    if s.name == "target":
        label_term = float((i_y - i_yu) / i_yu) / 2.0
        ty_s = d.source.theta_y
        if ty_s <= 0 or ty_s >= 1:
            raise BoundaryParameter("source label prior at 0 or 1")
        delta_s = np.diag(fisher_anticausal_labeled(d.source, kind="labeled_source").matrix)[1:]
        comp_term = float(np.trace((i_comp - i_comp_u) @ np.linalg.inv(np.diag(delta_s)))) / 2.0
        return [
            RateConstant(s.name, label_term, "anticausal_target_label", "n+1"),
            RateConstant(s.name, comp_term, "anticausal_target_components", "m"),
        ]
    # ssl
    i_s = fisher_anticausal_labeled(d.source, kind="labeled_source").matrix
    value = float(np.trace((i_xy - i_t) @ np.linalg.inv(i_t + i_s)))
    return [RateConstant(s.name, value, "anticausal_ssl_equal_sizes", "m+n (with m = n)")]


def conditional_shift_deltas(d: DomainPair) -> tuple[float, float]:
    """(Delta_u, Delta_s) scalars of the conditional-shift label term."""
    i_t = fisher_anticausal_unlabeled(d.target).matrix
    cross = i_t[0:1, 1:]
    delta_u = float(i_t[0, 0] - (cross @ np.linalg.inv(i_t[1:, 1:]) @ cross.T)[0, 0])
    ty_s = d.source.theta_y
    delta_s = 1.0 / (ty_s * (1.0 - ty_s))
    return delta_u, delta_s
