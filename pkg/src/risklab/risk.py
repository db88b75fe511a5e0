"""Excess-risk evaluation under log-loss.

Per trial, the test-pair expectation is computed exactly over the finite
alphabet: the excess log-loss of a trained predictor q is

    sum_x P_t(x) * KL(Ber(p_x) || Ber(q_x)),    p_x = true P(Y=1 | x),

which is the expectation the Monte-Carlo estimate targets, with the test
pair integrated out analytically (pure variance reduction).  Monte Carlo
then averages over independent training draws.

Trials are vectorized: datasets are sampled as per-trial rows of keyed
Philox streams, reduced to cell counts, and fitted in batch.  Every trial's
value is a pure function of (config, seed, trial index), and the final
aggregation uses NumPy's pairwise summation over the trial-ordered array,
so results are byte-identical regardless of chunking or thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import rng
from .bayes import (
    PriorSpec,
    _grid_log_posterior_chunked,
    grid_basis,
    grid_log_posterior,
    grid_tables,
    normalize_log_weights,
    predictive_masses,
)
from .errors import (
    InfiniteRisk,
    NegativeCmi,
    TrialFailureRateExceeded,
    ZeroMarginalMass,
)
from .estimators import (
    EmOptions,
    EstimationPlan,
    em_anticausal_fit_batch,
    plan_from_scenario,
)
from .models import (
    ANTICAUSAL,
    CAUSAL,
    AntiCausalParams,
    CausalParams,
    DomainPair,
    Params,
    Scenario,
    anticausal_posterior_vector,
    direction_of,
    inverse_cdf,
    validate_scenario,
)

MAX_FAILURE_FRACTION = 0.10


# ---------------------------------------------------------------------------
# estimates and bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RiskEstimate:
    """Monte-Carlo excess-risk point in nats."""

    mean: float
    stderr: float
    repeats: int
    failures: int

    def __post_init__(self):
        if self.stderr < 0 or self.repeats < 1 or self.failures > self.repeats:
            raise TrialFailureRateExceeded("invalid RiskEstimate fields")


@dataclass(frozen=True)
class BoundSpec:
    """Loss-class parameter for the information bounds."""

    kind: str  # 'exp_concave' | 'bounded'
    param: float

    def __post_init__(self):
        if self.kind not in ("exp_concave", "bounded"):
            raise NegativeCmi(f"unknown bound kind {self.kind!r}")
        if not self.param > 0:
            raise NegativeCmi("bound parameter must be strictly positive")


def cmi_bound(cmi: float, b: BoundSpec) -> float:
    """Information bound on excess risk: cmi/beta, or M*sqrt(2*cmi)."""
    if cmi < 0:
        raise NegativeCmi(f"cmi={cmi} is negative")
    if b.kind == "exp_concave":
        return cmi / b.param
    return b.param * np.sqrt(2.0 * cmi)


# ---------------------------------------------------------------------------
# exact conditional excess risk
# ---------------------------------------------------------------------------


def _kl_bernoulli_terms(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Elementwise KL(Ber(p) || Ber(q)); inf where q is degenerate against p."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(p > 0, p * (np.log(p) - np.log(q)), 0.0)
        t0 = np.where(p < 1, (1 - p) * (np.log1p(-p) - np.log1p(-q)), 0.0)
    return t1 + t0


def target_cell_weights(params: Params) -> np.ndarray:
    """P_t(x) over the feature alphabet."""
    if direction_of(params) == CAUSAL:
        return params.theta_x.probs
    return params.marginal_x()


def target_conditional(params: Params) -> np.ndarray:
    """True P_t(Y=1 | x); NaN on zero-marginal cells (anti-causal only)."""
    if direction_of(params) == CAUSAL:
        return params.theta_y_given_x
    return anticausal_posterior_vector(params)


def excess_logloss_conditional(target_truth: Params, predictor: Callable[[int], float]) -> float:
    """Exact excess log-loss of a fixed predictor, in nats.

    Equals the P_t(x)-weighted sum of Bernoulli KL divergences between the
    true conditional and the predictor; the predictor need only be defined
    on cells of positive target mass.
    """
    weights = target_cell_weights(target_truth)
    truth = target_conditional(target_truth)
    total = 0.0
    for x in np.flatnonzero(weights > 0):
        q = float(predictor(int(x)))
        term = float(_kl_bernoulli_terms(truth[x], q))
        if not np.isfinite(term):
            raise InfiniteRisk(
                f"predictor q={q} at x={x} is degenerate against interior truth p={truth[x]}"
            )
        total += float(weights[x]) * term
    return total


def conditional_risk_rows(target_truth: Params, q_rows: np.ndarray) -> np.ndarray:
    """Exact conditional excess risk for a batch of predictor vectors.

    Rows with an infinite or undefined cell on positive-mass support come
    back as inf/NaN and are counted as trial failures by the caller.
    """
    weights = target_cell_weights(target_truth)
    truth = target_conditional(target_truth)
    live = weights > 0
    terms = _kl_bernoulli_terms(truth[None, live], q_rows[:, live])
    return terms @ weights[live]


# ---------------------------------------------------------------------------
# estimator dispatch
# ---------------------------------------------------------------------------

PLUGIN_KT = "plugin_kt"
PLUGIN_MLE = "plugin_mle"
BAYES_MIXTURE = "bayes_mixture"
SOURCE_TRUTH = "source_truth"

ESTIMATOR_KINDS = (PLUGIN_KT, PLUGIN_MLE, BAYES_MIXTURE, SOURCE_TRUTH)


@dataclass(frozen=True)
class EstimatorSpec:
    """Which predictor a trial trains, plus its knobs.

    ``source_truth`` plugs in the frozen true source parameters (no data
    used); it reproduces the non-convergent transfer plateaus.
    """

    kind: str = PLUGIN_KT
    mle_clamp: float = 1e-3
    em: EmOptions = field(default_factory=EmOptions)
    prior: PriorSpec = field(default_factory=PriorSpec)

    def __post_init__(self):
        if self.kind not in ESTIMATOR_KINDS:
            raise TrialFailureRateExceeded(f"unknown estimator kind {self.kind!r}")


def _as_estimator(estimator_kind) -> EstimatorSpec:
    if isinstance(estimator_kind, EstimatorSpec):
        return estimator_kind
    return EstimatorSpec(kind=str(estimator_kind))


def predictor_rows(
    d: DomainPair,
    plan: EstimationPlan,
    estimator: EstimatorSpec,
    src_counts: np.ndarray | None,
    unl_counts: np.ndarray | None,
    em_inits: np.ndarray | None = None,
    bayes_cache: dict | None = None,
) -> np.ndarray:
    """(B, k) matrix of per-trial predictive P(Y=1 | x) vectors.

    A pure function of the count arrays; shared by the Monte-Carlo engine
    and the exact-enumeration oracle so both evaluate the same predictors.
    """
    k = d.target.k
    if plan.direction == CAUSAL:
        batch = src_counts.shape[0] if src_counts is not None else (unl_counts.shape[0] if unl_counts is not None else 1)
        if estimator.kind == SOURCE_TRUTH:
            return np.broadcast_to(d.source.theta_y_given_x, (batch, k)).copy()
        if not plan.usable_source or src_counts is None:
            # label mechanism unidentified: fall back to the prior mean
            a, b = estimator.prior.beta_params()
            return np.full((batch, k), a / (a + b))
        ones = src_counts[:, 1, :]
        tot = src_counts.sum(axis=1)
        if estimator.kind == PLUGIN_KT:
            return (ones + 0.5) / (tot + 1.0)
        if estimator.kind == BAYES_MIXTURE:
            a, b = estimator.prior.beta_params()
            return (ones + a) / (tot + a + b)
        with np.errstate(invalid="ignore"):
            q = np.where(tot > 0, ones / np.maximum(tot, 1.0), 0.5)
        return np.clip(q, estimator.mle_clamp, 1.0 - estimator.mle_clamp)

    # anti-causal
    batch = unl_counts.shape[0]
    if estimator.kind == SOURCE_TRUTH:
        q = anticausal_posterior_vector(d.source)
        return np.broadcast_to(q, (batch, k)).copy()
    if estimator.kind == BAYES_MIXTURE:
        basis = grid_basis(d, estimator.prior)
        try:
            tables = grid_tables(d, estimator.prior)
        except Exception:
            tables = None  # grid too large to cache; build node masses per row
        out = np.empty((batch, k))
        for i in range(batch):
            scc = src_counts[i] if (src_counts is not None and plan.usable_source) else None
            key = (unl_counts[i].tobytes(), scc.tobytes() if scc is not None else b"")
            cached = bayes_cache.get(key) if bayes_cache is not None else None
            if cached is None:
                if tables is not None:
                    lw = grid_log_posterior(tables, unl_counts[i], scc, plan)
                else:
                    lw = _grid_log_posterior_chunked(basis, unl_counts[i], scc, plan)
                num, den = predictive_masses(basis, normalize_log_weights(lw))
                with np.errstate(invalid="ignore", divide="ignore"):
                    cached = np.where(den > 0, num / den, np.nan)
                if bayes_cache is not None:
                    bayes_cache[key] = cached
            out[i] = cached
        return out

    # EM plug-in (plugin_kt and plugin_mle share the fit; mle clamps q)
    scc = src_counts if plan.usable_source else None
    ty, t0, t1, _ll, _it, _cv = em_anticausal_fit_batch(
        unl_counts, scc, plan, d, estimator.em, em_inits
    )
    c0 = d.target.components[0].constraint
    c1 = d.target.components[1].constraint
    p0 = np.maximum(c0.base[None, :] + c0.coef[None, :] * t0[:, None], 0.0)
    p1 = np.maximum(c1.base[None, :] + c1.coef[None, :] * t1[:, None], 0.0)
    num = ty[:, None] * p1
    den = num + (1.0 - ty)[:, None] * p0
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.where(den > 0, num / den, np.nan)
    if estimator.kind == PLUGIN_MLE:
        q = np.clip(q, estimator.mle_clamp, 1.0 - estimator.mle_clamp)
    return q


# ---------------------------------------------------------------------------
# dataset sampling as counts
# ---------------------------------------------------------------------------


def _labeled_counts_causal(p: CausalParams, key_x, key_y, first: int, rows: int, m: int) -> np.ndarray:
    k = p.k
    if m == 0:
        return np.zeros((rows, 2, k))
    cum = np.cumsum(p.theta_x.probs)
    cum[-1] = 1.0
    xs = inverse_cdf(cum, rng.uniform_rows(key_x, first, rows, m))
    ys = rng.uniform_rows(key_y, first, rows, m) < p.theta_y_given_x[xs]
    flat = (ys.astype(np.int64) * k + xs) + (2 * k) * np.arange(rows)[:, None]
    return np.bincount(flat.ravel(), minlength=rows * 2 * k).reshape(rows, 2, k).astype(float)


def _labeled_counts_anticausal(p: AntiCausalParams, key_x, key_y, first: int, rows: int, m: int) -> np.ndarray:
    k = p.k
    if m == 0:
        return np.zeros((rows, 2, k))
    ys = (rng.uniform_rows(key_y, first, rows, m) < p.theta_y).astype(np.int64)
    cums = np.cumsum(p.component_probs(), axis=1)
    cums[:, -1] = 1.0
    ux = rng.uniform_rows(key_x, first, rows, m)
    xs = np.where(ys == 1, inverse_cdf(cums[1], ux), inverse_cdf(cums[0], ux))
    flat = (ys * k + xs) + (2 * k) * np.arange(rows)[:, None]
    return np.bincount(flat.ravel(), minlength=rows * 2 * k).reshape(rows, 2, k).astype(float)


def _unlabeled_counts_target(p: Params, key_x, key_y, first: int, rows: int, n: int) -> np.ndarray:
    k = p.k
    if n == 0:
        return np.zeros((rows, k))
    if direction_of(p) == CAUSAL:
        cum = np.cumsum(p.theta_x.probs)
        cum[-1] = 1.0
        xs = inverse_cdf(cum, rng.uniform_rows(key_x, first, rows, n))
    else:
        ys = (rng.uniform_rows(key_y, first, rows, n) < p.theta_y).astype(np.int64)
        cums = np.cumsum(p.component_probs(), axis=1)
        cums[:, -1] = 1.0
        ux = rng.uniform_rows(key_x, first, rows, n)
        xs = np.where(ys == 1, inverse_cdf(cums[1], ux), inverse_cdf(cums[0], ux))
    flat = xs + k * np.arange(rows)[:, None]
    return np.bincount(flat.ravel(), minlength=rows * k).reshape(rows, k).astype(float)


# ---------------------------------------------------------------------------
# the Monte-Carlo engine
# ---------------------------------------------------------------------------


def _chunk_rows(m: int, n: int) -> int:
    per_trial = max(m + n, 1)
    return max(16, min(4096, int(6_000_000 // per_trial)))


def excess_risk_mc(
    d: DomainPair,
    s: Scenario,
    m: int,
    n: int,
    estimator_kind,
    repeats: int,
    seed: int,
) -> RiskEstimate:
    """Monte-Carlo excess risk over training draws; deterministic given seed.

    Each trial samples a labeled source set of size m and an unlabeled
    target set of size n, fits per the scenario's plan, and evaluates the
    exact conditional excess log-loss.  Trials whose predictor degenerates
    (infinite risk) count as failures; more than 10% failures is an error.
    """
    if repeats < 1:
        raise TrialFailureRateExceeded("repeats must be >= 1")
    validate_scenario(s, d)
    plan = plan_from_scenario(s)
    estimator = _as_estimator(estimator_kind)

    key_sx = rng.derive_key(seed, "src_x")
    key_sy = rng.derive_key(seed, "src_y")
    key_tx = rng.derive_key(seed, "tgt_x")
    key_ty = rng.derive_key(seed, "tgt_y")
    key_em = rng.derive_key(seed, "em_init")

    needs_source = estimator.kind != SOURCE_TRUTH and plan.usable_source and m > 0
    needs_target = d.direction == ANTICAUSAL and estimator.kind != SOURCE_TRUTH
    needs_em = needs_target and estimator.kind in (PLUGIN_KT, PLUGIN_MLE)

    risks = np.empty(repeats)
    bayes_cache: dict = {}
    chunk = _chunk_rows(m if needs_source else 0, n if needs_target else 0)
    for start in range(0, repeats, chunk):
        rows = min(chunk, repeats - start)
        src = (
            _labeled_counts_causal(d.source, key_sx, key_sy, start, rows, m)
            if (needs_source and d.direction == CAUSAL)
            else _labeled_counts_anticausal(d.source, key_sx, key_sy, start, rows, m)
            if needs_source
            else None
        )
        unl = (
            _unlabeled_counts_target(d.target, key_tx, key_ty, start, rows, n)
            if needs_target
            else np.zeros((rows, d.target.k))
        )
        em_inits = None
        if needs_em:
            r = estimator.em.restarts
            em_inits = rng.uniform_rows(key_em, start, rows, 3 * r).reshape(rows, r, 3)
        q = predictor_rows(d, plan, estimator, src, unl, em_inits, bayes_cache)
        risks[start : start + rows] = conditional_risk_rows(d.target, q)

    valid = np.isfinite(risks)
    failures = int(repeats - valid.sum())
    if failures > MAX_FAILURE_FRACTION * repeats:
        raise TrialFailureRateExceeded(
            f"{failures}/{repeats} trials failed (infinite or undefined risk)"
        )
    vals = risks[valid]
    mean = float(np.sum(vals) / vals.size)
    if vals.size > 1 and float(vals.min()) != float(vals.max()):
        stderr = float(np.sqrt(np.sum((vals - mean) ** 2) / (vals.size - 1)) / np.sqrt(vals.size))
    else:
        # identical trials (e.g., data-free predictors) have exactly zero spread
        stderr = 0.0
    return RiskEstimate(mean=mean, stderr=stderr, repeats=repeats, failures=failures)
