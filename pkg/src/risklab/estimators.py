"""Plug-in parameter estimation.

Causal direction: add-1/2 smoothed frequency estimates (the posterior
predictive mean under a symmetric Beta(1/2, 1/2) prior), which keep every
estimated Bernoulli mean strictly inside (0, 1) and hence the downstream
log-loss finite.

Anti-causal direction: maximum likelihood over the joint labeled+unlabeled
likelihood via EM.  The E-step assigns label responsibilities to unlabeled
features; the M-step solves the label prior in closed form and each
component scalar by golden-section search on its weighted log-likelihood
over the closed feasible interval.  Data pooling across domains follows the
scenario's estimation plan: shared scalars appear once in the likelihood.

The batched entry points operate on count matrices with one row per fit so
that thousands of Monte-Carlo trials run as vectorized array programs; the
public single-fit operations are thin wrappers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AllCountsZero, InfeasibleInitialization
from .models import (
    ANTICAUSAL,
    CAUSAL,
    AffineConstraint,
    AntiCausalParams,
    CausalParams,
    Categorical,
    DomainPair,
    LabeledDataset,
    MixtureComponent,
    Params,
    Scenario,
    UnlabeledDataset,
    direction_of,
)
from . import rng

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_TINY = 1e-300


# ---------------------------------------------------------------------------
# estimation plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimationPlan:
    """What the scenario lets each data resource estimate.

    ``pooled_marginal``: the cause/label marginal is tied across domains and
    estimated from pooled data.  ``pooled_components``: the potential-outcome
    parameters are tied and estimated jointly.  ``usable_source``: the source
    sample carries any information about the target predictive at all.
    """

    direction: str
    pooled_marginal: bool
    pooled_components: bool
    usable_source: bool


def plan_from_scenario(s: Scenario) -> EstimationPlan:
    """Derive the pooling policy implied by a shift scenario.

    Causal direction: unlabeled targets never inform the label mechanism, so
    the source is usable exactly when the conditionals are shared.
    Anti-causal: unlabeled targets inform everything; the source helps
    whenever it shares at least one parameter with the target.
    """
    if s.direction == CAUSAL:
        usable = s.conditional_shared
    else:
        usable = s.marginal_shared or s.conditional_shared
    return EstimationPlan(
        direction=s.direction,
        pooled_marginal=s.marginal_shared,
        pooled_components=s.conditional_shared,
        usable_source=usable,
    )


@dataclass(frozen=True)
class EmOptions:
    """EM stopping and restart policy."""

    tol: float = 1e-9
    max_iter: int = 500
    restarts: int = 5
    inner_tol: float = 1e-10

    def __post_init__(self):
        if not (self.tol > 0 and self.max_iter >= 1 and self.restarts >= 1 and self.inner_tol > 0):
            raise InfeasibleInitialization("EmOptions requires tol>0, max_iter>=1, restarts>=1, inner_tol>0")


@dataclass(frozen=True)
class FitResult:
    """Target-domain estimate plus the maximized joint log-likelihood."""

    params: Params
    loglik: float
    iterations: int
    converged: bool
    source_params: Params | None = None
    loglik_trace: tuple[float, ...] | None = None


# ---------------------------------------------------------------------------
# causal direction: smoothed frequencies
# ---------------------------------------------------------------------------


def kt_causal_fit(source: LabeledDataset, k: int) -> CausalParams:
    """Add-1/2 smoothed cell frequencies for the causal model.

    Per cause value x: ``theta_y_given_x[x] = (ones_x + 1/2) / (count_x + 1)``;
    the cause marginal gets add-1/2 smoothing over its k cells.
    """
    if k < 1:
        raise AllCountsZero("k must be >= 1")
    counts = np.bincount(source.xs, minlength=k).astype(float)
    ones = np.bincount(source.xs, weights=source.ys.astype(float), minlength=k)
    theta_yx = (ones + 0.5) / (counts + 1.0)
    theta_x = (counts + 0.5) / (counts.sum() + 0.5 * k)
    return CausalParams(Categorical(theta_x), theta_yx)


def raw_mle_causal_fit(source: LabeledDataset, k: int, clamp: float = 1e-3) -> CausalParams:
    """Unsmoothed frequencies, Bernoulli means clamped into [clamp, 1-clamp].

    Empty cells fall back to 1/2.  With ``clamp=0`` the raw estimate can sit
    at 0 or 1 and produce infinite log-loss downstream; that mode exists only
    for figure reproduction.
    """
    counts = np.bincount(source.xs, minlength=k).astype(float)
    ones = np.bincount(source.xs, weights=source.ys.astype(float), minlength=k)
    with np.errstate(invalid="ignore"):
        theta_yx = np.where(counts > 0, ones / np.maximum(counts, 1.0), 0.5)
    theta_yx = np.clip(theta_yx, clamp, 1.0 - clamp)
    total = counts.sum()
    theta_x = counts / total if total > 0 else np.full(k, 1.0 / k)
    return CausalParams(Categorical(theta_x), theta_yx)


# ---------------------------------------------------------------------------
# golden-section maximization of weighted component likelihoods
# ---------------------------------------------------------------------------


def _weighted_loglik(counts: np.ndarray, base: np.ndarray, coef: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """sum_x counts[:, x] * log(base_x + coef_x * theta) per row."""
    p = np.maximum(base[None, :] + coef[None, :] * theta[:, None], _TINY)
    return np.einsum("bk,bk->b", counts, np.log(p))


def golden_section_batch(
    counts: np.ndarray,
    base: np.ndarray,
    coef: np.ndarray,
    lo: float,
    hi: float,
    inner_tol: float,
) -> np.ndarray:
    """Row-wise maximizer of the weighted log-likelihood on [lo, hi].

    The objective is concave in theta (sum of logs of affine functions), so
    golden-section converges to the global maximum; the bracket shrinks to
    ``inner_tol``, endpoints included.  Exactly flat likelihoods resolve to
    the lower theta: candidates are only accepted on strict improvement and
    the low endpoint is seeded first.
    """
    if hi <= lo:
        return np.full(counts.shape[0], lo)
    n_rows = counts.shape[0]
    best_t = np.full(n_rows, lo)
    best_f = _weighted_loglik(counts, base, coef, best_t)
    f_hi = _weighted_loglik(counts, base, coef, np.full(n_rows, hi))
    take = f_hi > best_f
    best_t[take] = hi
    best_f[take] = f_hi[take]

    a = np.full(n_rows, lo)
    b = np.full(n_rows, hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = _weighted_loglik(counts, base, coef, c)
    fd = _weighted_loglik(counts, base, coef, d)
    n_iter = max(0, int(math.ceil(math.log(inner_tol / (hi - lo)) / math.log(_INVPHI))))
    for _ in range(n_iter):
        # keep-left on ties so flat stretches collapse toward low theta
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        width = b - a
        c_new = b - _INVPHI * width
        d_new = a + _INVPHI * width
        t_eval = np.where(left, c_new, d_new)
        f_eval = _weighted_loglik(counts, base, coef, t_eval)
        fc, fd = np.where(left, f_eval, fd), np.where(left, fc, f_eval)
        c, d = c_new, d_new
        for t_cand, f_cand in ((c, fc), (d, fd)):
            take = f_cand > best_f
            best_t[take] = t_cand[take]
            best_f[take] = f_cand[take]
    return best_t


def mle_constrained_component(counts, c: AffineConstraint, inner_tol: float = 1e-10) -> float:
    """Constrained 1-D maximum-likelihood parameter for one component."""
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (c.size,):
        raise AllCountsZero(f"counts must have length {c.size}")
    if counts.sum() <= 0:
        raise AllCountsZero("all counts are zero; the likelihood is flat")
    theta = golden_section_batch(
        counts[None, :], c.base, c.coef, c.feasible_lo, c.feasible_hi, inner_tol
    )
    return float(theta[0])


# ---------------------------------------------------------------------------
# anti-causal EM over the joint likelihood
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _EmProblem:
    """Count-space view of one batch of EM fits (one row per fit)."""

    unlabeled: np.ndarray          # (B, k) target feature counts
    source_labels: np.ndarray | None  # (B, 2) source label counts when the prior is pooled
    source_cells: np.ndarray | None   # (B, 2, k) source cell counts when components are pooled
    constraints: tuple[AffineConstraint, AffineConstraint]


def _em_loglik(prob: _EmProblem, theta_y, theta0, theta1) -> np.ndarray:
    c0, c1 = prob.constraints
    p0 = np.maximum(c0.base[None, :] + c0.coef[None, :] * theta0[:, None], _TINY)
    p1 = np.maximum(c1.base[None, :] + c1.coef[None, :] * theta1[:, None], _TINY)
    mix = np.maximum((1.0 - theta_y)[:, None] * p0 + theta_y[:, None] * p1, _TINY)
    ll = np.einsum("bk,bk->b", prob.unlabeled, np.log(mix))
    if prob.source_labels is not None:
        ll = ll + prob.source_labels[:, 1] * np.log(np.maximum(theta_y, _TINY))
        ll = ll + prob.source_labels[:, 0] * np.log(np.maximum(1.0 - theta_y, _TINY))
    if prob.source_cells is not None:
        ll = ll + np.einsum("bk,bk->b", prob.source_cells[:, 0, :], np.log(p0))
        ll = ll + np.einsum("bk,bk->b", prob.source_cells[:, 1, :], np.log(p1))
    return ll


def _em_run(
    prob: _EmProblem,
    theta_y: np.ndarray,
    theta0: np.ndarray,
    theta1: np.ndarray,
    opts: EmOptions,
    trace: list | None = None,
):
    """One EM pass from given starts; returns per-row estimates and loglik."""
    c0, c1 = prob.constraints
    n_rows = prob.unlabeled.shape[0]
    n_unl = prob.unlabeled.sum(axis=1).astype(float)

    out_y = theta_y.copy()
    out_0 = theta0.copy()
    out_1 = theta1.copy()
    out_ll = np.full(n_rows, -np.inf)
    out_iters = np.zeros(n_rows, dtype=int)
    out_conv = np.zeros(n_rows, dtype=bool)

    idx = np.arange(n_rows)
    unl = prob.unlabeled
    slab = prob.source_labels
    scell = prob.source_cells
    ty, t0, t1 = theta_y.copy(), theta0.copy(), theta1.copy()
    ll_prev = np.full(n_rows, -np.inf)

    for it in range(opts.max_iter):
        p0 = np.maximum(c0.base[None, :] + c0.coef[None, :] * t0[:, None], 0.0)
        p1 = np.maximum(c1.base[None, :] + c1.coef[None, :] * t1[:, None], 0.0)
        mix = (1.0 - ty)[:, None] * p0 + ty[:, None] * p1
        with np.errstate(divide="ignore", invalid="ignore"):
            resp1 = np.where(mix > 0, ty[:, None] * p1 / np.maximum(mix, _TINY), 0.5)
        w1 = unl * resp1
        w0 = unl * (1.0 - resp1)

        num = w1.sum(axis=1)
        den = n_unl[idx].copy()
        if slab is not None:
            num = num + slab[:, 1]
            den = den + slab.sum(axis=1)
        ty = np.where(den > 0, num / np.maximum(den, 1.0), 0.5)

        cnt0, cnt1 = w0, w1
        if scell is not None:
            cnt0 = cnt0 + scell[:, 0, :]
            cnt1 = cnt1 + scell[:, 1, :]
        t0 = golden_section_batch(cnt0, c0.base, c0.coef, c0.feasible_lo, c0.feasible_hi, opts.inner_tol)
        t1 = golden_section_batch(cnt1, c1.base, c1.coef, c1.feasible_lo, c1.feasible_hi, opts.inner_tol)

        ll = _em_loglik(_EmProblem(unl, slab, scell, prob.constraints), ty, t0, t1)
        if trace is not None:
            trace.append(float(ll[0]))
        gain = ll - ll_prev[idx]
        done = gain <= opts.tol

        out_ll[idx] = ll
        out_iters[idx] = it + 1
        if done.any():
            fin = idx[done]
            out_y[fin], out_0[fin], out_1[fin] = ty[done], t0[done], t1[done]
            out_conv[fin] = True
            keep = ~done
            idx = idx[keep]
            if idx.size == 0:
                break
            ty, t0, t1 = ty[keep], t0[keep], t1[keep]
            unl = unl[keep]
            slab = slab[keep] if slab is not None else None
            scell = scell[keep] if scell is not None else None
            ll_prev[idx] = ll[keep]
        else:
            ll_prev[idx] = ll

    if idx.size:
        out_y[idx], out_0[idx], out_1[idx] = ty, t0, t1
    return out_y, out_0, out_1, out_ll, out_iters, out_conv


def em_anticausal_fit_batch(
    unlabeled_counts: np.ndarray,
    source_cell_counts: np.ndarray | None,
    plan: EstimationPlan,
    templates: DomainPair,
    opts: EmOptions,
    init_uniforms: np.ndarray,
):
    """Batched EM: one row per fit, best of ``opts.restarts`` starts.

    ``init_uniforms`` has shape (B, restarts, 3) of U(0,1) draws mapped onto
    the feasible box; restart ties resolve to the lowest restart index.
    Returns (theta_y, theta0, theta1, loglik, iterations, converged) arrays
    for the target-domain scalars plus the constant source-only likelihood
    contribution per row.
    """
    target = templates.target
    cons = (target.components[0].constraint, target.components[1].constraint)
    B = unlabeled_counts.shape[0]

    slab = scell = None
    const_ll = np.zeros(B)
    if plan.usable_source and source_cell_counts is not None:
        src_labels = source_cell_counts.sum(axis=2)  # (B, 2)
        if plan.pooled_marginal:
            slab = src_labels
        else:
            # source-specific label prior: closed-form MLE, constant offset
            m_tot = src_labels.sum(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                ty_s = np.where(m_tot > 0, src_labels[:, 1] / np.maximum(m_tot, 1.0), 0.5)
            for y in (0, 1):
                p = np.where(y == 1, ty_s, 1.0 - ty_s)
                const_ll += np.where(src_labels[:, y] > 0, src_labels[:, y] * np.log(np.maximum(p, _TINY)), 0.0)
        if plan.pooled_components:
            scell = source_cell_counts
        else:
            # source-specific components: decoupled 1-D MLEs, constant offset
            src_cons = (templates.source.components[0].constraint, templates.source.components[1].constraint)
            for y, cy in enumerate(src_cons):
                cnts = source_cell_counts[:, y, :]
                th = golden_section_batch(cnts, cy.base, cy.coef, cy.feasible_lo, cy.feasible_hi, opts.inner_tol)
                const_ll += _weighted_loglik(cnts, cy.base, cy.coef, th)

    prob = _EmProblem(unlabeled_counts.astype(float), slab, scell, cons)

    best = None
    for r in range(opts.restarts):
        u = init_uniforms[:, r, :]
        ty0 = u[:, 0]
        t00 = cons[0].feasible_lo + u[:, 1] * (cons[0].feasible_hi - cons[0].feasible_lo)
        t10 = cons[1].feasible_lo + u[:, 2] * (cons[1].feasible_hi - cons[1].feasible_lo)
        ty, t0, t1, ll, iters, conv = _em_run(prob, ty0, t00, t10, opts)
        if best is None:
            best = [ty, t0, t1, ll, iters, conv]
        else:
            take = ll > best[3]  # strict: ties keep the lower restart index
            for j, arr in enumerate((ty, t0, t1, ll, iters, conv)):
                best[j] = np.where(take, arr, best[j])
    ty, t0, t1, ll, iters, conv = best
    return ty, t0, t1, ll + const_ll, iters.astype(int), conv.astype(bool)


def dataset_cell_counts(d: LabeledDataset, k: int) -> np.ndarray:
    """(2, k) cell counts of a labeled dataset (binary labels)."""
    flat = np.bincount(d.ys * k + d.xs, minlength=2 * k)
    return flat.reshape(2, k).astype(float)


def unlabeled_counts(d: UnlabeledDataset, k: int) -> np.ndarray:
    return np.bincount(d.xs, minlength=k).astype(float)


def em_anticausal_fit(
    unlabeled_t: UnlabeledDataset,
    labeled_s: LabeledDataset | None,
    plan: EstimationPlan,
    templates: DomainPair,
    opts: EmOptions = EmOptions(),
    seed: int = 0,
    track_loglik: bool = False,
) -> FitResult:
    """Fit the anti-causal model by EM on the pooled joint likelihood.

    The source sample enters only as the plan dictates; shared scalars are a
    single variable, so the returned source- and target-side estimates are
    identical wherever the plan pools them.
    """
    if len(unlabeled_t) == 0:
        raise AllCountsZero("unlabeled target sample must be nonempty")
    target = templates.target
    k = target.k
    unl = unlabeled_counts(unlabeled_t, k)[None, :]
    scc = None
    if plan.usable_source and labeled_s is not None and len(labeled_s) > 0:
        scc = dataset_cell_counts(labeled_s, k)[None, :, :]

    gen = rng.generator(seed, "em-init")
    inits = gen.random((1, opts.restarts, 3))

    trace: list[float] | None = [] if track_loglik else None
    if track_loglik:
        # trace the first restart only: rerun it explicitly
        cons = (target.components[0].constraint, target.components[1].constraint)
        slab = scc.sum(axis=2) if (scc is not None and plan.pooled_marginal) else None
        scell = scc if (scc is not None and plan.pooled_components) else None
        prob = _EmProblem(unl.astype(float), slab, scell, cons)
        u = inits[:, 0, :]
        _em_run(
            prob,
            u[:, 0],
            cons[0].feasible_lo + u[:, 1] * (cons[0].feasible_hi - cons[0].feasible_lo),
            cons[1].feasible_lo + u[:, 2] * (cons[1].feasible_hi - cons[1].feasible_lo),
            opts,
            trace=trace,
        )

    ty, t0, t1, ll, iters, conv = em_anticausal_fit_batch(unl, scc, plan, templates, opts, inits)
    fitted = AntiCausalParams(
        float(ty[0]),
        (
            MixtureComponent(target.components[0].constraint, float(t0[0])),
            MixtureComponent(target.components[1].constraint, float(t1[0])),
        ),
    )
    source_fit = None
    if plan.usable_source and scc is not None:
        # source-side estimate shares pooled scalars by construction
        src_labels = scc[0].sum(axis=1)
        if plan.pooled_marginal:
            ty_s = float(ty[0])
        else:
            ty_s = float(src_labels[1] / src_labels.sum()) if src_labels.sum() > 0 else 0.5
        if plan.pooled_components:
            comps = fitted.components
        else:
            comps = tuple(
                MixtureComponent(
                    c.constraint,
                    mle_constrained_component(scc[0][y], c.constraint, opts.inner_tol)
                    if scc[0][y].sum() > 0
                    else c.constraint.feasible_lo,
                )
                for y, c in enumerate(templates.source.components)
            )
        source_fit = AntiCausalParams(ty_s, comps)
    return FitResult(
        params=fitted,
        loglik=float(ll[0]),
        iterations=int(iters[0]),
        converged=bool(conv[0]),
        source_params=source_fit,
        loglik_trace=tuple(trace) if trace is not None else None,
    )


# ---------------------------------------------------------------------------
# log-likelihood of datasets under fixed parameters
# ---------------------------------------------------------------------------


def loglik(params: Params, data: LabeledDataset | UnlabeledDataset) -> float:
    """Exact log-likelihood in nats; -inf when a zero-probability cell occurs."""
    with np.errstate(divide="ignore"):
        if direction_of(params) == CAUSAL:
            if isinstance(data, LabeledDataset):
                cell = params.joint()  # (k, 2)
                logs = np.log(cell[data.xs, data.ys])
            else:
                logs = np.log(params.theta_x.probs[data.xs])
        else:
            if isinstance(data, LabeledDataset):
                cell = params.joint()  # (2, k)
                logs = np.log(cell[data.ys, data.xs])
            else:
                logs = np.log(params.marginal_x()[data.xs])
    return float(np.sum(logs)) if logs.size else 0.0
