"""Mixture-strategy predictors.

Causal direction: per-cell conjugate Beta posteriors; with the Jeffreys
Beta(1/2, 1/2) prior the posterior predictive mean coincides exactly with
the add-1/2 smoothed frequency estimate.

Anti-causal direction: the posterior over the three free scalars (label
prior and two component parameters) lives on a regular grid over the
feasible box; the equally spaced nodes act as a discrete uniform prior, so
with no data every node carries the same mass.  Scenario pooling decides
which source-sample terms enter each node's likelihood; tied scalars share
one axis.  All normalizations run in the log domain.

Prediction at a test feature x conditions the node weights on x itself:
each weight is multiplied by the node's marginal mass at x and renormalized
before the label expectation, i.e. the predictive is the ratio of
posterior-averaged joint mass to posterior-averaged marginal mass.  With
the node weights flattened in C order over (theta_y, theta_0, theta_1),
both averages factor through the two marginal weight matrices, which keeps
the 201^3 default grid cheap and small.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import AllWeightsZero, IndexOutOfRange, ZeroMarginalMass
from .estimators import EstimationPlan
from .models import DomainPair, LabeledDataset, UnlabeledDataset

# Node-major tables are cached only while N*k stays this small; larger grids
# are evaluated in node chunks instead.
_TABLE_ENTRY_LIMIT = 8_000_000
_CHUNK = 1 << 20


@dataclass(frozen=True)
class PriorSpec:
    """Prior choices for both directions.

    ``prior_kind`` selects the per-cell Beta parameters for the causal
    conjugate path ('jeffreys' -> (1/2, 1/2), 'uniform' -> (1, 1)); the
    anti-causal grid always carries a uniform prior over the feasible box.
    """

    causal_label_prior: tuple[float, float] = (0.5, 0.5)
    anticausal_grid: int = 201
    prior_kind: str = "jeffreys"

    def __post_init__(self):
        a, b = self.causal_label_prior
        if not (a > 0 and b > 0):
            raise IndexOutOfRange("Beta prior parameters must be positive")
        if self.anticausal_grid < 11 or self.anticausal_grid % 2 == 0:
            raise IndexOutOfRange("grid points per axis must be odd and >= 11")
        if self.prior_kind not in ("jeffreys", "uniform"):
            raise IndexOutOfRange(f"unknown prior kind {self.prior_kind!r}")

    def beta_params(self) -> tuple[float, float]:
        if self.prior_kind == "uniform":
            return (1.0, 1.0)
        return self.causal_label_prior


def jeffreys_predictive_causal(counts_at_x: tuple[float, float], prior: PriorSpec = PriorSpec()) -> float:
    """Posterior predictive P(Y=1) from per-cell (zeros, ones) counts."""
    zeros, ones = counts_at_x
    if zeros < 0 or ones < 0:
        raise IndexOutOfRange("counts must be nonnegative")
    a, b = prior.beta_params()
    return float((ones + a) / (zeros + ones + a + b))


# ---------------------------------------------------------------------------
# anti-causal grid machinery
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridBasis:
    """Per-axis tables of the target-domain grid (node = C-order triple)."""

    axes: tuple[np.ndarray, np.ndarray, np.ndarray]
    p0: np.ndarray  # (g0, k) component-0 probabilities along the theta_0 axis
    p1: np.ndarray  # (g1, k)

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(int(a.size) for a in self.axes)

    @property
    def k(self) -> int:
        return int(self.p0.shape[1])

    @property
    def n_nodes(self) -> int:
        gy, g0, g1 = self.shape
        return gy * g0 * g1

    def node_components(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        _, g0, g1 = self.shape
        return idx // (g0 * g1), (idx // g1) % g0, idx % g1


def grid_basis(templates: DomainPair, prior: PriorSpec) -> GridBasis:
    target = templates.target
    g = prior.anticausal_grid
    c0 = target.components[0].constraint
    c1 = target.components[1].constraint
    ty_axis = np.linspace(0.0, 1.0, g)
    t0_axis = np.linspace(c0.feasible_lo, c0.feasible_hi, g)
    t1_axis = np.linspace(c1.feasible_lo, c1.feasible_hi, g)
    p0 = np.maximum(c0.base[None, :] + c0.coef[None, :] * t0_axis[:, None], 0.0)
    p1 = np.maximum(c1.base[None, :] + c1.coef[None, :] * t1_axis[:, None], 0.0)
    return GridBasis(axes=(ty_axis, t0_axis, t1_axis), p0=p0, p1=p1)


@dataclass(frozen=True, eq=False)
class GridTables:
    """Node-major mass tables cached for repeated small-grid posterior builds."""

    basis: GridBasis
    log_mix: np.ndarray   # (N, k)
    mix: np.ndarray       # (N, k)
    joint1: np.ndarray    # (N, k) theta_y * p1
    log_p0: np.ndarray    # (N, k)
    log_p1: np.ndarray    # (N, k)
    log_ty: np.ndarray    # (N,)
    log_1mty: np.ndarray  # (N,)


def grid_tables(templates: DomainPair, prior: PriorSpec) -> GridTables:
    basis = grid_basis(templates, prior)
    n, k = basis.n_nodes, basis.k
    if n * k > _TABLE_ENTRY_LIMIT:
        raise IndexOutOfRange(
            f"grid of {n} nodes is too large for cached tables; use the chunked path"
        )
    ty, _, _ = basis.axes
    ia, ib, ic = basis.node_components(np.arange(n))
    p0 = basis.p0[ib]
    p1 = basis.p1[ic]
    tya = ty[ia][:, None]
    mix = (1.0 - tya) * p0 + tya * p1
    joint1 = tya * p1
    with np.errstate(divide="ignore"):
        return GridTables(
            basis=basis,
            log_mix=np.log(mix),
            mix=mix,
            joint1=joint1,
            log_p0=np.log(p0),
            log_p1=np.log(p1),
            log_ty=np.log(ty[ia]),
            log_1mty=np.log(1.0 - ty[ia]),
        )


def grid_log_posterior(
    tables: GridTables,
    unl_counts: np.ndarray,
    src_cell_counts: np.ndarray | None,
    plan: EstimationPlan,
) -> np.ndarray:
    """Unnormalized node log-posterior from cached tables (uniform prior).

    Zero-count cells are excluded before the matrix products so that
    impossible nodes contribute -inf rather than 0 * inf.
    """
    nz = unl_counts > 0
    lw = tables.log_mix[:, nz] @ unl_counts[nz] if nz.any() else np.zeros(tables.mix.shape[0])
    if plan.usable_source and src_cell_counts is not None:
        labels = src_cell_counts.sum(axis=1)
        if plan.pooled_marginal:
            if labels[1] > 0:
                lw = lw + labels[1] * tables.log_ty
            if labels[0] > 0:
                lw = lw + labels[0] * tables.log_1mty
        if plan.pooled_components:
            for cnts, logp in ((src_cell_counts[0], tables.log_p0), (src_cell_counts[1], tables.log_p1)):
                nz = cnts > 0
                if nz.any():
                    lw = lw + logp[:, nz] @ cnts[nz]
    return lw


def _grid_log_posterior_chunked(
    basis: GridBasis,
    unl_counts: np.ndarray,
    src_cell_counts: np.ndarray | None,
    plan: EstimationPlan,
) -> np.ndarray:
    ty, _, _ = basis.axes
    lw = np.empty(basis.n_nodes)
    use_src = plan.usable_source and src_cell_counts is not None
    labels = src_cell_counts.sum(axis=1) if use_src else None
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ty = np.log(ty)
        log_1mty = np.log(1.0 - ty)
        comp_term0 = comp_term1 = None
        if use_src and plan.pooled_components:
            comp_term0 = _sliced_matmul(np.log(basis.p0), src_cell_counts[0])
            comp_term1 = _sliced_matmul(np.log(basis.p1), src_cell_counts[1])
        for start in range(0, basis.n_nodes, _CHUNK):
            idx = np.arange(start, min(start + _CHUNK, basis.n_nodes))
            ia, ib, ic = basis.node_components(idx)
            tya = ty[ia][:, None]
            mix = (1.0 - tya) * basis.p0[ib] + tya * basis.p1[ic]
            part = _sliced_matmul(np.log(mix), unl_counts)
            if use_src:
                if plan.pooled_marginal:
                    if labels[1] > 0:
                        part = part + labels[1] * log_ty[ia]
                    if labels[0] > 0:
                        part = part + labels[0] * log_1mty[ia]
                if comp_term0 is not None:
                    part = part + comp_term0[ib] + comp_term1[ic]
            lw[idx] = part
    return lw


def _sliced_matmul(log_table: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """counts @ log_table rows, skipping zero counts to avoid 0 * -inf."""
    nz = counts > 0
    if not nz.any():
        return np.zeros(log_table.shape[0])
    return log_table[:, nz] @ counts[nz]


def normalize_log_weights(lw: np.ndarray) -> np.ndarray:
    if not np.isfinite(np.max(lw)):
        raise AllWeightsZero("every grid node has zero likelihood")
    return np.exp(lw - logsumexp(lw))


def predictive_masses(basis: GridBasis, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior-averaged joint mass at (x, y=1) and marginal mass at x.

    Both averages factor through marginal weight matrices: the joint depends
    only on (theta_y, theta_1), the marginal additionally on (theta_y,
    theta_0), so the full node grid never has to be expanded.
    """
    ty = basis.axes[0]
    w3 = weights.reshape(basis.shape)
    num = (ty @ w3.sum(axis=1)) @ basis.p1
    den = num + ((1.0 - ty) @ w3.sum(axis=2)) @ basis.p0
    return num, den


@dataclass(frozen=True, eq=False)
class PosteriorGrid:
    """Normalized posterior mass per node, flat in C order over the axes."""

    axes: tuple[np.ndarray, np.ndarray, np.ndarray]
    weights: np.ndarray
    basis: GridBasis = field(repr=False)

    def __post_init__(self):
        if np.any(self.weights < 0):
            raise AllWeightsZero("negative posterior weight")
        if abs(float(self.weights.sum()) - 1.0) > 1e-10:
            raise AllWeightsZero(f"weights sum to {float(self.weights.sum())!r}, not 1")

    def marginal_weight_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """(theta_y x theta_0) and (theta_y x theta_1) marginal node masses."""
        w3 = self.weights.reshape(self.basis.shape)
        return w3.sum(axis=2), w3.sum(axis=1)

    def posterior_mean(self) -> tuple[float, float, float]:
        ty, t0, t1 = self.axes
        w3 = self.weights.reshape(self.basis.shape)
        return (
            float(w3.sum(axis=(1, 2)) @ ty),
            float(w3.sum(axis=(0, 2)) @ t0),
            float(w3.sum(axis=(0, 1)) @ t1),
        )


def grid_posterior_anticausal(
    unlabeled_t: UnlabeledDataset,
    labeled_s: LabeledDataset | None,
    plan: EstimationPlan,
    templates: DomainPair,
    prior: PriorSpec = PriorSpec(),
) -> PosteriorGrid:
    """Posterior over the free scalars given the scenario's pooled data."""
    from .estimators import dataset_cell_counts, unlabeled_counts  # avoid import cycle

    basis = grid_basis(templates, prior)
    k = templates.target.k
    unl = unlabeled_counts(unlabeled_t, k)
    scc = None
    if labeled_s is not None and len(labeled_s) > 0:
        scc = dataset_cell_counts(labeled_s, k)
    if basis.n_nodes * k <= _TABLE_ENTRY_LIMIT:
        lw = grid_log_posterior(grid_tables(templates, prior), unl, scc, plan)
    else:
        lw = _grid_log_posterior_chunked(basis, unl, scc, plan)
    return PosteriorGrid(axes=basis.axes, weights=normalize_log_weights(lw), basis=basis)


def predictive_anticausal(g: PosteriorGrid, x: int, templates: DomainPair | None = None) -> float:
    """Posterior predictive P(Y=1 | x), node weights re-conditioned on x."""
    if not 0 <= x < g.basis.k:
        raise IndexOutOfRange(f"x={x} outside support of size {g.basis.k}")
    num, den = predictive_masses(g.basis, g.weights)
    if den[x] <= 0.0:
        raise ZeroMarginalMass(f"x={x} has zero posterior-average marginal mass")
    return float(num[x] / den[x])


def predictive_vector(g: PosteriorGrid) -> np.ndarray:
    """P(Y=1 | x) for every x; zero-marginal cells map to NaN."""
    num, den = predictive_masses(g.basis, g.weights)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / den, np.nan)
