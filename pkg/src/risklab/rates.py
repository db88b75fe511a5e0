"""Rate fits over risk sweeps and the direction-selection advisor.

A converging sweep should look reciprocal-linear: 1/risk against sample
size.  ``fit_reciprocal_linear`` performs weighted least squares with
delta-method weights for the reciprocal; ``fit_asymptote`` profiles a
residual plateau lambda over a fixed grid and keeps the shift whose
reciprocal fit is straightest.  ``compare_directions`` scores the two
causal readings of one problem by their predicted rates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCurve, NonPositiveRisk
from .risk import RiskEstimate

PROFILE_POINTS = 2000


@dataclass(frozen=True)
class RiskCurve:
    """Monotone sweep of risk estimates along one sample-size axis."""

    points: tuple[tuple[int, RiskEstimate], ...]
    axis: str  # 'm' | 'n' | 'm_plus_n'

    def __post_init__(self):
        if self.axis not in ("m", "n", "m_plus_n"):
            raise NonPositiveRisk(f"unknown axis {self.axis!r}")
        sizes = [s for s, _ in self.points]
        if len(sizes) < 4:
            raise NonPositiveRisk("a curve needs at least 4 points")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise NonPositiveRisk("sizes must be strictly increasing")

    def sizes(self) -> np.ndarray:
        return np.array([s for s, _ in self.points], dtype=float)

    def means(self) -> np.ndarray:
        return np.array([e.mean for _, e in self.points])

    def stderrs(self) -> np.ndarray:
        return np.array([e.stderr for _, e in self.points])


@dataclass(frozen=True)
class FitReport:
    kind: str  # 'reciprocal_linear' | 'asymptote'
    slope: float
    intercept: float
    lam: float
    r2: float

    def __post_init__(self):
        if self.lam < 0:
            raise DegenerateCurve("lambda must be nonnegative")


def _weighted_line(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[float, float, float]:
    sw = w.sum()
    mx = float((w * x).sum() / sw)
    my = float((w * y).sum() / sw)
    sxx = float((w * (x - mx) ** 2).sum())
    if sxx == 0:
        raise DegenerateCurve("degenerate x values")
    slope = float((w * (x - mx) * (y - my)).sum() / sxx)
    intercept = my - slope * mx
    resid = y - (intercept + slope * x)
    ss_res = float((w * resid**2).sum())
    ss_tot = float((w * (y - my) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else -np.inf)
    return slope, intercept, r2


def _reciprocal_fit(sizes, means, stderrs, shift: float):
    shifted = means - shift
    y = 1.0 / shifted
    if np.all(stderrs > 0):
        # delta method: Var(1/(R - lambda)) ~= stderr^2 / (R - lambda)^4
        w = (shifted**2 / stderrs) ** 2
    else:
        w = np.ones_like(y)
    return _weighted_line(sizes, y, w)


def fit_reciprocal_linear(c: RiskCurve) -> FitReport:
    """Weighted least squares of 1/risk on size."""
    means = c.means()
    if np.any(means <= 0):
        raise NonPositiveRisk("reciprocal fit requires strictly positive risks")
    slope, intercept, r2 = _reciprocal_fit(c.sizes(), means, c.stderrs(), 0.0)
    return FitReport("reciprocal_linear", slope, intercept, 0.0, r2)


def fit_asymptote(c: RiskCurve) -> FitReport:
    """Profile a plateau: fit 1/(risk - lambda) linearly, maximize r2.

    lambda runs over a ``PROFILE_POINTS``-point grid in [0, min risk); exact
    ties keep the smallest lambda.
    """
    if len(c.points) < 5:
        raise DegenerateCurve("asymptote profiling needs at least 5 points")
    sizes, means, stderrs = c.sizes(), c.means(), c.stderrs()
    if np.any(means <= 0):
        raise NonPositiveRisk("asymptote fit requires strictly positive risks")
    top = float(means.min())
    best = None
    for lam in np.arange(PROFILE_POINTS) * (top / PROFILE_POINTS):
        slope, intercept, r2 = _reciprocal_fit(sizes, means, stderrs, lam)
        if best is None or r2 > best[3]:
            best = (slope, intercept, lam, r2)
    if best is None or best[3] <= 0:
        raise DegenerateCurve("no lambda profile yields a positive-r2 reciprocal fit")
    slope, intercept, lam, r2 = best
    return FitReport("asymptote", slope, intercept, float(lam), r2)


def profile_grid_step(c: RiskCurve) -> float:
    """Resolution of the lambda profile used by ``fit_asymptote``."""
    return float(c.means().min()) / PROFILE_POINTS


# ---------------------------------------------------------------------------
# direction selection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DirectionAdvice:
    recommendation: str  # 'causal' | 'anticausal'
    causal_rate: float   # predicted excess risk; inf when non-convergent
    anticausal_rate: float


def predicted_rate(
    direction: str,
    k: int,
    kp: int,
    m: int,
    n: int,
    marginal_shared: bool,
    conditional_shared: bool,
) -> float:
    """Scenario-table rate evaluated at concrete sample sizes.

    Returns inf for the two causal rows whose risk does not converge.
    """
    if direction == "causal":
        return k / m if conditional_shared else np.inf
    if marginal_shared and conditional_shared:
        return (kp + 1) / (m + n)
    if conditional_shared:  # only components shared: label prior from target alone
        return 1 / n + kp / (m + n)
    if marginal_shared:  # only label prior shared
        return kp / n + 1 / (m + n)
    return (kp + 1) / n


def compare_directions(
    k: int,
    kp: int,
    m: int,
    n: int,
    causal_marginal_shared: bool = True,
    causal_conditional_shared: bool = True,
    anticausal_marginal_shared: bool = True,
    anticausal_conditional_shared: bool = True,
) -> DirectionAdvice:
    """Recommend the direction with the smaller predicted rate.

    Ties go to the anti-causal reading, which also uses the unlabeled data.
    """
    if m < 1 or n < 1 or k < 1 or kp < 1:
        raise NonPositiveRisk("sizes must be positive")
    causal = predicted_rate("causal", k, kp, m, n, causal_marginal_shared, causal_conditional_shared)
    anti = predicted_rate("anticausal", k, kp, m, n, anticausal_marginal_shared, anticausal_conditional_shared)
    pick = "causal" if causal < anti else "anticausal"
    return DirectionAdvice(pick, float(causal), float(anti))
