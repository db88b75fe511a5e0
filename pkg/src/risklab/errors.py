"""Semantic exception hierarchy.

Every failure mode that callers are expected to branch on gets its own
class; plain ``ValueError`` is reserved for programming mistakes.
"""

from __future__ import annotations


class RiskLabError(Exception):
    """Base class for all errors raised by this package."""


# ---------------------------------------------------------------------------
# model construction / validation
# ---------------------------------------------------------------------------


class NegativeProbability(RiskLabError):
    """A probability vector contains a negative entry."""


class NotNormalized(RiskLabError):
    """A probability vector does not sum to one within tolerance."""


class InfeasibleConstraint(RiskLabError):
    """An affine component constraint admits no feasible parameter."""


class ThetaOutOfFeasibleRange(RiskLabError):
    """A component parameter lies outside its feasible interval."""


class IndexOutOfRange(RiskLabError):
    """A cell index is outside the finite alphabet."""


class ZeroMarginalMass(RiskLabError):
    """A feature value has probability zero under every mixture component."""


class ScenarioParameterMismatch(RiskLabError):
    """Domain parameters violate an equality implied by the declared scenario."""


# ---------------------------------------------------------------------------
# estimation
# ---------------------------------------------------------------------------


class AllCountsZero(RiskLabError):
    """A weighted count vector is identically zero; the likelihood is flat."""


class InfeasibleInitialization(RiskLabError):
    """An optimizer start point violates feasibility."""


class AllWeightsZero(RiskLabError):
    """Every posterior grid node has zero likelihood."""


# ---------------------------------------------------------------------------
# risk evaluation / oracles
# ---------------------------------------------------------------------------


class InfiniteRisk(RiskLabError):
    """A predictor assigned probability zero to an outcome of positive truth mass."""


class NegativeCmi(RiskLabError):
    """A conditional mutual information input is negative."""


class EnumerationTooLarge(RiskLabError):
    """Exact enumeration would exceed the hard size guard."""


class TrialFailureRateExceeded(RiskLabError):
    """More than the tolerated fraction of Monte-Carlo trials failed."""


# ---------------------------------------------------------------------------
# information matrices / rates
# ---------------------------------------------------------------------------


class BoundaryParameter(RiskLabError):
    """An information quantity is undefined at a boundary parameter."""


class StepTooLarge(RiskLabError):
    """A finite-difference step does not fit inside the feasible interior."""


class UnsupportedScenario(RiskLabError):
    """No vanishing-rate constant exists for this scenario.

    Carries the closed-form risk plateaus that replace a rate in the
    non-convergent causal scenarios.
    """

    def __init__(self, message: str, plateaus: dict | None = None):
        super().__init__(message)
        self.plateaus = dict(plateaus or {})


class NonPositiveRisk(RiskLabError):
    """A reciprocal fit requires strictly positive risk estimates."""


class DegenerateCurve(RiskLabError):
    """No asymptote profile produces a usable reciprocal fit."""


# ---------------------------------------------------------------------------
# configuration / CLI
# ---------------------------------------------------------------------------


class ParseError(RiskLabError):
    """A config file is structurally invalid; carries the offending field."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        loc = ""
        if field:
            loc += f" [field: {field}]"
        if line is not None:
            loc += f" [line: {line}]"
        super().__init__(message + loc)
        self.field = field
        self.line = line
