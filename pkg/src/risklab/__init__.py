"""Simulation laboratory for excess-risk rates in causal and anti-causal
domain adaptation with discrete potential-outcome models."""

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
    Scenario,
    UnlabeledDataset,
    affine_constraint,
    anticausal_label_posterior,
    causal_label_dist,
    make_categorical,
    realize_constraint,
    sample_anticausal,
    sample_causal,
    scenario,
    strip_labels,
    validate_scenario,
)
from .estimators import (
    EmOptions,
    EstimationPlan,
    FitResult,
    em_anticausal_fit,
    kt_causal_fit,
    loglik,
    mle_constrained_component,
    plan_from_scenario,
)
from .bayes import (
    PosteriorGrid,
    PriorSpec,
    grid_posterior_anticausal,
    jeffreys_predictive_causal,
    predictive_anticausal,
)
from .risk import (
    BoundSpec,
    EstimatorSpec,
    RiskEstimate,
    cmi_bound,
    excess_logloss_conditional,
    excess_risk_mc,
)
from .oracle import EnumSpec, exact_cmi, exact_excess_risk, exact_zero_one_excess
from .fisher import (
    FisherReport,
    RateConstant,
    fisher_anticausal_labeled,
    fisher_anticausal_unlabeled,
    fisher_causal_conditional,
    numeric_fisher,
    rate_constants,
)
from .rates import (
    DirectionAdvice,
    FitReport,
    RiskCurve,
    compare_directions,
    fit_asymptote,
    fit_reciprocal_linear,
)
from .config import ExperimentConfig, load_config, parse_config, serialize_config

__version__ = "0.1.0"
