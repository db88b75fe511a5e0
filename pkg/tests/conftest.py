"""Shared parameter fixtures: the toy tables used throughout the suite."""

from __future__ import annotations

import numpy as np
import pytest

from risklab.models import (
    AntiCausalParams,
    CausalParams,
    Categorical,
    DomainPair,
    MixtureComponent,
    affine_constraint,
)

CONSTRAINT_TABLES = (
    ((0.0, 0.55, 0.2, 0.25), (1.0, 1.0, 1.0, -3.0)),
    ((0.0, 0.25, 0.4, 0.35), (1.0, 1.0, -3.0, 1.0)),
)


@pytest.fixture(scope="session")
def constraints():
    return tuple(affine_constraint(base, coef) for base, coef in CONSTRAINT_TABLES)


@pytest.fixture(scope="session")
def causal_target():
    return CausalParams(Categorical([0.25, 0.25, 0.25, 0.25]), [0.3, 0.4, 0.5, 0.6])


@pytest.fixture(scope="session")
def causal_source_covariate(causal_target):
    return CausalParams(Categorical([0.6, 0.1, 0.1, 0.2]), causal_target.theta_y_given_x)


@pytest.fixture(scope="session")
def causal_source_concept():
    return CausalParams(Categorical([0.25, 0.25, 0.25, 0.25]), [0.5, 0.5, 0.3, 0.5])


@pytest.fixture(scope="session")
def causal_source_general():
    return CausalParams(Categorical([0.6, 0.1, 0.1, 0.2]), [0.5, 0.5, 0.3, 0.5])


@pytest.fixture(scope="session")
def anti_target(constraints):
    c0, c1 = constraints
    return AntiCausalParams(0.5, (MixtureComponent(c0, 0.05), MixtureComponent(c1, 0.05)))


@pytest.fixture(scope="session")
def anti_source_general(constraints):
    c0, c1 = constraints
    return AntiCausalParams(0.7, (MixtureComponent(c0, 0.01), MixtureComponent(c1, 0.01)))


@pytest.fixture(scope="session")
def anti_source_target_shift(constraints):
    c0, c1 = constraints
    return AntiCausalParams(0.7, (MixtureComponent(c0, 0.05), MixtureComponent(c1, 0.05)))


@pytest.fixture(scope="session")
def anti_source_conditional(constraints):
    c0, c1 = constraints
    return AntiCausalParams(0.5, (MixtureComponent(c0, 0.01), MixtureComponent(c1, 0.01)))


def pair(source, target, direction) -> DomainPair:
    return DomainPair(source, target, direction)


def kl_bernoulli(p: float, q: float) -> float:
    """Independent closed-form oracle used to freeze expected risk values."""
    total = 0.0
    if p > 0:
        total += p * np.log(p / q)
    if p < 1:
        total += (1 - p) * np.log((1 - p) / (1 - q))
    return float(total)
