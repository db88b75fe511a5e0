import numpy as np
import pytest

from risklab.errors import InfiniteRisk, NegativeCmi, TrialFailureRateExceeded
from risklab.estimators import EmOptions
from risklab.bayes import PriorSpec
from risklab.models import ANTICAUSAL, CAUSAL, scenario
from risklab.risk import (
    BoundSpec,
    EstimatorSpec,
    cmi_bound,
    excess_logloss_conditional,
    excess_risk_mc,
)

from conftest import kl_bernoulli, pair


def prior_plateau(target):
    """Closed-form oracle: average KL against a constant 1/2 predictor."""
    return sum(0.25 * kl_bernoulli(p, 0.5) for p in target.theta_y_given_x)


def source_plateau(target, source):
    return sum(
        0.25 * kl_bernoulli(p, q)
        for p, q in zip(target.theta_y_given_x, source.theta_y_given_x)
    )


class TestExactConditionalRisk:
    def test_truth_predictor_is_zero(self, causal_target):
        q = causal_target.theta_y_given_x
        got = excess_logloss_conditional(causal_target, lambda x: q[x])
        assert got == 0.0

    def test_prior_mean_plateau(self, causal_target):
        got = excess_logloss_conditional(causal_target, lambda x: 0.5)
        # frozen from the independent closed-form computation
        assert got == pytest.approx(0.0306384764016074, abs=1e-12)
        assert got == pytest.approx(prior_plateau(causal_target), abs=1e-15)

    def test_source_truth_plateau(self, causal_target, causal_source_general):
        q = causal_source_general.theta_y_given_x
        got = excess_logloss_conditional(causal_target, lambda x: q[x])
        assert got == pytest.approx(0.0524326497947046, abs=1e-12)
        assert got == pytest.approx(source_plateau(causal_target, causal_source_general), abs=1e-15)

    def test_infinite_risk(self, causal_target):
        with pytest.raises(InfiniteRisk):
            excess_logloss_conditional(causal_target, lambda x: 1.0)

    def test_nonnegative_on_random_predictors(self, causal_target, anti_target):
        gen = np.random.default_rng(0)
        for truth in (causal_target, anti_target):
            for _ in range(20):
                q = gen.uniform(0.01, 0.99, size=4)
                assert excess_logloss_conditional(truth, lambda x: q[x]) >= 0.0


class TestCmiBound:
    def test_zero(self):
        assert cmi_bound(0.0, BoundSpec("bounded", 1.0)) == 0.0
        assert cmi_bound(0.0, BoundSpec("exp_concave", 2.0)) == 0.0

    def test_bounded_formula(self):
        assert cmi_bound(0.02, BoundSpec("bounded", 1.0)) == pytest.approx(0.2)

    def test_log_loss_is_beta_one(self):
        assert cmi_bound(0.02, BoundSpec("exp_concave", 1.0)) == pytest.approx(0.02)

    def test_negative_cmi(self):
        with pytest.raises(NegativeCmi):
            cmi_bound(-0.1, BoundSpec("bounded", 1.0))

    def test_bad_spec(self):
        with pytest.raises(NegativeCmi):
            BoundSpec("bounded", 0.0)
        with pytest.raises(NegativeCmi):
            BoundSpec("quadratic", 1.0)


class TestMonteCarloEngine:
    def test_no_data_bayes_equals_prior_predictive(self, causal_target):
        d = pair(causal_target, causal_target, CAUSAL)
        est = excess_risk_mc(d, scenario(CAUSAL, "ssl"), 0, 0, "bayes_mixture", 50, 1)
        assert est.mean == pytest.approx(prior_plateau(causal_target), abs=1e-14)
        assert est.stderr == 0.0
        assert est.failures == 0

    def test_causal_ssl_matches_rate_constant(self, causal_target):
        d = pair(causal_target, causal_target, CAUSAL)
        est = excess_risk_mc(d, scenario(CAUSAL, "ssl"), 2000, 0, "plugin_kt", 3000, 11)
        expect = 4 / (2 * 2000)
        assert abs(est.mean - expect) <= 3 * est.stderr

    def test_causal_covariate_matches_rate_constant(self, causal_source_covariate, causal_target):
        d = pair(causal_source_covariate, causal_target, CAUSAL)
        est = excess_risk_mc(d, scenario(CAUSAL, "covariate"), 2000, 0, "plugin_kt", 3000, 12)
        expect = (0.25 / 0.6 + 0.25 / 0.1 + 0.25 / 0.1 + 0.25 / 0.2) / (2 * 2000)
        assert abs(est.mean - expect) <= 3 * est.stderr
        assert abs(est.mean - expect) <= 0.15 * expect

    def test_source_truth_plateau_every_trial(self, causal_source_general, causal_target):
        d = pair(causal_source_general, causal_target, CAUSAL)
        est = excess_risk_mc(d, scenario(CAUSAL, "general"), 500, 2000, "source_truth", 100, 13)
        assert est.mean == pytest.approx(source_plateau(causal_target, causal_source_general), abs=1e-14)
        assert est.stderr == 0.0

    def test_determinism_same_seed(self, causal_target):
        d = pair(causal_target, causal_target, CAUSAL)
        a = excess_risk_mc(d, scenario(CAUSAL, "ssl"), 200, 0, "plugin_kt", 100, 7)
        b = excess_risk_mc(d, scenario(CAUSAL, "ssl"), 200, 0, "plugin_kt", 100, 7)
        assert a == b
        c = excess_risk_mc(d, scenario(CAUSAL, "ssl"), 200, 0, "plugin_kt", 100, 8)
        assert a != c

    def test_determinism_independent_of_chunking(self, anti_target, monkeypatch):
        import risklab.risk as risk_mod

        d = pair(anti_target, anti_target, ANTICAUSAL)
        spec = EstimatorSpec(kind="plugin_kt", em=EmOptions(restarts=2, max_iter=100))
        base = excess_risk_mc(d, scenario(ANTICAUSAL, "ssl"), 50, 50, spec, 40, 3)
        monkeypatch.setattr(risk_mod, "_chunk_rows", lambda m, n: 7)
        forced = excess_risk_mc(d, scenario(ANTICAUSAL, "ssl"), 50, 50, spec, 40, 3)
        assert base == forced

    def test_failure_threshold(self, causal_target):
        # raw MLE with no clamping pins seen cells at 0/1: infinite risk
        d = pair(causal_target, causal_target, CAUSAL)
        spec = EstimatorSpec(kind="plugin_mle", mle_clamp=0.0)
        with pytest.raises(TrialFailureRateExceeded):
            excess_risk_mc(d, scenario(CAUSAL, "ssl"), 1, 0, spec, 200, 5)

    def test_clamped_mle_has_no_failures(self, causal_target):
        d = pair(causal_target, causal_target, CAUSAL)
        spec = EstimatorSpec(kind="plugin_mle", mle_clamp=1e-3)
        est = excess_risk_mc(d, scenario(CAUSAL, "ssl"), 1, 0, spec, 200, 5)
        assert est.failures == 0

    def test_anticausal_bayes_memoization_consistency(self, anti_target):
        d = pair(anti_target, anti_target, ANTICAUSAL)
        spec = EstimatorSpec(kind="bayes_mixture", prior=PriorSpec(anticausal_grid=21))
        est = excess_risk_mc(d, scenario(ANTICAUSAL, "ssl"), 2, 2, spec, 500, 9)
        assert est.failures == 0
        assert est.mean > 0

    def test_single_repeat_stderr_zero(self, causal_target):
        d = pair(causal_target, causal_target, CAUSAL)
        est = excess_risk_mc(d, scenario(CAUSAL, "ssl"), 100, 0, "plugin_kt", 1, 2)
        assert est.stderr == 0.0 and est.repeats == 1
