import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from risklab.bayes import (
    GridBasis,
    PosteriorGrid,
    PriorSpec,
    grid_posterior_anticausal,
    jeffreys_predictive_causal,
    predictive_anticausal,
    predictive_vector,
)
from risklab.errors import AllWeightsZero, IndexOutOfRange
from risklab.estimators import kt_causal_fit, plan_from_scenario
from risklab.models import (
    ANTICAUSAL,
    LabeledDataset,
    UnlabeledDataset,
    affine_constraint,
    anticausal_label_posterior,
    sample_anticausal,
    scenario,
    strip_labels,
)

from conftest import pair


class TestConjugateCausal:
    def test_no_data(self):
        assert jeffreys_predictive_causal((0, 0)) == 0.5

    def test_formula(self):
        assert jeffreys_predictive_causal((7, 3)) == pytest.approx(3.5 / 11.0, abs=1e-15)

    @given(st.integers(0, 200), st.integers(0, 200))
    def test_equals_kt_estimator(self, zeros, ones):
        xs = [0] * (zeros + ones)
        ys = [1] * ones + [0] * zeros
        kt = kt_causal_fit(LabeledDataset(xs, ys), k=1).theta_y_given_x[0]
        assert jeffreys_predictive_causal((zeros, ones)) == pytest.approx(kt, abs=1e-15)

    @given(st.integers(0, 10**6), st.integers(0, 10**6))
    def test_strictly_interior(self, zeros, ones):
        q = jeffreys_predictive_causal((zeros, ones))
        assert 0.0 < q < 1.0

    def test_prior_kinds(self):
        assert jeffreys_predictive_causal((0, 0), PriorSpec(prior_kind="uniform")) == 0.5
        assert jeffreys_predictive_causal((8, 0), PriorSpec(prior_kind="uniform")) == pytest.approx(0.1)

    def test_prior_validation(self):
        with pytest.raises(IndexOutOfRange):
            PriorSpec(causal_label_prior=(0.0, 1.0))
        with pytest.raises(IndexOutOfRange):
            PriorSpec(anticausal_grid=10)
        with pytest.raises(IndexOutOfRange):
            PriorSpec(anticausal_grid=9)


def _ssl_plan():
    return plan_from_scenario(scenario(ANTICAUSAL, "ssl"))


def _general_plan():
    return plan_from_scenario(scenario(ANTICAUSAL, "general"))


class TestGridPosterior:
    def test_empty_data_uniform_prior_equal_weights(self, anti_target):
        templates = pair(anti_target, anti_target, ANTICAUSAL)
        g = grid_posterior_anticausal(
            UnlabeledDataset([]), None, _ssl_plan(), templates, PriorSpec(anticausal_grid=11)
        )
        np.testing.assert_allclose(g.weights, 1.0 / g.weights.size, rtol=1e-12)

    def test_weights_normalized_on_random_inputs(self, anti_target):
        templates = pair(anti_target, anti_target, ANTICAUSAL)
        gen = np.random.default_rng(3)
        for _ in range(5):
            n = int(gen.integers(1, 200))
            data = strip_labels(sample_anticausal(anti_target, n, int(gen.integers(1, 10**6))))
            g = grid_posterior_anticausal(
                data, None, _general_plan(), templates, PriorSpec(anticausal_grid=21)
            )
            assert abs(g.weights.sum() - 1.0) < 1e-10
            assert np.all(g.weights >= 0)

    def test_posterior_mean_concentrates(self, anti_target):
        templates = pair(anti_target, anti_target, ANTICAUSAL)
        data = strip_labels(sample_anticausal(anti_target, 16000, 99))
        g = grid_posterior_anticausal(
            data, None, _general_plan(), templates, PriorSpec(anticausal_grid=61)
        )
        ty, t0, t1 = g.posterior_mean()
        assert abs(ty - 0.5) < 0.02
        assert abs(t0 - 0.05) < 0.02
        assert abs(t1 - 0.05) < 0.02

    def test_all_weights_zero(self):
        # both components pin cell 0 to zero mass at every node
        c = affine_constraint([0.0, 0.5, 0.25, 0.25], [0.0, 1.0, -1.0, 0.0])
        from risklab.models import AntiCausalParams, MixtureComponent

        p = AntiCausalParams(0.5, (MixtureComponent(c, 0.0), MixtureComponent(c, 0.0)))
        templates = pair(p, p, ANTICAUSAL)
        with pytest.raises(AllWeightsZero):
            grid_posterior_anticausal(
                UnlabeledDataset([0]), None, _general_plan(), templates, PriorSpec(anticausal_grid=11)
            )

    def test_large_grid_chunked_path_matches_tables(self, anti_target):
        import risklab.bayes as bayes_mod

        templates = pair(anti_target, anti_target, ANTICAUSAL)
        data = strip_labels(sample_anticausal(anti_target, 100, 5))
        prior = PriorSpec(anticausal_grid=21)
        g_fast = grid_posterior_anticausal(data, None, _general_plan(), templates, prior)
        old = bayes_mod._TABLE_ENTRY_LIMIT
        bayes_mod._TABLE_ENTRY_LIMIT = 0
        try:
            g_slow = grid_posterior_anticausal(data, None, _general_plan(), templates, prior)
        finally:
            bayes_mod._TABLE_ENTRY_LIMIT = old
        np.testing.assert_allclose(g_fast.weights, g_slow.weights, rtol=1e-12, atol=1e-300)


class TestPredictive:
    def test_single_node_grid_matches_posterior(self, anti_target):
        basis = GridBasis(
            axes=(np.array([0.5]), np.array([0.05]), np.array([0.05])),
            p0=anti_target.components[0].probs()[None, :],
            p1=anti_target.components[1].probs()[None, :],
        )
        g = PosteriorGrid(axes=basis.axes, weights=np.array([1.0]), basis=basis)
        assert predictive_anticausal(g, 1) == pytest.approx(1.0 / 3.0)
        for x in range(4):
            assert predictive_anticausal(g, x) == pytest.approx(
                anticausal_label_posterior(anti_target, x)
            )

    def test_mixture_collapse_returns_label_prior(self, constraints):
        # identical components at every node: features carry no label
        # evidence, so the predictive equals the theta_y node value
        c0, _ = constraints
        probs = (c0.base + c0.coef * 0.05)[None, :]
        basis = GridBasis(
            axes=(np.array([0.3]), np.array([0.05]), np.array([0.05])),
            p0=probs,
            p1=probs,
        )
        g = PosteriorGrid(axes=basis.axes, weights=np.array([1.0]), basis=basis)
        for x in range(4):
            assert predictive_anticausal(g, x) == pytest.approx(0.3, abs=1e-15)

    def test_symmetric_nodes_give_half(self, constraints):
        # mirrored components with equal masses: label evidence cancels
        c0, _ = constraints
        basis = GridBasis(
            axes=(np.array([0.5]), np.array([0.02, 0.07]), np.array([0.02, 0.07])),
            p0=np.stack([c0.base + c0.coef * 0.02, c0.base + c0.coef * 0.07]),
            p1=np.stack([c0.base + c0.coef * 0.02, c0.base + c0.coef * 0.07]),
        )
        g = PosteriorGrid(axes=basis.axes, weights=np.full(4, 0.25), basis=basis)
        for x in range(4):
            assert predictive_anticausal(g, x) == pytest.approx(0.5, abs=1e-12)

    def test_predictive_in_unit_interval(self, anti_target):
        templates = pair(anti_target, anti_target, ANTICAUSAL)
        data = strip_labels(sample_anticausal(anti_target, 50, 8))
        g = grid_posterior_anticausal(
            data, None, _general_plan(), templates, PriorSpec(anticausal_grid=21)
        )
        q = predictive_vector(g)
        assert np.all(q >= 0) and np.all(q <= 1)

    def test_concentrated_posterior_matches_truth(self, anti_target):
        templates = pair(anti_target, anti_target, ANTICAUSAL)
        labeled = sample_anticausal(anti_target, 16000, 101)
        data = strip_labels(sample_anticausal(anti_target, 16000, 100))
        g = grid_posterior_anticausal(
            data, labeled, _ssl_plan(), templates, PriorSpec(anticausal_grid=201)
        )
        for x in range(4):
            assert abs(
                predictive_anticausal(g, x) - anticausal_label_posterior(anti_target, x)
            ) < 0.01

    def test_grid_refinement_stability(self, anti_target):
        # doubling from the shipped default resolution
        templates = pair(anti_target, anti_target, ANTICAUSAL)
        data = strip_labels(sample_anticausal(anti_target, 1000, 55))
        qs = []
        for points in (201, 401):
            g = grid_posterior_anticausal(
                data, None, _general_plan(), templates, PriorSpec(anticausal_grid=points)
            )
            qs.append(predictive_vector(g))
        assert np.max(np.abs(qs[0] - qs[1])) < 1e-4

    def test_index_error(self, anti_target):
        templates = pair(anti_target, anti_target, ANTICAUSAL)
        g = grid_posterior_anticausal(
            UnlabeledDataset([0]), None, _general_plan(), templates, PriorSpec(anticausal_grid=11)
        )
        with pytest.raises(IndexOutOfRange):
            predictive_anticausal(g, 9)
