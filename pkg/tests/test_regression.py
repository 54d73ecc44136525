import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pevkit import normal
from pevkit.decision import DecisionRule, pev
from pevkit.moments import MultivariateMoments, from_raw
from pevkit.oracle import ols_oracle
from pevkit.regression import (
    DegenerateDesignError,
    RegressionScenario,
    beta_w_hat,
    coefficients_from_moments,
    cross_products,
    delta_distribution_reg,
    ideal_moments,
    posterior_bayes_reg,
    probit_pev_reg,
    probit_pev_reg_many,
    schur_precision,
    se_ideal_reg,
    sqrt_n_coefficients,
    xtx_inverse_from_moments,
)

from conftest import EXAMPLE_MEANS, EXAMPLE_ROLES, example_cov, regression_example, random_regression_scenario

# direct arithmetic on the example numbers
SCHUR = 0.25 - 0.39**2 / 2079.36
PARTIAL_ZY = 0.39 * 1832.2 / 2079.36


def example_beta(n_un):
    return (2.33 * 49 / (n_un + 49) - PARTIAL_ZY) / SCHUR


class TestSchur:
    def test_example(self, reg_example):
        assert np.isclose(schur_precision(reg_example.observed), SCHUR, rtol=1e-14)
        assert abs(schur_precision(reg_example.observed) - 0.24993) <= 1e-5

    def test_no_covariates(self):
        m = MultivariateMoments(("Y", "W"), [1, 0.5], [[2.0, 0.3], [0.3, 0.25]], 10)
        assert schur_precision(m) == 0.25
        assert np.isclose(beta_w_hat(m), 0.3 / 0.25)

    def test_collinear(self):
        cov = np.array([[2.0, 0.3, 0.6], [0.3, 0.25, 0.5], [0.6, 0.5, 1.0]])
        m = MultivariateMoments(("Y", "W", "Z"), [0, 0, 0], cov, 10)
        with pytest.raises(DegenerateDesignError):
            schur_precision(m)

    def test_singular_covariates(self):
        cov = np.eye(4)
        cov[2:, 2:] = 1.0
        m = MultivariateMoments(("Y", "W", "Z1", "Z2"), np.zeros(4), cov, 10)
        with pytest.raises(DegenerateDesignError):
            beta_w_hat(m)


class TestBeta:
    def test_observed_effect(self, reg_example):
        assert abs(beta_w_hat(reg_example.observed) - 7.95) <= 0.01

    def test_ideal_effect_91(self, reg_example):
        assert abs(beta_w_hat(ideal_moments(reg_example, 91)) - 1.89) <= 0.01
        assert np.isclose(beta_w_hat(ideal_moments(reg_example, 91)), example_beta(91), rtol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(0, 3))
    def test_matches_normal_equations(self, seed, p):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(p + 4, 60))
        data = rng.normal(size=(n, p + 2)) @ rng.normal(size=(p + 2, p + 2))
        roles = ["Y", "W"] + [f"Z{i}" for i in range(p)]
        m = from_raw(data, roles)
        coef = ols_oracle(data, roles)
        assert np.isclose(beta_w_hat(m), coef[-1], rtol=1e-9, atol=1e-12)
        assert np.allclose(coefficients_from_moments(m), coef, rtol=1e-9, atol=1e-9)

    def test_cross_products(self):
        rng = np.random.default_rng(3)
        data = rng.normal(size=(20, 3))
        m = from_raw(data, ["Y", "W", "Z"])
        x = np.column_stack([np.ones(20), data[:, 2], data[:, 1]])
        xtx, xty = cross_products(m)
        assert np.allclose(xtx, x.T @ x, rtol=1e-12)
        assert np.allclose(xty, x.T @ data[:, 0], rtol=1e-12)
        assert np.allclose(xtx_inverse_from_moments(m) @ xtx, np.eye(3), atol=1e-10)


class TestDistribution:
    def test_n_un_zero(self, reg_example):
        d = delta_distribution_reg(reg_example, 0)
        assert abs(d.mean - 7.95) <= 0.01
        assert np.isclose(d.variance, 32 / (49 * SCHUR), rtol=1e-12)
        assert abs(d.variance - 2.6129) <= 2e-4

    def test_n_un_91(self, reg_example):
        d = delta_distribution_reg(reg_example, 91)
        assert abs(d.mean - 1.888) <= 5e-4
        assert abs(d.sd - 0.9563) <= 1e-4

    def test_se(self, reg_example):
        assert abs(se_ideal_reg(reg_example, 0) - 1.6165) <= 1e-4
        assert abs(se_ideal_reg(reg_example, 91) - 0.9563) <= 1e-4

    def test_quadrupling_halves_se(self, reg_example):
        same = RegressionScenario(reg_example.observed, reg_example.observed.with_n(0), 32.0)
        assert np.isclose(se_ideal_reg(same, 3 * 49), se_ideal_reg(same, 0) / 2, rtol=1e-12)

    def test_identical_moments_idempotent(self, reg_example):
        same = RegressionScenario(reg_example.observed, reg_example.observed, 32.0)
        for n in (0, 7, 500):
            assert np.isclose(delta_distribution_reg(same, n).mean, beta_w_hat(reg_example.observed), rtol=1e-12)

    def test_default_n_un_from_unobserved(self):
        scn = regression_example(91)
        assert delta_distribution_reg(scn).mean == delta_distribution_reg(scn, 91).mean

    def test_role_mismatch(self, reg_example):
        other = MultivariateMoments(("Y", "T", "Z"), EXAMPLE_MEANS, example_cov(), 10)
        with pytest.raises(ValueError):
            RegressionScenario(reg_example.observed, other, 32.0)

    def test_sigma2_positive(self, reg_example):
        with pytest.raises(ValueError):
            RegressionScenario(reg_example.observed, reg_example.unobserved, 0.0)


class TestProbit:
    def test_sqrt_form_at_91(self, reg_example, z196):
        value = probit_pev_reg(reg_example, 91, z196)
        assert abs(value - (-0.014)) <= 1e-3
        assert abs(normal.cdf(value) - 0.494) <= 1e-3

    def test_sqrt_form_at_0(self, reg_example, z196):
        assert abs(probit_pev_reg(reg_example, 0, z196) - (1.96 - 7.95 / 1.6165)) <= 5e-3

    def test_fixed_at_mean_is_zero(self, reg_example):
        mean = delta_distribution_reg(reg_example, 40).mean
        assert abs(probit_pev_reg(reg_example, 40, DecisionRule.fixed(mean))) <= 1e-9

    @pytest.mark.parametrize("rule", [
        DecisionRule.statistical("positive"),
        DecisionRule.statistical("negative"),
        DecisionRule.fixed(1.0, "positive"),
        DecisionRule.fixed(-2.0, "negative"),
    ])
    def test_round_trip_and_batch(self, reg_example, rule):
        ns = np.arange(0, 400, 7)
        batch = probit_pev_reg_many(reg_example, ns, rule)
        for n, b in zip(ns, batch):
            scalar = probit_pev_reg(reg_example, int(n), rule)
            assert np.isclose(b, scalar, rtol=1e-9, atol=1e-9)
            assert abs(normal.cdf(scalar) - pev(delta_distribution_reg(reg_example, int(n)), rule)) <= 1e-9

    def test_sqrt_n_form(self, reg_example):
        a, b = sqrt_n_coefficients(reg_example)
        assert np.isclose(a, 2.33 * 49 / math.sqrt(32 * SCHUR), rtol=1e-10)
        assert np.isclose(b, PARTIAL_ZY / math.sqrt(32 * SCHUR), rtol=1e-10)

    def test_sqrt_n_form_rejects_other_shapes(self):
        scn = random_regression_scenario(np.random.default_rng(11), p=2)
        with pytest.raises(ValueError):
            sqrt_n_coefficients(scn)


class TestBayes:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_w_marginal_matches(self, seed):
        rng = np.random.default_rng(seed)
        scn = random_regression_scenario(rng)
        freq = delta_distribution_reg(scn)
        post = posterior_bayes_reg(scn).w_marginal()
        assert np.isclose(post.mean, freq.mean, rtol=1e-9, atol=1e-12)
        assert np.isclose(post.variance, freq.variance, rtol=1e-9)

    def test_identical_prior(self, reg_example):
        same = RegressionScenario(reg_example.observed, reg_example.observed, 32.0)
        post = posterior_bayes_reg(same)
        assert np.allclose(post.mean, coefficients_from_moments(reg_example.observed), rtol=1e-9)
        assert post.names == ("intercept", "Z", "W")

    def test_matches_ols_on_concatenated_data(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(12, 3))
        b = rng.normal(size=(9, 3)) + 1
        roles = ["Y", "W", "Z"]
        scn = RegressionScenario(from_raw(a, roles), from_raw(b, roles), 2.0)
        post = posterior_bayes_reg(scn)
        assert np.allclose(post.mean, ols_oracle(np.vstack([a, b]), roles), rtol=1e-9)

    def test_needs_enough_prior_rows(self, reg_example):
        with pytest.raises(ValueError):
            posterior_bayes_reg(reg_example, 2)

    def test_example_at_91(self, reg_example):
        post = posterior_bayes_reg(reg_example, 91).w_marginal()
        assert np.isclose(post.mean, example_beta(91), rtol=1e-9)
