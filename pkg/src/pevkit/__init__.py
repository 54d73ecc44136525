"""Probability that a causal inference fails to hold on a fully representative sample."""

from .decision import DecisionRule, DeltaPosterior, Direction, pev, probit_pev
from .moments import GroupMoments, MultivariateMoments, from_raw, pool_multivariate
from .power import RetestReport, curve_data, retest
from .regression import (
    DegenerateDesignError,
    RegressionScenario,
    beta_w_hat,
    delta_distribution_reg,
    posterior_bayes_reg,
    probit_pev_reg,
    schur_precision,
    se_ideal_reg,
)
from .simple import (
    SimpleProbitModel,
    SimpleScenario,
    delta_distribution,
    delta_distribution_pi,
    posterior_bayes_simple,
)
from .solvers import (
    FocalParameter,
    ThresholdRow,
    bound_pev,
    solve_alpha,
    solve_generic,
    solve_n_un,
    solve_pi,
    sweep,
)

__all__ = [
    "DecisionRule",
    "DegenerateDesignError",
    "DeltaPosterior",
    "Direction",
    "FocalParameter",
    "GroupMoments",
    "MultivariateMoments",
    "RegressionScenario",
    "RetestReport",
    "SimpleProbitModel",
    "SimpleScenario",
    "ThresholdRow",
    "beta_w_hat",
    "bound_pev",
    "curve_data",
    "delta_distribution",
    "delta_distribution_pi",
    "delta_distribution_reg",
    "from_raw",
    "pev",
    "pool_multivariate",
    "posterior_bayes_reg",
    "posterior_bayes_simple",
    "probit_pev",
    "probit_pev_reg",
    "retest",
    "schur_precision",
    "se_ideal_reg",
    "solve_alpha",
    "solve_generic",
    "solve_n_un",
    "solve_pi",
    "sweep",
]
