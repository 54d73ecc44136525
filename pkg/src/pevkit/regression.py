"""Covariate-adjusted estimator: the treatment coefficient from summary moments.

Everything here works from means and population covariances. The treatment
coefficient is the partial covariance of W and Y given Z over the partial
variance of W given Z (a Schur complement of the predictor covariance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .decision import DecisionRule, DeltaPosterior, Direction
from .moments import OUTCOME, TREATMENT, MultivariateMoments, pool_multivariate

__all__ = [
    "CoefficientPosterior",
    "DegenerateDesignError",
    "RegressionScenario",
    "beta_w_hat",
    "coefficients_from_moments",
    "cross_products",
    "delta_distribution_reg",
    "ideal_moments",
    "posterior_bayes_reg",
    "probit_pev_reg",
    "probit_pev_reg_many",
    "schur_precision",
    "se_ideal_reg",
    "sqrt_n_coefficients",
    "xtx_inverse_from_moments",
]

MAX_CONDITION = 1e12


class DegenerateDesignError(ArithmeticError):
    """The covariate block is singular or W is (nearly) collinear with Z."""


@dataclass(frozen=True, eq=False)
class RegressionScenario:
    """Observed moments, hypothesised unobserved moments, and the known residual variance.

    ``unobserved.n`` is the default unobserved size; most functions accept an
    explicit ``n_un`` that overrides it.
    """

    observed: MultivariateMoments
    unobserved: MultivariateMoments
    sigma2: float

    def __post_init__(self):
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if self.observed.roles != self.unobserved.roles:
            raise ValueError(f"role mismatch: {self.observed.roles} vs {self.unobserved.roles}")
        if self.observed.n < 1:
            raise ValueError("the observed sample must be nonempty")

    def n_un(self, n_un: int | None) -> int:
        return self.unobserved.n if n_un is None else n_un


def ideal_moments(scn: RegressionScenario, n_un: int | None = None) -> MultivariateMoments:
    return pool_multivariate(scn.unobserved.with_n(scn.n_un(n_un)), scn.observed)


def _partial_terms(m: MultivariateMoments) -> tuple[float, float]:
    """(σ_WW - S_WZ S_ZZ⁻¹ S_ZW, σ_WY - S_WZ S_ZZ⁻¹ S_ZY)."""
    c = m.cov
    s_ww = c[TREATMENT, TREATMENT]
    s_wy = c[TREATMENT, OUTCOME]
    if m.p == 0:
        schur, num = s_ww, s_wy
    else:
        s_zz = c[2:, 2:]
        if np.linalg.cond(s_zz) > MAX_CONDITION:
            raise DegenerateDesignError("covariate covariance S_ZZ is singular or nearly so")
        try:
            factor = linalg.cho_factor(s_zz)
        except linalg.LinAlgError:
            raise DegenerateDesignError("covariate covariance S_ZZ is not positive definite") from None
        s_zw = c[2:, TREATMENT]
        sol = linalg.cho_solve(factor, np.column_stack([s_zw, c[2:, OUTCOME]]))
        schur = s_ww - s_zw @ sol[:, 0]
        num = s_wy - s_zw @ sol[:, 1]
    if not schur > s_ww / MAX_CONDITION:
        raise DegenerateDesignError("treatment indicator is collinear with the covariates")
    return float(schur), float(num)


def schur_precision(m: MultivariateMoments) -> float:
    """Partial variance of W given Z: σ̂_WW - S_WZ S_ZZ⁻¹ S_ZW."""
    return _partial_terms(m)[0]


def beta_w_hat(m: MultivariateMoments) -> float:
    """OLS coefficient of W in the regression of Y on W and Z, from moments."""
    schur, num = _partial_terms(m)
    return num / schur


def delta_distribution_reg(scn: RegressionScenario, n_un: int | None = None) -> DeltaPosterior:
    m = ideal_moments(scn, n_un)
    schur, num = _partial_terms(m)
    return DeltaPosterior(num / schur, scn.sigma2 / m.n / schur)


def se_ideal_reg(scn: RegressionScenario, n_un: int | None = None) -> float:
    return delta_distribution_reg(scn, n_un).sd


def probit_pev_reg(scn: RegressionScenario, n_un: int | None, rule: DecisionRule) -> float:
    """Probit of the PEV for the regression estimator on the ideal sample."""
    m = ideal_moments(scn, n_un)
    schur, num = _partial_terms(m)
    scale = math.sqrt(m.n) / (math.sqrt(scn.sigma2) * math.sqrt(schur))
    positive = rule.direction is Direction.POSITIVE
    if rule.is_statistical:
        return rule.z - scale * num if positive else rule.z + scale * num
    gap = rule.delta_sharp * schur - num
    return scale * gap if positive else -scale * gap


def probit_pev_reg_many(scn: RegressionScenario, n_values, rule: DecisionRule,
                        chunk: int = 1 << 15) -> np.ndarray:
    """Vectorised probit of the PEV over many unobserved sizes.

    Used by the integer scans; agrees with :func:`probit_pev_reg` to
    rounding but skips its per-point conditioning checks.
    """
    n_values = np.asarray(n_values, dtype=np.int64)
    if np.any(n_values < 0):
        raise ValueError("unobserved sizes must be nonnegative")
    ob, un = scn.observed, scn.unobserved
    d = ob.means - un.means
    dd = np.outer(d, d)
    out = np.empty(n_values.shape, dtype=float)
    flat_n = n_values.reshape(-1)
    flat_out = out.reshape(-1)
    sigma = math.sqrt(scn.sigma2)
    for start in range(0, flat_n.size, chunk):
        n_un = flat_n[start:start + chunk]
        total = n_un + ob.n
        lam = n_un / total
        w_ob = ob.n / total
        cov = (lam[:, None, None] * un.cov + w_ob[:, None, None] * ob.cov
               + (lam * w_ob)[:, None, None] * dd)
        s_ww = cov[:, TREATMENT, TREATMENT]
        s_wy = cov[:, TREATMENT, OUTCOME]
        if ob.p:
            s_zz = cov[:, 2:, 2:]
            rhs = np.stack([cov[:, 2:, TREATMENT], cov[:, 2:, OUTCOME]], axis=-1)
            sol = np.linalg.solve(s_zz, rhs)
            s_zw = cov[:, 2:, TREATMENT]
            schur = s_ww - np.einsum("ij,ij->i", s_zw, sol[:, :, 0])
            num = s_wy - np.einsum("ij,ij->i", s_zw, sol[:, :, 1])
        else:
            schur, num = s_ww, s_wy
        if np.any(~(schur > s_ww / MAX_CONDITION)):
            raise DegenerateDesignError("treatment indicator is collinear with the covariates")
        scale = np.sqrt(total) / (sigma * np.sqrt(schur))
        if rule.is_statistical:
            val = rule.z - scale * num if rule.direction is Direction.POSITIVE else rule.z + scale * num
        else:
            gap = rule.delta_sharp * schur - num
            val = scale * gap if rule.direction is Direction.POSITIVE else -scale * gap
        flat_out[start:start + chunk] = val
    return out


def sqrt_n_coefficients(scn: RegressionScenario, z: float = 1.96) -> tuple[float, float]:
    """Coefficients (a, b) of probit = z - a/√N + b·√N, with N = n_un + n_ob.

    The form is exact when the partial variance of W does not move with the
    mixing share and the partial W-Y covariance is affine in it, which is the
    case when the samples differ only in their W-Y covariance. The
    coefficients come from two evaluations and are checked against a third;
    a mismatch raises.
    """
    rule = DecisionRule.statistical("positive", z=z)
    n_ob = scn.observed.n
    pts = [0, n_ob, 4 * n_ob + 7]
    vals = [probit_pev_reg(scn, k, rule) - z for k in pts]
    roots = [math.sqrt(k + n_ob) for k in pts]
    mat = np.array([[-1.0 / roots[0], roots[0]], [-1.0 / roots[1], roots[1]]])
    a, b = np.linalg.solve(mat, vals[:2])
    check = -a / roots[2] + b * roots[2]
    if not math.isclose(check, vals[2], rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError("probit is not of the form z - a/sqrt(N) + b*sqrt(N) for this scenario")
    return float(a), float(b)


def _design_order(m: MultivariateMoments) -> np.ndarray:
    # predictors in the order (Z1..Zp, W) so that W is last
    return np.r_[np.arange(2, 2 + m.p), TREATMENT]


def cross_products(m: MultivariateMoments) -> tuple[np.ndarray, np.ndarray]:
    """XᵀX and XᵀY rebuilt from moments, X = [1, Z1..Zp, W].

    XᵀX = [[n, n v̄], [n v̄ᵀ, n(S_VV + v̄ᵀv̄)]] and XᵀY = [n ȳ, n(S_VY + ȳ v̄)].
    """
    order = _design_order(m)
    n = m.n
    vbar = m.means[order]
    s_vv = m.cov[np.ix_(order, order)]
    s_vy = m.cov[order, OUTCOME]
    ybar = m.means[OUTCOME]
    k = len(order) + 1
    xtx = np.empty((k, k))
    xtx[0, 0] = n
    xtx[0, 1:] = xtx[1:, 0] = n * vbar
    xtx[1:, 1:] = n * (s_vv + np.outer(vbar, vbar))
    xty = np.concatenate([[n * ybar], n * (s_vy + ybar * vbar)])
    return xtx, xty


def xtx_inverse_from_moments(m: MultivariateMoments) -> np.ndarray:
    """(XᵀX)⁻¹ assembled block-wise from the Schur forms of S_VV⁻¹.

    S_VV⁻¹ is built from S_ZZ⁻¹ and the partial variance of W; the outer
    block adds the intercept row and column around it.
    """
    if m.n < 1:
        raise ValueError("moments need n >= 1")
    order = _design_order(m)
    p = m.p
    c = m.cov
    schur = schur_precision(m)
    s_vv_inv = np.empty((p + 1, p + 1))
    if p:
        zz_inv = linalg.cho_solve(linalg.cho_factor(c[2:, 2:]), np.eye(p))
        g = zz_inv @ c[2:, TREATMENT]
        s_vv_inv[:p, :p] = zz_inv + np.outer(g, g) / schur
        s_vv_inv[:p, p] = s_vv_inv[p, :p] = -g / schur
    s_vv_inv[p, p] = 1.0 / schur
    vbar = m.means[order]
    n = m.n
    out = np.empty((p + 2, p + 2))
    out[0, 0] = 1.0 / n + vbar @ s_vv_inv @ vbar / n
    out[0, 1:] = out[1:, 0] = -(s_vv_inv @ vbar) / n
    out[1:, 1:] = s_vv_inv / n
    return out


def coefficients_from_moments(m: MultivariateMoments) -> np.ndarray:
    """All OLS coefficients (intercept, Z slopes, W) from moments alone."""
    _, xty = cross_products(m)
    return xtx_inverse_from_moments(m) @ xty


@dataclass(frozen=True, eq=False)
class CoefficientPosterior:
    """Normal posterior over (intercept, Z1..Zp, W)."""

    mean: np.ndarray
    covariance: np.ndarray
    names: tuple[str, ...]

    def w_marginal(self) -> DeltaPosterior:
        return DeltaPosterior(self.mean[-1], self.covariance[-1, -1])


def _spd_inverse(mat: np.ndarray, what: str) -> np.ndarray:
    if np.linalg.cond(mat) > MAX_CONDITION:
        raise DegenerateDesignError(f"{what} is singular or nearly so")
    try:
        return linalg.cho_solve(linalg.cho_factor(mat), np.eye(mat.shape[0]))
    except linalg.LinAlgError:
        raise DegenerateDesignError(f"{what} is not positive definite") from None


def posterior_bayes_reg(scn: RegressionScenario, n_un: int | None = None) -> CoefficientPosterior:
    """Posterior of the coefficient vector with the unobserved sample as prior.

    Prior: β ~ N(OLS on the unobserved sample, σ²(X_unᵀX_un)⁻¹), both
    rebuilt from the unobserved moments. Likelihood: the observed sample
    under the classical linear model with known σ².
    """
    un = scn.unobserved.with_n(scn.n_un(n_un))
    k = scn.observed.p + 2
    if un.n < k:
        raise ValueError(f"the prior needs n_un >= {k} to identify all coefficients")
    xtx_un, xty_un = cross_products(un)
    xtx_ob, xty_ob = cross_products(scn.observed)
    prior_prec = xtx_un / scn.sigma2
    prior_mean = _spd_inverse(xtx_un, "unobserved cross-product matrix") @ xty_un
    post_cov = _spd_inverse(prior_prec + xtx_ob / scn.sigma2, "posterior precision")
    post_mean = post_cov @ (prior_prec @ prior_mean + xty_ob / scn.sigma2)
    order = _design_order(scn.observed)
    names = ("intercept",) + tuple(scn.observed.roles[i] for i in order)
    return CoefficientPosterior(post_mean, 0.5 * (post_cov + post_cov.T), names)
