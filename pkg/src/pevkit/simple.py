"""Group-mean-difference estimator on the ideal sample.

The observed sample is fixed; the unobserved sample enters either through
explicit arm moments or through two scalars: α, the ratio of unobserved
treated to unobserved control mean, and π_R, the share of the target
population that the observed part represents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .decision import DecisionRule, DeltaPosterior, Direction
from .moments import GroupMoments, pool_mean

__all__ = [
    "SimpleProbitModel",
    "SimpleScenario",
    "delta_distribution",
    "delta_distribution_pi",
    "posterior_bayes_simple",
    "probit_pev_fixed",
    "probit_pev_statistical",
    "se_ideal_simple",
]


def _check_known_variance(ob: GroupMoments, un: GroupMoments, arm: str) -> None:
    # both parts of an arm share one known variance
    if not math.isclose(ob.variance, un.variance, rel_tol=1e-12):
        raise ValueError(
            f"{arm} arm: unobserved variance {un.variance} differs from the known variance {ob.variance}"
        )


def delta_distribution(
    treated_ob: GroupMoments,
    control_ob: GroupMoments,
    treated_un: GroupMoments,
    control_un: GroupMoments,
) -> DeltaPosterior:
    """Law of the effect on the ideal sample built from explicit arm moments.

    Each arm's mean is the size-weighted mean of its observed and unobserved
    parts; its variance is the known outcome variance over the pooled size.
    """
    _check_known_variance(treated_ob, treated_un, "treated")
    _check_known_variance(control_ob, control_un, "control")
    n_t = treated_ob.n + treated_un.n
    n_c = control_ob.n + control_un.n
    if n_t == 0 or n_c == 0:
        raise ValueError("each arm needs at least one observation across the two samples")
    theta_t = pool_mean(treated_un.mean, treated_un.n, treated_ob.mean, treated_ob.n)
    theta_c = pool_mean(control_un.mean, control_un.n, control_ob.mean, control_ob.n)
    phi_t = treated_ob.variance / n_t
    phi_c = control_ob.variance / n_c
    return DeltaPosterior(theta_t - theta_c, phi_t + phi_c)


@dataclass(frozen=True)
class SimpleScenario:
    """Observed arms plus the (Ȳ_c^un, α, π_R) description of the unobserved sample."""

    treated: GroupMoments
    control: GroupMoments
    ybar_c_un: float
    alpha: float = 1.0
    pi_r: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.pi_r <= 1.0:
            raise ValueError(f"pi_r must lie in (0, 1], got {self.pi_r}")
        if self.treated.n < 1 or self.control.n < 1:
            raise ValueError("both observed arms need at least one observation")
        if self.ybar_c_un == 0:
            raise ValueError(
                "alpha is undefined when the unobserved control mean is zero; "
                "use delta_distribution with explicit unobserved arm means"
            )

    @property
    def observed_effect(self) -> float:
        return self.treated.mean - self.control.mean

    @property
    def base_se(self) -> float:
        """Standard error of the observed mean difference, i.e. se at π_R = 1."""
        return math.sqrt(self.treated.variance / self.treated.n + self.control.variance / self.control.n)

    @property
    def ybar_t_un(self) -> float:
        return self.alpha * self.ybar_c_un

    @property
    def effect_un(self) -> float:
        return (self.alpha - 1.0) * self.ybar_c_un


def delta_distribution_pi(scn: SimpleScenario) -> DeltaPosterior:
    """Ideal-sample law when unobserved arms are sized in proportion to the observed ones."""
    pi = scn.pi_r
    mean = (1.0 - pi) * (scn.alpha - 1.0) * scn.ybar_c_un + pi * scn.observed_effect
    return DeltaPosterior(mean, pi * scn.base_se ** 2)


def se_ideal_simple(scn: SimpleScenario) -> float:
    return math.sqrt(scn.pi_r) * scn.base_se


def probit_pev_fixed(scn: SimpleScenario, delta_sharp: float, direction="positive") -> float:
    """Probit of the PEV for a fixed threshold δ#, as a function of α and π_R."""
    y = scn.ybar_c_un
    a = scn.alpha
    r = math.sqrt(scn.pi_r)
    d = scn.observed_effect
    if Direction(direction) is Direction.POSITIVE:
        bracket = y * a * r - y * a / r - (d + y) * r + (y + delta_sharp) / r
    else:
        bracket = y * a / r + (d + y) * r - y * a * r - (y + delta_sharp) / r
    return bracket / scn.base_se


def probit_pev_statistical(scn: SimpleScenario, direction="positive", z: float | None = None) -> float:
    """Probit of the PEV when δ# = ±z·se on the ideal sample."""
    z = DecisionRule.statistical(direction, z=z).z
    y = scn.ybar_c_un
    a = scn.alpha
    r = math.sqrt(scn.pi_r)
    d = scn.observed_effect
    if Direction(direction) is Direction.POSITIVE:
        bracket = y * a * r - y * a / r - (d + y) * r + y / r
    else:
        bracket = y * a / r + (d + y) * r - y * a * r - y / r
    return bracket / scn.base_se + z


@dataclass(frozen=True)
class SimpleProbitModel:
    """Probit of the PEV written as a function of (α, π_R).

    probit = c_alpha_root·α·√π + c_alpha_inv·α/√π + c_root·√π + c_inv/√π + const
    """

    c_alpha_root: float
    c_alpha_inv: float
    c_root: float
    c_inv: float
    const: float

    @classmethod
    def build(cls, scn: SimpleScenario, rule: DecisionRule) -> "SimpleProbitModel":
        s = scn.base_se
        y = scn.ybar_c_un
        d = scn.observed_effect
        if rule.is_statistical:
            inv, const = y, rule.z
        else:
            inv, const = y + rule.delta_sharp, 0.0
        sign = rule.direction.sign
        return cls(sign * y / s, -sign * y / s, -sign * (d + y) / s, sign * inv / s, const)

    def __call__(self, alpha: float, pi_r: float) -> float:
        r = math.sqrt(pi_r)
        return (self.c_alpha_root * alpha * r + self.c_alpha_inv * alpha / r
                + self.c_root * r + self.c_inv / r + self.const)

    def alpha_slope(self, pi_r: float) -> float:
        r = math.sqrt(pi_r)
        return self.c_alpha_root * r + self.c_alpha_inv / r

    def alpha_intercept(self, pi_r: float) -> float:
        r = math.sqrt(pi_r)
        return self.c_root * r + self.c_inv / r + self.const


def _conjugate_normal(prior_mean: float, prior_var: float, data_mean: float,
                      data_var: float, n: int) -> tuple[float, float]:
    """Posterior of a normal mean with known data variance."""
    prior_prec = 1.0 / prior_var
    data_prec = n / data_var
    post_var = 1.0 / (prior_prec + data_prec)
    return post_var * (prior_prec * prior_mean + data_prec * data_mean), post_var


def posterior_bayes_simple(
    treated_un: GroupMoments,
    control_un: GroupMoments,
    treated_ob: GroupMoments,
    control_ob: GroupMoments,
) -> DeltaPosterior:
    """Posterior of μ_t - μ_c with the unobserved sample as a conjugate prior.

    Each arm mean gets the prior N(Ȳ^un, σ²/n^un) and the observed arm as
    likelihood; the arms are independent so the difference is normal.
    """
    if treated_un.n < 1 or control_un.n < 1:
        raise ValueError("the prior needs n_un >= 1 in both arms; use delta_distribution instead")
    _check_known_variance(treated_ob, treated_un, "treated")
    _check_known_variance(control_ob, control_un, "control")
    mt, vt = _conjugate_normal(treated_un.mean, treated_ob.variance / treated_un.n,
                               treated_ob.mean, treated_ob.variance, treated_ob.n)
    mc, vc = _conjugate_normal(control_un.mean, control_ob.variance / control_un.n,
                               control_ob.mean, control_ob.variance, control_ob.n)
    return DeltaPosterior(mt - mc, vt + vc)
