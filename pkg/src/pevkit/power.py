"""The PEV read as the type II error of retesting on the ideal sample.

With a statistical threshold, probit(PEV) = z - T for a positive effect and
z + T for a negative one, where T is the ideal-sample T-ratio. One minus
the PEV is then the power of that retest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import normal
from .decision import DecisionRule, DeltaPosterior, Direction, pev

__all__ = ["CurveData", "RetestReport", "curve_data", "fail_side_mass", "retest"]


@dataclass(frozen=True)
class RetestReport:
    t_ratio: float
    pev: float
    power: float
    delta_id_hat: float
    se_ideal: float
    z: float
    direction: Direction

    @property
    def probit(self) -> float:
        return self.z - self.direction.sign * self.t_ratio


def retest(dist: DeltaPosterior, rule: DecisionRule) -> RetestReport:
    """T-ratio, PEV and power of retesting H0: δ = 0 on the ideal sample."""
    if not rule.is_statistical:
        raise ValueError("the T-ratio identity holds only for a statistical threshold; use pev() directly")
    t = dist.mean / dist.sd
    p = normal.cdf(rule.z - rule.direction.sign * t)
    return RetestReport(t, p, 1.0 - p, dist.mean, dist.sd, rule.z, rule.direction)


@dataclass(frozen=True)
class CurveData:
    """Sampled null and ideal-sample densities around a decision threshold."""

    x: np.ndarray
    null_density: np.ndarray
    ideal_density: np.ndarray
    delta_sharp: float
    pev: float
    direction: Direction


def curve_data(null_mean: float, dist: DeltaPosterior, rule: DecisionRule,
               points: int = 2048, span: float = 6.0) -> CurveData:
    """Null and ideal densities on a common grid.

    The grid covers ``span`` standard deviations either side of both
    ``null_mean`` and ``dist.mean``. The null curve uses the same variance
    as ``dist``.
    """
    if points < 2:
        raise ValueError(f"points must be at least 2, got {points}")
    if not span > 0:
        raise ValueError(f"span must be positive, got {span}")
    sd = dist.sd
    lo = min(null_mean, dist.mean) - span * sd
    hi = max(null_mean, dist.mean) + span * sd
    x = np.linspace(lo, hi, points)
    null = normal.pdf((x - null_mean) / sd) / sd
    ideal = normal.pdf((x - dist.mean) / sd) / sd
    return CurveData(x, null, ideal, rule.threshold(sd), pev(dist, rule), rule.direction)


def fail_side_mass(x, density, delta_sharp: float, direction="positive") -> float:
    """Trapezoid mass of ``density`` on the fail-to-reject side of δ#.

    That side is below δ# for a positive direction and above it otherwise.
    The cell containing δ# contributes the part up to δ#, with the density
    interpolated linearly at δ#.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(density, dtype=float)
    if Direction(direction) is Direction.NEGATIVE:
        x, y, delta_sharp = -x[::-1], y[::-1], -delta_sharp
    if delta_sharp <= x[0]:
        return 0.0
    if delta_sharp >= x[-1]:
        return float(np.trapezoid(y, x))
    k = int(np.searchsorted(x, delta_sharp, side="right"))
    y_cut = np.interp(delta_sharp, x, y)
    xs = np.append(x[:k], delta_sharp)
    ys = np.append(y[:k], y_cut)
    return float(np.trapezoid(ys, xs))
