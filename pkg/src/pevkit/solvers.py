"""Thresholds of unobserved-sample parameters at which the PEV hits a target.

A threshold is where the probit of the PEV equals Φ⁻¹(target). α and π_R
have closed forms (the probit is linear in α and quadratic in √π_R); the
unobserved size is an integer scan; anything else goes through bisection.

"No threshold exists" is an ordinary outcome here, returned as a row with
``status="infeasible"`` rather than raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence, Union

import numpy as np
from scipy import optimize

from . import normal
from .decision import DecisionRule
from .regression import (
    DegenerateDesignError,
    RegressionScenario,
    delta_distribution_reg,
    probit_pev_reg,
    probit_pev_reg_many,
)
from .simple import SimpleProbitModel, SimpleScenario, delta_distribution_pi

__all__ = [
    "FocalParameter",
    "NoSignChange",
    "PevBound",
    "ThresholdRow",
    "bound_pev",
    "evaluate_focal",
    "solve_alpha",
    "solve_generic",
    "solve_n_un",
    "solve_pi",
    "sweep",
]

DEFAULT_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))
DEFAULT_N_CAP = 10**7

Scenario = Union[SimpleScenario, RegressionScenario]


class NoSignChange(ValueError):
    """The bracket handed to the bisection does not straddle the target."""


@dataclass(frozen=True)
class FocalParameter:
    """The one unobserved-sample quantity allowed to vary.

    ``kind`` is ``"alpha"``, ``"pi_r"``, ``"n_un"`` or ``"custom"``. A custom
    focal names an entry: ``"ybar_c_un"`` for the simple estimator, or
    ``"mean:<role>"`` / ``"cov:<role>,<role>"`` on the unobserved moments
    of a regression scenario; it needs a ``bracket`` for the bisection.
    """

    kind: str
    entry: str | None = None
    bracket: tuple[float, float] | None = None
    n_cap: int = DEFAULT_N_CAP

    def __post_init__(self):
        if self.kind not in ("alpha", "pi_r", "n_un", "custom"):
            raise ValueError(f"unknown focal kind {self.kind!r}")
        if self.kind == "custom" and not self.entry:
            raise ValueError("a custom focal needs an entry name")

    @property
    def is_integer(self) -> bool:
        return self.kind == "n_un"

    @property
    def label(self) -> str:
        return self.entry if self.kind == "custom" else self.kind


@dataclass(frozen=True)
class ThresholdRow:
    """One row of a robustness sweep.

    ``threshold`` is ``None`` unless ``status == "ok"``. The auxiliary
    columns are the unobserved treated mean and unobserved effect at the
    threshold (α focal only) and the ideal-sample effect estimate.
    """

    pev_target: float
    threshold: float | int | None
    status: str = "ok"
    ybar_t_un: float | None = None
    effect_un: float | None = None
    delta_id: float | None = None
    notes: tuple[str, ...] = ()
    crossings: tuple = field(default=())

    @property
    def feasible(self) -> bool:
        return self.status == "ok"


def _probit_target(target: float) -> float:
    if not 0.0 < target < 1.0:
        raise ValueError(f"target PEV must lie in (0, 1), got {target}")
    return normal.ppf(target)


def _simple_row(target: float, scn: SimpleScenario, threshold, notes=()) -> ThresholdRow:
    return ThresholdRow(
        target, threshold,
        ybar_t_un=scn.ybar_t_un,
        effect_un=scn.effect_un,
        delta_id=delta_distribution_pi(scn).mean,
        notes=tuple(notes),
    )


def solve_alpha(target: float, scn: SimpleScenario, rule: DecisionRule) -> ThresholdRow:
    """Threshold of α at fixed π_R; the probit is linear in α.

    The ``alpha`` field of ``scn`` is ignored.
    """
    q = _probit_target(target)
    model = SimpleProbitModel.build(scn, rule)
    slope = model.alpha_slope(scn.pi_r)
    if slope == 0.0:
        raise ValueError("the probit does not depend on alpha here (pi_r = 1)")
    alpha = (q - model.alpha_intercept(scn.pi_r)) / slope
    return _simple_row(target, replace(scn, alpha=alpha), alpha)


def _quadratic_roots(a: float, b: float, c: float) -> list[float]:
    """Real roots of a x² + b x + c, computed without cancellation."""
    scale = max(abs(a), abs(b), abs(c))
    if scale == 0.0:
        return []
    if abs(a) <= 1e-14 * scale:
        return [] if b == 0.0 else [-c / b]
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return []
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    roots = {q / a}
    if q != 0.0:
        roots.add(c / q)
    return sorted(roots)


def solve_pi(target: float, scn: SimpleScenario, rule: DecisionRule) -> ThresholdRow:
    """Threshold of π_R at fixed α; quadratic in √π_R.

    Multiplying the probit equation by √π_R gives
    (c_αr·α + c_r)·π_R + (const - q)·√π_R + (c_αi·α + c_i) = 0.
    When two roots fall in (0, 1] the one where a larger π_R pushes the PEV
    below the target is returned and the other is recorded in ``notes``.
    The ``pi_r`` field of ``scn`` is ignored.
    """
    q = _probit_target(target)
    model = SimpleProbitModel.build(scn, rule)
    a = model.c_alpha_root * scn.alpha + model.c_root
    b = model.const - q
    c = model.c_alpha_inv * scn.alpha + model.c_inv
    roots = [x for x in _quadratic_roots(a, b, c) if 0.0 < x <= 1.0]
    if not roots:
        pev_at_1 = normal.cdf(model(scn.alpha, 1.0))
        where = "below" if pev_at_1 < target else "at or above"
        return ThresholdRow(target, None, status="infeasible",
                            notes=(f"no pi_r in (0, 1] reaches the target; PEV stays {where} it",))
    # slope of x*(probit - q) at the root; negative means PEV falls below target as pi_r grows
    slopes = [2.0 * a * x + b for x in roots]
    notes = []
    if len(roots) == 2:
        pick = 0 if slopes[0] < 0 else 1
        other = roots[1 - pick] ** 2
        notes.append(f"second root at pi_r={other:.6g}")
    else:
        pick = 0
    x = roots[pick]
    pi_r = x * x
    return _simple_row(target, replace(scn, pi_r=pi_r), pi_r, notes)


def solve_n_un(target: float, scn: RegressionScenario, rule: DecisionRule,
               cap: int = DEFAULT_N_CAP) -> ThresholdRow:
    """Largest integer n_un >= 0 whose PEV is still below ``target``.

    The search doubles an upper bound until the PEV reaches the target, then
    evaluates every integer up to that bound to confirm the crossing is
    unique. If the probit falls anywhere along the way, every integer up to
    ``cap`` is scanned instead; the first crossing gives the threshold and
    all of them are reported in ``crossings``.
    """
    q = _probit_target(target)
    f0 = probit_pev_reg(scn, 0, rule)
    if f0 >= q:
        return ThresholdRow(target, None, status="infeasible",
                            notes=(f"PEV at n_un=0 is {normal.cdf(f0):.6g}, already at or above target",))
    hi, prev, monotone = 1, f0, True
    while True:
        f = probit_pev_reg(scn, hi, rule)
        if f < prev - _slack(prev):
            monotone = False
            break
        if f >= q:
            break
        if hi >= cap:
            return ThresholdRow(target, None, status="infeasible",
                                notes=(f"PEV stays below target for every n_un up to {cap}",))
        prev, hi = f, min(2 * hi, cap)
    if monotone:
        values = probit_pev_reg_many(scn, np.arange(hi + 1), rule)
        monotone = not np.any(np.diff(values) < -_slack(np.max(np.abs(values))))
        if monotone:
            n = int(np.argmax(values >= q)) - 1
            return ThresholdRow(target, n, delta_id=delta_distribution_reg(scn, n).mean)
    crossings = _scan_crossings(scn, rule, q, cap)
    note = f"PEV not monotone in n_un; {len(crossings)} crossing(s) up to {cap}"
    if not crossings:
        return ThresholdRow(target, None, status="infeasible", notes=(note,))
    n = crossings[0]
    return ThresholdRow(target, n, delta_id=delta_distribution_reg(scn, n).mean,
                        notes=(note,), crossings=tuple(crossings))


def _slack(scale: float) -> float:
    return 1e-12 * max(1.0, abs(float(scale)))


def _scan_crossings(scn: RegressionScenario, rule: DecisionRule, q: float, cap: int,
                    block: int = 1 << 16) -> list[int]:
    """Every n < cap where the PEV moves across the target between n and n + 1.

    The scan starts below the target, so the first entry is an upward crossing.
    """
    out = []
    prev = None
    for start in range(0, cap + 1, block):
        ns = np.arange(start, min(start + block, cap + 1))
        below = probit_pev_reg_many(scn, ns, rule) < q
        if prev is not None:
            below = np.concatenate([[prev], below])
            ns = np.concatenate([[start - 1], ns])
        idx = np.nonzero(below[:-1] != below[1:])[0]
        out.extend(int(ns[i]) for i in idx)
        prev = bool(below[-1])
    return out


def solve_generic(probit_fn: Callable[[float], float], target: float,
                  bracket: Sequence[float], max_iter: int = 200) -> float:
    """Bisect for x in ``bracket`` with probit_fn(x) = Φ⁻¹(target).

    Stops once the interval is below 1e-10·max(1, |hi|) or after
    ``max_iter`` halvings, returning the midpoint.
    """
    q = _probit_target(target)
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError(f"bracket must satisfy lo < hi, got {bracket}")
    f_lo = probit_fn(lo) - q
    f_hi = probit_fn(hi) - q
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0:
        raise NoSignChange(f"probit does not cross {q:.6g} on [{lo}, {hi}]")
    return optimize.bisect(lambda x: probit_fn(x) - q, lo, hi,
                           xtol=1e-10 * max(1.0, abs(hi)), rtol=4 * np.finfo(float).eps,
                           maxiter=max_iter, disp=False)


def _custom_setter(focal: FocalParameter, scenario: Scenario) -> Callable[[float], Scenario]:
    entry = focal.entry
    if isinstance(scenario, SimpleScenario):
        if entry != "ybar_c_un":
            raise ValueError(f"simple scenarios support the custom focal 'ybar_c_un', not {entry!r}")
        return lambda v: replace(scenario, ybar_c_un=v)
    kind, _, spec = entry.partition(":")
    names = [s.strip() for s in spec.split(",") if s.strip()]
    if kind == "mean" and len(names) == 1:
        return lambda v: replace(scenario, unobserved=scenario.unobserved.with_entry("mean", names[0], value=v))
    if kind == "cov" and len(names) == 2:
        return lambda v: replace(scenario, unobserved=scenario.unobserved.with_entry("cov", *names, value=v))
    raise ValueError(f"custom focal must be 'mean:<role>' or 'cov:<role>,<role>', got {entry!r}")


def _probit(scenario: Scenario, rule: DecisionRule) -> float:
    if isinstance(scenario, SimpleScenario):
        return SimpleProbitModel.build(scenario, rule)(scenario.alpha, scenario.pi_r)
    return probit_pev_reg(scenario, None, rule)


def _delta_id(scenario: Scenario) -> float:
    if isinstance(scenario, SimpleScenario):
        return delta_distribution_pi(scenario).mean
    return delta_distribution_reg(scenario).mean


def _at(focal: FocalParameter, scenario: Scenario, value) -> Scenario:
    """The scenario with the focal parameter set to ``value``."""
    if focal.kind == "alpha":
        return replace(scenario, alpha=float(value))
    if focal.kind == "pi_r":
        return replace(scenario, pi_r=float(value))
    if focal.kind == "n_un":
        return replace(scenario, unobserved=scenario.unobserved.with_n(int(value)))
    return _custom_setter(focal, scenario)(float(value))


def evaluate_focal(focal: FocalParameter, scenario: Scenario, rule: DecisionRule,
                   value) -> tuple[float, float]:
    """(PEV, ideal-sample effect estimate) with the focal set to ``value``."""
    s = _at(focal, scenario, value)
    return normal.cdf(_probit(s, rule)), _delta_id(s)


def _solve_custom(target: float, focal: FocalParameter, scenario: Scenario,
                  rule: DecisionRule) -> ThresholdRow:
    if focal.bracket is None:
        raise ValueError("a custom focal needs a bracket")
    x = solve_generic(lambda v: _probit(_at(focal, scenario, v), rule), target, focal.bracket)
    s = _at(focal, scenario, x)
    return ThresholdRow(target, x, delta_id=_delta_id(s))


def _solve_row(target: float, focal: FocalParameter, scenario: Scenario,
               rule: DecisionRule) -> ThresholdRow:
    if focal.kind in ("alpha", "pi_r") and not isinstance(scenario, SimpleScenario):
        raise ValueError(f"focal {focal.kind!r} needs a simple-estimator scenario")
    if focal.kind == "n_un" and not isinstance(scenario, RegressionScenario):
        raise ValueError("focal 'n_un' needs a regression scenario")
    if focal.kind == "alpha":
        return solve_alpha(target, scenario, rule)
    if focal.kind == "pi_r":
        return solve_pi(target, scenario, rule)
    if focal.kind == "n_un":
        return solve_n_un(target, scenario, rule, cap=focal.n_cap)
    try:
        return _solve_custom(target, focal, scenario, rule)
    except NoSignChange as exc:
        return ThresholdRow(target, None, status="infeasible", notes=(str(exc),))


def sweep(targets: Sequence[float], focal: FocalParameter, scenario: Scenario,
          rule: DecisionRule) -> list[ThresholdRow]:
    """One threshold row per target PEV, in the order given.

    A failure on one row becomes an ``"error"`` row; the sweep carries on.
    """
    rows = []
    for t in targets:
        try:
            rows.append(_solve_row(float(t), focal, scenario, rule))
        except (ValueError, DegenerateDesignError) as exc:
            rows.append(ThresholdRow(float(t), None, status="error", notes=(str(exc),)))
    return rows


@dataclass(frozen=True)
class PevBound:
    """PEV and ideal-effect ranges over an interval of the focal parameter."""

    pev: tuple[float, float]
    delta_id: tuple[float, float]
    monotone: bool = True


def bound_pev(interval: Sequence[float], focal: FocalParameter, scenario: Scenario,
              rule: DecisionRule, samples: int = 33, dense: int = 1025) -> PevBound:
    """Range of the PEV when the focal parameter lies in ``interval``.

    With a monotone PEV the range comes from the endpoints. Monotonicity is
    checked on ``samples`` points; if it fails, the min/max over a ``dense``
    grid is returned with ``monotone=False``.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if lo > hi:
        raise ValueError(f"interval must satisfy lo <= hi, got {interval}")

    def grid(k: int) -> np.ndarray:
        if focal.is_integer:
            return np.unique(np.round(np.linspace(lo, hi, k)).astype(int))
        return np.linspace(lo, hi, k)

    def evaluate(xs):
        return np.array([evaluate_focal(focal, scenario, rule, x) for x in xs])

    vals = evaluate(grid(samples) if hi > lo else [lo])
    monotone = all(np.all(np.diff(col) >= 0) or np.all(np.diff(col) <= 0) for col in vals.T)
    if monotone:
        ends = vals[[0, -1]]
    else:
        ends = evaluate(grid(dense))
    pev_range = (float(ends[:, 0].min()), float(ends[:, 0].max()))
    delta_range = (float(ends[:, 1].min()), float(ends[:, 1].max()))
    return PevBound(pev_range, delta_range, monotone)
