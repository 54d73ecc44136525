"""JSON scenario documents: parsing and validation.

Every problem is reported as a :class:`ConfigError` that names the offending
field with a dotted path such as ``observed.treated.n``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .decision import DecisionRule, Direction
from .moments import GroupMoments, MultivariateMoments
from .regression import RegressionScenario
from .simple import SimpleScenario
from .solvers import DEFAULT_GRID, DEFAULT_N_CAP, FocalParameter

__all__ = ["Config", "ConfigError", "load_config", "parse_config"]


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True, eq=False)
class Config:
    estimator: str
    rule: DecisionRule
    # None when the simple estimator is given explicit unobserved arms
    scenario: SimpleScenario | RegressionScenario | None
    focal: FocalParameter | None
    pev_grid: tuple[float, ...]
    # (treated_ob, control_ob, treated_un, control_un) when arms are explicit
    arms: tuple[GroupMoments, ...] | None = None


def _get(doc: dict, key: str, path: str, default: Any = ...):
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    if key not in doc:
        if default is ...:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
        return default
    return doc[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    return float(value)


def _count(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value or value < 0:
        raise ConfigError(path, f"expected a nonnegative integer, got {value!r}")
    return int(value)


def _choice(value, options: tuple[str, ...], path: str) -> str:
    if value not in options:
        raise ConfigError(path, f"must be one of {', '.join(options)}; got {value!r}")
    return value


def _rule(doc: dict, direction: Direction) -> DecisionRule:
    spec = _get(doc, "threshold", "", {"mode": "statistical"})
    mode = _choice(_get(spec, "mode", "threshold", "statistical"), ("statistical", "fixed"), "threshold.mode")
    if mode == "fixed":
        return DecisionRule.fixed(_number(_get(spec, "value", "threshold"), "threshold.value"), direction)
    if "z_literal" in spec:
        z = _number(spec["z_literal"], "threshold.z_literal")
        if z <= 0:
            raise ConfigError("threshold.z_literal", "must be positive")
        return DecisionRule.statistical(direction, z=z)
    level = _number(_get(spec, "significance", "threshold", 0.05), "threshold.significance")
    if not 0.0 < level < 1.0:
        raise ConfigError("threshold.significance", "must lie in (0, 1)")
    return DecisionRule.statistical(direction, significance=level)


def _group(doc, path: str) -> GroupMoments:
    try:
        return GroupMoments(_number(_get(doc, "mean", path), f"{path}.mean"),
                            _number(_get(doc, "variance", path), f"{path}.variance"),
                            _count(_get(doc, "n", path), f"{path}.n"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _simple(doc: dict):
    ob = _get(doc, "observed", "")
    treated = _group(_get(ob, "treated", "observed"), "observed.treated")
    control = _group(_get(ob, "control", "observed"), "observed.control")
    un = _get(doc, "unobserved", "")
    if "treated" in un or "control" in un:
        arms = []
        for arm, known in (("treated", treated), ("control", control)):
            path = f"unobserved.{arm}"
            spec = _get(un, arm, "unobserved")
            arms.append(GroupMoments(_number(_get(spec, "mean", path), f"{path}.mean"),
                                     known.variance, _count(_get(spec, "n", path), f"{path}.n")))
        return None, (treated, control, *arms)
    ybar_c_un = _number(_get(un, "control_mean", "unobserved"), "unobserved.control_mean")
    alpha = _number(_get(un, "alpha", "unobserved", 1.0), "unobserved.alpha")
    pi_r = _number(_get(un, "pi_r", "unobserved", 1.0), "unobserved.pi_r")
    if not 0.0 < pi_r <= 1.0:
        raise ConfigError("unobserved.pi_r", "must lie in (0, 1]")
    if ybar_c_un == 0:
        raise ConfigError("unobserved.control_mean", "must be nonzero (alpha is a ratio to it)")
    return SimpleScenario(treated, control, ybar_c_un, alpha, pi_r), None


def _pair(key: str, roles: tuple[str, ...], path: str) -> tuple[int, int]:
    names = [s.strip() for s in key.split(",")]
    if len(names) != 2:
        raise ConfigError(f"{path}.{key}", "covariance keys look like \"A,B\"")
    try:
        return roles.index(names[0]), roles.index(names[1])
    except ValueError:
        raise ConfigError(f"{path}.{key}", f"unknown role; roles are {list(roles)}") from None


def _cov(spec, roles, path: str, base: np.ndarray | None) -> np.ndarray:
    k = len(roles)
    if isinstance(spec, list):
        mat = np.array(spec, dtype=float) if spec else np.empty((0, 0))
        if mat.shape != (k, k):
            raise ConfigError(path, f"expected a {k}x{k} matrix")
        return mat
    if not isinstance(spec, dict):
        raise ConfigError(path, "expected an object of \"A,B\" pairs or a matrix")
    mat = np.full((k, k), np.nan) if base is None else base.copy()
    for key, value in spec.items():
        i, j = _pair(key, roles, path)
        mat[i, j] = mat[j, i] = _number(value, f"{path}.{key}")
    if np.isnan(mat).any():
        i, j = map(int, np.argwhere(np.isnan(mat))[0])
        raise ConfigError(f"{path}.{roles[i]},{roles[j]}", "missing covariance entry")
    return mat


def _means(spec, roles, path: str, base: np.ndarray | None) -> np.ndarray:
    if isinstance(spec, list):
        if len(spec) != len(roles):
            raise ConfigError(path, f"expected {len(roles)} values")
        return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(spec)])
    if not isinstance(spec, dict):
        raise ConfigError(path, "expected an object keyed by role or a list")
    out = np.full(len(roles), np.nan) if base is None else base.copy()
    for key, value in spec.items():
        if key not in roles:
            raise ConfigError(f"{path}.{key}", f"unknown role; roles are {list(roles)}")
        out[roles.index(key)] = _number(value, f"{path}.{key}")
    if np.isnan(out).any():
        raise ConfigError(f"{path}.{roles[int(np.argmax(np.isnan(out)))]}", "missing mean")
    return out


def _moments(roles, means, cov, n, binary, path) -> MultivariateMoments:
    try:
        return MultivariateMoments(roles, means, cov, n, binary)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _regression(doc: dict) -> RegressionScenario:
    ob = _get(doc, "observed", "")
    roles = _get(ob, "roles", "observed")
    if not isinstance(roles, list) or not all(isinstance(r, str) for r in roles) or len(roles) < 2:
        raise ConfigError("observed.roles", "expected a list of at least two names (outcome, treatment, covariates...)")
    roles = tuple(roles)
    binary = bool(_get(ob, "treatment_binary", "observed", False))
    ob_means = _means(_get(ob, "means", "observed"), roles, "observed.means", None)
    ob_cov = _cov(_get(ob, "cov", "observed"), roles, "observed.cov", None)
    observed = _moments(roles, ob_means, ob_cov, _count(_get(ob, "n", "observed"), "observed.n"),
                        binary, "observed")
    if observed.n < 1:
        raise ConfigError("observed.n", "must be at least 1")
    un = _get(doc, "unobserved", "")
    base = _choice(_get(un, "base", "unobserved", "observed"), ("observed", "none"), "unobserved.base")
    start_means = ob_means if base == "observed" else None
    start_cov = ob_cov if base == "observed" else None
    un_means = _means(_get(un, "means", "unobserved", {}), roles, "unobserved.means", start_means)
    un_cov = _cov(_get(un, "cov", "unobserved", {}), roles, "unobserved.cov", start_cov)
    unobserved = _moments(roles, un_means, un_cov, _count(_get(un, "n", "unobserved", 0), "unobserved.n"),
                          binary, "unobserved")
    sigma2 = _number(_get(doc, "sigma2", ""), "sigma2")
    if sigma2 <= 0:
        raise ConfigError("sigma2", "must be positive")
    return RegressionScenario(observed, unobserved, sigma2)


_FOCALS = {"simple": ("alpha", "pi_r", "custom"), "regression": ("n_un", "custom")}


def _focal(doc: dict, estimator: str) -> FocalParameter | None:
    spec = _get(doc, "focal", "", None)
    if spec is None:
        return None
    kind = _choice(_get(spec, "kind", "focal"), _FOCALS[estimator], "focal.kind")
    entry = _get(spec, "entry", "focal", None)
    bracket = _get(spec, "bracket", "focal", None)
    if kind == "custom":
        if not isinstance(entry, str):
            raise ConfigError("focal.entry", "a custom focal needs an entry name")
        if not (isinstance(bracket, list) and len(bracket) == 2):
            raise ConfigError("focal.bracket", "expected [lo, hi]")
        bracket = (_number(bracket[0], "focal.bracket[0]"), _number(bracket[1], "focal.bracket[1]"))
        if not bracket[0] < bracket[1]:
            raise ConfigError("focal.bracket", "needs lo < hi")
        if estimator == "simple" and entry != "ybar_c_un":
            raise ConfigError("focal.entry", "the simple estimator supports the custom entry 'ybar_c_un'")
        if estimator == "regression" and not entry.startswith(("mean:", "cov:")):
            raise ConfigError("focal.entry", "expected 'mean:<role>' or 'cov:<role>,<role>'")
    cap = _count(_get(spec, "cap", "focal", DEFAULT_N_CAP), "focal.cap")
    if cap < 1:
        raise ConfigError("focal.cap", "must be at least 1")
    return FocalParameter(kind, entry if kind == "custom" else None,
                          bracket if kind == "custom" else None, cap)


def _grid(doc: dict) -> tuple[float, ...]:
    grid = _get(doc, "pev_grid", "", list(DEFAULT_GRID))
    if not isinstance(grid, list):
        raise ConfigError("pev_grid", "expected a list of probabilities")
    out = []
    for i, value in enumerate(grid):
        v = _number(value, f"pev_grid[{i}]")
        if not 0.0 < v < 1.0:
            raise ConfigError(f"pev_grid[{i}]", "must lie in (0, 1)")
        out.append(v)
    return tuple(out)


def parse_config(doc: Any) -> Config:
    """Validate a decoded JSON document and build the domain objects."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a JSON object")
    estimator = _choice(_get(doc, "estimator", ""), ("simple", "regression"), "estimator")
    direction = Direction(_choice(_get(doc, "direction", "", "positive"), ("positive", "negative"), "direction"))
    rule = _rule(doc, direction)
    arms = None
    if estimator == "simple":
        scenario, arms = _simple(doc)
    else:
        scenario = _regression(doc)
    return Config(estimator, rule, scenario, _focal(doc, estimator), _grid(doc), arms)


def load_config(path: str | Path) -> Config:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(doc)
