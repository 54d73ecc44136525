"""Summary moments of observed, unobserved and ideal samples.

All covariances use the population divisor ``n`` (not ``n - 1``). Pooling
two samples is then exact: the moments of the concatenated data follow from
the moments of the parts without touching raw observations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

__all__ = [
    "GroupMoments",
    "MixFraction",
    "MultivariateMoments",
    "from_raw",
    "mix_fraction",
    "pool_covariance",
    "pool_mean",
    "pool_multivariate",
]

OUTCOME = 0
TREATMENT = 1

_SYM_RTOL = 1e-12
_PSD_FLOOR = 1e-10


def _check_count(n, name: str) -> int:
    if isinstance(n, bool) or int(n) != n:
        raise ValueError(f"{name} must be an integer count, got {n!r}")
    n = int(n)
    if n < 0:
        raise ValueError(f"{name} must be nonnegative, got {n}")
    return n


@dataclass(frozen=True)
class GroupMoments:
    """Mean, known variance and size of one arm in one sample."""

    mean: float
    variance: float
    n: int

    def __post_init__(self):
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "variance", float(self.variance))
        object.__setattr__(self, "n", _check_count(self.n, "n"))
        if not np.isfinite(self.mean):
            raise ValueError("mean must be finite")
        if not self.variance > 0 or not np.isfinite(self.variance):
            raise ValueError(f"variance must be positive and finite, got {self.variance}")


@dataclass(frozen=True)
class MixFraction:
    """Unobserved share of the ideal sample, λ = n_un / (n_un + n_ob).

    Kept as an exact rational when built from counts so that integer scans
    over ``n_un`` never accumulate rounding; ``float(lam)`` evaluates it.
    """

    value: Fraction

    def __post_init__(self):
        v = self.value if isinstance(self.value, Fraction) else Fraction(self.value)
        if not 0 <= v <= 1:
            raise ValueError(f"mix fraction must lie in [0, 1], got {float(v)}")
        object.__setattr__(self, "value", v)

    def __float__(self) -> float:
        return float(self.value)

    @property
    def complement(self) -> "MixFraction":
        return MixFraction(1 - self.value)


def mix_fraction(n_un: int, n_ob: int) -> MixFraction:
    n_un = _check_count(n_un, "n_un")
    n_ob = _check_count(n_ob, "n_ob")
    if n_ob == 0:
        raise ValueError("n_ob must be at least 1: there is no observed sample")
    return MixFraction(Fraction(n_un, n_un + n_ob))


def _weights(lam: MixFraction | float) -> tuple[float, float]:
    """Return (λ, 1 - λ) as floats, each rounded once from the exact value."""
    if isinstance(lam, MixFraction):
        return float(lam.value), float(1 - lam.value)
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"mix fraction must lie in [0, 1], got {lam}")
    return lam, 1.0 - lam


def pool_mean(mean_un: float, n_un: int, mean_ob: float, n_ob: int) -> float:
    """Size-weighted mean of the unobserved and observed parts."""
    n_un = _check_count(n_un, "n_un")
    n_ob = _check_count(n_ob, "n_ob")
    total = n_un + n_ob
    if total == 0:
        raise ValueError("cannot pool two empty samples")
    if n_un == 0:
        return float(mean_ob)
    if n_ob == 0:
        return float(mean_un)
    return (n_un * mean_un + n_ob * mean_ob) / total


def pool_covariance(
    cov_un: float,
    cov_ob: float,
    mean_a_un: float,
    mean_a_ob: float,
    mean_b_un: float,
    mean_b_ob: float,
    lam: MixFraction | float,
) -> float:
    """Ideal-sample covariance of variables a and b.

    λ·cov_un + (1-λ)·cov_ob + λ(1-λ)(ā_ob - ā_un)(b̄_ob - b̄_un)
    """
    w_un, w_ob = _weights(lam)
    return (w_un * cov_un + w_ob * cov_ob
            + w_un * w_ob * (mean_a_ob - mean_a_un) * (mean_b_ob - mean_b_un))


@dataclass(frozen=True, eq=False)
class MultivariateMoments:
    """Means and population covariance over (Y, W, Z1, ..., Zp) for one sample.

    Parameters
    ----------
    roles : sequence of str
        Variable labels. Position 0 is the outcome, position 1 the treatment
        indicator, the rest are covariates.
    means : array_like, shape (k,)
    cov : array_like, shape (k, k)
        Symmetric positive semidefinite, divisor ``n``.
    n : int
        Sample size. Zero is allowed so an empty unobserved sample can be
        represented; pooling requires a positive total.
    binary_treatment : bool
        When set, the treatment variance must lie in [0, 0.25].
    """

    roles: tuple[str, ...]
    means: np.ndarray
    cov: np.ndarray
    n: int
    binary_treatment: bool = False

    def __post_init__(self):
        roles = tuple(str(r) for r in self.roles)
        if len(roles) < 2:
            raise ValueError("roles need at least an outcome and a treatment indicator")
        if len(set(roles)) != len(roles):
            raise ValueError(f"duplicate role labels: {roles}")
        k = len(roles)
        means = np.array(self.means, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if means.shape != (k,):
            raise ValueError(f"means must have length {k}, got shape {means.shape}")
        if cov.shape != (k, k):
            raise ValueError(f"cov must be {k}x{k}, got shape {cov.shape}")
        if not (np.all(np.isfinite(means)) and np.all(np.isfinite(cov))):
            raise ValueError("means and cov must be finite")
        scale = max(np.max(np.abs(cov)), np.finfo(float).tiny)
        if np.max(np.abs(cov - cov.T)) > _SYM_RTOL * scale:
            raise ValueError("cov is not symmetric")
        cov = 0.5 * (cov + cov.T)
        eig = np.linalg.eigvalsh(cov)
        if eig[0] < -_PSD_FLOOR * max(abs(eig[-1]), abs(eig[0])):
            raise ValueError(f"cov is not positive semidefinite (smallest eigenvalue {eig[0]:.3g})")
        if self.binary_treatment and not 0.0 <= cov[TREATMENT, TREATMENT] <= 0.25:
            raise ValueError(
                f"treatment variance {cov[TREATMENT, TREATMENT]} outside [0, 0.25] for a binary indicator"
            )
        means.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "n", _check_count(self.n, "n"))
        object.__setattr__(self, "binary_treatment", bool(self.binary_treatment))

    @property
    def p(self) -> int:
        """Number of covariates."""
        return len(self.roles) - 2

    def index(self, role: str) -> int:
        try:
            return self.roles.index(role)
        except ValueError:
            raise KeyError(f"unknown role {role!r}; known roles are {self.roles}") from None

    def with_n(self, n: int) -> "MultivariateMoments":
        return MultivariateMoments(self.roles, self.means, self.cov, n, self.binary_treatment)

    def with_entry(self, kind: str, a: str, b: str | None = None, value: float = 0.0) -> "MultivariateMoments":
        """Copy with one mean (``kind="mean"``) or one symmetric covariance pair replaced."""
        means = self.means.copy()
        cov = self.cov.copy()
        if kind == "mean":
            means[self.index(a)] = value
        elif kind == "cov":
            i, j = self.index(a), self.index(b)
            cov[i, j] = cov[j, i] = value
        else:
            raise ValueError(f"entry kind must be 'mean' or 'cov', got {kind!r}")
        return MultivariateMoments(self.roles, means, cov, self.n, self.binary_treatment)


def from_raw(data, roles: Sequence[str], binary_treatment: bool = False) -> MultivariateMoments:
    """Moments of an n x k raw data matrix, columns ordered as ``roles``."""
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n == 0:
        raise ValueError("from_raw needs at least one row")
    if x.shape[1] != len(roles):
        raise ValueError(f"data has {x.shape[1]} columns but {len(roles)} roles were given")
    means = x.mean(axis=0)
    centered = x - means
    cov = centered.T @ centered / n
    return MultivariateMoments(tuple(roles), means, cov, n, binary_treatment)


def pool_multivariate(un: MultivariateMoments, ob: MultivariateMoments) -> MultivariateMoments:
    """Ideal-sample moments from unobserved and observed moments."""
    if un.roles != ob.roles:
        raise ValueError(f"role mismatch: {un.roles} vs {ob.roles}")
    if un.cov.shape != ob.cov.shape:
        raise ValueError("dimension mismatch")
    total = un.n + ob.n
    if total == 0:
        raise ValueError("cannot pool two empty samples")
    binary = un.binary_treatment or ob.binary_treatment
    if un.n == 0:
        return MultivariateMoments(ob.roles, ob.means, ob.cov, total, binary)
    if ob.n == 0:
        return MultivariateMoments(un.roles, un.means, un.cov, total, binary)
    w_un, w_ob = _weights(MixFraction(Fraction(un.n, total)))
    means = (un.n * un.means + ob.n * ob.means) / total
    d = ob.means - un.means
    cov = w_un * un.cov + w_ob * ob.cov + w_un * w_ob * np.outer(d, d)
    return MultivariateMoments(ob.roles, means, cov, total, binary)
