"""Standard normal CDF, density and quantile function on top of scipy.special.

Thin wrappers that validate input and return plain floats for scalars.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc, ndtri

__all__ = ["cdf", "pdf", "ppf", "Z_975"]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def _unwrap(x: np.ndarray) -> float | np.ndarray:
    return float(x) if x.ndim == 0 else x


def cdf(x):
    """Standard normal CDF, Φ(x). Accepts scalars or arrays."""
    x = np.asarray(x, dtype=float)
    return _unwrap(0.5 * erfc(-x / _SQRT2))


def pdf(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    return _unwrap(np.exp(-0.5 * x * x) / _SQRT2PI)


def ppf(p):
    """Standard normal quantile, Φ⁻¹(p).

    Parameters
    ----------
    p : float or array_like
        Probabilities in [0, 1]. The endpoints map to -inf and +inf.

    Raises
    ------
    ValueError
        If any probability lies outside [0, 1] or is NaN.
    """
    p = np.asarray(p, dtype=float)
    if np.any(np.isnan(p)) or np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("probabilities must lie in [0, 1]")
    return _unwrap(ndtri(p))


Z_975 = ppf(0.975)
