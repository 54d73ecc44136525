"""Brute-force cross-checks for the closed forms. Tests use these; analyses do not."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .decision import DecisionRule, DeltaPosterior, Direction
from .moments import OUTCOME, TREATMENT, MultivariateMoments

__all__ = ["mc_pev", "ols_oracle", "synth_raw"]

_BLOCK = 1 << 18
_CLIP = 1e-10


def _count_fail(seed: np.random.SeedSequence, size: int, dist: DeltaPosterior,
                cut: float, direction: Direction) -> int:
    draws = np.random.Generator(np.random.PCG64(seed)).normal(dist.mean, dist.sd, size)
    if direction is Direction.POSITIVE:
        return int(np.count_nonzero(draws < cut))
    return int(np.count_nonzero(draws > cut))


def mc_pev(dist: DeltaPosterior, rule: DecisionRule, se_ideal: float | None = None,
           draws: int = 1_000_000, seed: int = 0, workers: int = 1) -> float:
    """Monte-Carlo estimate of the PEV.

    Draws are split into fixed blocks, each fed by its own PCG64 stream
    spawned from ``SeedSequence(seed)``. The block layout depends only on
    ``draws``, so the estimate is the same for any ``workers``.
    """
    if draws < 1:
        raise ValueError(f"draws must be at least 1, got {draws}")
    if rule.is_statistical and se_ideal is None:
        se_ideal = dist.sd
    cut = rule.threshold(se_ideal)
    sizes = [_BLOCK] * (draws // _BLOCK)
    if draws % _BLOCK:
        sizes.append(draws % _BLOCK)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    args = [(s, n, dist, cut, rule.direction) for s, n in zip(seeds, sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda a: _count_fail(*a), args))
    else:
        counts = [_count_fail(*a) for a in args]
    return sum(counts) / draws


def synth_raw(target: MultivariateMoments, seed: int = 0) -> np.ndarray:
    """A raw n x k matrix whose population moments equal ``target``.

    A random base is centred and orthonormalised so its columns have zero
    mean and identity covariance, then recoloured with a symmetric square
    root of the target covariance and shifted to the target means.
    """
    n, k = target.n, len(target.roles)
    if n < target.p + 3:
        raise ValueError(f"need n >= p + 3 = {target.p + 3} rows, got {n}")
    rng = np.random.default_rng(seed)
    base = rng.standard_normal((n, k))
    base -= base.mean(axis=0)
    q, r = np.linalg.qr(base)
    if np.min(np.abs(np.diag(r))) < 1e-12 * np.max(np.abs(np.diag(r))):
        raise ValueError("random base is rank deficient; try another seed")
    white = q * np.sqrt(n)
    vals, vecs = np.linalg.eigh(target.cov)
    floor = _CLIP * max(np.max(np.abs(vals)), np.finfo(float).tiny)
    if vals[0] < -floor:
        raise ValueError(f"target covariance is not PSD (eigenvalue {vals[0]:.3g})")
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    return white @ root + target.means


def ols_oracle(data, roles) -> np.ndarray:
    """OLS coefficients from the normal equations on raw data.

    Regresses the first column on an intercept, the covariates (columns 2
    onward) and the treatment (column 1). Returns
    [intercept, covariates..., treatment]; with a single column the model is
    intercept-only.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[1] != len(roles):
        raise ValueError("data must be a 2-D matrix with one column per role")
    y = x[:, OUTCOME]
    columns = [np.ones(len(x))]
    if x.shape[1] > 1:
        columns += [x[:, 2:], x[:, TREATMENT]]
    design = np.column_stack(columns)
    xtx = design.T @ design
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise np.linalg.LinAlgError("design matrix is rank deficient")
    return np.linalg.solve(xtx, design.T @ y)
