"""Elementary scores and Murphy diagrams.

Every self-calibrated consistent score for the triplet is a mixture of the
three one-parameter families ``L1_v``, ``L2_v``, ``L3_v`` over thresholds
``v``.  A Murphy diagram plots the mean of each elementary score against
``v``; pointwise dominance of one forecaster's curves over another's
implies dominance under every such score.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from .core import LevelPair, Triplet, as_forecast_array
from .scoring import ScoreSpec, pinball

__all__ = [
    "MurphyCurve",
    "elementary1",
    "elementary2",
    "elementary3",
    "elementary3_spec",
    "murphy_curve",
    "murphy_difference",
    "default_grid",
]


def _quantile_elementary(level, v, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    out = (((y <= x).astype(float) - level)
           * ((v <= x).astype(float) - (v <= y).astype(float)))
    return float(out) if out.ndim == 0 else out


def elementary1(levels: LevelPair, v, x1, y):
    """``(1{y<=x1} - alpha) (1{v<=x1} - 1{v<=y})``."""
    return _quantile_elementary(levels.alpha, v, x1, y)


def elementary2(levels: LevelPair, v, x2, y):
    """``(1{y<=x2} - beta) (1{v<=x2} - 1{v<=y})``."""
    return _quantile_elementary(levels.beta, v, x2, y)


def elementary3(levels: LevelPair, v, t, y):
    """Elementary score for the RVaR component at threshold ``v``.

    ``t`` is a :class:`Triplet` or anything broadcastable to ``(..., 3)``.
    The value equals the self-calibrated score with ``g1 = g2 = x/(2(b-a))``
    and ``phi = |x - v|/2``; the jump term is ``(1{v<=x3} - 1{v<=y})(v - y)``.
    """
    a, b = levels.alpha, levels.beta
    if isinstance(t, Triplet):
        x1, x2, x3 = t.x1, t.x2, t.x3
    else:
        arr = np.asarray(t, dtype=float)
        x1, x2, x3 = arr[..., 0], arr[..., 1], arr[..., 2]
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    below = v <= x3
    tail = np.where(below, pinball(b, x2, y) + b * y, pinball(a, x1, y) + a * y) / (b - a)
    out = tail + (below.astype(float) - (v <= y).astype(float)) * (v - y)
    return float(out) if np.ndim(out) == 0 else out


def elementary3_spec(levels: LevelPair, v: float) -> ScoreSpec:
    """The score-family ingredients reproducing :func:`elementary3`."""
    w = levels.width

    def g(x):
        return np.asarray(x, dtype=float) / (2.0 * w)

    def phi(x):
        return 0.5 * np.abs(np.asarray(x, dtype=float) - v)

    def phi_prime(x):
        return (np.asarray(x, dtype=float) >= v).astype(float) - 0.5

    return ScoreSpec(levels=levels, g1=g, g2=g, phi=phi, phi_prime=phi_prime,
                     name=f"L3[v={v}]")


@dataclass(frozen=True)
class MurphyCurve:
    """Mean elementary scores per threshold; ``std_errors`` are the standard
    errors of those means across observations."""

    grid: np.ndarray
    mean_scores: np.ndarray
    n: int
    std_errors: np.ndarray | None = None

    def component(self, k: int) -> np.ndarray:
        """Curve of elementary score ``k`` in ``{1, 2, 3}``."""
        return self.mean_scores[:, k - 1]


def _check_grid(grid):
    g = np.ascontiguousarray(grid, dtype=float).reshape(-1)
    if g.size < 1 or not np.all(np.isfinite(g)):
        raise ValueError("grid must be a nonempty finite sequence")
    if g.size > 1 and np.any(np.diff(g) <= 0):
        raise ValueError("grid must be strictly increasing")
    return g


def _moments(sums, sq, n):
    mean = sums / n
    if n > 1:
        var = np.clip(sq / n - mean * mean, 0.0, None) * (n / (n - 1))
        se = np.sqrt(var / n)
    else:
        se = np.zeros_like(mean)
    return mean, se


def _run_chunked(fn, grid, workers):
    if workers is None:
        workers = 1
    if workers <= 1 or grid.size < 2 * workers:
        return fn(grid)
    chunks = np.array_split(grid, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, [np.ascontiguousarray(c) for c in chunks]))
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def _columns(arr):
    return tuple(np.ascontiguousarray(arr[:, k]) for k in range(3))


def _observations(obs, n):
    y = np.ascontiguousarray(getattr(obs, "values", obs), dtype=float).reshape(-1)
    if y.size != n:
        raise ValueError(f"forecasts ({n}) and observations ({y.size}) differ in length")
    if not np.all(np.isfinite(y)):
        raise ValueError("observations must be finite")
    return y


def murphy_curve(levels: LevelPair, forecasts, obs, grid, workers=None,
                 backend=None) -> MurphyCurve:
    """Across-time means of the three elementary scores at every threshold.

    Grid chunks are evaluated concurrently when ``workers > 1``; results do
    not depend on the chunking.
    """
    f = as_forecast_array(forecasts)
    y = _observations(obs, f.shape[0])
    g = _check_grid(grid)
    k = _backend.get_kernels(backend)
    x1, x2, x3 = _columns(f)

    def run(chunk):
        return k.murphy_sums(levels.alpha, levels.beta, x1, x2, x3, y, chunk)

    sums, sq = _run_chunked(run, g, workers)
    mean, se = _moments(sums, sq, y.size)
    return MurphyCurve(grid=g, mean_scores=mean, n=int(y.size), std_errors=se)


def murphy_difference(levels: LevelPair, forecasts_a, forecasts_b, obs, grid,
                      workers=None, backend=None) -> MurphyCurve:
    """Paired Murphy curve of ``a`` minus ``b`` with paired standard errors."""
    fa = as_forecast_array(forecasts_a)
    fb = as_forecast_array(forecasts_b)
    if fa.shape != fb.shape:
        raise ValueError("forecast sets differ in length")
    y = _observations(obs, fa.shape[0])
    g = _check_grid(grid)
    k = _backend.get_kernels(backend)
    a1, a2, a3 = _columns(fa)
    b1, b2, b3 = _columns(fb)

    def run(chunk):
        return k.murphy_diff_sums(levels.alpha, levels.beta, a1, a2, a3, b1, b2, b3, y, chunk)

    sums, sq = _run_chunked(run, g, workers)
    mean, se = _moments(sums, sq, y.size)
    return MurphyCurve(grid=g, mean_scores=mean, n=int(y.size), std_errors=se)


def default_grid(obs, forecasts=(), m: int = 501) -> np.ndarray:
    """``m`` equally spaced thresholds over the pooled range of observations
    and forecast coordinates, padded by 5% on each side.

    A degenerate pooled range ``{c}`` yields ``[c - 1, c + 1]``.
    """
    if m < 2:
        raise ValueError("grid needs at least two points")
    pools = [np.asarray(getattr(obs, "values", obs), dtype=float).reshape(-1)]
    if isinstance(forecasts, dict):
        forecasts = list(forecasts.values())
    elif isinstance(forecasts, np.ndarray) or (len(forecasts) and isinstance(forecasts[0], Triplet)):
        forecasts = [forecasts]
    for fc in forecasts:
        pools.append(as_forecast_array(fc).reshape(-1))
    pooled = np.concatenate(pools)
    lo, hi = float(pooled.min()), float(pooled.max())
    if hi - lo == 0.0 or not math.isfinite(hi - lo):
        return np.linspace(lo - 1.0, hi + 1.0, m)
    pad = 0.05 * (hi - lo)
    return np.linspace(lo - pad, hi + pad, m)
