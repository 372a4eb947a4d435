"""Score differences and one-sided Diebold-Mariano tests.

The null hypothesis of ``dm_test(d)`` is ``E[d_t] <= 0``, i.e. the first
forecaster in ``d_t = S(f_t, y_t) - S(g_t, y_t)`` is weakly better.  It is
rejected for large positive statistics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import as_forecast_array, normal_cdf, normal_quantile
from .scoring import ScoreSpec, score_arrays

__all__ = [
    "DMResult",
    "score_diff_series",
    "dm_test",
    "dm_reject_batch",
    "compare_all",
    "hac_bandwidth",
]

VARIANCE_MODES = ("iid", "hac")


@dataclass(frozen=True)
class DMResult:
    mean_diff: float
    variance: float
    statistic: float
    p_value: float
    reject: bool
    level: float
    n: int


def _scores(spec, forecasts, y):
    f = as_forecast_array(forecasts)
    return score_arrays(spec, f[:, 0], f[:, 1], f[:, 2], y)


def score_diff_series(spec: ScoreSpec, f, g, obs) -> np.ndarray:
    """``d_t = S(f_t, y_t) - S(g_t, y_t)``."""
    y = np.asarray(getattr(obs, "values", obs), dtype=float).reshape(-1)
    fa, ga = as_forecast_array(f), as_forecast_array(g)
    if not fa.shape[0] == ga.shape[0] == y.size:
        raise ValueError("forecasts and observations must have equal length")
    return _scores(spec, fa, y) - _scores(spec, ga, y)


def hac_bandwidth(n: int) -> int:
    """``floor(1.5 n^(1/3))``; ``cbrt`` keeps perfect cubes exact."""
    return int(math.floor(1.5 * float(np.cbrt(n))))


def _long_run_variance(d, mode):
    """Variance of ``sqrt(n) * mean(d)`` along the last axis."""
    n = d.shape[-1]
    if mode == "iid":
        return d.var(axis=-1, ddof=1)
    if mode == "hac":
        e = d - d.mean(axis=-1, keepdims=True)
        lags = min(hac_bandwidth(n), n - 1)
        out = (e * e).sum(axis=-1) / n
        for k in range(1, lags + 1):
            gamma = (e[..., k:] * e[..., :-k]).sum(axis=-1) / n
            out = out + 2.0 * (1.0 - k / (lags + 1.0)) * gamma
        return np.clip(out, 0.0, None)
    raise ValueError(f"variance_mode must be one of {VARIANCE_MODES}, got {mode!r}")


def _check_level(level):
    if not 0.0 < level < 1.0:
        raise ValueError(f"significance level must lie in (0, 1), got {level}")


def dm_test(d, level: float = 0.05, variance_mode: str = "iid") -> DMResult:
    """One-sided Diebold-Mariano test with normal critical values.

    A score-difference series with zero spread has no variance estimate:
    a zero mean gives ``p = 0.5`` and no rejection, a positive mean gives
    ``p = 0`` and a negative mean ``p = 1``.
    """
    _check_level(level)
    d = np.asarray(d, dtype=float).reshape(-1)
    n = d.size
    if n < 2:
        raise ValueError("need at least two score differences")
    if not np.all(np.isfinite(d)):
        raise ValueError("score differences must be finite")
    mean = float(d.mean())
    if np.ptp(d) == 0.0:
        if mean == 0.0:
            return DMResult(mean, 0.0, 0.0, 0.5, False, level, n)
        stat = math.copysign(math.inf, mean)
        p = 0.0 if mean > 0 else 1.0
        return DMResult(mean, 0.0, stat, p, p < level, level, n)
    var = float(_long_run_variance(d, variance_mode))
    if var <= 0.0:
        stat = 0.0 if mean == 0.0 else math.copysign(math.inf, mean)
    else:
        stat = mean / math.sqrt(var / n)
    p = float(normal_cdf(-stat)) if math.isfinite(stat) else (0.0 if stat > 0 else 1.0)
    reject = stat > normal_quantile(1.0 - level)
    return DMResult(mean, var, stat, p, bool(reject), level, n)


def dm_reject_batch(d, level: float = 0.05, variance_mode: str = "iid") -> np.ndarray:
    """Row-wise decisions of :func:`dm_test` for a ``(reps, n)`` array."""
    _check_level(level)
    d = np.asarray(d, dtype=float)
    n = d.shape[-1]
    mean = d.mean(axis=-1)
    var = _long_run_variance(d, variance_mode)
    crit = normal_quantile(1.0 - level)
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = mean / np.sqrt(var / n)
    flat = np.ptp(d, axis=-1) == 0.0
    stat = np.where(flat | (var <= 0), np.where(mean > 0, np.inf, np.where(mean < 0, -np.inf, 0.0)), stat)
    return stat > crit


def compare_all(spec: ScoreSpec, forecasts: dict, obs, level: float = 0.05,
                variance_mode: str = "iid") -> dict:
    """DM results for every ordered pair ``(i, j)``, ``i != j``, of named
    forecast sets; the entry tests the null "i is weakly better than j"."""
    if len(forecasts) < 2:
        raise ValueError("need at least two forecasters")
    y = np.asarray(getattr(obs, "values", obs), dtype=float).reshape(-1)
    scores = {}
    for name, fc in forecasts.items():
        fa = as_forecast_array(fc)
        if fa.shape[0] != y.size:
            raise ValueError(f"forecaster {name!r} has {fa.shape[0]} rows, expected {y.size}")
        scores[name] = _scores(spec, fa, y)
    out = {}
    for i in scores:
        for j in scores:
            if i != j:
                out[(i, j)] = dm_test(scores[i] - scores[j], level, variance_mode)
    return out
