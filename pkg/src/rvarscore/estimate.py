"""M-estimation with consistent scores and trimmed least squares baselines.

Order-statistic brackets use 1-based inclusive indices from
``ceil(n * alpha)`` to ``floor(n * beta)``; with ``n = 10``,
``alpha = 0.2`` and ``beta = 0.8`` this keeps ``Y_(2), ..., Y_(8)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .core import LevelPair, Sample
from .measures import DiscreteDistribution, NormalDistribution
from .scoring import ScoreSpec, score_arrays

__all__ = [
    "EstimationError",
    "ParametricModel",
    "Dataset",
    "EstimateResult",
    "HuberReport",
    "joint_intercept_model",
    "joint_linear_model",
    "joint_scale_model",
    "scalar_location_model",
    "scalar_linear_model",
    "m_estimate",
    "tls_koenker_bassett",
    "lts_rousseeuw",
    "tls_asymmetric",
    "huber_skipped_check",
]

_INDEX_SLACK = 1e-9
_XATOL = 1e-6
_FATOL = 1e-6


class EstimationError(RuntimeError):
    """Numerical failure during estimation."""


@dataclass(frozen=True)
class ParametricModel:
    """``predict(X, theta)`` returns an ``(n, 3)`` array for ``kind="joint"``
    and an ``(n,)`` array for ``kind="scalar"``."""

    dim_theta: int
    predict: Callable
    kind: str = "joint"
    name: str = "model"

    def __post_init__(self):
        if self.dim_theta < 1:
            raise ValueError("dim_theta must be positive")
        if self.kind not in ("joint", "scalar"):
            raise ValueError("kind must be 'joint' or 'scalar'")

    def __call__(self, covariates, theta):
        return self.predict(covariates, np.asarray(theta, dtype=float))


@dataclass(frozen=True)
class Dataset:
    covariates: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.responses, dtype=float).reshape(-1)
        x = np.asarray(self.covariates, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2:
            raise ValueError("covariates must be an n x d matrix")
        if x.shape[0] != y.size:
            raise ValueError(f"covariates have {x.shape[0]} rows but there are {y.size} responses")
        if y.size == 0:
            raise ValueError("dataset is empty")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("dataset entries must be finite")
        object.__setattr__(self, "covariates", x)
        object.__setattr__(self, "responses", y)

    @classmethod
    def from_responses(cls, y):
        y = np.asarray(y, dtype=float).reshape(-1)
        return cls(np.zeros((y.size, 0)), y)

    def __len__(self):
        return self.responses.size


def joint_intercept_model() -> ParametricModel:
    """Constant triplet ``theta``."""

    def predict(x, theta):
        return np.broadcast_to(theta, (x.shape[0], 3))

    return ParametricModel(3, predict, "joint", "joint-intercept")


def joint_linear_model() -> ParametricModel:
    """``(a1, a2, a3) + b * x`` with a common slope on the first covariate."""

    def predict(x, theta):
        return theta[:3] + theta[3] * x[:, :1]

    return ParametricModel(4, predict, "joint", "joint-linear")


def joint_scale_model() -> ParametricModel:
    """Quantiles proportional to the first covariate, constant third
    component: ``(q1 * x, q2 * x, r)``."""

    def predict(x, theta):
        s = x[:, 0]
        return np.column_stack([theta[0] * s, theta[1] * s, np.full_like(s, theta[2])])

    return ParametricModel(3, predict, "joint", "joint-scale")


def scalar_location_model() -> ParametricModel:
    def predict(x, theta):
        return np.full(x.shape[0], theta[0])

    return ParametricModel(1, predict, "scalar", "location")


def scalar_linear_model(d: int = 1) -> ParametricModel:
    """Intercept plus linear effects of the first ``d`` covariates."""

    def predict(x, theta):
        return theta[0] + x[:, :d] @ theta[1:]

    return ParametricModel(1 + d, predict, "scalar", f"linear[{d}]")


@dataclass(frozen=True)
class EstimateResult:
    theta: np.ndarray
    score: float
    n_evals: int
    converged: bool
    init_score: float
    restart_scores: tuple = ()


def _require_kind(model, kind):
    if model.kind != kind:
        raise ValueError(f"{model.name} is a {model.kind} model, expected {kind}")


def _finite_or_raise(value, theta):
    if not math.isfinite(value):
        raise EstimationError(f"non-finite objective {value!r} at theta={np.asarray(theta).tolist()}")
    return value


def _minimize(objective, init, budget, restarts, seed, scale, workers):
    """Nelder-Mead from ``init`` and from ``restarts`` jittered starts.

    Restart ``k`` starts at ``init + scale * z_k`` with ``z_k`` drawn from a
    generator keyed by ``(seed, k)``; the lowest final score wins, ties going
    to the lower restart index.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    if restarts < 0:
        raise ValueError("restarts must be nonnegative")
    init = np.asarray(init, dtype=float).reshape(-1)
    init_score = _finite_or_raise(float(objective(init)), init)
    starts = [init]
    for k in range(1, restarts + 1):
        rng = np.random.default_rng([int(seed), k])
        starts.append(init + scale * rng.standard_normal(init.size))

    def run(x0):
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"maxfev": int(budget), "xatol": _XATOL, "fatol": _FATOL})
        return res

    if workers and workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(s) for s in starts]
    scores = tuple(float(r.fun) for r in results)
    best = int(np.argmin(scores))
    res = results[best]
    theta, fun = np.asarray(res.x, dtype=float), float(res.fun)
    if fun > init_score:
        theta, fun = init.copy(), init_score
    n_evals = 1 + sum(int(r.nfev) for r in results)
    return EstimateResult(theta=theta, score=fun, n_evals=n_evals, converged=bool(res.success),
                          init_score=init_score, restart_scores=scores)


def m_estimate(model: ParametricModel, data: Dataset, spec: ScoreSpec, init=None,
               budget: int = 5000, restarts: int = 0, seed: int = 0,
               restart_scale: float = 1.0, workers: int | None = None) -> EstimateResult:
    """Minimize the mean realized score ``mean_t S(M(X_t, theta), Y_t)``.

    Raises
    ------
    EstimationError
        If the objective is non-finite at some visited ``theta``.
    """
    _require_kind(model, "joint")
    x, y = data.covariates, data.responses
    if init is None:
        init = np.zeros(model.dim_theta)

    def objective(theta):
        p = np.asarray(model(x, theta), dtype=float)
        value = float(np.mean(score_arrays(spec, p[:, 0], p[:, 1], p[:, 2], y)))
        return _finite_or_raise(value, theta)

    return _minimize(objective, init, budget, restarts, seed, restart_scale, workers)


def _bracket(n, levels):
    lo = max(1, math.ceil(n * levels.alpha - _INDEX_SLACK))
    hi = min(n, math.floor(n * levels.beta + _INDEX_SLACK))
    if lo > hi:
        raise ValueError(f"empty order-statistic range [{lo}, {hi}] for n={n}")
    return lo, hi


def tls_koenker_bassett(s, levels: LevelPair) -> float:
    """Mean of the order statistics ``Y_(ceil(n alpha)), ..., Y_(floor(n beta))``,
    the minimizer of the trimmed sum of squares."""
    s = s if isinstance(s, Sample) else Sample(s)
    lo, hi = _bracket(len(s), levels)
    return float(np.mean(s.sorted[lo - 1:hi]))


def _residuals(model, data, theta):
    return data.responses - np.asarray(model(data.covariates, theta), dtype=float)


def lts_rousseeuw(model: ParametricModel, data: Dataset, a: float, init=None,
                  budget: int = 2000, restarts: int = 10, seed: int = 0,
                  restart_scale: float = 1.0, workers: int | None = None) -> EstimateResult:
    """Least trimmed squares: keep the ``floor(n (1 - 2a))`` smallest squared
    residuals.  The objective is non-convex, hence the restarts."""
    _require_kind(model, "scalar")
    if not 0.0 < a < 0.5:
        raise ValueError("trimming proportion a must lie in (0, 1/2)")
    n = len(data)
    h = math.floor(n * (1.0 - 2.0 * a) + _INDEX_SLACK)
    if h < 1:
        raise ValueError(f"trimmed count {h} is below 1")
    if init is None:
        init = np.zeros(model.dim_theta)

    def objective(theta):
        r2 = _residuals(model, data, theta) ** 2
        value = float(np.partition(r2, h - 1)[:h].sum() / n)
        return _finite_or_raise(value, theta)

    return _minimize(objective, init, budget, restarts, seed, restart_scale, workers)


def tls_asymmetric(model: ParametricModel, data: Dataset, levels: LevelPair, init=None,
                   budget: int = 2000, restarts: int = 10, seed: int = 0,
                   restart_scale: float = 1.0, workers: int | None = None) -> EstimateResult:
    """Trimmed least squares on the signed residual order statistics
    ``eps_(ceil(n alpha)), ..., eps_(floor(n beta))``."""
    _require_kind(model, "scalar")
    n = len(data)
    lo, hi = _bracket(n, levels)
    if init is None:
        init = np.zeros(model.dim_theta)

    def objective(theta):
        e = np.sort(_residuals(model, data, theta))[lo - 1:hi]
        value = float((e * e).sum() / n)
        return _finite_or_raise(value, theta)

    return _minimize(objective, init, budget, restarts, seed, restart_scale, workers)


@dataclass(frozen=True)
class HuberReport:
    solution: float
    rvar: float
    gap: float
    equal: bool
    k1: float
    k2: float
    iterations: int


def _conditional_mean(dist, lo, hi):
    if isinstance(dist, NormalDistribution):
        mass = float(dist.cdf(hi) - dist.cdf(lo))
        return dist.partial_mean(lo, hi) / mass if mass > 0 else math.nan
    inside = (dist.points > lo) & (dist.points <= hi)
    mass = float(dist.masses[inside].sum())
    return float((dist.points[inside] * dist.masses[inside]).sum() / mass) if mass > 0 else math.nan


def huber_skipped_check(levels: LevelPair, dist, max_iter: int = 10_000,
                        threshold: float = 1e-6) -> HuberReport:
    """Solve the first-order condition of the asymmetric skipped Huber loss
    with ``k1 = VaR_beta``, ``k2 = VaR_alpha`` and compare with RVaR.

    The condition reads ``x = E[Y | Y in (lo - x, hi - x]]`` where ``lo`` and
    ``hi`` are ``k1`` and ``k2`` in increasing order.  A root of
    ``x - m(x)`` is bracketed on a scan and refined by bisection.
    """
    if not isinstance(dist, (NormalDistribution, DiscreteDistribution)):
        raise TypeError("dist must be a NormalDistribution or DiscreteDistribution")
    k1, k2 = float(dist.var(levels.beta)), float(dist.var(levels.alpha))
    lo, hi = min(k1, k2), max(k1, k2)
    target = float(dist.rvar(levels))

    def gfun(x):
        return x - _conditional_mean(dist, lo - x, hi - x)

    if isinstance(dist, NormalDistribution):
        center, spread = dist.mu, dist.sigma
    else:
        center = float(dist.mean())
        spread = float(dist.points[-1] - dist.points[0]) or 1.0
    radius = 3.0 * (hi - lo) + 3.0 * spread
    xs = np.linspace(center - radius, center + radius, 801)
    vals = np.array([gfun(v) for v in xs])
    ok = np.isfinite(vals)
    a = b = None
    for i in range(len(xs) - 1):
        if ok[i] and ok[i + 1] and (vals[i] == 0.0 or vals[i] * vals[i + 1] < 0):
            a, b, fa = float(xs[i]), float(xs[i + 1]), float(vals[i])
            break
    if a is None:
        raise EstimationError("first-order condition has no sign change on the search range")
    it = 0
    if fa == 0.0:
        b = a
    while b - a > 4e-16 * max(1.0, abs(a), abs(b)):
        if it >= max_iter:
            raise EstimationError(f"bisection did not converge within {max_iter} iterations")
        it += 1
        mid = 0.5 * (a + b)
        fm = gfun(mid)
        if not math.isfinite(fm):
            raise EstimationError(f"conditional mean undefined at x={mid!r}")
        if fm == 0.0:
            a = b = mid
            break
        if (fm < 0) == (fa < 0):
            a, fa = mid, fm
        else:
            b = mid
    sol = float(0.5 * (a + b))
    gap = abs(sol - target)
    return HuberReport(solution=sol, rvar=target, gap=gap, equal=bool(gap <= threshold),
                       k1=k1, k2=k2, iterations=it)
