"""Empirical and closed-form risk measures: VaR, RVaR, ES, trimmed and
Winsorized means.

Quantiles follow the lower (left-continuous) convention
``VaR_g(F) = inf{x : F(x) >= g}``.  Range Value at Risk is computed as the
exact integral of the quantile function, i.e. every atom is weighted by the
Lebesgue measure of the overlap of its probability interval with
``(alpha, beta]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LevelPair, Sample, normal_cdf, normal_pdf, normal_quantile

__all__ = [
    "DiscreteDistribution",
    "NormalDistribution",
    "empirical_var",
    "empirical_rvar",
    "empirical_es",
    "distribution_rvar",
    "normal_var",
    "normal_rvar",
    "winsorized_mean",
    "trimmed_mean",
]

# Slack used when comparing cumulative masses against a level, so that
# n * gamma = 7.000000000000001 still selects the 7th order statistic.
_LEVEL_TOL = 1e-12


def _check_level(gamma, name="gamma"):
    gamma = float(gamma)
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {gamma}")
    return gamma


def _as_sample(s) -> Sample:
    return s if isinstance(s, Sample) else Sample(s)


def _quantile_index(cum, gamma):
    """Index of the first atom whose cumulative mass reaches ``gamma``."""
    i = int(np.searchsorted(cum, gamma - _LEVEL_TOL, side="left"))
    return min(i, cum.size - 1)


def _overlap_weights(cum, lo, hi):
    """``|(cum[i-1], cum[i]] intersected with (lo, hi]|`` for every atom."""
    left = np.concatenate(([0.0], cum[:-1]))
    return np.clip(np.minimum(cum, hi) - np.maximum(left, lo), 0.0, None)


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely many atoms with strictly increasing points."""

    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1)
        ms = np.array(self.masses, dtype=float).reshape(-1)
        if pts.size == 0 or pts.size != ms.size:
            raise ValueError("points and masses must be nonempty and of equal length")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(ms))):
            raise ValueError("atoms must be finite")
        if np.any(ms <= 0):
            raise ValueError("masses must be positive")
        if abs(ms.sum() - 1.0) > 1e-12:
            raise ValueError(f"masses must sum to 1, got {ms.sum()!r}")
        if pts.size > 1 and np.any(np.diff(pts) <= 0):
            raise ValueError("points must be strictly increasing")
        pts.setflags(write=False)
        ms.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", ms)

    @classmethod
    def from_atoms(cls, atoms):
        """Build from ``{point: mass}`` or an iterable of ``(point, mass)``."""
        items = sorted(dict(atoms).items())
        return cls(np.array([p for p, _ in items]), np.array([m for _, m in items]))

    @classmethod
    def empirical(cls, values):
        """The empirical distribution of ``values`` (ties merged)."""
        pts, counts = np.unique(np.asarray(values, dtype=float), return_counts=True)
        return cls(pts, counts / counts.sum())

    @property
    def cum(self) -> np.ndarray:
        c = np.cumsum(self.masses)
        c[-1] = 1.0
        return c

    def cdf(self, x):
        """``F(x) = P(Y <= x)``."""
        idx = np.searchsorted(self.points, x, side="right")
        return np.concatenate(([0.0], self.cum))[idx]

    def var(self, gamma):
        return float(self.points[_quantile_index(self.cum, _check_level(gamma))])

    def rvar(self, levels: LevelPair):
        return distribution_rvar(self, levels)

    def mean(self):
        return float(np.dot(self.points, self.masses))


@dataclass(frozen=True)
class NormalDistribution:
    """``N(mu, sigma^2)``; used by the estimation checks and expected scores."""

    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)) or self.sigma <= 0:
            raise ValueError("need finite mu and sigma > 0")

    def cdf(self, x):
        return normal_cdf((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def pdf(self, x):
        return normal_pdf((np.asarray(x, dtype=float) - self.mu) / self.sigma) / self.sigma

    def partial_mean(self, lo, hi):
        """``E[Y 1{lo < Y <= hi}]``."""
        a = (np.asarray(lo, dtype=float) - self.mu) / self.sigma
        b = (np.asarray(hi, dtype=float) - self.mu) / self.sigma
        return (self.mu * (normal_cdf(b) - normal_cdf(a))
                + self.sigma * (normal_pdf(a) - normal_pdf(b)))

    def var(self, gamma):
        return normal_var(self.mu, self.sigma, gamma)

    def rvar(self, levels: LevelPair):
        return normal_rvar(self.mu, self.sigma, levels)


def empirical_var(s, gamma) -> float:
    """The ``ceil(n * gamma)``-th order statistic."""
    s = _as_sample(s)
    gamma = _check_level(gamma)
    n = len(s)
    k = math.ceil(n * gamma - _LEVEL_TOL * n)
    k = min(max(k, 1), n)
    return float(s.sorted[k - 1])


def _empirical_range_mean(s: Sample, lo, hi):
    n = len(s)
    cum = np.arange(1, n + 1, dtype=float) / n
    w = _overlap_weights(cum, lo, hi)
    return float(np.dot(w, s.sorted) / (hi - lo))


def empirical_rvar(s, levels: LevelPair) -> float:
    """``(beta - alpha)^{-1} * integral of VaR_g over (alpha, beta]`` for the
    empirical distribution of ``s``."""
    return _empirical_range_mean(_as_sample(s), levels.alpha, levels.beta)


def empirical_es(s, gamma) -> float:
    """Lower-tail mean ``RVaR_{0, gamma}`` of the empirical distribution."""
    gamma = _check_level(gamma)
    return _empirical_range_mean(_as_sample(s), 0.0, gamma)


def distribution_rvar(d: DiscreteDistribution, levels: LevelPair) -> float:
    """RVaR through the partial expectation on ``(VaR_alpha, VaR_beta]`` plus
    the two correction terms for atoms at the quantiles."""
    a, b = levels.alpha, levels.beta
    qa, qb = d.var(a), d.var(b)
    inside = (d.points > qa) & (d.points <= qb)
    partial = float(np.dot(d.points[inside], d.masses[inside]))
    correction = qa * (float(d.cdf(qa)) - a) - qb * (float(d.cdf(qb)) - b)
    return (partial + correction) / (b - a)


def _check_sigma(sigma):
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")


def normal_var(mu, sigma, gamma):
    """``mu + sigma * Phi^{-1}(gamma)``."""
    _check_sigma(sigma)
    return mu + sigma * normal_quantile(_check_level(gamma))


def normal_rvar(mu, sigma, levels: LevelPair):
    """Closed-form RVaR of ``N(mu, sigma^2)``."""
    _check_sigma(sigma)
    a, b = levels.alpha, levels.beta
    za, zb = normal_quantile(a), normal_quantile(b)
    return mu - sigma * (normal_pdf(zb) - normal_pdf(za)) / (b - a)


def _check_trim(a):
    a = float(a)
    if not 0.0 < a < 0.5:
        raise ValueError(f"trimming level must lie in (0, 1/2), got {a}")
    return a


def trimmed_mean(s, a) -> float:
    """The ``a``-trimmed mean ``RVaR_{a, 1-a}``."""
    a = _check_trim(a)
    return empirical_rvar(s, LevelPair(a, 1.0 - a))


def winsorized_mean(s, a) -> float:
    """The ``a``-Winsorized mean as a combination of trimmed mean and the
    two quantiles."""
    a = _check_trim(a)
    s = _as_sample(s)
    return ((1.0 - 2.0 * a) * trimmed_mean(s, a)
            + a * empirical_var(s, a) + a * empirical_var(s, 1.0 - a))
