"""Domain types and standard-normal special functions.

Everything downstream works with the level pair ``0 < alpha < beta < 1``,
forecast triplets ``(x1, x2, x3)`` for ``(VaR_alpha, VaR_beta, RVaR)`` and
samples of real observations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import erfc

__all__ = [
    "LevelPair",
    "Triplet",
    "Sample",
    "in_sensible_domain",
    "normal_cdf",
    "normal_pdf",
    "normal_quantile",
    "as_forecast_array",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _check_finite(name, value):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class LevelPair:
    """Probability levels ``0 < alpha < beta < 1``."""

    alpha: float
    beta: float

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError("levels must be finite")
        if not 0.0 < a < b < 1.0:
            raise ValueError(f"need 0 < alpha < beta < 1, got alpha={a}, beta={b}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def width(self) -> float:
        """``beta - alpha``."""
        return self.beta - self.alpha


@dataclass(frozen=True)
class Triplet:
    """Candidate value for ``(VaR_alpha, VaR_beta, RVaR_{alpha,beta})``.

    The ordering ``x1 <= x3 <= x2`` is deliberately not enforced; scores
    must be able to evaluate forecasts that violate it.
    """

    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        for name in ("x1", "x2", "x3"):
            v = float(getattr(self, name))
            _check_finite(name, v)
            object.__setattr__(self, name, v)

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3])

    @classmethod
    def from_array(cls, arr) -> "Triplet":
        a = np.asarray(arr, dtype=float).reshape(3)
        return cls(a[0], a[1], a[2])

    def shift(self, c: float) -> "Triplet":
        return Triplet(self.x1 + c, self.x2 + c, self.x3 + c)


class Sample:
    """Nonempty sequence of finite observations with a cached sorted copy."""

    def __init__(self, values):
        arr = np.array(values, dtype=float).reshape(-1)
        if arr.size == 0:
            raise ValueError("sample must be nonempty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample contains NaN or infinite values")
        arr.setflags(write=False)
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @cached_property
    def sorted(self) -> np.ndarray:
        s = np.sort(self._values, kind="stable")
        s.setflags(write=False)
        return s

    def __len__(self):
        return self._values.size

    def __repr__(self):
        return f"Sample(n={len(self)})"


def in_sensible_domain(t: Triplet) -> bool:
    """True iff ``x1 <= x3 <= x2``."""
    return t.x1 <= t.x3 <= t.x2


def normal_cdf(x):
    """Standard normal CDF, ``0.5 * erfc(-x / sqrt(2))``."""
    out = 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def normal_pdf(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return float(out) if np.ndim(out) == 0 else out


# Acklam's rational approximation coefficients (relative error ~1.2e-9).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(p):
    q = np.empty_like(p)
    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)

    if np.any(mid):
        r = p[mid] - 0.5
        s = r * r
        num = (((((_A[0] * s + _A[1]) * s + _A[2]) * s + _A[3]) * s + _A[4]) * s + _A[5]) * r
        den = ((((_B[0] * s + _B[1]) * s + _B[2]) * s + _B[3]) * s + _B[4]) * s + 1.0
        q[mid] = num / den
    for mask, sign, pp in ((lo, 1.0, p[lo]), (hi, -1.0, 1.0 - p[hi])):
        if np.any(mask):
            r = np.sqrt(-2.0 * np.log(pp))
            num = ((((_C[0] * r + _C[1]) * r + _C[2]) * r + _C[3]) * r + _C[4]) * r + _C[5]
            den = (((_D[0] * r + _D[1]) * r + _D[2]) * r + _D[3]) * r + 1.0
            q[mask] = sign * num / den
    return q


def normal_quantile(p):
    """Inverse of :func:`normal_cdf` on ``(0, 1)``.

    Rational approximation followed by one Halley step against
    ``normal_cdf``; ``|Phi(x) - p|`` is at the level of double rounding.
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError("normal_quantile requires 0 < p < 1")
    flat = arr.reshape(-1)
    x = _acklam(flat)
    # Halley refinement of Phi(x) - p; the upper branch evaluates it through
    # the upper tail to keep precision.
    upper = flat > 0.5
    resid = np.where(upper,
                     (1.0 - flat) - 0.5 * erfc(x / _SQRT2),
                     0.5 * erfc(-x / _SQRT2) - flat)
    dens = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    u = resid / dens
    x = x - u / (1.0 + 0.5 * x * u)
    x[flat == 0.5] = 0.0
    out = x.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def as_forecast_array(forecasts) -> np.ndarray:
    """Coerce a sequence of :class:`Triplet` or an ``(n, 3)`` array to floats."""
    if isinstance(forecasts, Triplet):
        forecasts = [forecasts]
    if isinstance(forecasts, np.ndarray):
        arr = np.asarray(forecasts, dtype=float)
    else:
        items = list(forecasts)
        if items and isinstance(items[0], Triplet):
            arr = np.array([[t.x1, t.x2, t.x3] for t in items], dtype=float)
        else:
            arr = np.asarray(items, dtype=float)
    if arr.ndim == 1 and arr.size == 3:
        arr = arr.reshape(1, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"forecasts must have shape (n, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("forecasts contain NaN or infinite values")
    return arr
