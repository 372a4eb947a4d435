"""Consistent scoring functions for ``(VaR_alpha, VaR_beta, RVaR_{alpha,beta})``.

A score is determined by increasing-type functions ``g1``, ``g2`` and a
convex ``phi`` with subgradient ``phi_prime``::

    S(x, y) = (1{y<=x1} - a) g1(x1) - 1{y<=x1} g1(y)
            + (1{y<=x2} - b) g2(x2) - 1{y<=x2} g2(y)
            + phi'(x3) (x3 + (S_b(x2, y) - S_a(x1, y)) / (b - a)) - phi(x3) + a(y)

with the pinball loss ``S_g(x, y) = (1{y<=x} - g) x - 1{y<=x} y``.

All callables stored in a :class:`ScoreSpec` must accept and return numpy
arrays; every evaluation routine here broadcasts over its inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import integrate

from .core import LevelPair, Triplet, normal_cdf, normal_pdf
from .measures import DiscreteDistribution, NormalDistribution

__all__ = [
    "ScoreSpec",
    "ScoreFamily",
    "ValidationReport",
    "pinball",
    "make_table1_spec",
    "score",
    "score_arrays",
    "identification",
    "identification_arrays",
    "validate_spec",
    "normalize_spec",
    "expected_score",
    "expected_score_normal",
    "translation_defect",
    "homogeneity_defect",
]

FAMILY_KINDS = ("s1", "s2", "s3", "s4")
DEFAULT_WINDOW = (-10.0, 10.0)


def _identity(x):
    return np.asarray(x, dtype=float)


def pinball(gamma, x, y):
    """``(1{y <= x} - gamma) x - 1{y <= x} y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ind = (y <= x).astype(float)
    out = (ind - gamma) * x - ind * y
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ScoreSpec:
    """The ingredients of a score in the family above.

    ``clamp`` is the cube ``[c_min, c_max]^3`` on which forecasts are
    evaluated; coordinates outside are moved to the boundary first.
    ``window`` optionally overrides the finite interval used by
    :func:`validate_spec` and :func:`normalize_spec` when the clamp is
    unbounded.
    """

    levels: LevelPair
    g1: Callable
    g2: Callable
    phi: Callable
    phi_prime: Callable
    clamp: tuple = (-math.inf, math.inf)
    a_policy: str = "self_calibrated"
    window: tuple | None = None
    name: str = "custom"

    def __post_init__(self):
        if self.a_policy not in ("zero", "self_calibrated"):
            raise ValueError(f"unknown a_policy {self.a_policy!r}")
        lo, hi = map(float, self.clamp)
        if not lo < hi:
            raise ValueError("clamp requires c_min < c_max")
        object.__setattr__(self, "clamp", (lo, hi))

    def validation_window(self):
        lo, hi = self.clamp
        wlo, whi = self.window if self.window is not None else DEFAULT_WINDOW
        if math.isfinite(lo):
            wlo = lo
        if math.isfinite(hi):
            whi = hi
        return float(wlo), float(whi)


@dataclass(frozen=True)
class ScoreFamily:
    """One of the four example scores; ``c1 < c2`` only matters for ``s4``."""

    kind: str
    c1: float | None = None
    c2: float | None = None

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in FAMILY_KINDS:
            raise ValueError(f"unknown score family {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "s4":
            if self.c1 is None or self.c2 is None:
                raise ValueError("s4 needs c1 and c2")
            if not float(self.c1) < float(self.c2):
                raise ValueError(f"s4 needs c1 < c2, got c1={self.c1}, c2={self.c2}")

    @property
    def label(self) -> str:
        return self.kind.upper()


def _log_cosh(u):
    u = np.abs(u)
    return u + np.log1p(np.exp(-2.0 * u)) - math.log(2.0)


def make_table1_spec(family: ScoreFamily, levels: LevelPair) -> ScoreSpec:
    """Score with ``g1 = g2 = identity`` and one of the four example
    ``phi'`` shapes scaled by ``w = beta - alpha``.

    ``phi`` is the closed-form antiderivative anchored at ``phi(0) = 0``.
    """
    w = levels.width
    kind = family.kind
    window = None

    if kind == "s1":
        def phi_prime(x):
            return w * np.tanh(w * np.asarray(x, dtype=float))

        def phi(x):
            return _log_cosh(w * np.asarray(x, dtype=float))
    elif kind == "s2":
        k = 2.0 / math.pi

        def phi_prime(x):
            return w * k * np.arctan(w * np.asarray(x, dtype=float))

        def phi(x):
            u = w * np.asarray(x, dtype=float)
            return k * (u * np.arctan(u) - 0.5 * np.log1p(u * u))
    elif kind == "s3":
        phi0 = normal_pdf(0.0)

        def phi_prime(x):
            return w * (2.0 * normal_cdf(w * np.asarray(x, dtype=float)) - 1.0)

        def phi(x):
            u = w * np.asarray(x, dtype=float)
            return 2.0 * (u * normal_cdf(u) + normal_pdf(u)) - u - 2.0 * phi0
    else:
        c1, c2 = float(family.c1), float(family.c2)
        mid, half = 0.5 * (c1 + c2), 0.5 * (c2 - c1)

        def ramp(x):
            return np.clip((np.asarray(x, dtype=float) - mid) / half, -1.0, 1.0)

        def ramp_integral(x):
            x = np.asarray(x, dtype=float)
            inner = 0.5 * (x - mid) ** 2 / half
            return np.where(x > c2, (x - c2) + 0.5 * half,
                            np.where(x < c1, (c1 - x) + 0.5 * half, inner))

        r0 = float(ramp_integral(0.0))

        def phi_prime(x):
            return w * ramp(x)

        def phi(x):
            return w * (ramp_integral(x) - r0)

        window = (c1 - half, c2 + half)

    return ScoreSpec(levels=levels, g1=_identity, g2=_identity, phi=phi,
                     phi_prime=phi_prime, window=window, name=family.label)


def _clamped(spec, x):
    lo, hi = spec.clamp
    return np.clip(x, lo, hi)


def _raw_score(spec, x1, x2, x3, y):
    a, b = spec.levels.alpha, spec.levels.beta
    w = b - a
    i1 = (y <= x1).astype(float)
    i2 = (y <= x2).astype(float)
    gy1 = spec.g1(y)
    gy2 = spec.g2(y)
    s_a = (i1 - a) * x1 - i1 * y
    s_b = (i2 - b) * x2 - i2 * y
    return ((i1 - a) * spec.g1(x1) - i1 * gy1
            + (i2 - b) * spec.g2(x2) - i2 * gy2
            + spec.phi_prime(x3) * (x3 + (s_b - s_a) / w) - spec.phi(x3))


def score_arrays(spec: ScoreSpec, x1, x2, x3, y, return_flag=False):
    """Vectorized score; inputs broadcast against each other.

    With ``return_flag`` the boolean array of clamped positions is returned
    as a second value.
    """
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("observations must be finite")
    x1, x2, x3, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x1, x2, x3)), y)
    c1, c2, c3 = _clamped(spec, x1), _clamped(spec, x2), _clamped(spec, x3)
    out = _raw_score(spec, c1, c2, c3, y)
    if spec.a_policy == "self_calibrated":
        out = out - _raw_score(spec, y, y, y, y)
    if return_flag:
        flag = (c1 != x1) | (c2 != x2) | (c3 != x3)
        return out, flag
    return out


def score(spec: ScoreSpec, t: Triplet, y: float, return_flag=False):
    """Score of a single forecast triplet against one observation."""
    if not math.isfinite(y):
        raise ValueError("observation must be finite")
    val, flag = score_arrays(spec, t.x1, t.x2, t.x3, y, return_flag=True)
    if return_flag:
        return float(val), bool(flag)
    return float(val)


def identification_arrays(levels: LevelPair, x1, x2, x3, y):
    """Identification function stacked along a trailing axis of size 3."""
    a, b = levels.alpha, levels.beta
    x1, x2, x3, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x1, x2, x3, y)))
    v1 = (y <= x1).astype(float) - a
    v2 = (y <= x2).astype(float) - b
    v3 = x3 + (pinball(b, x2, y) - pinball(a, x1, y)) / (b - a)
    return np.stack([v1, v2, np.asarray(v3)], axis=-1)


def identification(levels: LevelPair, t: Triplet, y: float) -> np.ndarray:
    """``(1{y<=x1} - a, 1{y<=x2} - b, x3 + (S_b(x2,y) - S_a(x1,y))/(b-a))``."""
    return identification_arrays(levels, t.x1, t.x2, t.x3, y)


@dataclass
class ValidationReport:
    valid: bool
    strict: bool
    phi_convex: bool
    phi_strictly_convex: bool
    g1_monotone: bool
    g2_monotone: bool
    g1_strict: bool
    g2_strict: bool
    sup_abs_phi_prime: float
    width: float
    window: tuple
    failures: list = field(default_factory=list)

    @property
    def phi_prime_within_bound(self) -> bool:
        """Whether ``sup |phi'| <= beta - alpha`` on the window."""
        return self.sup_abs_phi_prime <= self.width * (1.0 + 1e-12)


def _tolerance(values):
    return 1e-12 * max(1.0, float(np.max(np.abs(values))))


def validate_spec(spec: ScoreSpec, grid_size: int = 201) -> ValidationReport:
    """Check convexity of ``phi`` and monotonicity of
    ``x1 -> g1(x1) - x1 phi'(x3)/(b-a)`` and ``x2 -> g2(x2) + x2 phi'(x3)/(b-a)``
    for every ``x3`` on an evenly spaced grid over the validation window.

    Integrability of the score under a class of distributions is not
    checked here.
    """
    if grid_size < 3:
        raise ValueError("grid_size must be at least 3")
    lo, hi = spec.validation_window()
    grid = np.linspace(lo, hi, grid_size)
    w = spec.levels.width
    failures = []

    dphi = np.asarray(spec.phi_prime(grid), dtype=float)
    phival = np.asarray(spec.phi(grid), dtype=float)
    if not (np.all(np.isfinite(dphi)) and np.all(np.isfinite(phival))):
        failures.append("phi or phi' not finite on the window")
    step = np.diff(dphi)
    tol = _tolerance(dphi)
    phi_convex = bool(np.all(step >= -tol))
    # phi' must act as a subgradient of phi between neighbouring grid points.
    h = np.diff(grid)
    dv = np.diff(phival)
    ptol = _tolerance(phival)
    subgrad_ok = bool(np.all(dv >= dphi[:-1] * h - ptol) and np.all(dv <= dphi[1:] * h + ptol))
    if not phi_convex:
        failures.append("phi' decreases somewhere: phi not convex")
    if not subgrad_ok:
        phi_convex = False
        failures.append("phi' is not a subgradient of phi on the grid")
    phi_strict = phi_convex and bool(np.all(step > 0))

    slope = dphi[:, None] / w
    gtab1 = np.asarray(spec.g1(grid), dtype=float)[None, :] - grid[None, :] * slope
    gtab2 = np.asarray(spec.g2(grid), dtype=float)[None, :] + grid[None, :] * slope
    d1 = np.diff(gtab1, axis=1)
    d2 = np.diff(gtab2, axis=1)
    g1_mono = bool(np.all(d1 >= -_tolerance(gtab1)))
    g2_mono = bool(np.all(d2 >= -_tolerance(gtab2)))
    g1_strict = g1_mono and bool(np.all(d1 > 0))
    g2_strict = g2_mono and bool(np.all(d2 > 0))
    if not g1_mono:
        failures.append("x1 -> g1(x1) - x1 phi'(x3)/(b-a) decreases for some x3")
    if not g2_mono:
        failures.append("x2 -> g2(x2) + x2 phi'(x3)/(b-a) decreases for some x3")

    sup_abs = float(np.max(np.abs(dphi)))
    valid = phi_convex and g1_mono and g2_mono and not any("finite" in f for f in failures)
    strict = valid and phi_strict and g1_strict and g2_strict
    return ValidationReport(valid=valid, strict=strict, phi_convex=phi_convex,
                            phi_strictly_convex=phi_strict, g1_monotone=g1_mono,
                            g2_monotone=g2_mono, g1_strict=g1_strict, g2_strict=g2_strict,
                            sup_abs_phi_prime=sup_abs, width=w, window=(lo, hi),
                            failures=failures)


def normalize_spec(spec: ScoreSpec, grid_size: int = 2001) -> ScoreSpec:
    """Strongly equivalent spec whose ``phi'`` ranges over ``[-(b-a), b-a]``
    on the validation window.

    A linear term ``c x`` moved between ``phi`` and the ``g``'s leaves the
    score unchanged; it centres ``phi'``.  The whole score is then scaled
    by ``(b - a) / lambda`` where ``lambda`` is the centred sup of ``phi'``.
    """
    lo, hi = spec.validation_window()
    grid = np.linspace(lo, hi, grid_size)
    dphi = np.asarray(spec.phi_prime(grid), dtype=float)
    top, bottom = float(np.max(dphi)), float(np.min(dphi))
    lam = 0.5 * (top - bottom)
    if not lam > 0:
        raise ValueError("phi' is constant on the window: phi has no scale to normalize")
    w = spec.levels.width
    c = -0.5 * (top + bottom)
    k = w / lam
    g1, g2, phi, dphi_fn = spec.g1, spec.g2, spec.phi, spec.phi_prime

    def new_g1(x):
        x = np.asarray(x, dtype=float)
        return k * (g1(x) + c * x / w)

    def new_g2(x):
        x = np.asarray(x, dtype=float)
        return k * (g2(x) - c * x / w)

    def new_phi(x):
        x = np.asarray(x, dtype=float)
        return k * (phi(x) + c * x)

    def new_phi_prime(x):
        return k * (dphi_fn(x) + c)

    return replace(spec, g1=new_g1, g2=new_g2, phi=new_phi, phi_prime=new_phi_prime,
                   name=f"normalized({spec.name})")


def _a_term(spec, y):
    if spec.a_policy == "self_calibrated":
        return -_raw_score(spec, y, y, y, y)
    return np.zeros_like(y)


def expected_score(spec: ScoreSpec, x1, x2, x3, dist, epsabs=1e-10):
    """Exact expectation of the score under ``dist``.

    For a :class:`DiscreteDistribution` this is a finite sum over atoms; for
    a :class:`NormalDistribution` it is adaptive quadrature over ``y`` on
    ``mu +- 12 sigma`` with the indicator kinks as breakpoints.  Forecast
    arguments may be arrays of a common shape; the result has that shape.
    """
    x1, x2, x3 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x1, x2, x3)))
    if isinstance(dist, DiscreteDistribution):
        y = dist.points.reshape((-1,) + (1,) * x1.ndim)
        vals = score_arrays(spec, x1[None], x2[None], x3[None], y)
        return np.tensordot(dist.masses, vals, axes=1)
    if isinstance(dist, NormalDistribution):
        lo = dist.mu - 12.0 * dist.sigma
        hi = dist.mu + 12.0 * dist.sigma
        flat1, flat2, flat3 = x1.ravel(), x2.ravel(), x3.ravel()
        kinks = np.unique(np.concatenate([flat1, flat2]))
        kinks = kinks[(kinks > lo) & (kinks < hi)]
        edges = np.concatenate(([lo], kinks, [hi]))

        def integrand(y):
            return score_arrays(spec, flat1, flat2, flat3, y) * float(dist.pdf(y))

        total = np.zeros(flat1.shape)
        for left, right in zip(edges[:-1], edges[1:]):
            if right > left:
                val, _ = integrate.quad_vec(integrand, left, right, epsabs=epsabs, epsrel=0.0)
                total += val
        return total.reshape(x1.shape) if x1.ndim else float(total[0])
    raise TypeError(f"unsupported distribution {type(dist).__name__}")


def _pinball_mean_normal(gamma, x, dist):
    # E[(1{Y<=x} - g) x - 1{Y<=x} Y]
    return (dist.cdf(x) - gamma) * x - dist.partial_mean(-np.inf, x)


def expected_score_normal(spec: ScoreSpec, x1, x2, x3, dist: NormalDistribution):
    """Closed-form expected score under a normal law for specs with
    ``g1 = g2 = identity`` (all four example scores), up to the forecast-free
    constant ``E[a(Y)]`` which is added by quadrature."""
    a, b = spec.levels.alpha, spec.levels.beta
    x1, x2, x3 = (np.asarray(v, dtype=float) for v in (x1, x2, x3))
    x1, x2, x3 = _clamped(spec, x1), _clamped(spec, x2), _clamped(spec, x3)
    e_a = _pinball_mean_normal(a, x1, dist)
    e_b = _pinball_mean_normal(b, x2, dist)
    base = e_a + e_b + spec.phi_prime(x3) * (x3 + (e_b - e_a) / (b - a)) - spec.phi(x3)
    ea, _ = integrate.quad(lambda y: float(_a_term(spec, np.asarray(y))) * float(dist.pdf(y)),
                           dist.mu - 12 * dist.sigma, dist.mu + 12 * dist.sigma,
                           epsabs=1e-12, limit=200)
    return base + ea


def translation_defect(spec: ScoreSpec, z, t: Triplet, t2: Triplet, y):
    """``S(t+z, y+z) - S(t2+z, y+z) - S(t, y) + S(t2, y)``; identically zero
    for scores with translation invariant score differences."""
    return (score(spec, t.shift(z), y + z) - score(spec, t2.shift(z), y + z)
            - score(spec, t, y) + score(spec, t2, y))


def homogeneity_defect(spec: ScoreSpec, c, b, t: Triplet, t2: Triplet, y):
    """``S(ct, cy) - S(ct2, cy) - c^b (S(t, y) - S(t2, y))``."""
    def scaled(u):
        return Triplet(c * u.x1, c * u.x2, c * u.x3)
    return (score(spec, scaled(t), c * y) - score(spec, scaled(t2), c * y)
            - c ** b * (score(spec, t, y) - score(spec, t2, y)))
