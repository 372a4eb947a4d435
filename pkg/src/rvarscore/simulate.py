"""Simulation study: Gaussian DGP, three forecasters, DM power table and
Murphy diagrams.

``Y_t = mu_t + u_t`` with ``mu_t, u_t`` iid standard normal.  Forecaster
``f`` knows ``mu_t``; ``g`` adds common ``N(0, sigma^2)`` noise to all three
coordinates of ``f``; ``h`` issues the unconditional ``N(0, 2)`` triplet.

Random numbers come from counter-based Philox streams keyed by
``(seed, stream)``; replication ``r`` uses stream ``r`` and the Murphy
sample uses :data:`MURPHY_STREAM`.  Uniforms are built from the top 53 bits
of each raw 64-bit draw and mapped through :func:`normal_quantile`, so
results depend only on the seed, never on scheduling or worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .backtest import VARIANCE_MODES, dm_reject_batch
from .core import LevelPair, normal_quantile
from .measures import normal_rvar
from .murphy import MurphyCurve, default_grid, murphy_curve
from .scoring import ScoreFamily, make_table1_spec, score_arrays

__all__ = [
    "ExperimentConfig",
    "PowerTable",
    "HYPOTHESES",
    "MURPHY_STREAM",
    "make_rng",
    "standard_normals",
    "dgp_sample",
    "forecaster_f",
    "forecaster_g",
    "forecaster_h",
    "run_power_study",
    "murphy_study_sample",
    "run_murphy_study",
    "panel_config",
]

MURPHY_STREAM = 2**64 - 1
_CHUNK = 250  # replications per work unit; fixed so results ignore worker count

# (first, second): the null hypothesis "first is weakly better than second".
HYPOTHESES = (("f", "g"), ("g", "f"), ("f", "h"), ("h", "f"), ("g", "h"), ("h", "g"))


def hypothesis_label(pair):
    return f"{pair[0]}<={pair[1]}"


@dataclass(frozen=True)
class ExperimentConfig:
    levels: LevelPair
    n: int = 250
    reps: int = 10_000
    sigma: float = 0.5
    seed: int = 20210101
    families: tuple = field(default_factory=lambda: (
        ScoreFamily("s1"), ScoreFamily("s2"), ScoreFamily("s3"), ScoreFamily("s4", -12.0, 12.0)))
    dm_level: float = 0.05
    variance_mode: str = "iid"
    murphy_n: int = 100_000
    murphy_grid: int = 501
    murphy_sigmas: tuple = (0.3, 0.5, 0.8)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0.0 < self.dm_level < 1.0:
            raise ValueError("dm_level must lie in (0, 1)")
        if self.variance_mode not in VARIANCE_MODES:
            raise ValueError(f"variance_mode must be one of {VARIANCE_MODES}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not self.families:
            raise ValueError("need at least one score family")
        if self.murphy_n < 1 or self.murphy_grid < 2:
            raise ValueError("murphy_n must be >= 1 and murphy_grid >= 2")
        if any(not s > 0 for s in self.murphy_sigmas):
            raise ValueError("murphy_sigmas must be positive")
        object.__setattr__(self, "families", tuple(self.families))
        object.__setattr__(self, "murphy_sigmas", tuple(float(s) for s in self.murphy_sigmas))


def panel_config(panel: str = "left", **overrides) -> ExperimentConfig:
    """The two settings of the power study; ``panel`` is ``left`` or ``right``."""
    if panel == "left":
        base = dict(levels=LevelPair(0.1, 0.9), families=(
            ScoreFamily("s1"), ScoreFamily("s2"), ScoreFamily("s3"), ScoreFamily("s4", -12.0, 12.0)))
    elif panel == "right":
        base = dict(levels=LevelPair(0.01, 0.05), families=(
            ScoreFamily("s1"), ScoreFamily("s2"), ScoreFamily("s3"), ScoreFamily("s4", -5.0, 1.0)))
    else:
        raise ValueError("panel must be 'left' or 'right'")
    base.update(overrides)
    return ExperimentConfig(**base)


@dataclass(frozen=True)
class PowerTable:
    """Rejection rates; ``rates[i, j]`` belongs to ``hypotheses[i]`` and
    ``families[j]``."""

    hypotheses: tuple
    families: tuple
    rates: np.ndarray
    reps: int

    def entry(self, hypothesis: str, family: str) -> float:
        i = self.hypotheses.index(hypothesis)
        j = self.families.index(family.upper())
        return float(self.rates[i, j])


def make_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))


def standard_normals(rng: np.random.Generator, size) -> np.ndarray:
    """Inverse-CDF standard normals from 53-bit uniforms in ``(0, 1)``."""
    count = int(np.prod(size))
    raw = rng.bit_generator.random_raw(count)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return normal_quantile(u).reshape(size)


def dgp_sample(n: int, rng: np.random.Generator):
    """``(mu, y)`` with ``y = mu + u``."""
    mu = standard_normals(rng, n)
    u = standard_normals(rng, n)
    return mu, mu + u


def _normal_offsets(levels: LevelPair):
    return np.array([normal_quantile(levels.alpha), normal_quantile(levels.beta),
                     normal_rvar(0.0, 1.0, levels)])


def forecaster_f(mu, levels: LevelPair) -> np.ndarray:
    """Triplet(s) of ``N(mu, 1)``; shape ``mu.shape + (3,)``."""
    return np.asarray(mu, dtype=float)[..., None] + _normal_offsets(levels)


def forecaster_g(f, eps) -> np.ndarray:
    """``f`` shifted by ``eps`` in every coordinate."""
    return np.asarray(f, dtype=float) + np.asarray(eps, dtype=float)[..., None]


def forecaster_h(levels: LevelPair) -> np.ndarray:
    """Triplet of the unconditional law ``N(0, 2)``."""
    return math.sqrt(2.0) * _normal_offsets(levels)


def _replication_draws(cfg: ExperimentConfig, start: int, stop: int):
    reps = stop - start
    mu = np.empty((reps, cfg.n))
    y = np.empty((reps, cfg.n))
    eps = np.empty((reps, cfg.n))
    for k, r in enumerate(range(start, stop)):
        rng = make_rng(int(cfg.seed), r)
        mu[k], y[k] = dgp_sample(cfg.n, rng)
        eps[k] = cfg.sigma * standard_normals(rng, cfg.n)
    return mu, y, eps


def _power_chunk(args):
    cfg, start, stop = args
    mu, y, eps = _replication_draws(cfg, start, stop)
    f = forecaster_f(mu, cfg.levels)
    paths = {"f": f, "g": forecaster_g(f, eps), "h": np.broadcast_to(forecaster_h(cfg.levels), f.shape)}
    counts = np.zeros((len(HYPOTHESES), len(cfg.families)), dtype=np.int64)
    for j, fam in enumerate(cfg.families):
        spec = make_table1_spec(fam, cfg.levels)
        s = {k: score_arrays(spec, p[..., 0], p[..., 1], p[..., 2], y) for k, p in paths.items()}
        for i, (a, b) in enumerate(HYPOTHESES):
            counts[i, j] = int(dm_reject_batch(s[a] - s[b], cfg.dm_level, cfg.variance_mode).sum())
    return counts


def run_power_study(cfg: ExperimentConfig, workers: int = 1) -> PowerTable:
    """Rejection rates of the six DM nulls for every score family."""
    tasks = [(cfg, s, min(s + _CHUNK, cfg.reps)) for s in range(0, cfg.reps, _CHUNK)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_power_chunk, tasks))
    else:
        parts = [_power_chunk(t) for t in tasks]
    counts = np.sum(parts, axis=0)
    return PowerTable(hypotheses=tuple(hypothesis_label(h) for h in HYPOTHESES),
                      families=tuple(f.label for f in cfg.families),
                      rates=counts / cfg.reps, reps=cfg.reps)


def murphy_study_sample(cfg: ExperimentConfig):
    """Observations and named forecast arrays for the Murphy study.

    The ``g`` forecasters for different ``sigma`` share one noise draw.
    """
    rng = make_rng(int(cfg.seed), MURPHY_STREAM)
    mu, y = dgp_sample(cfg.murphy_n, rng)
    z = standard_normals(rng, cfg.murphy_n)
    f = forecaster_f(mu, cfg.levels)
    forecasts = {"f": f}
    for s in cfg.murphy_sigmas:
        forecasts[f"g(sigma={s:g})"] = forecaster_g(f, s * z)
    forecasts["h"] = np.broadcast_to(forecaster_h(cfg.levels), f.shape).copy()
    return y, forecasts


def run_murphy_study(cfg: ExperimentConfig, workers: int = 1) -> dict:
    """Murphy curves for ``f``, ``h`` and every ``g(sigma)`` on a shared grid."""
    y, forecasts = murphy_study_sample(cfg)
    grid = default_grid(y, forecasts, cfg.murphy_grid)
    return {name: murphy_curve(cfg.levels, fc, y, grid, workers=workers)
            for name, fc in forecasts.items()}
