"""Command-line interface.

Subcommands ``score``, ``murphy``, ``dm``, ``simulate`` and ``estimate``.

Forecast input files are long-format CSV with header
``t,y,forecaster,x1,x2,x3``, one row per time point and forecaster.  Every
forecaster must cover the same time points with the same observation.
Estimation input is CSV with a ``y`` column; all other columns are
covariates in file order.

Simulation config files hold ``key = value`` lines (``#`` starts a
comment).  Keys: ``alpha``, ``beta``, ``n``, ``reps``, ``sigma``, ``seed``
(required), ``families`` (comma list of ``s1..s4``), ``c1``, ``c2``,
``level``, ``variance_mode``, ``murphy_n``, ``murphy_grid``,
``murphy_sigmas`` (comma list).  Command-line flags override file values.

Exit codes: 0 success, 2 input parse error, 3 semantic or config error,
4 numerical failure.  Floats are written in shortest round-trip form.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import math
import os
import sys
from collections import OrderedDict

import numpy as np
import scipy

from . import _backend
from .backtest import VARIANCE_MODES, compare_all
from .core import LevelPair
from .estimate import (
    Dataset,
    EstimationError,
    huber_skipped_check,
    joint_intercept_model,
    joint_linear_model,
    joint_scale_model,
    lts_rousseeuw,
    m_estimate,
    scalar_linear_model,
    scalar_location_model,
    tls_asymmetric,
    tls_koenker_bassett,
)
from .measures import DiscreteDistribution, NormalDistribution
from .murphy import default_grid, murphy_curve
from .scoring import ScoreFamily, make_table1_spec, score_arrays
from .simulate import ExperimentConfig, run_murphy_study, run_power_study

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_SEMANTIC = 3
EXIT_NUMERIC = 4

FORECAST_HEADER = ("t", "y", "forecaster", "x1", "x2", "x3")
FAMILIES = ("s1", "s2", "s3", "s4")
__version__ = "0.1.0"


class ParseError(Exception):
    pass


class SemanticError(Exception):
    pass


def fmt(x) -> str:
    """Shortest round-trip decimal form of a float."""
    return repr(float(x))


def _parse_float(text, row, col):
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise ParseError(f"row {row}, column {col}: cannot parse {text!r} as a number") from None
    if not math.isfinite(v):
        raise ParseError(f"row {row}, column {col}: value {text!r} is not finite")
    return v


def _open_csv(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return list(csv.reader(fh))
    except FileNotFoundError:
        raise SemanticError(f"input file {path!r} does not exist") from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 ({exc})") from None


def read_forecasts(path):
    """Return ``(times, y, forecasts)`` with ``forecasts`` an ordered dict
    of ``(n, 3)`` arrays aligned with ``times``."""
    rows = _open_csv(path)
    if not rows:
        raise ParseError(f"{path}: empty file, header row required")
    header = tuple(h.strip() for h in rows[0])
    if header != FORECAST_HEADER:
        raise ParseError(f"{path}: header must be {','.join(FORECAST_HEADER)}, got {','.join(header)}")
    times = OrderedDict()
    table = OrderedDict()
    for r, raw in enumerate(rows[1:], start=2):
        if not raw or all(not c.strip() for c in raw):
            continue
        if len(raw) != len(FORECAST_HEADER):
            raise ParseError(f"row {r}: expected {len(FORECAST_HEADER)} columns, got {len(raw)}")
        t, name = raw[0].strip(), raw[2].strip()
        if not t:
            raise ParseError(f"row {r}, column t: empty")
        if not name:
            raise ParseError(f"row {r}, column forecaster: empty")
        y = _parse_float(raw[1], r, "y")
        x = [_parse_float(raw[k], r, FORECAST_HEADER[k]) for k in (3, 4, 5)]
        if t in times:
            if times[t] != y:
                raise ParseError(f"row {r}: observation for t={t} differs from an earlier row")
        else:
            times[t] = y
        per = table.setdefault(name, {})
        if t in per:
            raise ParseError(f"row {r}: duplicate row for t={t}, forecaster={name}")
        per[t] = x
    if not times:
        raise ParseError(f"{path}: no data rows")
    order = list(times)
    forecasts = OrderedDict()
    for name, per in table.items():
        missing = [t for t in order if t not in per]
        if missing:
            raise SemanticError(f"forecaster {name!r} has no row for t={missing[0]}")
        forecasts[name] = np.array([per[t] for t in order], dtype=float)
    return order, np.array([times[t] for t in order], dtype=float), forecasts


def write_forecasts(path, times, y, forecasts):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FORECAST_HEADER)
        for name, arr in forecasts.items():
            for t, yt, row in zip(times, y, arr):
                w.writerow([t, fmt(yt), name, fmt(row[0]), fmt(row[1]), fmt(row[2])])


def read_dataset(path):
    rows = _open_csv(path)
    if not rows:
        raise ParseError(f"{path}: empty file, header row required")
    header = [h.strip() for h in rows[0]]
    if "y" not in header:
        raise ParseError(f"{path}: header needs a 'y' column")
    iy = header.index("y")
    xs, ys = [], []
    for r, raw in enumerate(rows[1:], start=2):
        if not raw or all(not c.strip() for c in raw):
            continue
        if len(raw) != len(header):
            raise ParseError(f"row {r}: expected {len(header)} columns, got {len(raw)}")
        vals = [_parse_float(c, r, header[k]) for k, c in enumerate(raw)]
        ys.append(vals[iy])
        xs.append([v for k, v in enumerate(vals) if k != iy])
    if not ys:
        raise ParseError(f"{path}: no data rows")
    return Dataset(np.array(xs, dtype=float).reshape(len(ys), len(header) - 1), np.array(ys))


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _levels(args):
    try:
        return LevelPair(args.alpha, args.beta)
    except ValueError as exc:
        raise SemanticError(str(exc)) from None


def _family(kind, c1, c2):
    try:
        if kind == "s4":
            return ScoreFamily("s4", -12.0 if c1 is None else c1, 12.0 if c2 is None else c2)
        return ScoreFamily(kind)
    except ValueError as exc:
        raise SemanticError(str(exc)) from None


def _out_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise SemanticError(f"cannot create output directory {path!r}: {exc}") from None
    if not os.access(path, os.W_OK):
        raise SemanticError(f"output directory {path!r} is not writable")
    return path


def cmd_score(args):
    levels = _levels(args)
    spec = make_table1_spec(_family(args.family, args.c1, args.c2), levels)
    times, y, forecasts = read_forecasts(args.input)
    out = _out_dir(args.out)
    rows, summary = [], []
    for name, arr in forecasts.items():
        s = score_arrays(spec, arr[:, 0], arr[:, 1], arr[:, 2], y)
        if not np.all(np.isfinite(s)):
            raise FloatingPointError(f"non-finite score for forecaster {name!r}")
        rows.extend([t, name, fmt(v)] for t, v in zip(times, s))
        summary.append((float(np.mean(s)), name))
    summary.sort()
    _write_rows(os.path.join(out, "scores.csv"), ("t", "forecaster", "score"), rows)
    _write_rows(os.path.join(out, "summary.csv"), ("forecaster", "mean_score"),
                [[n, fmt(m)] for m, n in summary])
    for m, n in summary:
        print(f"{n}\t{fmt(m)}")
    return EXIT_OK


def cmd_murphy(args):
    levels = _levels(args)
    times, y, forecasts = read_forecasts(args.input)
    if args.grid < 2:
        raise SemanticError("grid must have at least two points")
    out = _out_dir(args.out)
    grid = default_grid(y, forecasts, args.grid)
    rows = []
    for name, arr in forecasts.items():
        curve = murphy_curve(levels, arr, y, grid, workers=args.workers)
        rows.extend(_murphy_rows(name, curve))
    _write_rows(os.path.join(out, "murphy.csv"), ("v", "forecaster", "component", "mean_score"), rows)
    return EXIT_OK


def _murphy_rows(name, curve):
    rows = []
    for k in (1, 2, 3):
        col = curve.component(k)
        rows.extend([fmt(v), name, k, fmt(m)] for v, m in zip(curve.grid, col))
    return rows


def cmd_dm(args):
    levels = _levels(args)
    if not 0.0 < args.level < 1.0:
        raise SemanticError("level must lie in (0, 1)")
    spec = make_table1_spec(_family(args.family, args.c1, args.c2), levels)
    times, y, forecasts = read_forecasts(args.input)
    if len(forecasts) < 2:
        raise SemanticError("dm needs at least two forecasters")
    out = _out_dir(args.out)
    res = compare_all(spec, forecasts, y, args.level, args.variance_mode)
    rows = []
    for (i, j), r in res.items():
        rows.append([f"{i}<={j}", i, j, fmt(r.mean_diff), fmt(r.variance), fmt(r.statistic),
                     fmt(r.p_value), int(r.reject)])
        verdict = "reject" if r.reject else "keep"
        print(f"H0 {i}<={j}: stat={r.statistic:.4f} p={r.p_value:.4g} {verdict}")
    _write_rows(os.path.join(out, "dm.csv"),
                ("hypothesis", "first", "second", "mean_diff", "variance", "statistic",
                 "p_value", "reject"), rows)
    return EXIT_OK


_CONFIG_KEYS = ("alpha", "beta", "n", "reps", "sigma", "seed", "families", "c1", "c2",
                "level", "variance_mode", "murphy_n", "murphy_grid", "murphy_sigmas")


def read_config(path):
    """Parse a ``key = value`` file into a dict of strings."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except FileNotFoundError:
        raise SemanticError(f"config file {path!r} does not exist") from None
    cfg = {}
    for no, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{no}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise SemanticError(f"config.{key}: unknown key")
        cfg[key] = value
    return cfg


def _typed(cfg, key, conv, default):
    if key not in cfg:
        return default
    try:
        return conv(cfg[key])
    except (TypeError, ValueError):
        raise SemanticError(f"config.{key}: invalid value {cfg[key]!r}") from None


def build_experiment(cfg: dict) -> ExperimentConfig:
    """Turn raw config strings into an :class:`ExperimentConfig`."""
    if "seed" not in cfg:
        raise SemanticError("config.seed: required for simulate")
    alpha = _typed(cfg, "alpha", float, 0.1)
    beta = _typed(cfg, "beta", float, 0.9)
    try:
        levels = LevelPair(alpha, beta)
    except ValueError as exc:
        raise SemanticError(f"config.alpha/beta: {exc}") from None
    kinds = [k.strip().lower() for k in str(cfg.get("families", "s1,s2,s3,s4")).split(",") if k.strip()]
    c1 = _typed(cfg, "c1", float, -12.0)
    c2 = _typed(cfg, "c2", float, 12.0)
    families = []
    for k in kinds:
        if k not in FAMILIES:
            raise SemanticError(f"config.families: unknown family {k!r}")
        try:
            families.append(ScoreFamily(k, c1, c2) if k == "s4" else ScoreFamily(k))
        except ValueError as exc:
            raise SemanticError(f"config.c1/c2: {exc}") from None
    fields = dict(
        levels=levels,
        n=_typed(cfg, "n", int, 250),
        reps=_typed(cfg, "reps", int, 10_000),
        sigma=_typed(cfg, "sigma", float, 0.5),
        seed=_typed(cfg, "seed", int, None),
        families=tuple(families),
        dm_level=_typed(cfg, "level", float, 0.05),
        variance_mode=str(cfg.get("variance_mode", "iid")),
        murphy_n=_typed(cfg, "murphy_n", int, 100_000),
        murphy_grid=_typed(cfg, "murphy_grid", int, 501),
        murphy_sigmas=_typed(cfg, "murphy_sigmas",
                             lambda s: tuple(float(v) for v in s.split(",") if v.strip()),
                             (0.3, 0.5, 0.8)),
    )
    try:
        return ExperimentConfig(**fields)
    except ValueError as exc:
        raise SemanticError(f"config: {exc}") from None


def canonical_config(exp: ExperimentConfig) -> str:
    """Stable text form of every result-relevant setting."""
    fams = ",".join(f.kind if f.kind != "s4" else f"s4({fmt(f.c1)},{fmt(f.c2)})" for f in exp.families)
    parts = [
        f"alpha={fmt(exp.levels.alpha)}", f"beta={fmt(exp.levels.beta)}", f"n={exp.n}",
        f"reps={exp.reps}", f"sigma={fmt(exp.sigma)}", f"seed={int(exp.seed)}", f"families={fams}",
        f"level={fmt(exp.dm_level)}", f"variance_mode={exp.variance_mode}",
        f"murphy_n={exp.murphy_n}", f"murphy_grid={exp.murphy_grid}",
        "murphy_sigmas=" + ",".join(fmt(s) for s in exp.murphy_sigmas),
    ]
    return "\n".join(parts) + "\n"


def cmd_simulate(args):
    cfg = read_config(args.config) if args.config else {}
    for key, attr in (("alpha", "alpha"), ("beta", "beta"), ("n", "n"), ("reps", "reps"),
                      ("sigma", "sigma"), ("seed", "seed"), ("c1", "c1"), ("c2", "c2"),
                      ("level", "level"), ("variance_mode", "variance_mode"),
                      ("murphy_grid", "grid"), ("families", "family")):
        value = getattr(args, attr, None)
        if value is not None:
            cfg[key] = str(value)
    exp = build_experiment(cfg)
    out = _out_dir(args.out)
    workers = max(1, int(args.workers or 1))
    table = run_power_study(exp, workers=workers)
    rows = []
    for i, h in enumerate(table.hypotheses):
        for j, fam in enumerate(table.families):
            rows.append([h, fam, fmt(table.rates[i, j])])
    _write_rows(os.path.join(out, "power_table.csv"), ("hypothesis", "family", "rate"), rows)
    if not args.no_murphy:
        curves = run_murphy_study(exp, workers=workers)
        mrows = []
        for name, curve in curves.items():
            mrows.extend(_murphy_rows(name, curve))
        _write_rows(os.path.join(out, "murphy.csv"), ("v", "forecaster", "component", "mean_score"), mrows)
    canon = canonical_config(exp)
    manifest = io.StringIO()
    manifest.write(f"config_sha256={hashlib.sha256(canon.encode()).hexdigest()}\n")
    manifest.write(f"seed={int(exp.seed)}\n")
    manifest.write(f"rvarscore={__version__}\n")
    manifest.write(f"numpy={np.__version__}\n")
    manifest.write(f"scipy={scipy.__version__}\n")
    manifest.write(f"python={sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}\n")
    manifest.write(f"murphy_backend={_backend.BACKEND}\n")
    manifest.write(canon)
    with open(os.path.join(out, "manifest.txt"), "w", encoding="utf-8") as fh:
        fh.write(manifest.getvalue())
    for i, h in enumerate(table.hypotheses):
        print(h + "\t" + "\t".join(f"{v:.3f}" for v in table.rates[i]))
    return EXIT_OK


_JOINT_MODELS = {"intercept": joint_intercept_model, "linear": joint_linear_model,
                 "scale": joint_scale_model}
_SCALAR_MODELS = {"location": scalar_location_model, "linear": scalar_linear_model}


def cmd_estimate(args):
    method = args.method
    if method == "huber-check":
        levels = _levels(args)
        if args.input:
            data = read_dataset(args.input)
            dist = DiscreteDistribution.empirical(data.responses)
        else:
            dist = NormalDistribution(args.mu, args.scale)
        rep = huber_skipped_check(levels, dist)
        print(f"solution={fmt(rep.solution)}\nrvar={fmt(rep.rvar)}\ngap={fmt(rep.gap)}\nequal={rep.equal}")
        return EXIT_OK
    if not args.input:
        raise SemanticError(f"method {method} needs --input")
    data = read_dataset(args.input)
    levels = _levels(args)
    if method == "kb":
        if args.model not in (None, "location"):
            raise SemanticError("method kb only supports the location model")
        print(f"rvar={fmt(tls_koenker_bassett(data.responses, levels))}")
        return EXIT_OK
    if method == "joint":
        name = args.model or "intercept"
        if name not in _JOINT_MODELS:
            raise SemanticError(f"method joint needs a joint model ({', '.join(_JOINT_MODELS)}), got {name!r}")
        model = _JOINT_MODELS[name]()
        if name != "intercept" and data.covariates.shape[1] < 1:
            raise SemanticError(f"model {name} needs a covariate column")
        spec = make_table1_spec(_family(args.family, args.c1, args.c2), levels)
        init = np.zeros(model.dim_theta)
        if name == "intercept":
            init = np.array([np.quantile(data.responses, levels.alpha),
                             np.quantile(data.responses, levels.beta),
                             tls_koenker_bassett(data.responses, levels)])
        res = m_estimate(model, data, spec, init=init, budget=args.budget,
                         restarts=args.restarts, seed=args.seed or 0)
    else:
        name = args.model or "location"
        if name not in _SCALAR_MODELS:
            raise SemanticError(f"method {method} needs a scalar model ({', '.join(_SCALAR_MODELS)}), got {name!r}")
        if name == "linear":
            d = data.covariates.shape[1]
            if d < 1:
                raise SemanticError("model linear needs at least one covariate column")
            model = scalar_linear_model(d)
        else:
            model = scalar_location_model()
        init = np.zeros(model.dim_theta)
        init[0] = float(np.median(data.responses))
        if method == "lts":
            res = lts_rousseeuw(model, data, args.a, init=init, budget=args.budget,
                                restarts=args.restarts, seed=args.seed or 0)
        elif method == "asym":
            res = tls_asymmetric(model, data, levels, init=init, budget=args.budget,
                                 restarts=args.restarts, seed=args.seed or 0)
        else:
            raise SemanticError(f"unknown method {method!r}")
    print("theta=" + ",".join(fmt(v) for v in res.theta))
    print(f"score={fmt(res.score)}\nconverged={res.converged}\nevaluations={res.n_evals}")
    return EXIT_OK


def _add_levels(p, alpha=0.1, beta=0.9):
    p.add_argument("--alpha", type=float, default=alpha)
    p.add_argument("--beta", type=float, default=beta)


def _add_family(p):
    p.add_argument("--family", choices=FAMILIES, default="s1")
    p.add_argument("--c1", type=float, default=None)
    p.add_argument("--c2", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rvarscore", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score forecasts against observations")
    p.add_argument("--input", required=True)
    _add_levels(p)
    _add_family(p)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("murphy", help="Murphy curves of every forecaster")
    p.add_argument("--input", required=True)
    _add_levels(p)
    p.add_argument("--grid", type=int, default=501)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_murphy)

    p = sub.add_parser("dm", help="pairwise Diebold-Mariano tests")
    p.add_argument("--input", required=True)
    _add_levels(p)
    _add_family(p)
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--variance-mode", choices=VARIANCE_MODES, default="iid")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_dm)

    p = sub.add_parser("simulate", help="power study and Murphy study")
    p.add_argument("--config", default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--family", default=None, help="comma list of families")
    p.add_argument("--c1", type=float, default=None)
    p.add_argument("--c2", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--level", type=float, default=None)
    p.add_argument("--variance-mode", choices=VARIANCE_MODES, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-murphy", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="M-estimation and trimmed least squares")
    p.add_argument("--input", default=None)
    p.add_argument("--method", choices=("joint", "kb", "lts", "asym", "huber-check"), required=True)
    p.add_argument("--model", default=None)
    _add_levels(p)
    _add_family(p)
    p.add_argument("--a", type=float, default=0.1, help="trimming proportion for lts")
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--budget", type=int, default=5000)
    p.add_argument("--restarts", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_estimate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (EstimationError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SemanticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC


if __name__ == "__main__":
    sys.exit(main())
