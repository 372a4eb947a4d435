import csv
import subprocess
import sys
import time

import numpy as np
import pytest

from rvarscore.cli import (
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_SEMANTIC,
    main,
    read_forecasts,
    write_forecasts,
)
from rvarscore.core import LevelPair
from rvarscore.measures import normal_rvar
from rvarscore.scoring import ScoreFamily, make_table1_spec, score_arrays
from rvarscore.simulate import (
    _replication_draws,
    forecaster_f,
    forecaster_g,
    forecaster_h,
    panel_config,
)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def replication(tmp_path):
    """One replication of the left-panel study dumped to disk."""
    cfg = panel_config("left", n=250)
    mu, y, eps = _replication_draws(cfg, 0, 1)
    f = forecaster_f(mu[0], cfg.levels)
    fc = {"f": f, "g": forecaster_g(f, eps[0]), "h": np.tile(forecaster_h(cfg.levels), (250, 1))}
    path = tmp_path / "fc.csv"
    write_forecasts(path, [str(t) for t in range(250)], y[0], fc)
    return path, y[0], fc


class TestIO:
    def test_round_trip_bit_exact(self, replication):
        path, y, fc = replication
        times, y2, fc2 = read_forecasts(path)
        assert times[:3] == ["0", "1", "2"]
        np.testing.assert_array_equal(y2, y)
        for k in fc:
            np.testing.assert_array_equal(fc2[k], fc[k])

    @pytest.mark.parametrize("content,fragment", [
        ("a,b\n1,2\n", "header"),
        ("t,y,forecaster,x1,x2,x3\n0,1,f,0,1\n", "row 2"),
        ("t,y,forecaster,x1,x2,x3\n0,abc,f,0,1,0.5\n", "column y"),
        ("t,y,forecaster,x1,x2,x3\n0,1,f,0,1,nan\n", "not finite"),
        ("t,y,forecaster,x1,x2,x3\n0,1,f,0,1,0.5\n0,2,g,0,1,0.5\n", "differs"),
        ("", "empty"),
    ])
    def test_parse_errors(self, tmp_path, capsys, content, fragment):
        p = tmp_path / "bad.csv"
        p.write_text(content)
        assert main(["score", "--input", str(p), "--out", str(tmp_path)]) == EXIT_PARSE
        assert fragment in capsys.readouterr().err


class TestScore:
    def test_perfect_forecast_scores_zero(self, tmp_path):
        p = tmp_path / "p.csv"
        p.write_text("t,y,forecaster,x1,x2,x3\n" + "".join(f"{t},{v},p,{v},{v},{v}\n"
                                                          for t, v in enumerate([0.5, -1.25, 3.0])))
        assert main(["score", "--input", str(p), "--out", str(tmp_path)]) == EXIT_OK
        assert [float(r["score"]) for r in read_csv(tmp_path / "scores.csv")] == [0.0, 0.0, 0.0]

    def test_summary_and_rescore(self, replication, tmp_path):
        path, y, fc = replication
        out = tmp_path / "o"
        assert main(["score", "--input", str(path), "--out", str(out)]) == EXIT_OK
        summary = read_csv(out / "summary.csv")
        means = [float(r["mean_score"]) for r in summary]
        assert means == sorted(means)
        spec = make_table1_spec(ScoreFamily("s1"), LevelPair(0.1, 0.9))
        rows = read_csv(out / "scores.csv")
        for name, arr in fc.items():
            got = np.array([float(r["score"]) for r in rows if r["forecaster"] == name])
            np.testing.assert_allclose(got, score_arrays(spec, arr[:, 0], arr[:, 1], arr[:, 2], y),
                                       atol=1e-12, rtol=0)

    def test_semantic_errors(self, replication, tmp_path):
        path = str(replication[0])
        assert main(["score", "--input", path, "--alpha", "0.9", "--beta", "0.1",
                     "--out", str(tmp_path)]) == EXIT_SEMANTIC
        assert main(["score", "--input", path, "--family", "s4", "--c1", "1", "--c2", "-1",
                     "--out", str(tmp_path)]) == EXIT_SEMANTIC
        assert main(["score", "--input", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == EXIT_SEMANTIC

    def test_numeric_failure(self, tmp_path):
        p = tmp_path / "big.csv"
        p.write_text("t,y,forecaster,x1,x2,x3\n0,1e308,a,-1e308,1e308,1e308\n")
        with np.errstate(all="ignore"):
            assert main(["score", "--input", str(p), "--out", str(tmp_path)]) == EXIT_NUMERIC

    def test_usage_error(self):
        assert main(["score"]) == EXIT_PARSE
        assert main(["nonsense"]) == EXIT_PARSE


class TestMurphyDm:
    def test_murphy_csv(self, replication, tmp_path):
        path = str(replication[0])
        assert main(["murphy", "--input", path, "--grid", "41", "--out", str(tmp_path)]) == EXIT_OK
        rows = read_csv(tmp_path / "murphy.csv")
        assert len(rows) == 3 * 3 * 41
        assert {r["component"] for r in rows} == {"1", "2", "3"}
        first = (tmp_path / "murphy.csv").read_bytes()
        main(["murphy", "--input", path, "--grid", "41", "--workers", "3", "--out", str(tmp_path)])
        assert (tmp_path / "murphy.csv").read_bytes() == first

    def test_murphy_perfect_is_zero(self, tmp_path):
        p = tmp_path / "p.csv"
        p.write_text("t,y,forecaster,x1,x2,x3\n0,1,p,1,1,1\n1,2,p,2,2,2\n")
        assert main(["murphy", "--input", str(p), "--grid", "5", "--out", str(tmp_path)]) == EXIT_OK
        assert all(float(r["mean_score"]) == 0.0 for r in read_csv(tmp_path / "murphy.csv"))

    def test_dm(self, replication, tmp_path, capsys):
        path = str(replication[0])
        assert main(["dm", "--input", path, "--out", str(tmp_path)]) == EXIT_OK
        rows = {r["hypothesis"]: r for r in read_csv(tmp_path / "dm.csv")}
        assert len(rows) == 6
        assert float(rows["f<=g"]["mean_diff"]) == -float(rows["g<=f"]["mean_diff"])
        assert rows["f<=h"]["reject"] == "0" and rows["h<=f"]["reject"] == "1"
        assert "H0 h<=f" in capsys.readouterr().out

    def test_dm_identical_and_single(self, tmp_path):
        p = tmp_path / "same.csv"
        p.write_text("t,y,forecaster,x1,x2,x3\n" + "".join(
            f"{t},{t * 0.3},{k},-1,1,0\n" for k in ("a", "b") for t in range(20)))
        assert main(["dm", "--input", str(p), "--out", str(tmp_path)]) == EXIT_OK
        assert all(r["reject"] == "0" for r in read_csv(tmp_path / "dm.csv"))
        q = tmp_path / "one.csv"
        q.write_text("t,y,forecaster,x1,x2,x3\n0,0,a,-1,1,0\n1,1,a,-1,1,0\n")
        assert main(["dm", "--input", str(q), "--out", str(tmp_path)]) == EXIT_SEMANTIC


class TestSimulate:
    def test_smoke_and_repeat(self, tmp_path):
        t0 = time.perf_counter()
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["simulate", "--seed", "7", "--reps", "100", "--grid", "51"]
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("# smoke\nmurphy_n = 2000\n")
        assert main(args + ["--config", str(cfg), "--out", str(a)]) == EXIT_OK
        assert time.perf_counter() - t0 < 10.0
        assert main(args + ["--config", str(cfg), "--out", str(b), "--workers", "2"]) == EXIT_OK
        for name in ("power_table.csv", "murphy.csv", "manifest.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes()
        manifest = (a / "manifest.txt").read_text()
        assert "config_sha256=" in manifest and "seed=7" in manifest and "reps=100" in manifest
        assert len(read_csv(a / "power_table.csv")) == 24

    def test_seed_required(self, tmp_path, capsys):
        assert main(["simulate", "--reps", "10", "--out", str(tmp_path)]) == EXIT_SEMANTIC
        assert "config.seed" in capsys.readouterr().err

    @pytest.mark.parametrize("content,code,fragment", [
        ("seed = 1\nbogus = 2\n", EXIT_SEMANTIC, "config.bogus"),
        ("seed = 1\nn = many\n", EXIT_SEMANTIC, "config.n"),
        ("seed = 1\nfamilies = s9\n", EXIT_SEMANTIC, "config.families"),
        ("seed = 1\nsigma = -1\n", EXIT_SEMANTIC, "sigma"),
        ("seed 1\n", EXIT_PARSE, "key = value"),
    ])
    def test_config_errors(self, tmp_path, capsys, content, code, fragment):
        cfg = tmp_path / "c.txt"
        cfg.write_text(content)
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == code
        assert fragment in capsys.readouterr().err


class TestEstimate:
    def test_kb(self, tmp_path, capsys):
        p = tmp_path / "d.csv"
        p.write_text("y\n" + "".join(f"{v}\n" for v in range(1, 11)))
        assert main(["estimate", "--method", "kb", "--input", str(p), "--alpha", "0.2", "--beta", "0.8"]) == EXIT_OK
        assert "rvar=5.0" in capsys.readouterr().out

    def test_huber_check(self, capsys):
        assert main(["estimate", "--method", "huber-check"]) == EXIT_OK
        out = dict(line.split("=") for line in capsys.readouterr().out.split())
        assert abs(float(out["gap"])) <= 1e-8 and out["equal"] == "True"

    def test_joint_intercept(self, tmp_path, capsys):
        y = np.random.default_rng(4).standard_normal(2000)
        p = tmp_path / "d.csv"
        p.write_text("y\n" + "".join(f"{float(v)!r}\n" for v in y))
        assert main(["estimate", "--method", "joint", "--input", str(p)]) == EXIT_OK
        line = [s for s in capsys.readouterr().out.splitlines() if s.startswith("theta=")][0]
        theta = np.array([float(v) for v in line[6:].split(",")])
        target = [-1.2815515655446004, 1.2815515655446004, normal_rvar(0, 1, LevelPair(0.1, 0.9))]
        np.testing.assert_allclose(theta, target, atol=0.1)

    def test_lts(self, tmp_path, capsys):
        p = tmp_path / "d.csv"
        p.write_text("y\n" + "".join(f"{v}\n" for v in [1, 2, 3, 4, 100]))
        assert main(["estimate", "--method", "lts", "--a", "0.2", "--input", str(p)]) == EXIT_OK
        assert "theta=" in capsys.readouterr().out

    def test_mismatch(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("y,x\n1,0\n2,1\n3,2\n")
        assert main(["estimate", "--method", "joint", "--model", "location", "--input", str(p)]) == EXIT_SEMANTIC
        assert main(["estimate", "--method", "lts", "--model", "scale", "--input", str(p)]) == EXIT_SEMANTIC
        assert main(["estimate", "--method", "kb", "--model", "linear", "--input", str(p)]) == EXIT_SEMANTIC
        assert main(["estimate", "--method", "lts"]) == EXIT_SEMANTIC


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "rvarscore.cli", "estimate", "--method", "huber-check",
                        "--alpha", "0.1", "--beta", "0.6"], capture_output=True, text=True)
    assert r.returncode == 0
    assert "equal=False" in r.stdout
