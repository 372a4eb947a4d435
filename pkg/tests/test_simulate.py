import math

import numpy as np
import pytest

from rvarscore.core import LevelPair, in_sensible_domain, Triplet
from rvarscore.measures import normal_rvar, normal_var
from rvarscore.simulate import (
    HYPOTHESES,
    ExperimentConfig,
    PowerTable,
    dgp_sample,
    forecaster_f,
    forecaster_g,
    forecaster_h,
    make_rng,
    murphy_study_sample,
    run_murphy_study,
    run_power_study,
    standard_normals,
    panel_config,
)

CENTRAL = LevelPair(0.1, 0.9)
TAIL = LevelPair(0.01, 0.05)


class TestRandomness:
    def test_dgp_moments(self):
        mu, y = dgp_sample(10**6, make_rng(1, 0))
        assert abs(y.mean()) <= 0.005
        assert y.var() == pytest.approx(2.0, abs=0.02)
        assert abs(np.corrcoef(mu, y - mu)[0, 1]) < 0.005

    def test_determinism(self):
        a = dgp_sample(100, make_rng(42, 7))
        b = dgp_sample(100, make_rng(42, 7))
        np.testing.assert_array_equal(a[1], b[1])
        c = dgp_sample(100, make_rng(42, 8))
        assert not np.array_equal(a[1], c[1])

    def test_normals(self):
        z = standard_normals(make_rng(3, 3), (400, 500))
        assert z.shape == (400, 500)
        assert abs(z.mean()) < 0.01 and z.std() == pytest.approx(1.0, abs=0.01)
        assert np.all(np.isfinite(z))


class TestForecasters:
    def test_f(self):
        np.testing.assert_allclose(forecaster_f(np.array([0.0]), CENTRAL)[0], [-1.2816, 1.2816, 0.0], atol=1e-3)
        mu = np.linspace(-3, 3, 7)
        f = forecaster_f(mu, CENTRAL)
        assert all(in_sensible_domain(Triplet(*row)) for row in f)
        np.testing.assert_allclose(forecaster_f(mu + 1.5, TAIL), forecaster_f(mu, TAIL) + 1.5, atol=1e-14)
        np.testing.assert_allclose(f[:, 2], [normal_rvar(m, 1.0, CENTRAL) for m in mu], atol=1e-14)

    def test_g(self, rng):
        f = forecaster_f(rng.normal(size=10**5), CENTRAL)
        np.testing.assert_array_equal(forecaster_g(f, np.zeros(10**5)), f)
        eps = 0.5 * rng.normal(size=10**5)
        g = forecaster_g(f, eps)
        assert np.mean((g[:, 2] - f[:, 2]) ** 2) == pytest.approx(0.25, abs=0.01)
        assert np.all(g[:, 0] <= g[:, 2]) and np.all(g[:, 2] <= g[:, 1])

    def test_h(self):
        np.testing.assert_allclose(forecaster_h(CENTRAL), [-1.8124, 1.8124, 0.0], atol=1e-3)
        assert forecaster_h(TAIL)[2] == pytest.approx(math.sqrt(2) * -1.9122, abs=2e-3)
        s = math.sqrt(2.0)
        np.testing.assert_allclose(forecaster_h(TAIL), [normal_var(0, s, 0.01), normal_var(0, s, 0.05),
                                                        normal_rvar(0, s, TAIL)], atol=1e-14)


class TestConfig:
    @pytest.mark.parametrize("field,value", [("n", 1), ("reps", 0), ("sigma", 0.0), ("dm_level", 1.0),
                                             ("variance_mode", "x"), ("seed", -1), ("families", ())])
    def test_invalid(self, field, value):
        with pytest.raises(ValueError):
            ExperimentConfig(levels=CENTRAL, **{field: value})

    def test_panels(self):
        assert panel_config("right").levels == TAIL
        assert panel_config("left").families[3].c2 == 12.0
        with pytest.raises(ValueError):
            panel_config("middle")


class TestPowerStudy:
    def test_shape_and_determinism(self):
        cfg = panel_config("left", reps=600, n=100)
        a = run_power_study(cfg, workers=1)
        b = run_power_study(cfg, workers=3)
        assert isinstance(a, PowerTable)
        assert a.rates.shape == (len(HYPOTHESES), 4)
        np.testing.assert_array_equal(a.rates, b.rates)
        assert np.all((a.rates >= 0) & (a.rates <= 1))
        assert a.entry("g<=f", "s1") == a.rates[1, 0]

    @pytest.mark.parametrize("panel,bound", [("left", 0.01), ("right", 0.02)])
    def test_null_direction(self, panel, bound):
        t = run_power_study(panel_config(panel, reps=2000))
        for h in ("f<=g", "f<=h", "g<=h"):
            assert max(t.rates[t.hypotheses.index(h)]) <= bound

    def test_h_versus_f(self):
        t = run_power_study(panel_config("left", reps=2000))
        assert min(t.rates[t.hypotheses.index("h<=f")]) >= 0.995


class TestMurphyStudy:
    def test_sample_structure(self):
        cfg = panel_config("left", murphy_n=1000)
        y, fc = murphy_study_sample(cfg)
        assert list(fc) == ["f", "g(sigma=0.3)", "g(sigma=0.5)", "g(sigma=0.8)", "h"]
        z3 = (fc["g(sigma=0.3)"] - fc["f"]) / 0.3
        z8 = (fc["g(sigma=0.8)"] - fc["f"]) / 0.8
        np.testing.assert_allclose(z3, z8, atol=1e-12)

    def test_curves(self):
        cfg = panel_config("left", murphy_n=5000, murphy_grid=101)
        curves = run_murphy_study(cfg)
        for c in curves.values():
            np.testing.assert_allclose(c.component(1)[[0, -1]], 0.0, atol=1e-15)
            np.testing.assert_allclose(c.component(2)[[0, -1]], 0.0, atol=1e-15)
            assert np.all(c.mean_scores >= -1e-12)
        again = run_murphy_study(cfg, workers=4)
        for k in curves:
            np.testing.assert_array_equal(curves[k].mean_scores, again[k].mean_scores)
