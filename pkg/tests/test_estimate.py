import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rvarscore.core import LevelPair
from rvarscore.measures import DiscreteDistribution, NormalDistribution, distribution_rvar, normal_rvar
from rvarscore.estimate import (
    Dataset,
    EstimationError,
    ParametricModel,
    huber_skipped_check,
    joint_intercept_model,
    joint_linear_model,
    joint_scale_model,
    lts_rousseeuw,
    m_estimate,
    scalar_location_model,
    tls_asymmetric,
    tls_koenker_bassett,
)
from rvarscore.scoring import ScoreFamily, make_table1_spec

L = LevelPair(0.1, 0.9)
S1 = make_table1_spec(ScoreFamily("s1"), L)


@pytest.fixture(scope="module")
def normal_data():
    return np.random.default_rng(2024).standard_normal(5000)


class TestDataset:
    def test_validation(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((3, 1)), np.zeros(4))
        with pytest.raises(ValueError):
            Dataset(np.zeros(2), np.array([1.0, np.nan]))
        d = Dataset(np.arange(3.0), np.ones(3))
        assert d.covariates.shape == (3, 1) and len(d) == 3
        assert Dataset.from_responses([1, 2]).covariates.shape == (2, 0)

    def test_model_kind(self):
        with pytest.raises(ValueError):
            ParametricModel(1, lambda x, t: t, kind="other")
        with pytest.raises(ValueError):
            m_estimate(scalar_location_model(), Dataset.from_responses([1.0, 2.0]), S1)
        with pytest.raises(ValueError):
            lts_rousseeuw(joint_intercept_model(), Dataset.from_responses([1.0, 2.0]), 0.2)


class TestMEstimate:
    def test_intercept_recovers_triplet(self, normal_data):
        r = m_estimate(joint_intercept_model(), Dataset.from_responses(normal_data), S1, init=[-1, 1, 0.5])
        np.testing.assert_allclose(r.theta, [-1.2816, 1.2816, 0.0], atol=0.1)
        assert r.score <= r.init_score and r.n_evals > 1

    def test_linear_slope(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(-2, 2, 5000)
        y = x + rng.standard_normal(5000)
        r = m_estimate(joint_linear_model(), Dataset(x, y), S1, init=[-1, 1, 0, 0])
        assert r.theta[3] == pytest.approx(1.0, abs=0.1)

    def test_init_at_truth_no_worse(self, normal_data):
        truth = [-1.2815515655446004, 1.2815515655446004, 0.0]
        r = m_estimate(joint_intercept_model(), Dataset.from_responses(normal_data), S1, init=truth)
        assert r.score <= r.init_score

    def test_best_of_restarts(self, normal_data):
        data = Dataset.from_responses(normal_data[:1000])
        r = m_estimate(joint_intercept_model(), data, S1, init=[-1, 1, 0], restarts=50, seed=3,
                       budget=800, workers=4)
        assert len(r.restart_scores) == 51
        assert r.score <= min(r.restart_scores) + 0.0
        again = m_estimate(joint_intercept_model(), data, S1, init=[-1, 1, 0], restarts=50, seed=3,
                           budget=800, workers=1)
        np.testing.assert_array_equal(r.theta, again.theta)

    @pytest.mark.parametrize("c", [-3.0, 2.5])
    def test_shift_equivariance(self, normal_data, c):
        # odd n keeps the empirical quantiles unique
        y = normal_data[:1999]
        init = np.array([-1.28, 1.28, 0.0])
        a = m_estimate(joint_intercept_model(), Dataset.from_responses(y), S1, init=init)
        b = m_estimate(joint_intercept_model(), Dataset.from_responses(y + c), S1, init=init + c)
        np.testing.assert_allclose(b.theta, a.theta + c, atol=1e-3)

    def test_non_finite_objective(self):
        bad = ParametricModel(3, lambda x, t: np.full((x.shape[0], 3), np.nan))
        with pytest.raises(EstimationError, match="theta"):
            m_estimate(bad, Dataset.from_responses([0.0, 1.0]), S1)

    def test_budget(self):
        with pytest.raises(ValueError):
            m_estimate(joint_intercept_model(), Dataset.from_responses([0.0, 1.0]), S1, budget=0)


class TestHeteroscedastic:
    """Conditional RVaR is constant at zero while the quantiles move with
    the scale; the pooled trimmed mean misses, the scale model does not."""

    levels = LevelPair(0.5, 0.99)

    def test_contrast(self):
        rng = np.random.default_rng(11)
        n = 20_000
        sig = np.where(np.arange(n) % 2 == 0, 0.5, 3.0)
        r0 = normal_rvar(0.0, 1.0, self.levels)
        y = sig * (rng.standard_normal(n) - r0)
        kb = tls_koenker_bassett(y, self.levels)
        assert kb > 0.1
        spec = make_table1_spec(ScoreFamily("s1"), self.levels)
        q = np.array([0.0 - r0, 2.3263 - r0])
        r = m_estimate(joint_scale_model(), Dataset(sig, y), spec, init=[q[0], q[1], kb])
        assert abs(r.theta[2]) < 0.05
        np.testing.assert_allclose(r.theta[:2], q, atol=0.1)


class TestTrimmed:
    def test_koenker_bassett(self):
        assert tls_koenker_bassett(np.arange(1, 11), LevelPair(0.2, 0.8)) == 5.0
        # the bracket keeps Y_(1..4) of five points, so symmetry is not preserved
        assert tls_koenker_bassett(np.array([-3.0, -1, 0, 1, 3]), LevelPair(0.2, 0.8)) == -0.75
        with pytest.raises(ValueError, match="empty"):
            tls_koenker_bassett(np.arange(5.0), LevelPair(0.45, 0.55))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(-1000, 1000), min_size=5, max_size=60))
    def test_koenker_bassett_trimmed_mean(self, xs):
        s = np.sort(np.array(xs, dtype=float))
        n = s.size
        lo, hi = int(np.ceil(n * 0.2 - 1e-9)), int(np.floor(n * 0.7 + 1e-9))
        grid = np.linspace(s[0], s[-1], 4001)
        kept = s[lo - 1:hi]
        brute = grid[np.argmin(((grid[:, None] - kept) ** 2).sum(axis=1))]
        got = tls_koenker_bassett(s, LevelPair(0.2, 0.7))
        assert got == np.mean(kept)
        assert abs(got - brute) <= (s[-1] - s[0]) / 4000 + 1e-12

    def test_lts_location(self):
        rng = np.random.default_rng(8)
        y = 3.0 + rng.standard_normal(2000)
        r = lts_rousseeuw(scalar_location_model(), Dataset.from_responses(y), 0.2)
        assert r.theta[0] == pytest.approx(3.0, abs=0.1)
        polluted = np.where(rng.random(2000) < 0.15, 100.0, y)
        r2 = lts_rousseeuw(scalar_location_model(), Dataset.from_responses(polluted), 0.2, init=[0.0])
        assert r2.theta[0] == pytest.approx(3.0, abs=0.1)

    def test_lts_small_trim_is_least_squares(self):
        y = np.random.default_rng(9).standard_normal(100)
        r = lts_rousseeuw(scalar_location_model(), Dataset.from_responses(y), 1e-12, restarts=2)
        assert r.theta[0] == pytest.approx(y.mean(), abs=1e-4)
        with pytest.raises(ValueError):
            lts_rousseeuw(scalar_location_model(), Dataset.from_responses(y), 0.6)
        with pytest.raises(ValueError, match="below 1"):
            lts_rousseeuw(scalar_location_model(), Dataset.from_responses(y[:3]), 0.45)

    def test_asymmetric_matches_lts_on_symmetric_data(self):
        y = 1.0 + np.random.default_rng(10).standard_normal(3000)
        d = Dataset.from_responses(y)
        a = tls_asymmetric(scalar_location_model(), d, L)
        b = lts_rousseeuw(scalar_location_model(), d, 0.1)
        assert abs(a.theta[0] - b.theta[0]) <= 0.05

    def test_asymmetric_skewed_target(self):
        law = DiscreteDistribution(np.array([-1.0, 0.0, 0.5, 4.0]), np.array([0.35, 0.25, 0.25, 0.15]))
        levels = LevelPair(0.5, 0.99)
        rng = np.random.default_rng(12)
        e = rng.choice(law.points, size=20_000, p=law.masses)
        r = tls_asymmetric(scalar_location_model(), Dataset.from_responses(2.0 + e), levels, init=[0.0])
        assert r.theta[0] == pytest.approx(2.0 + distribution_rvar(law, levels), abs=0.05)

    def test_asymmetric_empty(self):
        with pytest.raises(ValueError, match="empty"):
            tls_asymmetric(scalar_location_model(), Dataset.from_responses(np.arange(5.0)), LevelPair(0.45, 0.55))


class TestHuber:
    def test_symmetric(self):
        rep = huber_skipped_check(L, NormalDistribution())
        assert rep.gap <= 1e-8 and rep.equal
        assert rep.k1 == pytest.approx(1.2815515655446004) and rep.k2 == pytest.approx(-1.2815515655446004)

    def test_asymmetric_gap(self):
        rep = huber_skipped_check(LevelPair(0.1, 0.6), NormalDistribution())
        assert rep.gap > 0.01 and not rep.equal
        assert rep.rvar == pytest.approx(normal_rvar(0, 1, LevelPair(0.1, 0.6)), abs=1e-12)
        # the reported solution satisfies its first-order condition
        d = NormalDistribution()
        lo, hi = rep.k2 - rep.solution, rep.k1 - rep.solution
        m = d.partial_mean(lo, hi) / (d.cdf(hi) - d.cdf(lo))
        assert rep.solution == pytest.approx(m, abs=1e-10)

    def test_scaled_normal(self):
        rep = huber_skipped_check(L, NormalDistribution(0.0, 3.0))
        assert abs(rep.solution) <= 1e-8

    def test_discrete(self):
        rep = huber_skipped_check(LevelPair(0.1, 0.6), DiscreteDistribution.empirical(np.arange(1.0, 11.0)))
        assert np.isfinite(rep.solution) and rep.gap == abs(rep.solution - rep.rvar)

    def test_type(self):
        with pytest.raises(TypeError):
            huber_skipped_check(L, "normal")
