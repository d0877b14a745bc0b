import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trmei.gp import KernelParams, condition, predict
from trmei.penalized import (
    PenaltyConfig,
    moments_from_parts,
    penalized_moments,
    penalized_value,
    violation_probability,
)


def _toy_models(rng, n=8, d=2, J=2):
    X = rng.uniform(size=(n, d))
    obj = condition(KernelParams(rng.uniform(0.2, 1.0, d), 1.0, 1e-6), X, rng.normal(size=n))
    cons = [condition(KernelParams(rng.uniform(0.2, 1.0, d), 1.0, 1e-6), X, rng.normal(size=n) + 0.2 * j)
            for j in range(J)]
    return obj, cons


class TestViolationProbability:
    def test_symmetric_point(self):
        assert violation_probability(0.0, 1.0) == 0.5

    def test_five_percent(self):
        # 1 - Phi(1.6448536) = 0.0500000028 (30-digit arithmetic)
        assert violation_probability(-1.6448536, 1.0) == pytest.approx(0.05, abs=1e-6)

    def test_degenerate(self):
        assert violation_probability(2.0, 0.0) == 1.0
        assert violation_probability(-2.0, 0.0) == 0.0
        assert violation_probability(0.0, 0.0) == 0.0

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            violation_probability(0.0, -1.0)

    @given(st.floats(-20, 20), st.floats(-20, 20), st.floats(1e-3, 1e3))
    def test_monotone_in_mean(self, a, b, s):
        lo, hi = min(a, b), max(a, b)
        assert violation_probability(lo, s) <= violation_probability(hi, s)

    def test_tends_to_half(self):
        assert violation_probability(3.0, 1e12) == pytest.approx(0.5, abs=1e-9)


class TestMoments:
    def test_worked_example(self):
        mu, s2 = moments_from_parts([1.0], [0.3], [[0.5, 0.0]], 100.0)
        assert mu[0] == 51.0
        assert s2[0] == pytest.approx(0.3 + 2500.0)

    def test_single_constraint_variance(self):
        _, s2 = moments_from_parts([0.0], [0.25], [[0.5]], 100.0)
        assert s2[0] == 2500.25

    def test_certainly_feasible_reduces_to_objective(self):
        mu, s2 = moments_from_parts([0.7, -1.0], [0.2, 0.4], np.zeros((2, 3)), 10.0)
        np.testing.assert_array_equal(mu, [0.7, -1.0])
        np.testing.assert_array_equal(s2, [0.2, 0.4])

    def test_bounds_and_fields(self):
        rng = np.random.default_rng(0)
        obj, cons = _toy_models(rng, J=3)
        cfg = PenaltyConfig(7.0)
        post = penalized_moments(obj, cons, rng.uniform(size=(50, 2)), cfg)
        assert post.p_violation.shape == (50, 3)
        assert np.all((post.p_violation >= 0) & (post.p_violation <= 1))
        assert np.all(post.mu_F >= post.mu_f - 1e-12)
        assert np.all(post.mu_F <= post.mu_f + cfg.big_m * 3 + 1e-12)
        assert np.all(post.sigma2_F >= post.sigma2_f)
        assert np.all(post.sigma2_F - post.sigma2_f <= 3 * cfg.big_m**2 / 4 + 1e-9)

    def test_objective_on_standardized_scale(self):
        rng = np.random.default_rng(1)
        obj, cons = _toy_models(rng)
        x = rng.uniform(size=(4, 2))
        post = penalized_moments(obj, cons, x)
        mu, var = predict(obj, x)
        np.testing.assert_allclose(post.mu_f, (mu - obj.y_shift) / obj.y_scale)
        np.testing.assert_allclose(post.sigma2_f, var / obj.y_scale**2)

    def test_violation_uses_constraint_units(self):
        rng = np.random.default_rng(2)
        obj, cons = _toy_models(rng, J=1)
        x = rng.uniform(size=(3, 2))
        mu_g, var_g = predict(cons[0], x)
        post = penalized_moments(obj, cons, x)
        np.testing.assert_allclose(post.p_violation[:, 0], violation_probability(mu_g, np.sqrt(var_g)))

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(3)
        obj, _ = _toy_models(rng, d=2)
        _, cons = _toy_models(rng, d=3)
        with pytest.raises(ValueError):
            penalized_moments(obj, cons, np.zeros((1, 2)))

    def test_monte_carlo(self):
        """Sample Y_f and every Y_g independently, form Y_F, compare moments."""
        rng = np.random.default_rng(4)
        obj, cons = _toy_models(rng, J=2)
        x = rng.uniform(size=(1, 2))
        cfg = PenaltyConfig(3.0)
        post = penalized_moments(obj, cons, x, cfg)
        n = 100_000
        yf = rng.normal(post.mu_f[0], np.sqrt(post.sigma2_f[0]), n)
        yF = yf.copy()
        for m in cons:
            mu, var = predict(m, x)
            yF += cfg.big_m * (rng.normal(mu[0], np.sqrt(var[0]), n) > 0)
        se_mean = yF.std(ddof=1) / np.sqrt(n)
        assert abs(yF.mean() - post.mu_F[0]) <= 4 * se_mean
        c = (yF - yF.mean()) ** 2
        se_var = c.std(ddof=1) / np.sqrt(n)
        assert abs(yF.var(ddof=1) - post.sigma2_F[0]) <= 4 * se_var


class TestPenalizedValue:
    def test_feasible(self):
        assert penalized_value(3.2, [-1.0, -0.1]) == 3.2

    def test_one_violation(self):
        assert penalized_value(0.0, [1.0, -1.0], PenaltyConfig(100.0)) == 100.0

    def test_boundary_is_feasible(self):
        assert penalized_value(0.0, [0.0], PenaltyConfig(55.0)) == 0.0

    @given(st.lists(st.tuples(st.floats(-5, 5), st.booleans()), min_size=2, max_size=20))
    def test_feasible_beats_infeasible_when_m_exceeds_range(self, pts):
        fs = [f for f, _ in pts]
        cfg = PenaltyConfig(max(fs) - min(fs) + 1e-3)
        F = [penalized_value(f, [1.0 if bad else -1.0], cfg) for f, bad in pts]
        feas = [v for v, (_, bad) in zip(F, pts) if not bad]
        infeas = [v for v, (_, bad) in zip(F, pts) if bad]
        if feas and infeas:
            assert max(feas) < min(infeas)
