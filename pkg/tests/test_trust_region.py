import numpy as np
import pytest

from trmei import trust_region as tr
from trmei.trust_region import (
    TrustRegionConfig,
    adjust,
    define_tr,
    gen_candidates,
    init_state,
    is_improvement,
    restart,
    update_counters,
)


def _state(d=2, **kw):
    return init_state(np.full(d, 0.5), TrustRegionConfig(**kw))


class TestConfig:
    def test_resolved_defaults(self):
        c = TrustRegionConfig().resolve(20)
        assert (c.tau_f, c.n_cand, c.p_perturb) == (20, 2000, 1.0)
        c = TrustRegionConfig().resolve(2)
        assert (c.tau_f, c.n_cand, c.p_perturb) == (5, 200, 1.0)
        c = TrustRegionConfig().resolve(100)
        assert (c.tau_f, c.n_cand, c.p_perturb) == (100, 5000, 0.2)

    def test_explicit_values_kept(self):
        c = TrustRegionConfig(tau_f=7, n_cand=10, p_perturb=0.3).resolve(50)
        assert (c.tau_f, c.n_cand, c.p_perturb) == (7, 10, 0.3)


class TestDefineTr:
    def test_isotropic_box(self):
        lo, hi = define_tr(_state(), [0.5, 0.5], [1.0, 1.0])
        np.testing.assert_allclose(lo, [0.1, 0.1], atol=1e-15)
        np.testing.assert_allclose(hi, [0.9, 0.9], atol=1e-15)

    def test_corner_clipped(self):
        lo, hi = define_tr(_state(), [0.0, 1.0], [1.0, 1.0])
        np.testing.assert_array_equal(lo, [0.0, 0.6])
        np.testing.assert_array_equal(hi, [0.4, 1.0])

    def test_anisotropic_ratio(self):
        s = tr.replace(_state(), length=0.1)
        lo, hi = define_tr(s, [0.5, 0.5], [2.0, 0.5])
        side = hi - lo
        assert side[0] / side[1] == pytest.approx(4.0, rel=1e-12)
        # geometric mean of the sides equals L
        assert np.sqrt(side.prod()) == pytest.approx(0.1, rel=1e-12)

    def test_rejects_bad_lengthscales(self):
        with pytest.raises(ValueError):
            define_tr(_state(), [0.5, 0.5], [1.0, 0.0])
        with pytest.raises(ValueError):
            define_tr(_state(), [0.5, 0.5], [1.0])


class TestCandidates:
    box = (np.array([0.2, 0.3, 0.1]), np.array([0.6, 0.5, 0.9]))
    center = np.array([0.4, 0.4, 0.5])

    def test_full_perturbation_inside_box(self):
        b = gen_candidates(self.box, self.center, 256, 1.0, seed=0)
        assert b.mask.all()
        assert np.all((b.points >= self.box[0]) & (b.points <= self.box[1]))

    def test_unperturbed_coordinates_match_center(self):
        b = gen_candidates(self.box, self.center, 500, 0.2, seed=1)
        assert np.all(b.mask.sum(axis=1) >= 1)
        np.testing.assert_array_equal(np.where(b.mask, self.center, b.points),
                                      np.broadcast_to(self.center, b.points.shape))

    def test_mean_perturbed_count_d20(self):
        d = 20
        c = TrustRegionConfig().resolve(d)
        box = (np.zeros(d), np.ones(d))
        b = gen_candidates(box, np.full(d, 0.5), c.n_cand, 1.0 * c.p_perturb, seed=2)
        assert b.points.shape == (2000, 20)
        assert b.mask.sum(axis=1).mean() == 20

    def test_mean_perturbed_count_partial(self):
        d = 40
        b = gen_candidates((np.zeros(d), np.ones(d)), np.full(d, 0.5), 4000, 0.25, seed=3)
        assert b.mask.sum(axis=1).mean() == pytest.approx(10.0, abs=0.2)

    def test_deterministic(self):
        a = gen_candidates(self.box, self.center, 64, 0.5, seed=9)
        b = gen_candidates(self.box, self.center, 64, 0.5, seed=9)
        c = gen_candidates(self.box, self.center, 64, 0.5, seed=10)
        assert np.array_equal(a.points, b.points)
        assert not np.array_equal(a.points, c.points)

    def test_non_power_of_two_count(self):
        assert gen_candidates(self.box, self.center, 37, 1.0, seed=0).points.shape == (37, 3)

    @pytest.mark.parametrize("p", [0.0, -0.1, 1.5])
    def test_bad_probability(self, p):
        with pytest.raises(ValueError):
            gen_candidates(self.box, self.center, 8, p, seed=0)


class TestCounters:
    def test_increment(self):
        s = tr.replace(_state(), n_s=2)
        s = update_counters(s, True)
        assert (s.n_s, s.n_f) == (3, 0)

    def test_reset(self):
        s = update_counters(tr.replace(_state(), n_s=2), False)
        assert (s.n_s, s.n_f) == (0, 1)

    def test_alternating(self):
        s = _state()
        for i in range(10):
            s = update_counters(s, i % 2 == 0)
            assert max(s.n_s, s.n_f) <= 1


class TestAdjust:
    def test_expand_to_cap(self):
        s = adjust(tr.replace(_state(), length=0.8, n_s=3))
        assert (s.length, s.n_s) == (1.6, 0)

    def test_cap_saturates(self):
        s = adjust(tr.replace(_state(), length=1.6, n_s=3))
        assert s.length == 1.6 and not s.restart_triggered

    def test_shrink_below_min_signals_restart(self):
        s = tr.replace(_state(), length=0.0125, n_f=5)
        assert s.length_min == 0.0078125
        s = adjust(s)
        assert s.length == 0.00625 and s.restart_triggered and s.n_f == 0

    def test_shrink_above_min(self):
        s = adjust(tr.replace(_state(), length=0.8, n_f=5))
        assert s.length == 0.4 and not s.restart_triggered

    def test_noop_below_threshold(self):
        s = tr.replace(_state(), n_s=2)
        assert adjust(s) is s

    def test_restart(self):
        s = adjust(tr.replace(_state(), length=0.01, n_f=5))
        s = restart(s, [0.1, 0.2])
        assert s.length == s.length_init and not s.restart_triggered
        np.testing.assert_array_equal(s.center, [0.1, 0.2])


class TestImprovement:
    def test_fewer_violations_wins(self):
        assert is_improvement(0, 100.0, 1, 0.0)
        assert not is_improvement(2, -100.0, 1, 0.0)

    def test_tolerance(self):
        assert not is_improvement(0, 0.9995, 0, 1.0)
        assert is_improvement(0, 0.998, 0, 1.0)
        assert not is_improvement(0, -5e-7, 0, 0.0)
        assert is_improvement(0, -2e-6, 0, 0.0)


def fuzz_trust_region(steps: int, seed: int):
    """Drive the state machine with random outcomes; return violation descriptions."""
    rng = np.random.default_rng(seed)
    bad = []
    d = 3
    state = init_state(rng.uniform(size=d), TrustRegionConfig(tau_s=2, tau_f=3, n_cand=16))
    for step in range(steps):
        ls = np.exp(rng.uniform(-3, 3, size=d))
        center = rng.uniform(size=d) if rng.random() < 0.8 else rng.integers(0, 2, size=d).astype(float)
        state = tr.replace(state, center=center)
        lo, hi = define_tr(state, center, ls)
        batch = gen_candidates((lo, hi), center, 16, float(rng.uniform(0.05, 1.0)), int(rng.integers(2**31)))
        P = batch.points
        if not (np.all(P >= lo) and np.all(P <= hi) and np.all(P >= 0) and np.all(P <= 1)):
            bad.append(f"step {step}: candidate outside box")
        if not np.all(batch.mask.any(axis=1)):
            bad.append(f"step {step}: candidate with no perturbed coordinate")
        state = update_counters(state, bool(rng.random() < 0.35))
        if state.n_s and state.n_f:
            bad.append(f"step {step}: both counters nonzero")
        state = adjust(state)
        if state.restart_triggered:
            state = restart(state, rng.uniform(size=d))
        elif not state.length_min <= state.length <= state.length_max:
            bad.append(f"step {step}: length {state.length} out of range")
    return bad


def test_state_machine_fuzz():
    assert fuzz_trust_region(2000, 0) == []
