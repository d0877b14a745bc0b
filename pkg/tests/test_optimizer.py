import numpy as np
import pytest

from trmei.optimizer import (
    OptimizerConfig,
    RunError,
    RunTrace,
    initial_design,
    run,
    run_random_baseline,
    run_ts_baseline,
    ts_choice,
)
from trmei.problems import Problem, make_problem
from trmei.trust_region import TrustRegionConfig

FAST = dict(n_init=4, budget=6, trust_region=TrustRegionConfig(n_cand=64))


def _counting(name="ackley", d=2):
    base = make_problem(name, d)
    calls = []

    def f(x):
        calls.append(np.array(x))
        return base.objective_fn(x)

    return Problem(base.name, base.lower, base.upper, f, base.constraint_fn, base.n_constraints), calls


class TestInitialDesign:
    def test_twenty_dims(self):
        lo, hi = np.full(20, -5.0), np.full(20, 10.0)
        X = initial_design(lo, hi, 40, seed=0)
        assert X.shape == (40, 20)
        assert np.all((X >= lo) & (X <= hi))

    def test_deterministic(self):
        a = initial_design([0.0], [1.0], 8, seed=3)
        assert np.array_equal(a, initial_design([0.0], [1.0], 8, seed=3))

    def test_distinct_in_1d(self):
        X = initial_design([0.0], [1.0], 4, seed=1)
        assert len(np.unique(X)) == 4

    def test_rejects_tiny(self):
        with pytest.raises(ValueError):
            initial_design([0.0], [1.0], 1)


class TestConfig:
    def test_resolve(self):
        c = OptimizerConfig().resolve(20)
        assert c.n_init == 40 and c.trust_region.tau_f == 20

    def test_invalid(self):
        with pytest.raises(ValueError):
            OptimizerConfig(n_init=1).resolve(3)
        with pytest.raises(ValueError):
            OptimizerConfig(budget=-1).resolve(3)


@pytest.mark.parametrize("method", [run, run_ts_baseline, run_random_baseline])
class TestAllMethods:
    def test_budget_zero(self, method):
        p, calls = _counting()
        t = method(p, OptimizerConfig(n_init=4, budget=0))
        assert t.n_evals == 4 == len(calls)
        fs = [(r.violations, r.f) for r in t.records]
        assert t.records[-1].incumbent_index == fs.index(min(fs))

    def test_evaluation_count(self, method):
        p, calls = _counting()
        t = method(p, OptimizerConfig(**FAST))
        assert t.n_evals == 10 == len(calls)
        for r, x in zip(t.records, calls):
            np.testing.assert_array_equal(r.x, x)

    def test_deterministic(self, method):
        p = make_problem("levy", 3)
        a = method(p, OptimizerConfig(**FAST, seed=5))
        b = method(p, OptimizerConfig(**FAST, seed=5))
        assert a.to_dict() == b.to_dict()

    def test_incumbent_monotone(self, method):
        t = method(make_problem("rastrigin", 3), OptimizerConfig(**FAST, seed=1))
        keys = [(r.incumbent_violations, r.incumbent_f) for r in t.records]
        assert all(b <= a for a, b in zip(keys, keys[1:]))
        fb = [r.best_feasible_f for r in t.records if r.best_feasible_f is not None]
        assert all(b <= a for a, b in zip(fb, fb[1:]))
        first = next((i for i, r in enumerate(t.records) if r.feasible), None)
        if first is not None:
            assert all(r.incumbent_violations == 0 for r in t.records[first:])

    def test_trace_round_trip(self, method):
        t = method(make_problem("ackley", 2), OptimizerConfig(**FAST))
        assert RunTrace.from_dict(t.to_dict()).to_dict() == t.to_dict()


def test_hook_sees_argmax_of_scores():
    p = make_problem("ackley", 3)
    seen = []
    t = run(p, OptimizerConfig(**FAST, seed=2), hook=seen.append)
    assert len(seen) == 6
    for info, rec in zip(seen, t.records[4:]):
        assert info.scores[info.chosen_index] == info.scores.max()
        if info.scores.max() > 0:
            # ties go to the first index; all-underflow batches are ranked in log space instead
            assert info.chosen_index == int(np.argmax(info.scores))
        np.testing.assert_array_equal(info.chosen, info.candidates[info.chosen_index])
        lo, hi = info.box
        assert np.all((info.chosen >= lo) & (info.chosen <= hi))
        np.testing.assert_allclose(rec.x, p.from_unit(info.chosen))


def test_candidates_stay_in_unit_cube():
    seen = []
    run(make_problem("levy", 4), OptimizerConfig(**FAST, seed=3), hook=seen.append)
    for info in seen:
        assert np.all((info.candidates >= 0) & (info.candidates <= 1))


def test_two_dim_ackley_sanity():
    finals = []
    for seed in range(5):
        t = run(make_problem("ackley", 2), OptimizerConfig(n_init=4, budget=30, seed=seed))
        finals.append(t.feasible_best()[-1])
    assert np.median(finals) <= 1.0


class TestTsChoice:
    def test_feasible_minimum(self):
        f = np.array([0.0, 1.0, -1.0, 2.0])
        g = np.array([[1.0], [-1.0], [0.5], [-2.0]])
        assert ts_choice(f, g) == 1

    def test_fewest_violations_fallback(self):
        f = np.zeros(3)
        g = np.array([[1.0, 1.0], [5.0, -1.0], [0.1, 0.1]])
        assert ts_choice(f, g) == 1

    def test_total_violation_tiebreak(self):
        g = np.array([[3.0, -1.0], [0.2, -1.0], [-1.0, 0.5]])
        assert ts_choice(np.zeros(3), g) == 1

    def test_unconstrained(self):
        assert ts_choice([3.0, -2.0, 1.0], np.zeros((3, 0))) == 1

    def test_unconstrained_run(self):
        p = Problem("sphere", [-1.0, -1.0], [1.0, 1.0], lambda x: float(np.sum(np.asarray(x) ** 2)))
        t = run_ts_baseline(p, OptimizerConfig(**FAST))
        assert t.n_evals == 10 and all(r.feasible for r in t.records)


def test_failure_carries_trace():
    calls = []

    def f(x):
        calls.append(1)
        if len(calls) == 6:
            raise FloatingPointError("boom")
        return float(np.sum(np.asarray(x) ** 2))

    p = Problem("flaky", [-1.0, -1.0], [1.0, 1.0], f)
    with pytest.raises(RunError) as info:
        run(p, OptimizerConfig(**FAST))
    assert info.value.trace.n_evals == 5
