"""Trust-region penalized-EI optimization loop and the two comparison baselines.

All three methods share the initial design, the evaluation bookkeeping and the
trace format, so their traces can be aggregated side by side.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from . import trust_region as tr
from .acquisition import incumbent_from_data, score_batch
from .gp import HyperBounds, fit, sample_posterior
from .penalized import PenaltyConfig
from .problems import Problem

__all__ = [
    "GpFitConfig",
    "OptimizerConfig",
    "Record",
    "RunTrace",
    "IterationInfo",
    "RunError",
    "initial_design",
    "run",
    "run_ts_baseline",
    "run_random_baseline",
    "METHODS",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GpFitConfig:
    bounds: HyperBounds = field(default_factory=HyperBounds)
    restarts: int = 5
    maxiter: int = 200


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for one optimization run. ``n_init=None`` means ``2 * dim``."""

    n_init: Optional[int] = None
    budget: int = 50
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    trust_region: tr.TrustRegionConfig = field(default_factory=tr.TrustRegionConfig)
    gp: GpFitConfig = field(default_factory=GpFitConfig)
    seed: int = 0

    def resolve(self, dim: int) -> "OptimizerConfig":
        cfg = replace(
            self,
            n_init=self.n_init if self.n_init is not None else 2 * dim,
            trust_region=self.trust_region.resolve(dim),
        )
        if cfg.n_init < 2:
            raise ValueError("n_init must be >= 2")
        if cfg.budget < 0:
            raise ValueError("budget must be >= 0")
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Record:
    index: int
    phase: str
    x: list
    f: float
    g: list
    feasible: bool
    violations: int
    incumbent_index: int
    incumbent_f: float
    incumbent_violations: int
    best_feasible_f: Optional[float]
    tr_length: Optional[float] = None


@dataclass
class RunTrace:
    problem: str
    method: str
    dim: int
    config: dict
    records: list = field(default_factory=list)

    @property
    def n_evals(self) -> int:
        return len(self.records)

    @property
    def best_point(self):
        if not self.records:
            return None
        return np.asarray(self.records[self.records[-1].incumbent_index].x)

    def feasible_best(self) -> np.ndarray:
        """Best feasible objective after each evaluation; NaN before the first feasible point."""
        return np.array([np.nan if r.best_feasible_f is None else r.best_feasible_f for r in self.records])

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "method": self.method,
            "dim": self.dim,
            "config": self.config,
            "records": [asdict(r) for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunTrace":
        return cls(data["problem"], data["method"], data["dim"], data["config"],
                   [Record(**r) for r in data["records"]])


@dataclass(frozen=True)
class IterationInfo:
    """Passed to the optional per-iteration hook (unit-cube coordinates)."""

    step: int
    box: tuple
    candidates: np.ndarray
    scores: np.ndarray
    chosen_index: int
    chosen: np.ndarray


class RunError(RuntimeError):
    """A problem evaluation failed; ``trace`` holds every record made before it."""

    def __init__(self, message, trace: RunTrace):
        super().__init__(message)
        self.trace = trace


def initial_design(lower, upper, n_init: int, seed=None) -> np.ndarray:
    """Scrambled Sobol design of ``n_init`` points in the box."""
    if n_init < 2:
        raise ValueError("n_init must be >= 2")
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    u = tr._sobol(n_init, lower.shape[0], np.random.default_rng(seed))
    return qmc.scale(u, lower, upper)


class _History:
    """Observations plus the big-M incumbent (fewest violations, then lowest f)."""

    def __init__(self, problem: Problem, trace: RunTrace):
        self.problem = problem
        self.trace = trace
        self.x, self.f, self.g = [], [], []
        self.inc = -1
        self.best_feasible = None

    def incumbent_key(self):
        r = self.trace.records[self.inc]
        return r.violations, r.f

    def evaluate(self, x, phase, tr_length=None) -> bool:
        """Evaluate ``x`` and append a record; returns True if it improved the incumbent."""
        try:
            f, g = self.problem.evaluate(x)
        except Exception as exc:
            raise RunError(f"evaluation {len(self.f)} failed: {exc}", self.trace) from exc
        viol = int(np.count_nonzero(g > 0))
        improved = self.inc < 0 or tr.is_improvement(viol, f, *self.incumbent_key())
        self.x.append(np.asarray(x, dtype=float))
        self.f.append(f)
        self.g.append(g)
        i = len(self.f) - 1
        # the tolerance only gates the success counter; the incumbent is the exact argmin
        if self.inc < 0 or (viol, f) < self.incumbent_key():
            self.inc = i
        if viol == 0 and (self.best_feasible is None or f < self.best_feasible):
            self.best_feasible = f
        inc = (self.f[self.inc], int(np.count_nonzero(self.g[self.inc] > 0)))
        self.trace.records.append(Record(
            index=i, phase=phase, x=[float(v) for v in x], f=f, g=[float(v) for v in g],
            feasible=viol == 0, violations=viol, incumbent_index=self.inc,
            incumbent_f=inc[0], incumbent_violations=inc[1],
            best_feasible_f=self.best_feasible, tr_length=tr_length,
        ))
        return improved

    def arrays(self):
        X = np.vstack(self.x)
        return X, np.asarray(self.f), np.vstack(self.g) if self.g[0].size else np.zeros((len(self.f), 0))


def _start(problem: Problem, config: OptimizerConfig, method: str):
    cfg = config.resolve(problem.dim)
    trace = RunTrace(problem.name, method, problem.dim, cfg.to_dict())
    hist = _History(problem, trace)
    rng = np.random.default_rng(cfg.seed)
    design_seed = int(rng.integers(2**31))
    for x in initial_design(problem.lower, problem.upper, cfg.n_init, design_seed):
        hist.evaluate(x, "init")
    return cfg, hist, rng


def _fit_models(problem, hist, cfg, rng):
    X, f, g = hist.arrays()
    U = problem.to_unit(X)
    seeds = rng.integers(2**31, size=1 + g.shape[1])
    kw = dict(bounds=cfg.gp.bounds, restarts=cfg.gp.restarts, maxiter=cfg.gp.maxiter)
    obj = fit(U, f, seed=int(seeds[0]), **kw)
    cons = [fit(U, g[:, j], seed=int(seeds[j + 1]), **kw) for j in range(g.shape[1])]
    return U, f, g, obj, cons


def _tr_loop(problem: Problem, config: OptimizerConfig, method: str, select, hook):
    cfg, hist, rng = _start(problem, config, method)
    tcfg = cfg.trust_region
    state = tr.init_state(problem.to_unit(hist.x[hist.inc]), tcfg)
    for step in range(cfg.budget):
        U, f, g, obj, cons = _fit_models(problem, hist, cfg, rng)
        center = U[hist.inc]
        state = replace(state, center=center)
        box = tr.define_tr(state, center, obj.params.lengthscales)
        batch = tr.gen_candidates(box, center, tcfg.n_cand, tcfg.p_perturb, int(rng.integers(2**31)))
        scores, idx = select(U, f, g, obj, cons, batch.points, cfg, rng)
        chosen = batch.points[idx]
        if hook is not None:
            hook(IterationInfo(step, box, batch.points, scores, idx, chosen))
        improved = hist.evaluate(problem.from_unit(chosen), "iter", tr_length=state.length)
        state = tr.adjust(tr.update_counters(state, improved))
        if state.restart_triggered:
            log.debug("%s step %d: trust region collapsed, restarting", method, step)
            state = tr.restart(state, problem.to_unit(hist.x[hist.inc]))
    return hist.trace


def _select_mei(U, f, g, obj, cons, cands, cfg, rng):
    inc = incumbent_from_data(U, f, g, obj, cfg.penalty)
    return score_batch(inc, obj, cons, cands, cfg.penalty)


def _select_ts(U, f, g, obj, cons, cands, cfg, rng):
    fs = sample_posterior(obj, cands, seed=int(rng.integers(2**31)))
    if cons:
        gs = np.column_stack([sample_posterior(m, cands, seed=int(rng.integers(2**31))) for m in cons])
    else:
        gs = np.zeros((cands.shape[0], 0))
    return fs, ts_choice(fs, gs)


def ts_choice(f_sample, g_sample) -> int:
    """Pick among sampled candidates: feasible minimum, else fewest violations, else least total violation."""
    f_sample = np.asarray(f_sample, dtype=float)
    g_sample = np.asarray(g_sample, dtype=float).reshape(f_sample.shape[0], -1)
    counts = np.count_nonzero(g_sample > 0, axis=1)
    if np.any(counts == 0):
        return int(np.argmin(np.where(counts == 0, f_sample, np.inf)))
    total = np.sum(np.maximum(g_sample, 0.0), axis=1)
    # lexsort uses the last key as primary
    return int(np.lexsort((total, counts))[0])


def run(problem: Problem, config: OptimizerConfig = OptimizerConfig(),
        hook: Optional[Callable[[IterationInfo], None]] = None) -> RunTrace:
    """Trust-region penalized-EI optimization; ``n_init + budget`` evaluations exactly."""
    return _tr_loop(problem, config, "tr-mei", _select_mei, hook)


def run_ts_baseline(problem: Problem, config: OptimizerConfig = OptimizerConfig(),
                    hook: Optional[Callable[[IterationInfo], None]] = None) -> RunTrace:
    """Same loop, choosing candidates by Thompson sampling with sampled feasibility."""
    return _tr_loop(problem, config, "tr-ts", _select_ts, hook)


def run_random_baseline(problem: Problem, config: OptimizerConfig = OptimizerConfig(), hook=None) -> RunTrace:
    cfg, hist, rng = _start(problem, config, "random")
    for x in rng.uniform(problem.lower, problem.upper, size=(cfg.budget, problem.dim)):
        hist.evaluate(x, "iter")
    return hist.trace


METHODS = {
    "tr-mei": run,
    "tr-ts": run_ts_baseline,
    "random": run_random_baseline,
}
