"""Hyperrectangular trust region on the unit cube.

The region is a box centred on the incumbent whose side along dimension ``i``
is ``L * ls_i / geomean(ls)``. Its base length ``L`` doubles after
``tau_s`` consecutive improvements and halves after ``tau_f`` consecutive
failures; falling below ``L_min`` signals a restart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import qmc

__all__ = [
    "TrustRegionConfig",
    "TrustRegionState",
    "CandidateBatch",
    "init_state",
    "define_tr",
    "gen_candidates",
    "update_counters",
    "adjust",
    "restart",
    "is_improvement",
]


@dataclass(frozen=True)
class TrustRegionConfig:
    """Trust-region constants. ``None`` fields are resolved from the dimension."""

    length_init: float = 0.8
    length_min: float = 0.5**7
    length_max: float = 1.6
    tau_s: int = 3
    tau_f: int | None = None
    n_cand: int | None = None
    p_perturb: float | None = None

    def resolve(self, dim: int) -> "TrustRegionConfig":
        return replace(
            self,
            tau_f=self.tau_f if self.tau_f is not None else max(5, dim),
            n_cand=self.n_cand if self.n_cand is not None else min(100 * dim, 5000),
            p_perturb=self.p_perturb if self.p_perturb is not None else min(20.0 / dim, 1.0),
        )


@dataclass(frozen=True)
class TrustRegionState:
    center: np.ndarray
    length: float
    length_init: float = 0.8
    length_min: float = 0.5**7
    length_max: float = 1.6
    tau_s: int = 3
    tau_f: int = 5
    n_s: int = 0
    n_f: int = 0
    restart_triggered: bool = False


@dataclass(frozen=True)
class CandidateBatch:
    points: np.ndarray
    mask: np.ndarray
    seed: int | None


def init_state(center, cfg: TrustRegionConfig) -> TrustRegionState:
    center = np.asarray(center, dtype=float)
    cfg = cfg.resolve(center.shape[0])
    return TrustRegionState(
        center=center,
        length=cfg.length_init,
        length_init=cfg.length_init,
        length_min=cfg.length_min,
        length_max=cfg.length_max,
        tau_s=cfg.tau_s,
        tau_f=cfg.tau_f,
    )


def define_tr(state: TrustRegionState, center, lengthscales):
    """Return ``(lower, upper)`` of the trust region, clipped to ``[0, 1]^d``."""
    center = np.asarray(center, dtype=float)
    ls = np.asarray(lengthscales, dtype=float)
    if ls.shape != center.shape:
        raise ValueError("need one lengthscale per dimension")
    if np.any(ls <= 0):
        raise ValueError("lengthscales must be positive")
    weights = ls / np.exp(np.mean(np.log(ls)))
    half = 0.5 * state.length * weights
    return np.clip(center - half, 0.0, 1.0), np.clip(center + half, 0.0, 1.0)


def _sobol(n, d, rng):
    m = max(int(math.ceil(math.log2(max(n, 2)))), 1)
    return qmc.Sobol(d, scramble=True, seed=rng).random_base2(m)[:n]


def gen_candidates(box, center, n_cand: int, p_perturb: float, seed=None) -> CandidateBatch:
    """Perturb a random subset of the centre's coordinates with Sobol draws in ``box``.

    Each coordinate is perturbed independently with probability ``p_perturb``;
    rows with no perturbed coordinate get one chosen uniformly at random.
    """
    if not 0.0 < p_perturb <= 1.0:
        raise ValueError("p_perturb must lie in (0, 1]")
    lower, upper = (np.asarray(b, dtype=float) for b in box)
    center = np.asarray(center, dtype=float)
    d = center.shape[0]
    rng = np.random.default_rng(seed)
    pert = lower + (upper - lower) * _sobol(n_cand, d, rng)
    mask = rng.random((n_cand, d)) <= p_perturb
    empty = ~mask.any(axis=1)
    if empty.any():
        mask[empty, rng.integers(0, d, size=int(empty.sum()))] = True
    points = np.where(mask, pert, center)
    return CandidateBatch(points, mask, seed)


def update_counters(state: TrustRegionState, improved: bool) -> TrustRegionState:
    if improved:
        return replace(state, n_s=state.n_s + 1, n_f=0)
    return replace(state, n_s=0, n_f=state.n_f + 1)


def adjust(state: TrustRegionState) -> TrustRegionState:
    """Expand or shrink after a streak; no-op unless a threshold is reached."""
    if state.n_s >= state.tau_s:
        return replace(state, length=min(2.0 * state.length, state.length_max), n_s=0)
    if state.n_f >= state.tau_f:
        length = state.length / 2.0
        if length < state.length_min:
            return replace(state, length=length, n_f=0, restart_triggered=True)
        return replace(state, length=length, n_f=0)
    return state


def restart(state: TrustRegionState, center) -> TrustRegionState:
    return replace(state, center=np.asarray(center, dtype=float), length=state.length_init,
                   n_s=0, n_f=0, restart_triggered=False)


def is_improvement(new_violations: int, new_f: float, best_violations: int, best_f: float) -> bool:
    """Strict improvement in the big-M ordering, with a tolerance on the objective."""
    if new_violations != best_violations:
        return new_violations < best_violations
    return new_f < best_f - max(1e-3 * abs(best_f), 1e-6)
