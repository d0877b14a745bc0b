"""Big-M penalized surrogate built from independent objective and constraint GPs.

With ``p_j = P(Y_g_j(x) > 0)`` the penalized surrogate
``Y_F = Y_f + M * sum_j 1[Y_g_j > 0]`` has

    mean      mu_f + M * sum_j p_j
    variance  sigma2_f + M**2 * sum_j p_j * (1 - p_j)

The objective moments are taken on the objective GP's standardized scale so
that ``M`` is scale-free; violation probabilities use the constraint GPs in
original units, where the feasibility threshold 0 lives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .gp import GpModel, predict

__all__ = [
    "PenaltyConfig",
    "PenalizedPosterior",
    "violation_probability",
    "penalized_moments",
    "penalized_value",
]


@dataclass(frozen=True)
class PenaltyConfig:
    big_m: float = 10.0

    def __post_init__(self):
        if not self.big_m > 0:
            raise ValueError("big_m must be positive")


@dataclass(frozen=True)
class PenalizedPosterior:
    """Moments of the penalized surrogate at a batch of ``m`` points.

    ``p_violation`` has shape ``(m, J)``; all other fields have shape ``(m,)``.
    """

    mu_f: np.ndarray
    sigma2_f: np.ndarray
    p_violation: np.ndarray
    mu_F: np.ndarray
    sigma2_F: np.ndarray


def violation_probability(mu_g, sigma_g):
    """P(Y > 0) for ``Y ~ N(mu_g, sigma_g**2)``; a point mass when ``sigma_g == 0``."""
    mu_g = np.asarray(mu_g, dtype=float)
    sigma_g = np.asarray(sigma_g, dtype=float)
    if np.any(sigma_g < 0):
        raise ValueError("sigma_g must be non-negative")
    degenerate = sigma_g == 0
    safe = np.where(degenerate, 1.0, sigma_g)
    # 1 - Phi(-mu/sigma) == Phi(mu/sigma), without the cancellation
    p = np.where(degenerate, (mu_g > 0).astype(float), ndtr(mu_g / safe))
    return p if p.ndim else float(p)


def moments_from_parts(mu_f, sigma2_f, p_violation, big_m):
    p = np.atleast_2d(np.asarray(p_violation, dtype=float))
    mu_F = np.asarray(mu_f, dtype=float) + big_m * p.sum(axis=-1)
    sigma2_F = np.asarray(sigma2_f, dtype=float) + big_m**2 * np.sum(p * (1.0 - p), axis=-1)
    return mu_F, sigma2_F


def penalized_moments(obj: GpModel, cons: Sequence[GpModel], x, cfg: PenaltyConfig = PenaltyConfig()):
    """Penalized mean and variance at ``x`` (point or batch)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    for model in cons:
        if model.dim != obj.dim:
            raise ValueError("all models must share the input dimension")
    mu_f, s2_f = predict(obj, x, standardized=True)
    if cons:
        cols = []
        for model in cons:
            mu_g, s2_g = predict(model, x)
            cols.append(violation_probability(mu_g, np.sqrt(s2_g)))
        p = np.column_stack(cols)
    else:
        p = np.zeros((x.shape[0], 0))
    mu_F, s2_F = moments_from_parts(mu_f, s2_f, p, cfg.big_m)
    return PenalizedPosterior(mu_f, s2_f, p, mu_F, s2_F)


def penalized_value(f, g, cfg: PenaltyConfig = PenaltyConfig()) -> float:
    """``f + M * #{j : g_j > 0}``; ``g_j == 0`` counts as satisfied."""
    g = np.asarray(g, dtype=float)
    return float(f) + cfg.big_m * float(np.count_nonzero(g > 0))
