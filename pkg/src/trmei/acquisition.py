"""Expected improvement for minimization and its penalized variant."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import erfcx, ndtr

from .gp import GpModel
from .penalized import PenalizedPosterior, PenaltyConfig, penalized_moments

__all__ = ["Incumbent", "ei", "log_ei", "mei", "log_mei", "score_batch", "incumbent_from_data"]

SIGMA_EPS = 1e-12
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)
_SQRT_HALF_PI = np.sqrt(np.pi / 2.0)


@dataclass(frozen=True)
class Incumbent:
    best_F: float
    best_point: np.ndarray
    is_feasible: bool


def _h(z):
    """phi(z) + z * Phi(z), evaluated without cancellation for negative z."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    zp = z[pos]
    out[pos] = np.exp(-0.5 * zp**2) * _INV_SQRT2PI + zp * ndtr(zp)
    zn = z[~pos]
    # Phi(z) = phi(z) * sqrt(pi/2) * erfcx(-z/sqrt2) for z < 0
    out[~pos] = np.exp(-0.5 * zn**2) * _INV_SQRT2PI * (1.0 + zn * _SQRT_HALF_PI * erfcx(-zn / np.sqrt(2.0)))
    return np.maximum(out, 0.0)


def _log_h(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    mid = z > -25.0
    out[mid] = np.log(np.maximum(_h(z[mid]), 1e-300))
    zn = z[~mid]
    log_phi = -0.5 * zn**2 - 0.5 * np.log(2.0 * np.pi)
    tail = 1.0 + zn * _SQRT_HALF_PI * erfcx(-zn / np.sqrt(2.0))
    # asymptotic 1/z^2 - 3/z^4 once erfcx loses the difference
    asym = 1.0 / zn**2 - 3.0 / zn**4
    tail = np.where((zn < -1e3) | (tail <= 0), asym, tail)
    out[~mid] = log_phi + np.log(tail)
    return out


def ei(fstar, mu, sigma):
    """Closed-form expected improvement ``E[max(0, fstar - Y)]``, ``Y ~ N(mu, sigma^2)``."""
    fstar, mu, sigma = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (fstar, mu, sigma)))
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    diff = fstar - mu
    small = sigma < SIGMA_EPS
    safe = np.where(small, 1.0, sigma)
    val = np.where(small, np.maximum(diff, 0.0), safe * _h(diff / safe))
    return val if val.ndim else float(val)


def log_ei(fstar, mu, sigma):
    """log of :func:`ei`, finite far into the lower tail where ``ei`` underflows."""
    fstar, mu, sigma = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (fstar, mu, sigma)))
    diff = fstar - mu
    small = sigma < SIGMA_EPS
    safe = np.where(small, 1.0, sigma)
    with np.errstate(divide="ignore"):
        val = np.where(small, np.log(np.maximum(diff, 0.0)), np.log(safe) + _log_h(diff / safe))
    return val if val.ndim else float(val)


def mei(incumbent: Incumbent, posterior: PenalizedPosterior):
    return ei(incumbent.best_F, posterior.mu_F, np.sqrt(np.maximum(posterior.sigma2_F, 0.0)))


def log_mei(incumbent: Incumbent, posterior: PenalizedPosterior):
    return log_ei(incumbent.best_F, posterior.mu_F, np.sqrt(np.maximum(posterior.sigma2_F, 0.0)))


def incumbent_from_data(x, f, g, obj: GpModel, cfg: PenaltyConfig = PenaltyConfig()) -> Incumbent:
    """Smallest penalized value over the observations, on ``obj``'s standardized scale."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float).reshape(f.shape[0], -1)
    counts = np.count_nonzero(g > 0, axis=1)
    F = (f - obj.y_shift) / obj.y_scale + cfg.big_m * counts
    i = int(np.argmin(F))
    return Incumbent(float(F[i]), np.asarray(x)[i], bool(counts[i] == 0))


def score_batch(incumbent: Incumbent, obj: GpModel, cons: Sequence[GpModel], candidates,
                cfg: PenaltyConfig = PenaltyConfig()):
    """Penalized EI for every candidate and the index of the best one.

    The argmax is taken over log-EI, which ranks identically wherever EI is
    representable and still separates candidates whose EI underflows to 0.
    Ties go to the lowest index.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if candidates.shape[0] == 0:
        raise ValueError("empty candidate batch")
    post = penalized_moments(obj, cons, candidates, cfg)
    scores = np.atleast_1d(mei(incumbent, post))
    best = int(np.argmax(np.atleast_1d(log_mei(incumbent, post))))
    return scores, best
