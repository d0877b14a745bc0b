"""Zero-mean Gaussian-process regression with an ARD Matérn 5/2 kernel.

Inputs are expected in the unit cube; outputs are standardized inside
:func:`fit` and mapped back in :func:`predict`. Hyperparameters (per-dimension
lengthscales, signal variance, jitter) are fitted by multi-start L-BFGS-B on
the log marginal likelihood with analytic gradients.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, lapack, solve_triangular
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

__all__ = [
    "KernelParams",
    "HyperBounds",
    "GpModel",
    "NumericalError",
    "matern52",
    "kernel_matrix",
    "log_marginal_likelihood",
    "fit",
    "predict",
    "sample_posterior",
]

SQRT5 = np.sqrt(5.0)
MAX_JITTER = 1e-2


class NumericalError(RuntimeError):
    """Raised when a covariance matrix cannot be factorized even after jitter escalation."""


@dataclass(frozen=True)
class KernelParams:
    lengthscales: np.ndarray
    signal_variance: float = 1.0
    jitter: float = 1e-6

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if np.any(ls <= 0) or self.signal_variance <= 0 or self.jitter <= 0:
            raise ValueError("kernel parameters must be positive")
        object.__setattr__(self, "lengthscales", ls)

    @property
    def dim(self) -> int:
        return self.lengthscales.shape[0]

    def to_log(self) -> np.ndarray:
        return np.log(np.concatenate([self.lengthscales, [self.signal_variance, self.jitter]]))

    @classmethod
    def from_log(cls, theta) -> "KernelParams":
        theta = np.exp(np.asarray(theta, dtype=float))
        return cls(theta[:-2], float(theta[-2]), float(theta[-1]))


@dataclass(frozen=True)
class HyperBounds:
    lengthscale: tuple[float, float] = (1e-3, 1e2)
    signal_variance: tuple[float, float] = (1e-4, 1e4)
    jitter: tuple[float, float] = (1e-8, 1e-2)

    def log_bounds(self, dim: int) -> np.ndarray:
        rows = [self.lengthscale] * dim + [self.signal_variance, self.jitter]
        return np.log(np.asarray(rows, dtype=float))


@dataclass(frozen=True)
class GpModel:
    """A fitted GP. Treat as immutable.

    ``train_x`` may be empty (shape ``(0, d)``) for the prior-only fallback
    used when training outputs are constant.
    """

    params: KernelParams
    train_x: np.ndarray
    train_y: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    y_shift: float = 0.0
    y_scale: float = 1.0
    lml: float = float("nan")
    info: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self) -> int:
        return self.params.dim

    @property
    def n(self) -> int:
        return self.train_x.shape[0]


def _scaled_sqdist(x1, x2, lengthscales):
    # direct differences; the |a|^2 + |b|^2 - 2ab expansion cancels badly at short lengthscales
    return cdist(x1 / lengthscales, x2 / lengthscales, "sqeuclidean")


def _matern_from_r(r, signal_variance):
    sr = SQRT5 * r
    return signal_variance * (1.0 + sr + sr**2 / 3.0) * np.exp(-sr)


def _check_dims(x, params):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != params.dim:
        raise ValueError(f"input has dimension {x.shape[1]}, kernel expects {params.dim}")
    return x


def matern52(x1, x2, params: KernelParams) -> float:
    """Matérn 5/2 covariance between two single points."""
    x1 = np.asarray(x1, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x1.shape != x2.shape or x1.shape[0] != params.dim:
        raise ValueError("point dimensions must match the number of lengthscales")
    r = np.sqrt(np.sum(((x1 - x2) / params.lengthscales) ** 2))
    return float(_matern_from_r(r, params.signal_variance))


def kernel_matrix(x1, x2, params: KernelParams) -> np.ndarray:
    x1 = _check_dims(x1, params)
    x2 = _check_dims(x2, params)
    r = np.sqrt(_scaled_sqdist(x1, x2, params.lengthscales))
    return _matern_from_r(r, params.signal_variance)


def _safe_cholesky(K, jitter):
    """Cholesky of ``K + jitter*I``, multiplying jitter by 10 on failure."""
    n = K.shape[0]
    eye = np.eye(n)
    while True:
        try:
            return cholesky(K + jitter * eye, lower=True, check_finite=False), jitter
        except np.linalg.LinAlgError:
            if jitter >= MAX_JITTER:
                raise NumericalError(f"Cholesky failed with jitter {jitter:.1e}") from None
            jitter = min(jitter * 10.0, MAX_JITTER)


def log_marginal_likelihood(params: KernelParams, x, y) -> float:
    """Log marginal likelihood of ``y`` (already standardized) under a zero-mean GP."""
    x = _check_dims(x, params)
    y = np.asarray(y, dtype=float)
    K = kernel_matrix(x, x, params)
    L, _ = _safe_cholesky(K, params.jitter)
    alpha = cho_solve((L, True), y, check_finite=False)
    n = y.shape[0]
    return float(-0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * np.log(2.0 * np.pi))


class _NegLml:
    """Negative LML and gradient w.r.t. log-parameters, with cached pairwise terms."""

    def __init__(self, x, y):
        self.x = x
        self.y = y
        self.n, self.d = x.shape
        diff = x[:, None, :] - x[None, :, :]
        self.sqdiff = (diff**2).reshape(self.n * self.n, self.d)
        self.eye = np.eye(self.n)

    def __call__(self, theta):
        d = self.d
        ls = np.exp(theta[:d])
        s2 = np.exp(theta[d])
        jit = np.exp(theta[d + 1])
        inv_ls2 = 1.0 / ls**2
        r2 = (self.sqdiff @ inv_ls2).reshape(self.n, self.n)
        sr = SQRT5 * np.sqrt(r2)
        e = np.exp(-sr)
        K0 = s2 * (1.0 + sr + sr**2 / 3.0) * e
        L, info = lapack.dpotrf(K0 + jit * self.eye, lower=1, clean=1)
        if info != 0:
            return 1e25, np.zeros_like(theta)
        Kinv, info = lapack.dpotri(L, lower=1)
        if info != 0:
            return 1e25, np.zeros_like(theta)
        Kinv = np.tril(Kinv) + np.tril(Kinv, -1).T
        alpha = Kinv @ self.y
        nll = 0.5 * self.y @ alpha + np.sum(np.log(np.diag(L))) + 0.5 * self.n * np.log(2.0 * np.pi)
        W = np.outer(alpha, alpha) - Kinv
        # dK/dlog(ls_k) = (5/3) s2 (1 + sqrt5 r) exp(-sqrt5 r) * diff_k^2 / ls_k^2
        A = (5.0 / 3.0) * s2 * (1.0 + sr) * e
        g_ls = ((W * A).ravel() @ self.sqdiff) * inv_ls2
        g_s2 = np.sum(W * K0)
        g_jit = jit * np.trace(W)
        grad = -0.5 * np.concatenate([g_ls, [g_s2, g_jit]])
        if not np.isfinite(nll):
            return 1e25, np.zeros_like(theta)
        return float(nll), grad


def _build(params, x, y, y_shift, y_scale, lml, info):
    K = kernel_matrix(x, x, params)
    L, jitter = _safe_cholesky(K, params.jitter)
    if jitter != params.jitter:
        params = KernelParams(params.lengthscales, params.signal_variance, jitter)
        info = dict(info, jitter_escalated=True)
    alpha = cho_solve((L, True), y, check_finite=False)
    return GpModel(params, x, y, L, alpha, y_shift, y_scale, lml, info)


def condition(params: KernelParams, x, y) -> GpModel:
    """Condition a GP with fixed hyperparameters on raw outputs ``y``.

    Outputs are standardized with the population mean and standard deviation.
    """
    x = _check_dims(x, params)
    y = np.asarray(y, dtype=float).ravel()
    shift = float(np.mean(y))
    scale = float(np.std(y))
    if scale <= 0.0:
        raise ValueError("constant outputs cannot be standardized")
    ys = (y - shift) / scale
    lml = log_marginal_likelihood(params, x, ys)
    return _build(params, x, ys, shift, scale, lml, {})


def _initial_points(lb, d, restarts, rng):
    """Log-uniform starts inside a sub-box of the bounds, first one deterministic.

    Starts near the extreme corners of the full bounds (tiny lengthscales in
    particular) sit on flat white-noise plateaus where L-BFGS-B stops at once.
    """
    init = np.log(np.array([[0.05, 2.0 * np.sqrt(d)]] * d + [[0.1, 10.0], [1e-8, 1e-4]]))
    lo = np.clip(init[:, 0], lb[:, 0], lb[:, 1])
    hi = np.clip(init[:, 1], lb[:, 0], lb[:, 1])
    starts = rng.uniform(lo, hi, size=(restarts, lb.shape[0]))
    # typical inter-point distance in the unit cube
    default = np.log(np.concatenate([np.full(d, 0.5 * np.sqrt(d)), [1.0, 1e-6]]))
    starts[0] = np.clip(default, lb[:, 0], lb[:, 1])
    return starts


def fit(x, y, bounds: HyperBounds | None = None, restarts: int = 5, seed=None, maxiter: int = 200) -> GpModel:
    """Fit hyperparameters by maximizing the log marginal likelihood.

    The first restart begins at a fixed data-scaled guess, the others at points
    drawn log-uniformly from an initialization box inside ``bounds``; each runs
    bounded L-BFGS-B. The best restart (by final LML) is kept.
    Deterministic for a given ``seed``.

    Constant ``y`` returns a prior-only model with the signal variance at its
    lower bound.
    """
    bounds = bounds or HyperBounds()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, d = x.shape
    if n != y.shape[0]:
        raise ValueError("x and y have different numbers of rows")
    if n < 2:
        raise ValueError("need at least two observations to fit")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")

    shift = float(np.mean(y))
    scale = float(np.std(y))
    if not scale > 0.0:
        params = KernelParams(np.ones(d), bounds.signal_variance[0], bounds.jitter[0])
        empty = np.zeros((0, d))
        return GpModel(params, empty, np.zeros(0), np.zeros((0, 0)), np.zeros(0), shift, 1.0,
                       float("nan"), {"constant_outputs": True})
    ys = (y - shift) / scale

    rng = np.random.default_rng(seed)
    lb = bounds.log_bounds(d)
    objective = _NegLml(x, ys)
    starts = _initial_points(lb, d, restarts, rng)

    best_theta, best_val = None, np.inf
    start_vals = []
    for theta0 in starts:
        val0 = objective(theta0)[0]
        start_vals.append(-val0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(objective, theta0, jac=True, method="L-BFGS-B", bounds=lb,
                           options={"maxiter": maxiter})
        theta, val = res.x, float(res.fun)
        # L-BFGS-B can terminate on a worse point after a failed line search
        if val0 < val:
            theta, val = theta0, val0
        if val < best_val:
            best_theta, best_val = theta, val
    if best_theta is None or best_val >= 1e25:
        raise NumericalError("no restart produced a factorizable covariance")

    params = KernelParams.from_log(best_theta)
    info = {"start_lml": start_vals, "restarts": restarts}
    return _build(params, x, ys, shift, scale, -best_val, info)


def predict(model: GpModel, x, standardized: bool = False):
    """Posterior mean and variance at ``x`` (a point or an ``(m, d)`` batch).

    Returns arrays of shape ``(m,)``. By default both are mapped back to the
    original output units; ``standardized=True`` returns them on the scale the
    model was fitted on.
    """
    x = _check_dims(x, model.params)
    prior_var = model.params.signal_variance
    if model.n == 0:
        mean = np.zeros(x.shape[0])
        var = np.full(x.shape[0], prior_var)
    else:
        Ks = kernel_matrix(x, model.train_x, model.params)
        mean = Ks @ model.alpha
        v = solve_triangular(model.chol, Ks.T, lower=True, check_finite=False)
        var = np.maximum(prior_var - np.sum(v**2, axis=0), 0.0)
    if standardized:
        return mean, var
    return mean * model.y_scale + model.y_shift, var * model.y_scale**2


def sample_posterior(model: GpModel, xs, seed=None, jitter: float = 1e-8) -> np.ndarray:
    """Draw one joint posterior sample over the batch ``xs`` (original units)."""
    xs = _check_dims(xs, model.params)
    if xs.shape[0] == 0:
        raise ValueError("empty batch")
    Kss = kernel_matrix(xs, xs, model.params)
    if model.n == 0:
        mean = np.zeros(xs.shape[0])
        cov = Kss
    else:
        Ks = kernel_matrix(xs, model.train_x, model.params)
        mean = Ks @ model.alpha
        v = solve_triangular(model.chol, Ks.T, lower=True, check_finite=False)
        cov = Kss - v.T @ v
    cov = 0.5 * (cov + cov.T)
    L, _ = _safe_cholesky(cov, max(jitter, 1e-12))
    z = np.random.default_rng(seed).standard_normal(xs.shape[0])
    return (mean + L @ z) * model.y_scale + model.y_shift
