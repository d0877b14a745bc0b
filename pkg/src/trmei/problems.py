"""Constrained benchmark problems and the black-box problem container.

Every benchmark shares the same two constraints::

    g1(x) = sum(x)          <= 0
    g2(x) = ||x||_2 - 5     <= 0

so the origin is feasible (on the boundary of ``g1``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Problem",
    "ackley",
    "levy",
    "rastrigin",
    "constraints",
    "is_feasible",
    "make_problem",
    "PROBLEMS",
    "DEFAULT_LOWER",
    "DEFAULT_UPPER",
]

DEFAULT_LOWER = -5.0
DEFAULT_UPPER = 10.0


def ackley(x, a=20.0, b=0.2, c=2.0 * np.pi):
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    term1 = -a * np.exp(-b * np.sqrt(np.sum(x**2, axis=-1) / d))
    term2 = -np.exp(np.sum(np.cos(c * x), axis=-1) / d)
    return term1 + term2 + a + np.e


def levy(x):
    x = np.asarray(x, dtype=float)
    w = 1.0 + (x - 1.0) / 4.0
    head = np.sin(np.pi * w[..., 0]) ** 2
    wi = w[..., :-1]
    body = np.sum((wi - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * wi + 1.0) ** 2), axis=-1)
    wd = w[..., -1]
    tail = (wd - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * wd) ** 2)
    return head + body + tail


def rastrigin(x, A=10.0):
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    return A * d + np.sum(x**2 - A * np.cos(2.0 * np.pi * x), axis=-1)


def constraints(x):
    """Return ``(g1, g2)`` stacked on the last axis; feasible iff both <= 0."""
    x = np.asarray(x, dtype=float)
    g1 = np.sum(x, axis=-1)
    g2 = np.linalg.norm(x, axis=-1) - 5.0
    return np.stack([g1, g2], axis=-1)


def is_feasible(g) -> bool | np.ndarray:
    return np.all(np.asarray(g) <= 0.0, axis=-1)


@dataclass(frozen=True)
class Problem:
    """A box-bounded black-box problem ``min f(x) s.t. g_j(x) <= 0``.

    ``constraint_fn`` maps a point to a length-``n_constraints`` array.
    Evaluators must be deterministic.
    """

    name: str
    lower: np.ndarray
    upper: np.ndarray
    objective_fn: Callable[[np.ndarray], float]
    constraint_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    n_constraints: int = 0
    optimum: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower and upper must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("bounds must be finite")
        if np.any(lower >= upper):
            raise ValueError("need lower < upper in every dimension")
        if self.n_constraints > 0 and self.constraint_fn is None:
            raise ValueError("n_constraints > 0 but no constraint_fn given")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def evaluate(self, x) -> tuple[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        f = float(self.objective_fn(x))
        if self.n_constraints:
            g = np.asarray(self.constraint_fn(x), dtype=float).reshape(self.n_constraints)
        else:
            g = np.zeros(0)
        return f, g

    def to_unit(self, x):
        return (np.asarray(x, dtype=float) - self.lower) / (self.upper - self.lower)

    def from_unit(self, u):
        return self.lower + np.asarray(u, dtype=float) * (self.upper - self.lower)


# name -> (objective, known constrained optimum or None)
PROBLEMS = {
    "ackley": (ackley, 0.0),
    "levy": (levy, None),
    "rastrigin": (rastrigin, 0.0),
}


def make_problem(name: str, dim: int, lower: float = DEFAULT_LOWER, upper: float = DEFAULT_UPPER) -> Problem:
    """Build a registered constrained benchmark on the box ``[lower, upper]^dim``."""
    try:
        fn, optimum = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return Problem(
        name=name,
        lower=np.full(dim, float(lower)),
        upper=np.full(dim, float(upper)),
        objective_fn=fn,
        constraint_fn=constraints,
        n_constraints=2,
        optimum=optimum,
    )
