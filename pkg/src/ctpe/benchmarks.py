"""Analytic toy problems with known constrained optima.

All problems are two-dimensional with a single measurable constraint.  The
quadratic pairs live on [-5, 5]^2; the sinusoidal one on [0, 2pi]^2.  Each
problem exposes a closed-form oracle (the best feasible objective value for
given thresholds), confirmed independently by a refining grid search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .space import Config, ParamDomain, SearchSpace

ArrayFn = Callable[[np.ndarray], np.ndarray]


# Scalar forms (the array-based ToyProblem evaluators mirror these exactly).

def quad_shift(x: float, y: float) -> tuple[float, float]:
    """Shifted quadratic pair: objective centered at (-2, -2), constraint at (1, 1)."""
    return (x + 2.0) ** 2 + (y + 2.0) ** 2, (x - 1.0) ** 2 + (y - 1.0) ** 2


def quad_overlap(x: float, y: float, z: float) -> tuple[float, float]:
    """Origin-centered quadratic with a constraint disk centered at (z, z)."""
    return x**2 + y**2, (x - z) ** 2 + (y - z) ** 2


def sin_modal(x1: float, x2: float) -> tuple[float, float]:
    """Two-modal sinusoidal objective with a product-of-sines constraint."""
    return math.sin(x1) + x2, math.sin(x1) * math.sin(x2)


@dataclass(frozen=True)
class ToyProblem:
    """A benchmark problem: objective, constraints and an optional oracle.

    ``objective`` and ``constraints`` take an array of shape ``(..., D)``
    and return ``(...)``; ``evaluate`` wraps them for a single configuration.
    ``oracle`` maps a threshold tuple to the best feasible objective value.
    """

    name: str
    space: SearchSpace
    objective: ArrayFn
    constraints: tuple[ArrayFn, ...]
    default_thresholds: tuple[float, ...]
    oracle: Callable[[Sequence[float]], float] | None = None

    def evaluate(self, config: Config) -> tuple[float, tuple[float, ...]]:
        point = np.asarray(self.space.coerce(config), dtype=float)
        return float(self.objective(point)), tuple(float(c(point)) for c in self.constraints)


def _square(low: float, high: float) -> SearchSpace:
    return SearchSpace((ParamDomain.numerical(low, high), ParamDomain.numerical(low, high)))


def _boundary_distance_oracle(center_sq: float) -> Callable[[Sequence[float]], float]:
    # Minimum of a squared distance to one point over a disk around another:
    # zero when the target lies inside the disk, else the squared gap between
    # the center distance and the disk radius.  Compared in squared form so
    # the interior case is exact.
    def oracle(thresholds: Sequence[float]) -> float:
        (threshold,) = thresholds
        if threshold <= 0.0:
            raise ValueError("threshold must be positive for a nonempty feasible disk")
        if threshold >= center_sq:
            return 0.0
        return (math.sqrt(center_sq) - math.sqrt(threshold)) ** 2

    return oracle


def make_quad_shift() -> ToyProblem:
    def objective(p: np.ndarray) -> np.ndarray:
        return (p[..., 0] + 2.0) ** 2 + (p[..., 1] + 2.0) ** 2

    def constraint(p: np.ndarray) -> np.ndarray:
        return (p[..., 0] - 1.0) ** 2 + (p[..., 1] - 1.0) ** 2

    return ToyProblem(
        name="quad_shift",
        space=_square(-5.0, 5.0),
        objective=objective,
        constraints=(constraint,),
        default_thresholds=(4.0,),
        oracle=_boundary_distance_oracle(18.0),
    )


def make_quad_overlap(z: float, name: str = "quad_overlap") -> ToyProblem:
    def objective(p: np.ndarray) -> np.ndarray:
        return p[..., 0] ** 2 + p[..., 1] ** 2

    def constraint(p: np.ndarray) -> np.ndarray:
        return (p[..., 0] - z) ** 2 + (p[..., 1] - z) ** 2

    return ToyProblem(
        name=name,
        space=_square(-5.0, 5.0),
        objective=objective,
        constraints=(constraint,),
        default_thresholds=(3.0,),
        oracle=_boundary_distance_oracle(2.0 * z * z),
    )


def make_sin_modal() -> ToyProblem:
    def objective(p: np.ndarray) -> np.ndarray:
        return np.sin(p[..., 0]) + p[..., 1]

    def constraint(p: np.ndarray) -> np.ndarray:
        return np.sin(p[..., 0]) * np.sin(p[..., 1])

    def oracle(thresholds: Sequence[float]) -> float:
        (threshold,) = thresholds
        if threshold < -1.0:
            raise ValueError("threshold below -1 leaves no feasible point")
        if threshold >= 0.0:
            return -1.0
        # Best modal: sin(x1) = -1, smallest x2 with sin(x2) >= -threshold.
        return -1.0 + math.asin(-threshold)

    return ToyProblem(
        name="sin_modal",
        space=_square(0.0, 2.0 * math.pi),
        objective=objective,
        constraints=(constraint,),
        default_thresholds=(-0.95,),
        oracle=oracle,
    )


PROBLEMS: dict[str, Callable[[], ToyProblem]] = {
    "quad_shift": make_quad_shift,
    # Small overlap between the top objective domain and the feasible disk.
    "quad_overlap": lambda: make_quad_overlap(2.3),
    # Large overlap: the unconstrained optimum is itself feasible.
    "quad_overlap_large": lambda: make_quad_overlap(0.5, name="quad_overlap_large"),
    "sin_modal": make_sin_modal,
}


def problem_names() -> list[str]:
    return sorted(PROBLEMS)


def get_problem(name: str) -> ToyProblem:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; known: {', '.join(problem_names())}") from None
    return factory()


def grid_oracle(
    problem: ToyProblem,
    thresholds: Sequence[float],
    n_points: int = 10**6,
    stages: int = 2,
) -> float:
    """Brute-force oracle: refining grid search for the best feasible value.

    Each stage lays an even grid of about ``n_points`` over the current box
    and shrinks the box to +-2 grid steps around the incumbent.
    """
    if any(not dom.is_numerical for dom in problem.space.dims):
        raise ValueError("grid oracle supports numerical spaces only")
    thresholds = tuple(float(t) for t in thresholds)
    if len(thresholds) != len(problem.constraints):
        raise ValueError("one threshold per constraint is required")
    dims = len(problem.space)
    side = max(2, round(n_points ** (1.0 / dims)))
    lower = np.asarray([dom.lower for dom in problem.space.dims])
    upper = np.asarray([dom.upper for dom in problem.space.dims])
    best = math.inf
    for _ in range(stages):
        axes = [np.linspace(lower[d], upper[d], side) for d in range(dims)]
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=-1)
        feasible = np.ones(len(points), dtype=bool)
        for constraint, threshold in zip(problem.constraints, thresholds):
            feasible &= constraint(points) <= threshold
        if not feasible.any():
            raise ValueError("no feasible grid point; threshold too tight for this grid")
        values = problem.objective(points[feasible])
        k = int(np.argmin(values))
        best = float(values[k])
        incumbent = points[feasible][k]
        steps = np.asarray([axes[d][1] - axes[d][0] for d in range(dims)])
        lower = np.maximum(lower, incumbent - 2.0 * steps)
        upper = np.minimum(upper, incumbent + 2.0 * steps)
    return best


def threshold_for_quantile(
    problem: ToyProblem,
    index: int,
    gamma_true: float,
    n_grid: int = 10**6,
    seed: int = 0,
) -> float:
    """Threshold making a fraction ``gamma_true`` of the space feasible for
    constraint ``index``, estimated from a seeded uniform Monte-Carlo sample."""
    if not 0.0 < gamma_true <= 1.0:
        raise ValueError("gamma_true must lie in (0, 1]")
    if n_grid < 10**4:
        raise ValueError("n_grid must be at least 10^4")
    if not 0 <= index < len(problem.constraints):
        raise ValueError(f"constraint index {index} out of range")
    if any(not dom.is_numerical for dom in problem.space.dims):
        raise ValueError("quantile calibration supports numerical spaces only")
    rng = np.random.default_rng(seed)
    columns = [rng.uniform(dom.lower, dom.upper, n_grid) for dom in problem.space.dims]
    points = np.stack(columns, axis=1)
    return float(np.quantile(problem.constraints[index](points), gamma_true))
