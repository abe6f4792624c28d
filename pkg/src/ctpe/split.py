"""Good/bad partitioning of observations for the objective and each constraint.

Every split returns index sets into the observation sequence it was given,
along with the empirical quantile ``gamma_hat = |good| / |eligible|`` that
later rescales the component's density ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .space import Config

MEASURABLE = "measurable"
HARD = "hard"


@dataclass(frozen=True)
class ConstraintSpec:
    """Declaration of one inequality constraint.

    Measurable constraints are real-valued with a fixed upper threshold
    (``value <= threshold`` is feasible); hard constraints yield only a
    pass/fail flag per evaluation and carry no threshold.  ``cheap`` marks a
    measurable constraint as eligible for knowledge augmentation.
    """

    kind: str = MEASURABLE
    threshold: float | None = None
    cheap: bool = False

    def __post_init__(self) -> None:
        if self.kind == MEASURABLE:
            if self.threshold is None or not math.isfinite(self.threshold):
                raise ValueError("measurable constraints need a finite threshold")
        elif self.kind == HARD:
            if self.threshold is not None:
                raise ValueError("hard constraints carry no threshold")
            if self.cheap:
                raise ValueError("only measurable constraints can be cheap")
        else:
            raise ValueError(f"unknown constraint kind: {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "threshold": self.threshold, "cheap": self.cheap}

    @classmethod
    def from_dict(cls, data: dict) -> "ConstraintSpec":
        return cls(
            kind=data.get("kind", MEASURABLE),
            threshold=data.get("threshold"),
            cheap=bool(data.get("cheap", False)),
        )


@dataclass(frozen=True)
class Observation:
    """One evaluated (or partially evaluated) configuration.

    ``constraints`` holds one optional value per declared constraint; None
    means unmeasured (partial observations, hard failures).  ``hard_ok``
    holds one optional pass/fail flag per constraint; only hard constraints
    ever carry a flag.
    """

    config: Config
    objective: float | None
    constraints: tuple[float | None, ...]
    hard_ok: tuple[bool | None, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "config", tuple(self.config))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "hard_ok", tuple(self.hard_ok))
        if len(self.constraints) != len(self.hard_ok):
            raise ValueError("constraints and hard_ok must have equal length")
        if self.objective is not None and not math.isfinite(self.objective):
            raise ValueError("objective must be finite")
        for value in self.constraints:
            if value is not None and not math.isfinite(value):
                raise ValueError("constraint values must be finite")

    @property
    def is_hard_failure(self) -> bool:
        return any(flag is False for flag in self.hard_ok)

    def to_dict(self) -> dict:
        return {
            "config": list(self.config),
            "objective": self.objective,
            "constraints": list(self.constraints),
            "hard_ok": list(self.hard_ok),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Observation":
        return cls(
            config=tuple(data["config"]),
            objective=data.get("objective"),
            constraints=tuple(data.get("constraints", ())),
            hard_ok=tuple(data.get("hard_ok", ())),
        )


def is_feasible(observation: Observation, specs: Sequence[ConstraintSpec]) -> bool:
    """True when every constraint is measured and satisfied.

    Measurable: value present and ``<= threshold``.  Hard: flag present and
    True.  With no constraints declared every observation is feasible.
    """
    if len(observation.constraints) != len(specs):
        raise ValueError("observation arity does not match the constraint specs")
    for i, spec in enumerate(specs):
        if spec.kind == HARD:
            if observation.hard_ok[i] is not True:
                return False
        else:
            value = observation.constraints[i]
            if value is None or value > spec.threshold:
                return False
    return True


@dataclass(frozen=True)
class SplitResult:
    """Disjoint good/bad index sets over the eligible observations."""

    good_indices: tuple[int, ...]
    bad_indices: tuple[int, ...]
    gamma_hat: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "good_indices", tuple(self.good_indices))
        object.__setattr__(self, "bad_indices", tuple(self.bad_indices))
        good, bad = set(self.good_indices), set(self.bad_indices)
        if good & bad:
            raise ValueError("good and bad index sets overlap")
        eligible = len(good) + len(bad)
        if eligible == 0:
            raise ValueError("split over an empty eligible set")
        if abs(self.gamma_hat - len(good) / eligible) > 1e-12:
            raise ValueError("gamma_hat must equal |good| / |eligible|")

    @property
    def eligible_count(self) -> int:
        return len(self.good_indices) + len(self.bad_indices)


def _make_split(good: Sequence[int], bad: Sequence[int]) -> SplitResult:
    eligible = len(good) + len(bad)
    return SplitResult(
        good_indices=tuple(sorted(good)),
        bad_indices=tuple(sorted(bad)),
        gamma_hat=len(good) / eligible,
    )


def split_quantile_count(n_eligible: int) -> int:
    """Size of the good set used by the objective splits: ``ceil(sqrt(N) / 4)``."""
    if n_eligible < 1:
        raise ValueError("need at least one eligible observation")
    return math.ceil(math.sqrt(n_eligible) / 4.0)


def _objective_order(observations: Sequence[Observation]) -> list[int]:
    eligible = [
        i
        for i, obs in enumerate(observations)
        if obs.objective is not None and not obs.is_hard_failure
    ]
    if not eligible:
        raise ValueError("no observations with an objective value")
    # Stable sort: equal objectives keep insertion order.
    return sorted(eligible, key=lambda i: observations[i].objective)


def split_objective_vanilla(observations: Sequence[Observation]) -> SplitResult:
    """Unconstrained split: the best ``ceil(sqrt(N) / 4)`` observations are good."""
    order = _objective_order(observations)
    n_good = split_quantile_count(len(order))
    return _make_split(order[:n_good], order[n_good:])


def split_objective_feasible(
    observations: Sequence[Observation], specs: Sequence[ConstraintSpec]
) -> SplitResult:
    """Feasibility-aware split: walk the objective-sorted observations and keep
    everything up to and including the ``ceil(sqrt(N) / 4)``-th feasible one.

    With fewer feasible observations than that, all eligible observations are
    good (``gamma_hat = 1``) and the objective stops influencing the search.
    """
    order = _objective_order(observations)
    n_good = split_quantile_count(len(order))
    good: list[int] = []
    feasible_seen = 0
    for index in order:
        good.append(index)
        if is_feasible(observations[index], specs):
            feasible_seen += 1
            if feasible_seen == n_good:
                break
    if feasible_seen < n_good:
        good = list(order)
    return _make_split(good, order[len(good):])


def split_constraint(
    observations: Sequence[Observation], index: int, threshold: float
) -> SplitResult:
    """Split on a measurable constraint at the tightest observed satisfying value.

    The cut point is the largest observed value still within the threshold;
    when nothing satisfies it, the single best (smallest) observed value, so
    the constraint keeps being optimized.
    """
    values = {
        i: obs.constraints[index]
        for i, obs in enumerate(observations)
        if obs.constraints[index] is not None
    }
    if not values:
        raise ValueError(f"no observations with a value for constraint {index}")
    satisfying = [v for v in values.values() if v <= threshold]
    bound = max(satisfying) if satisfying else min(values.values())
    good = [i for i, v in values.items() if v <= bound]
    bad = [i for i in values if i not in set(good)]
    return _make_split(good, bad)


def split_constraint_hard(observations: Sequence[Observation], index: int) -> SplitResult:
    """Split on a hard constraint: satisfiers against violators.

    The good set may legitimately be empty (every evaluation failed); the
    caller then falls back to the non-informative prior for the good density.
    """
    flagged = {
        i: obs.hard_ok[index]
        for i, obs in enumerate(observations)
        if obs.hard_ok[index] is not None
    }
    if not flagged:
        raise ValueError(f"no observations with a pass/fail flag for constraint {index}")
    good = [i for i, ok in flagged.items() if ok]
    bad = [i for i in flagged if i not in set(good)]
    return _make_split(good, bad)
