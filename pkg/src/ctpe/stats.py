"""Evaluation statistics: percentage loss, pairwise wins, ranks, Wilcoxon test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

ORACLE_TOLERANCE = 1e-9

ALTERNATIVES = ("less", "greater", "two_sided")


@dataclass(frozen=True)
class RunRecord:
    """One optimization run: the best-feasible trace and its final loss.

    ``trace[t]`` is the best feasible objective after ``t + 1`` evaluations
    (None until the first feasible point); it must be non-increasing once set.
    """

    method: str
    setting: str
    seed: int
    trace: tuple[float | None, ...]
    final_loss: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "trace", tuple(self.trace))
        previous: float | None = None
        for t, value in enumerate(self.trace):
            if value is None:
                if previous is not None:
                    raise ValueError(f"trace loses its best-feasible value at step {t}")
                continue
            if previous is not None and value > previous:
                raise ValueError(f"best-feasible trace increases at step {t}")
            previous = value


def absolute_percentage_loss(f_observed: float, f_oracle: float) -> float:
    """``(f_observed - f_oracle) / f_oracle``; plain absolute loss when the
    oracle is exactly zero.  An observation beating the oracle signals a bug
    in either and is rejected."""
    if f_observed < f_oracle - ORACLE_TOLERANCE:
        raise ValueError(
            f"observed value {f_observed} beats the oracle {f_oracle}; "
            "the oracle or the run is wrong"
        )
    if f_oracle < 0.0:
        raise ValueError("oracle value must be nonnegative")
    if f_oracle == 0.0:
        return float(f_observed)
    return (f_observed - f_oracle) / f_oracle


def wins_loses_ties(
    medians_a: Sequence[float],
    medians_b: Sequence[float],
    lower_is_better: bool = True,
) -> tuple[int, int, int]:
    """Elementwise comparison counts of method A against method B."""
    if len(medians_a) != len(medians_b):
        raise ValueError("aligned vectors of equal length are required")
    wins = loses = ties = 0
    for a, b in zip(medians_a, medians_b):
        if a == b:
            ties += 1
        elif (a < b) == lower_is_better:
            wins += 1
        else:
            loses += 1
    return wins, loses, ties


def average_rank(values: Sequence[float]) -> tuple[float, ...]:
    """Ranks with 1 = best (lowest); ties get the mean of their positions."""
    if len(values) < 2:
        raise ValueError("ranking needs at least two methods")
    return tuple(float(r) for r in rankdata(np.asarray(values, dtype=float)))


def wilcoxon_signed_rank(
    differences: Sequence[float], alternative: str = "two_sided"
) -> float:
    """Wilcoxon signed-rank p-value over paired differences.

    Zero differences are dropped.  Up to n = 20 the p-value comes from the
    exact conditional distribution of the rank sum (computed over all 2^n
    sign assignments of the realized mid-ranks); beyond that, a normal
    approximation with tie and continuity corrections.

    ``alternative='greater'`` asks whether differences tend to be positive.
    """
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}")
    diffs = np.asarray(differences, dtype=float)
    if diffs.ndim != 1:
        raise ValueError("differences must be one-dimensional")
    diffs = diffs[diffs != 0.0]
    if diffs.size == 0:
        raise ValueError("all differences are zero; the test is undefined")
    n = diffs.size
    ranks = rankdata(np.abs(diffs))
    w_plus = float(ranks[diffs > 0].sum())

    if n <= 20:
        p_less, p_greater = _exact_tail_probabilities(ranks, w_plus)
    else:
        p_less, p_greater = _normal_tail_probabilities(np.abs(diffs), ranks, w_plus)

    if alternative == "less":
        return p_less
    if alternative == "greater":
        return p_greater
    return min(1.0, 2.0 * min(p_less, p_greater))


def _exact_tail_probabilities(ranks: np.ndarray, w_plus: float) -> tuple[float, float]:
    # Distribution of the doubled rank sum (mid-ranks double to integers).
    doubled = np.rint(ranks * 2.0).astype(int)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=float)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r]
        counts = counts + shifted
    pmf = counts / counts.sum()
    observed = int(round(2.0 * w_plus))
    p_greater = float(pmf[observed:].sum())
    p_less = float(pmf[: observed + 1].sum())
    return p_less, p_greater


def _normal_tail_probabilities(
    abs_diffs: np.ndarray, ranks: np.ndarray, w_plus: float
) -> tuple[float, float]:
    n = abs_diffs.size
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(abs_diffs, return_counts=True)
    tie_term = float(((tie_counts**3) - tie_counts).sum()) / 48.0
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    if variance <= 0.0:
        raise ValueError("degenerate rank variance; the test is undefined")
    sd = math.sqrt(variance)
    p_greater = float(ndtr(-(w_plus - 0.5 - mean) / sd))
    p_less = float(ndtr((w_plus + 0.5 - mean) / sd))
    return p_less, p_greater
