"""Density-ratio acquisition scoring.

Every component (the objective plus one per constraint) contributes a
density ratio ``r = p_good(x) / p_bad(x)``.  The constrained score is the
product of *relative* ratios ``(gamma + (1 - gamma) / r) ** -1``, which
pins a component's influence to its empirical quantile: a constraint that
is satisfied everywhere (``gamma = 1``) contributes the constant 1.  All
arithmetic is done in log space; products of many ratios underflow otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kde import Kde
from .space import Config


@dataclass(frozen=True)
class AcquisitionComponent:
    """A fitted good/bad density pair and its empirical quantile."""

    kde_good: Kde
    kde_bad: Kde
    gamma_hat: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma_hat <= 1.0:
            raise ValueError("gamma_hat must lie in [0, 1]")


@dataclass(frozen=True)
class ScoredCandidate:
    """A candidate configuration with its per-component scores.

    ``source_component`` and ``sample_index`` identify which good-density
    the candidate was drawn from and its draw position, and break score ties
    deterministically.
    """

    config: Config
    log_ratios: tuple[float, ...]
    log_relative_ratios: tuple[float, ...]
    total_log_score: float
    source_component: int
    sample_index: int


def log_density_ratio_many(
    component: AcquisitionComponent, configs: Sequence[Config]
) -> np.ndarray:
    return component.kde_good.log_pdf_many(configs) - component.kde_bad.log_pdf_many(configs)


def density_ratio(component: AcquisitionComponent, config: Config) -> float:
    """``p_good(x) / p_bad(x)``; strictly positive because both densities
    carry the full-support prior component."""
    return float(math.exp(log_density_ratio_many(component, [config])[0]))


def relative_density_ratio(ratio: float, gamma_hat: float) -> float:
    """``(gamma + (1 - gamma) / r) ** -1``: monotone in ``r``, bounded by
    ``1 / gamma`` and identically 1 when ``gamma = 1``."""
    if ratio <= 0.0:
        raise ValueError("density ratio must be positive")
    if not 0.0 <= gamma_hat <= 1.0:
        raise ValueError("gamma_hat must lie in [0, 1]")
    if gamma_hat == 0.0:
        return float(ratio)
    return float(1.0 / (gamma_hat + (1.0 - gamma_hat) / ratio))


def log_relative_ratio(log_ratio: np.ndarray | float, gamma_hat: float) -> np.ndarray | float:
    """Log-domain relative density ratio, stable for extreme ratios."""
    if not 0.0 <= gamma_hat <= 1.0:
        raise ValueError("gamma_hat must lie in [0, 1]")
    if gamma_hat == 0.0:
        return log_ratio
    if gamma_hat == 1.0:
        return np.zeros_like(log_ratio) if isinstance(log_ratio, np.ndarray) else 0.0
    return -np.logaddexp(math.log(gamma_hat), math.log1p(-gamma_hat) - np.asarray(log_ratio))


def eci_log_score(components: Sequence[AcquisitionComponent], config: Config) -> float:
    """Sum of log relative density ratios over all components."""
    if not components:
        raise ValueError("at least one component (the objective) is required")
    total = 0.0
    for component in components:
        log_r = float(log_density_ratio_many(component, [config])[0])
        total += float(log_relative_ratio(log_r, component.gamma_hat))
    return total


def naive_log_score(components: Sequence[AcquisitionComponent], config: Config) -> float:
    """Sum of plain log density ratios (comparator mode, no relative transform)."""
    if not components:
        raise ValueError("at least one component (the objective) is required")
    return float(
        sum(float(log_density_ratio_many(c, [config])[0]) for c in components)
    )


def select_candidate(candidates: Sequence[ScoredCandidate]) -> ScoredCandidate:
    """Argmax by total log score; ties go to the smallest
    ``(source_component, sample_index)``."""
    if not candidates:
        raise ValueError("candidate list is empty")
    return max(
        candidates,
        key=lambda c: (c.total_log_score, -c.source_component, -c.sample_index),
    )
