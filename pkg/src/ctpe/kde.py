"""Weighted kernel density estimation over a search space.

A fitted estimator is a mixture of one kernel per observation plus one
non-informative (uniform) pseudo-observation, all equally weighted.
Numerical dimensions use Gaussian kernels truncated and renormalized to the
domain; categorical dimensions use the Aitchison-Aitken kernel.  The uniform
component keeps the density strictly positive on the whole space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.special import logsumexp, ndtr, ndtri

from .space import Config, ParamDomain, SearchSpace

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_WEIGHT_TOL = 1e-12


def bandwidth_floor(width: float, n_values: int) -> float:
    """Lower bandwidth clamp ``width / min(100, N + 1)``.

    The good-side estimator routinely holds only one or two centers; a
    spread-based bandwidth collapses there and the sampler degenerates into
    re-proposing the incumbent.  Keeping sparse estimators wide (half the
    domain for a single center, narrowing as evidence accumulates) is what
    makes the density ratio explore.
    """
    return width / min(100.0, n_values + 1.0)


def bandwidth_normal_reference(values: Sequence[float], domain: ParamDomain, dim_count: int) -> float:
    """Normal-reference bandwidth for one numerical dimension.

    ``h = 1.059 * sigma * N ** (-1 / (dim_count + 4))`` with
    ``sigma = min(sample std, IQR / 1.349)``, clamped to
    ``[bandwidth_floor(width, N), width]``.  A degenerate spread
    (``sigma == 0``) falls to the lower clamp.
    """
    if not domain.is_numerical:
        raise ValueError("bandwidth selection applies to numerical domains only")
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("bandwidth selection needs at least one value")
    if dim_count < 1:
        raise ValueError("dim_count must be >= 1")
    n = arr.size
    std = float(arr.std(ddof=1)) if n > 1 else 0.0
    q75, q25 = np.percentile(arr, [75.0, 25.0])
    sigma = min(std, float(q75 - q25) / 1.349)
    h = 1.059 * sigma * n ** (-1.0 / (dim_count + 4))
    width = domain.width
    return float(min(max(h, bandwidth_floor(width, n)), width))


def aitchison_aitken(category: int, center: int, cardinality: int, sharpness: float) -> float:
    """Categorical kernel: ``sharpness`` on the center, the rest spread evenly.

    Sums to one over the categories for any ``sharpness`` in
    ``[1 / cardinality, 1]``.
    """
    if cardinality < 2:
        raise ValueError("cardinality must be >= 2")
    if not 1.0 / cardinality - _WEIGHT_TOL <= sharpness <= 1.0 + _WEIGHT_TOL:
        raise ValueError(
            f"sharpness {sharpness} outside [1/{cardinality}, 1]"
        )
    if not (0 <= category < cardinality and 0 <= center < cardinality):
        raise ValueError("category indices must lie in [0, cardinality)")
    if category == center:
        return float(sharpness)
    return float((1.0 - sharpness) / (cardinality - 1))


def _categorical_sharpness(n_observations: int, cardinality: int) -> float:
    # Approaches a point mass as evidence grows; fully smoothed with no data.
    raw = 1.0 - 1.0 / (1.0 + n_observations)
    return min(max(raw, 1.0 / cardinality), 1.0)


@dataclass(frozen=True)
class Kde:
    """Mixture of per-observation kernels plus a uniform prior component.

    ``weights`` are the per-center weights; together with
    ``prior_weight_share`` they sum to one.  ``bandwidths`` has one positive
    entry per numerical dimension (None elsewhere); ``sharpness`` has one
    entry in ``[1/K, 1]`` per categorical dimension (None elsewhere).
    """

    space: SearchSpace
    centers: tuple[Config, ...]
    weights: tuple[float, ...]
    bandwidths: tuple[float | None, ...]
    sharpness: tuple[float | None, ...]
    prior_weight_share: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "centers", tuple(tuple(c) for c in self.centers))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "bandwidths", tuple(self.bandwidths))
        object.__setattr__(self, "sharpness", tuple(self.sharpness))
        if len(self.weights) != len(self.centers):
            raise ValueError("one weight per center is required")
        if not 0.0 < self.prior_weight_share <= 1.0:
            raise ValueError("prior weight share must lie in (0, 1]")
        if any(w < 0.0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        total = sum(self.weights) + self.prior_weight_share
        if abs(total - 1.0) > _WEIGHT_TOL * max(1.0, len(self.weights)):
            raise ValueError(f"weights plus prior share must sum to 1, got {total}")
        if len(self.bandwidths) != len(self.space) or len(self.sharpness) != len(self.space):
            raise ValueError("bandwidths and sharpness must have one entry per dimension")
        for d, dom in enumerate(self.space.dims):
            if dom.is_numerical:
                if self.bandwidths[d] is None or self.bandwidths[d] <= 0.0:
                    raise ValueError(f"dim {d}: numerical dimension needs a positive bandwidth")
                if self.sharpness[d] is not None:
                    raise ValueError(f"dim {d}: sharpness applies to categorical dimensions only")
            else:
                lam = self.sharpness[d]
                if lam is None or not 1.0 / dom.cardinality - _WEIGHT_TOL <= lam <= 1.0 + _WEIGHT_TOL:
                    raise ValueError(f"dim {d}: sharpness must lie in [1/{dom.cardinality}, 1]")
                if self.bandwidths[d] is not None:
                    raise ValueError(f"dim {d}: bandwidth applies to numerical dimensions only")
        for center in self.centers:
            self.space.check(center)

    @classmethod
    def fit(cls, space: SearchSpace, observations: Sequence[Config]) -> "Kde":
        """Build the estimator from observed configurations.

        Each observation kernel and the uniform prior carry weight
        ``1 / (N + 1)``; with no observations the result is the prior alone.
        """
        centers = tuple(space.coerce(c) for c in observations)
        n = len(centers)
        d_count = len(space)
        bandwidths: list[float | None] = []
        sharpness: list[float | None] = []
        for d, dom in enumerate(space.dims):
            if dom.is_numerical:
                sharpness.append(None)
                if n == 0:
                    bandwidths.append(dom.width)
                else:
                    column = [c[d] for c in centers]
                    bandwidths.append(bandwidth_normal_reference(column, dom, d_count))
            else:
                bandwidths.append(None)
                sharpness.append(_categorical_sharpness(n, dom.cardinality))
        share = 1.0 / (n + 1)
        return cls(
            space=space,
            centers=centers,
            weights=(share,) * n,
            bandwidths=tuple(bandwidths),
            sharpness=tuple(sharpness),
            prior_weight_share=share,
        )

    @cached_property
    def _center_columns(self) -> list[np.ndarray]:
        return [
            np.asarray([c[d] for c in self.centers], dtype=float)
            for d in range(len(self.space))
        ]

    @cached_property
    def _log_prior_density(self) -> float:
        total = 0.0
        for dom in self.space.dims:
            total -= math.log(dom.width) if dom.is_numerical else math.log(dom.cardinality)
        return total

    @cached_property
    def _cumulative_weights(self) -> np.ndarray:
        return np.cumsum(np.asarray(self.weights + (self.prior_weight_share,), dtype=float))

    @cached_property
    def _truncation_terms(self) -> list[tuple[np.ndarray, np.ndarray, np.ndarray] | None]:
        # Per numerical dimension: (cdf at lower, cdf at upper, log truncated mass) per center.
        terms: list[tuple[np.ndarray, np.ndarray, np.ndarray] | None] = []
        for d, dom in enumerate(self.space.dims):
            if not dom.is_numerical or not self.centers:
                terms.append(None)
                continue
            mu = self._center_columns[d]
            h = self.bandwidths[d]
            low = ndtr((dom.lower - mu) / h)
            high = ndtr((dom.upper - mu) / h)
            terms.append((low, high, np.log(high - low)))
        return terms

    def log_pdf_many(self, configs: Sequence[Config]) -> np.ndarray:
        """Log density for a batch of configurations."""
        coerced = [self.space.coerce(c) for c in configs]
        m = len(coerced)
        n = len(self.centers)
        component = np.zeros((m, n + 1))
        component[:, n] = self._log_prior_density
        if n:
            for d, dom in enumerate(self.space.dims):
                x = np.asarray([c[d] for c in coerced], dtype=float)
                mu = self._center_columns[d]
                if dom.is_numerical:
                    h = self.bandwidths[d]
                    z = (x[:, None] - mu[None, :]) / h
                    _, _, log_mass = self._truncation_terms[d]
                    component[:, :n] += (
                        -0.5 * z * z - _LOG_SQRT_2PI - math.log(h) - log_mass[None, :]
                    )
                else:
                    lam = self.sharpness[d]
                    log_match = math.log(lam)
                    log_miss = (
                        math.log((1.0 - lam) / (dom.cardinality - 1))
                        if lam < 1.0
                        else -math.inf
                    )
                    match = x[:, None] == mu[None, :]
                    component[:, :n] += np.where(match, log_match, log_miss)
        log_weights = np.log(np.asarray(self.weights + (self.prior_weight_share,), dtype=float))
        return logsumexp(component + log_weights[None, :], axis=1)

    def log_pdf(self, config: Config) -> float:
        return float(self.log_pdf_many([config])[0])

    def pdf(self, config: Config) -> float:
        return float(math.exp(self.log_pdf(config)))

    def sample(self, rng: np.random.Generator) -> Config:
        """Draw one configuration: pick a mixture component, then one variate
        per dimension (truncated Gaussian / categorical kernel; uniform for the
        prior component)."""
        n = len(self.centers)
        u = rng.uniform()
        index = int(np.searchsorted(self._cumulative_weights, u, side="right"))
        index = min(index, n)
        values = []
        for d, dom in enumerate(self.space.dims):
            v = rng.uniform()
            if index == n:  # prior component: uniform over the domain
                if dom.is_numerical:
                    values.append(dom.lower + v * (dom.upper - dom.lower))
                else:
                    values.append(min(int(v * dom.cardinality), dom.cardinality - 1))
                continue
            if dom.is_numerical:
                mu = self.centers[index][d]
                h = self.bandwidths[d]
                low, high, _ = self._truncation_terms[d]
                a, b = low[index], high[index]
                x = mu + h * float(ndtri(a + v * (b - a)))
                values.append(min(max(x, dom.lower), dom.upper))
            else:
                lam = self.sharpness[d]
                center = self.centers[index][d]
                if v < lam:
                    values.append(center)
                else:
                    others = [k for k in range(dom.cardinality) if k != center]
                    j = int((v - lam) / (1.0 - lam) * len(others))
                    values.append(others[min(j, len(others) - 1)])
        return tuple(values)

    def sample_many(self, rng: np.random.Generator, count: int) -> list[Config]:
        return [self.sample(rng) for _ in range(count)]
