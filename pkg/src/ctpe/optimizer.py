"""Ask-tell optimizer for constrained black-box minimization.

Modes:

* ``ctpe``:       feasibility-aware objective split, product of relative
                  density ratios over the objective and every constraint.
* ``naive``:      plain objective split, product of plain density ratios.
* ``vanilla_tpe``: objective only, constraints ignored by the sampler.
* ``random``:     uniform sampling throughout.

The first ``n_init`` suggestions (and every suggestion in random mode) are
uniform.  Afterwards each component's observations are split into good/bad
sets, a density pair is fitted per component, ``n_samples`` candidates are
drawn from every good density, and the pooled candidates are scored and the
argmax returned.

``ask`` is deliberately free of side effects: the random stream for each
proposal is derived from ``(seed, |observations|, |partials|)``, so repeating
``ask`` before ``tell`` returns the same configuration, and a trajectory is
fully determined by the seed and the told values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .acquisition import (
    AcquisitionComponent,
    ScoredCandidate,
    log_density_ratio_many,
    log_relative_ratio,
    select_candidate,
)
from .kde import Kde
from .space import Config, SearchSpace
from .split import (
    HARD,
    ConstraintSpec,
    Observation,
    is_feasible,
    split_constraint,
    split_constraint_hard,
    split_objective_feasible,
    split_objective_vanilla,
)

MODES = ("ctpe", "naive", "vanilla_tpe", "random")

STATE_SCHEMA = "ctpe-optimizer/1"


@dataclass(frozen=True)
class ControlParams:
    """Control parameters: initial random draws, candidates per component,
    and the partial-observation budget used by the harness."""

    n_init: int = 10
    n_samples: int = 24
    n_partial: int = 200

    def __post_init__(self) -> None:
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.n_partial < 0:
            raise ValueError("n_partial must be >= 0")

    def to_dict(self) -> dict:
        return {"n_init": self.n_init, "n_samples": self.n_samples, "n_partial": self.n_partial}

    @classmethod
    def from_dict(cls, data: dict) -> "ControlParams":
        return cls(**data)


@dataclass(frozen=True)
class ComponentReport:
    """Split and density pair for one score component (0 = objective,
    ``i >= 1`` = constraint ``i - 1``)."""

    index: int
    gamma_hat: float
    eligible_count: int
    good_count: int
    bad_count: int
    kde_good: Kde
    kde_bad: Kde

    def as_acquisition(self) -> AcquisitionComponent:
        return AcquisitionComponent(self.kde_good, self.kde_bad, self.gamma_hat)


@dataclass(frozen=True)
class Proposal:
    """Full record of one model-based suggestion."""

    mode: str
    components: tuple[ComponentReport, ...]
    candidates: tuple[ScoredCandidate, ...]
    selected: ScoredCandidate


class Optimizer:
    """Sequential constrained optimizer with an ask-tell interface."""

    def __init__(
        self,
        space: SearchSpace,
        constraints: Sequence[ConstraintSpec] = (),
        mode: str = "ctpe",
        params: ControlParams | None = None,
        seed: int = 0,
    ) -> None:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        if not isinstance(seed, (int, np.integer)) or seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        self._space = space
        self._constraints = tuple(constraints)
        self._mode = mode
        self._params = params if params is not None else ControlParams()
        self._seed = int(seed)
        self._observations: list[Observation] = []
        self._partials: list[Observation] = []
        self._best: tuple[Config, float] | None = None
        # Components whose splits may use partial observations.
        self._cheap_components = frozenset(
            i + 1 for i, spec in enumerate(self._constraints) if spec.cheap
        )

    # -- read-only state ----------------------------------------------------

    @property
    def space(self) -> SearchSpace:
        return self._space

    @property
    def constraints(self) -> tuple[ConstraintSpec, ...]:
        return self._constraints

    @property
    def mode(self) -> str:
        return self._mode

    @property
    def params(self) -> ControlParams:
        return self._params

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def observations(self) -> tuple[Observation, ...]:
        return tuple(self._observations)

    @property
    def partials(self) -> tuple[Observation, ...]:
        return tuple(self._partials)

    @property
    def cheap_components(self) -> frozenset[int]:
        return self._cheap_components

    @property
    def n_constraints(self) -> int:
        return len(self._constraints)

    # -- suggestion ----------------------------------------------------------

    def _rng(self) -> np.random.Generator:
        # Derived, not consumed: repeated asks on unchanged state coincide,
        # and resumed runs continue bit-identically.
        return np.random.default_rng(
            [self._seed, len(self._observations), len(self._partials)]
        )

    def ask(self) -> Config:
        """Suggest the next configuration to evaluate (repeatable until told)."""
        rng = self._rng()
        if self._mode == "random" or len(self._observations) < self._params.n_init:
            return self._space.sample_uniform(rng)
        return self._propose(rng).selected.config

    def propose(self) -> Proposal:
        """Model-based suggestion with full scoring detail.

        Only valid once the initialization phase is over and the mode builds a
        model; ``ask`` covers the uniform phases.
        """
        if self._mode == "random":
            raise RuntimeError("random mode never builds a model-based proposal")
        if len(self._observations) < self._params.n_init:
            raise RuntimeError(
                f"still initializing: {len(self._observations)} of "
                f"{self._params.n_init} observations"
            )
        return self._propose(self._rng())

    def _propose(self, rng: np.random.Generator) -> Proposal:
        observations = tuple(self._observations)
        if self._mode == "vanilla_tpe":
            component_ids: tuple[int, ...] = (0,)
        else:
            component_ids = tuple(range(len(self._constraints) + 1))
        reports = tuple(self._build_component(i, observations) for i in component_ids)

        pool: list[tuple[Config, int, int]] = []
        for report in reports:
            for j in range(self._params.n_samples):
                pool.append((report.kde_good.sample(rng), report.index, j))
        configs = [entry[0] for entry in pool]

        log_ratios = np.stack(
            [log_density_ratio_many(r.as_acquisition(), configs) for r in reports]
        )
        log_relative = np.stack(
            [
                np.asarray(log_relative_ratio(row, r.gamma_hat))
                for row, r in zip(log_ratios, reports)
            ]
        )
        if self._mode == "ctpe":
            totals = log_relative.sum(axis=0)
        elif self._mode == "naive":
            totals = log_ratios.sum(axis=0)
        else:  # vanilla_tpe: rank by the objective ratio alone
            totals = log_ratios[0]

        candidates = tuple(
            ScoredCandidate(
                config=config,
                log_ratios=tuple(float(v) for v in log_ratios[:, m]),
                log_relative_ratios=tuple(float(v) for v in log_relative[:, m]),
                total_log_score=float(totals[m]),
                source_component=source,
                sample_index=sample_index,
            )
            for m, (config, source, sample_index) in enumerate(pool)
        )
        return Proposal(
            mode=self._mode,
            components=reports,
            candidates=candidates,
            selected=select_candidate(candidates),
        )

    def _build_component(
        self, index: int, observations: tuple[Observation, ...]
    ) -> ComponentReport:
        if index == 0:
            eligible = [
                o for o in observations if o.objective is not None and not o.is_hard_failure
            ]
            if not eligible:
                # Every record hard-failed: no objective information at all.
                return self._neutral_component(0, gamma_hat=1.0)
            if self._mode == "ctpe":
                split = split_objective_feasible(observations, self._constraints)
            else:
                split = split_objective_vanilla(observations)
            source: Sequence[Observation] = observations
        else:
            spec = self._constraints[index - 1]
            if spec.kind == HARD:
                source = observations
                flagged = any(o.hard_ok[index - 1] is not None for o in source)
                if not flagged:
                    return self._neutral_component(index, gamma_hat=1.0)
                split = split_constraint_hard(source, index - 1)
            else:
                source = self.augmented_view(index)
                measured = any(o.constraints[index - 1] is not None for o in source)
                if not measured:
                    return self._neutral_component(index, gamma_hat=1.0)
                split = split_constraint(source, index - 1, spec.threshold)
        good = [source[i].config for i in split.good_indices]
        bad = [source[i].config for i in split.bad_indices]
        return ComponentReport(
            index=index,
            gamma_hat=split.gamma_hat,
            eligible_count=split.eligible_count,
            good_count=len(good),
            bad_count=len(bad),
            kde_good=Kde.fit(self._space, good),
            kde_bad=Kde.fit(self._space, bad),
        )

    def _neutral_component(self, index: int, gamma_hat: float) -> ComponentReport:
        prior = Kde.fit(self._space, ())
        return ComponentReport(
            index=index,
            gamma_hat=gamma_hat,
            eligible_count=0,
            good_count=0,
            bad_count=0,
            kde_good=prior,
            kde_bad=prior,
        )

    # -- observation intake ---------------------------------------------------

    def tell(
        self,
        config: Sequence,
        objective: float | None = None,
        constraints: Sequence[float | None] | None = None,
        hard_ok: Sequence[bool | None] | None = None,
    ) -> None:
        """Record a full evaluation or a hard failure.

        A full observation carries the objective, a value for every measurable
        constraint and a True flag for every hard constraint.  A hard failure
        carries a False flag for the violated hard constraint, no objective,
        and whatever measurable values happened to be obtained.
        """
        coerced = self._space.coerce(config)
        n = len(self._constraints)
        values = self._arity(constraints, n, "constraint values")
        flags = self._arity(hard_ok, n, "hard flags")
        for i, spec in enumerate(self._constraints):
            if spec.kind == HARD:
                if values[i] is not None:
                    raise ValueError(
                        f"constraint {i} is hard: it carries a pass/fail flag, not a value"
                    )
            elif flags[i] is not None:
                raise ValueError(f"constraint {i} is measurable: it carries no pass/fail flag")
        failed = any(flag is False for flag in flags)
        if failed:
            if objective is not None:
                raise ValueError("hard-failure records carry no objective value")
        else:
            if objective is None:
                raise ValueError("a full observation needs an objective value")
            for i, spec in enumerate(self._constraints):
                if spec.kind == HARD:
                    if flags[i] is not True:
                        raise ValueError(
                            f"a full observation needs hard_ok=True for hard constraint {i}"
                        )
                elif values[i] is None:
                    raise ValueError(
                        f"a full observation needs a value for measurable constraint {i}"
                    )
        record = Observation(
            config=coerced,
            objective=None if objective is None else float(objective),
            constraints=tuple(None if v is None else float(v) for v in values),
            hard_ok=tuple(flags),
        )
        self._observations.append(record)
        if (
            record.objective is not None
            and is_feasible(record, self._constraints)
            and (self._best is None or record.objective < self._best[1])
        ):
            self._best = (record.config, record.objective)

    def tell_partial(self, config: Sequence, constraints: Sequence[float | None]) -> None:
        """Record constraint-only knowledge for the cheap constraints.

        Exactly the cheap constraints must carry values; partials never enter
        the objective split.
        """
        if not self._cheap_components:
            raise ValueError("no cheap constraints declared; partial observations are unusable")
        coerced = self._space.coerce(config)
        n = len(self._constraints)
        values = self._arity(constraints, n, "constraint values")
        for i, spec in enumerate(self._constraints):
            if spec.cheap:
                if values[i] is None:
                    raise ValueError(f"partial observation missing cheap constraint {i}")
            elif values[i] is not None:
                raise ValueError(f"constraint {i} is not cheap; partial value rejected")
        self._partials.append(
            Observation(
                config=coerced,
                objective=None,
                constraints=tuple(None if v is None else float(v) for v in values),
                hard_ok=(None,) * n,
            )
        )

    @staticmethod
    def _arity(
        entries: Sequence | None, n: int, what: str
    ) -> list:
        if entries is None:
            return [None] * n
        entries = list(entries)
        if len(entries) != n:
            raise ValueError(f"expected {n} {what}, got {len(entries)}")
        return entries

    def augmented_view(self, index: int) -> list[Observation]:
        """Observations feeding component ``index``: partials are appended for
        cheap constraints, never for the objective."""
        if not 0 <= index <= len(self._constraints):
            raise ValueError(
                f"component index {index} outside [0, {len(self._constraints)}]"
            )
        if index in self._cheap_components:
            return list(self._observations) + list(self._partials)
        return list(self._observations)

    def best_feasible(self) -> tuple[Config, float] | None:
        """Best objective among observations satisfying every constraint."""
        return self._best

    # -- persistence -----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": STATE_SCHEMA,
            "seed": self._seed,
            "mode": self._mode,
            "params": self._params.to_dict(),
            "space": self._space.to_dict(),
            "constraints": [spec.to_dict() for spec in self._constraints],
            "observations": [obs.to_dict() for obs in self._observations],
            "partials": [obs.to_dict() for obs in self._partials],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Optimizer":
        if data.get("schema") != STATE_SCHEMA:
            raise ValueError(f"unknown optimizer state schema: {data.get('schema')!r}")
        optimizer = cls(
            space=SearchSpace.from_dict(data["space"]),
            constraints=tuple(ConstraintSpec.from_dict(d) for d in data["constraints"]),
            mode=data["mode"],
            params=ControlParams.from_dict(data["params"]),
            seed=data["seed"],
        )
        for obs_data in data["observations"]:
            record = Observation.from_dict(obs_data)
            optimizer._space.check(record.config)
            optimizer._observations.append(record)
            if (
                record.objective is not None
                and is_feasible(record, optimizer._constraints)
                and (optimizer._best is None or record.objective < optimizer._best[1])
            ):
                optimizer._best = (record.config, record.objective)
        for obs_data in data["partials"]:
            record = Observation.from_dict(obs_data)
            optimizer._space.check(record.config)
            optimizer._partials.append(record)
        return optimizer
