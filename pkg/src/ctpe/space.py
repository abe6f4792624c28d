"""Search space definition: bounded numerical and categorical dimensions.

A configuration is a plain tuple with one entry per dimension, ordered as the
space declares them: floats for numerical dimensions, integer category
indices in ``[0, cardinality)`` for categorical ones.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

Config = tuple

NUMERICAL = "numerical"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class ParamDomain:
    """One dimension of the search space.

    Numerical domains are closed finite intervals ``[lower, upper]``;
    categorical domains hold ``cardinality`` unordered categories indexed
    ``0 .. cardinality - 1``.
    """

    kind: str
    lower: float | None = None
    upper: float | None = None
    cardinality: int | None = None

    def __post_init__(self) -> None:
        if self.kind == NUMERICAL:
            if self.lower is None or self.upper is None:
                raise ValueError("numerical domain requires lower and upper bounds")
            if self.cardinality is not None:
                raise ValueError("numerical domain does not take a cardinality")
            if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
                raise ValueError("numerical bounds must be finite")
            if not self.lower < self.upper:
                raise ValueError(
                    f"numerical domain requires lower < upper, got [{self.lower}, {self.upper}]"
                )
        elif self.kind == CATEGORICAL:
            if self.cardinality is None:
                raise ValueError("categorical domain requires a cardinality")
            if self.lower is not None or self.upper is not None:
                raise ValueError("categorical domain does not take bounds")
            if self.cardinality < 2:
                raise ValueError(f"categorical domain requires >= 2 categories, got {self.cardinality}")
        else:
            raise ValueError(f"unknown domain kind: {self.kind!r}")

    @classmethod
    def numerical(cls, lower: float, upper: float) -> "ParamDomain":
        return cls(NUMERICAL, lower=float(lower), upper=float(upper))

    @classmethod
    def categorical(cls, cardinality: int) -> "ParamDomain":
        return cls(CATEGORICAL, cardinality=int(cardinality))

    @property
    def is_numerical(self) -> bool:
        return self.kind == NUMERICAL

    @property
    def width(self) -> float:
        if not self.is_numerical:
            raise ValueError("width is only defined for numerical domains")
        return self.upper - self.lower

    def violation(self, value: Any) -> str | None:
        """Return a description of why ``value`` is outside this domain, or None."""
        if self.is_numerical:
            if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
                return f"expected a real number, got {value!r}"
            if not math.isfinite(float(value)):
                return f"value {value!r} is not finite"
            if not self.lower <= float(value) <= self.upper:
                return f"value {value!r} outside [{self.lower}, {self.upper}]"
            return None
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            return f"expected an integer category index, got {value!r}"
        if not 0 <= int(value) < self.cardinality:
            return f"category {value!r} outside [0, {self.cardinality})"
        return None

    def to_dict(self) -> dict:
        if self.is_numerical:
            return {"kind": NUMERICAL, "lower": self.lower, "upper": self.upper}
        return {"kind": CATEGORICAL, "cardinality": self.cardinality}

    @classmethod
    def from_dict(cls, data: dict) -> "ParamDomain":
        kind = data.get("kind")
        if kind == NUMERICAL:
            return cls.numerical(data["lower"], data["upper"])
        if kind == CATEGORICAL:
            return cls.categorical(data["cardinality"])
        raise ValueError(f"unknown domain kind: {kind!r}")


@dataclass(frozen=True)
class SearchSpace:
    """An ordered product of parameter domains.

    The declaration order is the configuration layout: ``config[d]`` belongs
    to ``dims[d]``.
    """

    dims: tuple[ParamDomain, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", tuple(self.dims))
        if len(self.dims) < 1:
            raise ValueError("search space needs at least one dimension")

    def __len__(self) -> int:
        return len(self.dims)

    def validate(self, config: Sequence) -> list[str]:
        """Check a configuration; returns a list of violations (empty means ok)."""
        if len(config) != len(self.dims):
            return [f"configuration has {len(config)} entries, expected {len(self.dims)}"]
        violations = []
        for d, (dom, value) in enumerate(zip(self.dims, config)):
            message = dom.violation(value)
            if message is not None:
                violations.append(f"dim {d}: {message}")
        return violations

    def check(self, config: Sequence) -> None:
        violations = self.validate(config)
        if violations:
            raise ValueError("invalid configuration: " + "; ".join(violations))

    def coerce(self, config: Sequence) -> Config:
        """Validate and normalize a configuration to the canonical tuple form."""
        self.check(config)
        return tuple(
            float(v) if dom.is_numerical else int(v) for dom, v in zip(self.dims, config)
        )

    def sample_uniform(self, rng: np.random.Generator) -> Config:
        """Draw a uniform configuration, consuming one variate per dimension."""
        values = []
        for dom in self.dims:
            u = rng.uniform()
            if dom.is_numerical:
                values.append(dom.lower + u * (dom.upper - dom.lower))
            else:
                values.append(min(int(u * dom.cardinality), dom.cardinality - 1))
        return tuple(values)

    def to_dict(self) -> dict:
        return {"dims": [dom.to_dict() for dom in self.dims]}

    @classmethod
    def from_dict(cls, data: dict) -> "SearchSpace":
        return cls(tuple(ParamDomain.from_dict(d) for d in data["dims"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SearchSpace":
        return cls.from_dict(json.loads(text))
