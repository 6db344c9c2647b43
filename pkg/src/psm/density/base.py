"""Shared density types: variables, intervals, the Density interface,
and the empty density for variable-free nodes."""

from __future__ import annotations

import math
from dataclasses import dataclass

from psm.errors import EmptyDensityError, KindMismatch

CONTINUOUS_KINDS = ("int", "float")
CATEGORICAL_KINDS = ("bool", "string")


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # "int" | "float" | "bool" | "string"


@dataclass(frozen=True)
class Interval:
    lo: float = -math.inf
    hi: float = math.inf
    lo_strict: bool = True
    hi_strict: bool = False

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise KindMismatch(f"empty interval ({self.lo}, {self.hi})")

    def contains(self, x) -> bool:
        above = x > self.lo if self.lo_strict else x >= self.lo
        below = x < self.hi if self.hi_strict else x <= self.hi
        return above and below

    def __str__(self) -> str:
        return f"({self.lo}, {self.hi})"


class Density:
    """Fitted distribution over named variables.

    Implementations: CategoricalDensity (joint table with out-of-
    vocabulary mass), MixtureDensity (Gaussian mixture over embedded
    continuous space), EmptyDensity.  All are immutable after fitting.
    """

    variables: tuple[Variable, ...]

    @property
    def family(self) -> str:
        raise NotImplementedError

    @property
    def is_empty(self) -> bool:
        return not self.variables

    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def var(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KindMismatch(f"density has no variable {name!r}")

    # -- core operations --

    def log_density(self, row: dict) -> float:
        raise NotImplementedError

    def sample(self, rng, n: int) -> list[dict]:
        raise NotImplementedError

    def marginal(self, names) -> "Density":
        raise NotImplementedError

    def condition(self, constraints: dict) -> "Density":
        raise NotImplementedError

    def interval_probability(self, name: str, interval: Interval) -> float:
        raise NotImplementedError

    def mean(self, name: str) -> float:
        raise NotImplementedError

    def mode_row(self) -> dict:
        """A highest-density representative point (approximate)."""
        raise NotImplementedError

    def to_param_dict(self) -> dict:
        raise NotImplementedError


class EmptyDensity(Density):
    """Distribution of a node with no random variables.

    Log density is undefined; sampling yields empty rows so callers can
    still count draws.
    """

    def __init__(self, sample_count: int = 0):
        self.variables = ()
        self.sample_count = sample_count

    @property
    def family(self) -> str:
        return "empty"

    def log_density(self, row: dict) -> float:
        raise EmptyDensityError("log density is undefined for an empty density")

    def sample(self, rng, n: int) -> list[dict]:
        return [{} for _ in range(n)]

    def marginal(self, names) -> "EmptyDensity":
        names = tuple(names)
        if names:
            raise KindMismatch(f"empty density has no variables {names!r}")
        return self

    def condition(self, constraints: dict) -> "EmptyDensity":
        if constraints:
            raise KindMismatch("cannot condition an empty density")
        return self

    def interval_probability(self, name, interval) -> float:
        raise EmptyDensityError("empty density has no variables")

    def mean(self, name) -> float:
        raise EmptyDensityError("empty density has no variables")

    def mode_row(self) -> dict:
        return {}

    def to_param_dict(self) -> dict:
        return {"family": "empty", "sample_count": self.sample_count}


def split_constraints(constraints: dict) -> tuple[dict, dict]:
    """Split a constraint map into point constraints and intervals."""
    points, intervals = {}, {}
    for name, c in constraints.items():
        if isinstance(c, Interval):
            intervals[name] = c
        else:
            points[name] = c
    return points, intervals
