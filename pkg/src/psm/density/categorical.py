"""Smoothed joint categorical density.

Probabilities use additive smoothing with one reserved out-of-vocabulary
bucket: an observed value tuple v gets (count(v) + alpha) / (N + alpha *
(V + 1)) and the remaining alpha / (N + alpha * (V + 1)) is the OOV
mass, so any unseen tuple scores a small but finite probability.
Sampling draws from the observed tuples renormalized without the OOV
bucket (sampling cannot invent values).
"""

from __future__ import annotations

import math

import numpy as np

from psm.density.base import Density, Interval, Variable
from psm.errors import KindMismatch, ZeroProbabilityCondition


class CategoricalDensity(Density):
    def __init__(
        self,
        variables: tuple[Variable, ...],
        probs: dict[tuple, float],
        oov_mass: float,
        alpha: float,
        sample_count: int,
        low_confidence: bool = False,
    ):
        assert variables, "use EmptyDensity for zero variables"
        self.variables = tuple(variables)
        self.probs = dict(probs)
        self.oov_mass = float(oov_mass)
        self.alpha = float(alpha)
        self.sample_count = int(sample_count)
        self.low_confidence = low_confidence
        self._tuples = sorted(self.probs.keys(), key=repr)
        self._weights = np.array([self.probs[t] for t in self._tuples])

    @property
    def family(self) -> str:
        return "categorical"

    @classmethod
    def fit(cls, variables, rows: list[tuple], alpha: float, low_confidence: bool = False):
        counts: dict[tuple, int] = {}
        for row in rows:
            counts[row] = counts.get(row, 0) + 1
        n = len(rows)
        v = len(counts)
        denom = n + alpha * (v + 1)
        probs = {value: (c + alpha) / denom for value, c in counts.items()}
        oov = alpha / denom
        return cls(tuple(variables), probs, oov, alpha, n, low_confidence)

    # -- operations --

    def _as_tuple(self, row: dict) -> tuple:
        try:
            return tuple(row[v.name] for v in self.variables)
        except KeyError as exc:
            raise KindMismatch(f"row is missing variable {exc.args[0]!r}")

    def log_density(self, row: dict) -> float:
        p = self.probs.get(self._as_tuple(row))
        if p is None:
            p = self.oov_mass
        return math.log(p)

    def sample(self, rng, n: int) -> list[dict]:
        if n == 0:
            return []
        gen = rng.generator if hasattr(rng, "generator") else rng
        total = self._weights.sum()
        idx = gen.choice(len(self._tuples), size=n, p=self._weights / total)
        names = self.variable_names()
        return [dict(zip(names, self._tuples[i])) for i in idx]

    def marginal(self, names) -> Density:
        names = tuple(names)
        keep = [i for i, v in enumerate(self.variables) if v.name in names]
        if len(keep) != len(names):
            missing = set(names) - set(self.variable_names())
            raise KindMismatch(f"unknown variables {sorted(missing)!r}")
        if len(keep) == len(self.variables):
            return self
        merged: dict[tuple, float] = {}
        for value, p in self.probs.items():
            sub = tuple(value[i] for i in keep)
            merged[sub] = merged.get(sub, 0.0) + p
        return CategoricalDensity(
            tuple(self.variables[i] for i in keep),
            merged,
            self.oov_mass,
            self.alpha,
            self.sample_count,
            self.low_confidence,
        )

    def condition(self, constraints: dict) -> Density:
        from psm.density.base import split_constraints

        if not constraints:
            return self
        points, intervals = split_constraints(constraints)
        for name in list(points) + list(intervals):
            self.var(name)
        fixed = {i: points[v.name] for i, v in enumerate(self.variables) if v.name in points}
        ranged = {
            i: intervals[v.name] for i, v in enumerate(self.variables) if v.name in intervals
        }
        for i in ranged:
            if self.variables[i].kind not in ("int", "float"):
                raise KindMismatch(
                    f"interval constraint on unordered variable {self.variables[i].name!r}"
                )
        keep = [
            i for i in range(len(self.variables)) if i not in fixed and i not in ranged
        ]
        matched: dict[tuple, float] = {}
        for value, p in self.probs.items():
            if any(value[i] != want for i, want in fixed.items()):
                continue
            if any(not iv.contains(value[i]) for i, iv in ranged.items()):
                continue
            sub = tuple(value[i] for i in keep)
            matched[sub] = matched.get(sub, 0.0) + p
        total = sum(matched.values())
        if total < 1e-12:
            raise ZeroProbabilityCondition(f"constraints {constraints!r} have ~zero mass")
        if not keep:
            raise KindMismatch("conditioning removed every variable")
        # The OOV bucket survives conditioning with its share preserved.
        share = self.oov_mass / (self.oov_mass + total)
        scale = (1.0 - share) / total
        probs = {value: p * scale for value, p in matched.items()}
        return CategoricalDensity(
            tuple(self.variables[i] for i in keep),
            probs,
            share,
            self.alpha,
            self.sample_count,
            self.low_confidence,
        )

    def interval_probability(self, name: str, interval: Interval) -> float:
        var = self.var(name)
        if var.kind not in ("int", "float"):
            raise KindMismatch(f"variable {name!r} has no order")
        i = self.variable_names().index(name)
        return float(sum(p for value, p in self.probs.items() if interval.contains(value[i])))

    def mean(self, name: str) -> float:
        var = self.var(name)
        if var.kind not in ("int", "float"):
            raise KindMismatch(f"variable {name!r} is not numeric")
        i = self.variable_names().index(name)
        total = sum(self.probs.values())
        return float(sum(value[i] * p for value, p in self.probs.items()) / total)

    def mode_row(self) -> dict:
        best = max(self.probs.items(), key=lambda kv: (kv[1], repr(kv[0])))
        return dict(zip(self.variable_names(), best[0]))

    def value_probabilities(self, name: str) -> dict:
        i = self.variable_names().index(name)
        out: dict = {}
        for value, p in self.probs.items():
            out[value[i]] = out.get(value[i], 0.0) + p
        return out

    def to_param_dict(self) -> dict:
        return {
            "family": "categorical",
            "variables": [{"name": v.name, "kind": v.kind} for v in self.variables],
            "entries": [
                {"value": list(t), "prob": float(self.probs[t])} for t in self._tuples
            ],
            "oov_mass": self.oov_mass,
            "alpha": self.alpha,
            "sample_count": self.sample_count,
            "low_confidence": self.low_confidence,
        }

    @classmethod
    def from_param_dict(cls, d: dict) -> "CategoricalDensity":
        variables = tuple(Variable(v["name"], v["kind"]) for v in d["variables"])
        probs = {tuple(e["value"]): e["prob"] for e in d["entries"]}
        return cls(
            variables, probs, d["oov_mass"], d["alpha"], d["sample_count"],
            d.get("low_confidence", False),
        )
