"""Density (de)serialization; parameters round-trip bit-exactly via
JSON's shortest-round-trip float encoding."""

from __future__ import annotations

from psm.density.base import Density, EmptyDensity
from psm.density.categorical import CategoricalDensity
from psm.density.mixture import MixtureDensity


def density_to_dict(d: Density) -> dict:
    return d.to_param_dict()


def density_from_dict(d: dict) -> Density:
    family = d.get("family")
    if family == "empty":
        return EmptyDensity(sample_count=d.get("sample_count", 0))
    if family == "categorical":
        return CategoricalDensity.from_param_dict(d)
    if family == "mixture":
        return MixtureDensity.from_param_dict(d)
    raise ValueError(f"unknown density family {family!r}")
