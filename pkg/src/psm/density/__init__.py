"""Nonparametric density estimation: categorical tables, Gaussian
mixtures with BIC-selected order, conditioning, sampling, scoring, and
divergence."""

from psm.density.base import Density, EmptyDensity, Interval, Variable
from psm.density.categorical import CategoricalDensity
from psm.density.fit import FitConfig, fit
from psm.density.measures import js_divergence, quantile_score
from psm.density.mixture import MixtureDensity
from psm.density.serialize import density_from_dict, density_to_dict

__all__ = [
    "Density",
    "EmptyDensity",
    "CategoricalDensity",
    "MixtureDensity",
    "Interval",
    "Variable",
    "FitConfig",
    "fit",
    "quantile_score",
    "js_divergence",
    "density_to_dict",
    "density_from_dict",
]
