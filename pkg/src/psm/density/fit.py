"""Fit dispatch: choose and fit the right density family for a dataset.

Kind dispatch: bool/string columns are categorical; int columns are
categorical while they stay within the distinct-value threshold; float
columns are always continuous.  All-categorical data gets the smoothed
joint table.  Anything else gets a Gaussian mixture over the embedded
space, with one-hot embedded categorical columns.  Below `min_samples`
rows the result is a flagged low-confidence empirical density: every
row becomes a kernel with a Silverman-rule bandwidth, which is just a
mixture with K = n, so the whole query surface keeps working.
"""

from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np

from psm.density import em
from psm.density.base import Density, EmptyDensity, Variable
from psm.density.categorical import CategoricalDensity
from psm.density.mixture import EmbedEntry, FitMeta, MixtureDensity
from psm.errors import NoData

POINT_MASS_EPS = 1e-9  # jitter scale for zero-variance columns


@dataclass
class FitConfig:
    kmax: int = 8
    tol: float = 1e-6  # relative log-likelihood exit criterion
    max_iter: int = 200
    restarts: int = 3
    reg_eps: float = 1e-6  # times data variance (1 after standardization)
    categorical_max_values: int = 32
    alpha: float = 1.0  # categorical smoothing
    min_samples: int = 30
    seed: int = 0
    full_cov_max_dim: int = 8
    lowrank_rank: int = 4

    def __post_init__(self):
        if self.kmax < 1:
            raise ValueError("kmax must be >= 1")
        for name in ("tol", "max_iter", "restarts", "reg_eps", "alpha", "min_samples"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class ColumnSpec:
    variable: Variable
    treat: str  # "categorical" | "continuous"
    vocab: tuple = ()


def _classify_columns(variables, columns, config) -> list[ColumnSpec]:
    specs = []
    for var, col in zip(variables, columns):
        observed = [v for v in col if v is not None]
        if var.kind in ("bool", "string"):
            vocab = tuple(sorted(set(observed), key=repr))
            specs.append(ColumnSpec(var, "categorical", vocab))
        elif var.kind == "int":
            distinct = set(observed)
            if len(distinct) <= config.categorical_max_values and all(
                float(v).is_integer() for v in distinct
            ):
                specs.append(ColumnSpec(var, "categorical", tuple(sorted(distinct))))
            else:
                specs.append(ColumnSpec(var, "continuous"))
        else:
            specs.append(ColumnSpec(var, "continuous"))
    return specs


def fit(variables, rows: list[dict], config: FitConfig | None = None) -> Density:
    """Fit a density for named variables from observation rows.

    Rows are dicts; absent keys are missing cells.  Returns an
    EmptyDensity for an empty variable set (row count preserved).
    """
    config = config or FitConfig()
    variables = tuple(
        v if isinstance(v, Variable) else Variable(v[0], v[1]) for v in variables
    )
    if not variables:
        return EmptyDensity(sample_count=len(rows))
    if not rows:
        raise NoData(f"no observations for variables {[v.name for v in variables]}")

    columns = [[row.get(v.name) for row in rows] for v in variables]
    specs = _classify_columns(variables, columns, config)

    if all(s.treat == "categorical" for s in specs):
        complete = [
            tuple(row.get(v.name) for v in variables)
            for row in rows
            if all(row.get(v.name) is not None for v in variables)
        ]
        if not complete:
            raise NoData("no complete categorical observations")
        low_conf = len(complete) < config.min_samples
        return CategoricalDensity.fit(variables, complete, config.alpha, low_conf)

    return _fit_mixture(variables, rows, specs, config)


def _embed(variables, rows, specs):
    """Embedded design matrix with NaN missing cells, plus entries."""
    entries: list[EmbedEntry] = []
    dim = 0
    for spec in specs:
        if spec.treat == "categorical":
            dims = tuple(range(dim, dim + len(spec.vocab)))
            entries.append(EmbedEntry(spec.variable.name, spec.variable.kind, dims, spec.vocab))
            dim += len(spec.vocab)
        else:
            entries.append(EmbedEntry(spec.variable.name, spec.variable.kind, (dim,), None))
            dim += 1
    X = np.full((len(rows), dim), np.nan)
    for i, row in enumerate(rows):
        for entry in entries:
            value = row.get(entry.name)
            if value is None:
                continue
            if entry.vocab is not None:
                for d_, v in zip(entry.dims, entry.vocab):
                    X[i, d_] = 1.0 if value == v else 0.0
            else:
                X[i, entry.dims[0]] = float(value)
    return X, tuple(entries)


def _fit_mixture(variables, rows, specs, config) -> MixtureDensity:
    X, entries = _embed(variables, rows, specs)
    n, D = X.shape
    warnings: list[str] = []

    keep = ~np.all(np.isnan(X), axis=1)
    if not keep.all():
        warnings.append(f"dropped {int((~keep).sum())} rows with no observed cells")
        X = X[keep]
        n = X.shape[0]
    if n == 0:
        raise NoData("no rows with observed cells")

    shift = np.nanmean(X, axis=0)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    with np.errstate(invalid="ignore"):
        scale = np.nanstd(X, axis=0)
    scale = np.where(np.isfinite(scale), scale, 0.0)
    degenerate = scale <= 0.0
    if degenerate.any():
        # zero-variance columns collapse to a point mass with tiny jitter
        eps = POINT_MASS_EPS * np.maximum(1.0, np.abs(shift))
        scale = np.where(degenerate, eps, scale)
        names = sorted(
            {e.name for e in entries if any(degenerate[list(e.dims)])}
        )
        warnings.append(f"zero-variance columns collapsed to point mass: {names}")
    Z = (X - shift) / scale

    structure = "full" if D <= config.full_cov_max_dim else "lowrank"
    floor = max(config.reg_eps, 1e-8)

    if n < config.min_samples:
        weights, means, covs = _kde_params(Z, n, D, floor)
        meta = FitMeta(
            sample_count=n,
            selected_k=len(weights),
            bic_trace=[],
            ll_history=[],
            converged=True,
            cov_structure="kde",
            low_confidence=True,
            warnings=warnings,
        )
        return MixtureDensity(entries, shift, scale, weights, means, covs, (), meta)

    result, best_k, trace = em.select_mixture(
        Z,
        kmax=config.kmax,
        restarts=config.restarts,
        tol=config.tol,
        max_iter=config.max_iter,
        floor=floor,
        structure=structure,
        rank=config.lowrank_rank,
        seed=config.seed,
    )
    meta = FitMeta(
        sample_count=n,
        selected_k=best_k,
        bic_trace=trace,
        ll_history=result.ll_history,
        converged=result.converged,
        cov_structure=structure,
        low_confidence=False,
        warnings=warnings,
    )
    return MixtureDensity(
        entries, shift, scale, result.weights, result.means, result.covs, (), meta
    )


def _kde_params(Z, n, D, floor):
    """Every observed row becomes one kernel (complete-case mean imputation
    for missing cells); Silverman-rule bandwidth on standardized data."""
    bw = max(0.9 * n ** (-1.0 / 5.0), math.sqrt(floor))
    means = np.where(np.isnan(Z), 0.0, Z)
    covs = np.tile((bw * bw) * np.eye(D), (n, 1, 1))
    weights = np.full(n, 1.0 / n)
    return weights, means, covs
