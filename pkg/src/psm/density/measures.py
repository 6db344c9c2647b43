"""Density-level scores: highest-density-region quantile score and
Monte Carlo Jensen-Shannon divergence.

The quantile score of a point is the probability that a draw from the
density has log density at most the point's, estimated from a cached
set of reference draws.  It is a probability in [0, 1] and monotone in
the point's density: the mode scores ~1, far-out points score ~0, which
makes it directly comparable against a detection threshold.
"""

from __future__ import annotations

import math

import numpy as np

from psm.density.base import Density, EmptyDensity
from psm.errors import EmptyDensityError, VariableMismatch
from psm.minilang.rng import SplitRng, stream_id

REFERENCE_DRAWS = 4096
DIVERGENCE_DRAWS = 8192
_LN2 = math.log(2.0)


def _content_stream(density: Density, label: str) -> SplitRng:
    token = density.to_param_dict()
    return SplitRng(0x5C0EE, stream_id(label, repr(token)))


def _reference(density: Density, names: tuple[str, ...], m: int):
    cache = getattr(density, "_score_cache", None)
    if cache is None:
        cache = {}
        try:
            density._score_cache = cache
        except AttributeError:
            pass
    key = (names, m)
    if key not in cache:
        marg = density.marginal(names)
        rng = _content_stream(density, f"score:{names}")
        draws = marg.sample(rng, m)
        dens = np.array([marg.log_density(r) for r in draws])
        cache[key] = (marg, dens)
    return cache[key]


def quantile_score(density: Density, row: dict, m: int = REFERENCE_DRAWS) -> float:
    """P[log p(draw) <= log p(row)] under the density itself."""
    if isinstance(density, EmptyDensity) or not density.variables:
        raise EmptyDensityError("cannot score against an empty density")
    names = tuple(n for n in density.variable_names() if n in row)
    if not names:
        raise VariableMismatch(
            f"row shares no variables with density over {density.variable_names()}"
        )
    marg, ref_dens = _reference(density, names, m)
    point = marg.log_density({k: row[k] for k in names})
    tol = 1e-9 * max(1.0, abs(point))
    return float(np.mean(ref_dens <= point + tol))


def js_divergence(a: Density, b: Density, n: int = DIVERGENCE_DRAWS) -> float:
    """Jensen-Shannon divergence in bits, Monte Carlo estimate.

    Draws are seeded from each density's parameter content, so the
    estimate is symmetric in its arguments and zero for identical
    parameters.
    """
    if isinstance(a, EmptyDensity) and isinstance(b, EmptyDensity):
        return 0.0
    if set(a.variable_names()) != set(b.variable_names()):
        raise VariableMismatch(
            f"variable sets differ: {a.variable_names()} vs {b.variable_names()}"
        )
    names = a.variable_names()
    kinds_a = {v.name: v.kind for v in a.variables}
    kinds_b = {v.name: v.kind for v in b.variables}
    if kinds_a != kinds_b:
        raise VariableMismatch(f"variable kinds differ: {kinds_a} vs {kinds_b}")
    b_aligned = b.marginal(names)

    def half(p: Density, q: Density) -> float:
        rng = _content_stream(p, "js")
        draws = p.sample(rng, n)
        lp = np.array([p.log_density(r) for r in draws])
        lq = np.array([q.log_density(r) for r in draws])
        lm = np.logaddexp(lp, lq) - _LN2
        return float(np.mean(lp - lm)) / _LN2

    js = 0.5 * half(a, b_aligned) + 0.5 * half(b_aligned, a)
    return max(js, 0.0)
