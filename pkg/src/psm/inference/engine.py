"""Query execution over a fitted model network."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from psm.density import CategoricalDensity, quantile_score
from psm.density.base import Density
from psm.density.mixture import MixtureDensity
from psm.errors import UnfittedNode, UnknownNode, UnknownVariable
from psm.inference.query import Query
from psm.minilang.rng import SplitRng, stream_id
from psm.network import ModelNetwork, ModelNode

HISTOGRAM_BINS = 256
_DIST_DRAWS = 16384


@dataclass
class QueryResult:
    kind: str
    node: str
    payload: dict
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "node": self.node,
            **self.payload,
            "provenance": self.provenance,
        }


def resolve_ref(network: ModelNetwork, ref: str) -> tuple[str, str | None]:
    """Resolve a dotted reference to (node id, variable or None).

    A variable reading wins over a whole-node reading, and the longest
    node-id prefix wins among variable readings: `Person.weight`
    addresses variable `weight` on the type node `Person` (the property
    node remains reachable as `Person.weight.weight`).  A reference
    that names a node exactly targets the whole node.
    """
    parts = ref.split(".")
    for cut in range(len(parts) - 1, 0, -1):
        node_id = ".".join(parts[:cut])
        node = network.nodes.get(node_id)
        if node is None:
            continue
        var = ".".join(parts[cut:])
        if any(v.name == var for v in node.variables):
            return node_id, var
    if ref in network.nodes:
        return ref, None
    # report the most specific failure
    for cut in range(len(parts) - 1, 0, -1):
        node_id = ".".join(parts[:cut])
        if node_id in network.nodes:
            raise UnknownVariable(
                f"node {node_id!r} has no variable {'.'.join(parts[cut:])!r}"
            )
    raise UnknownNode(f"no node matches reference {ref!r}")


def _resolve_query(network: ModelNetwork, q: Query) -> tuple[ModelNode, list[str], dict]:
    refs: list[str] = list(q.targets)
    refs.extend(q.constraints.keys())
    if q.target_interval is not None and q.target_interval[0] not in refs:
        refs.append(q.target_interval[0])
    if not refs:
        raise UnknownVariable("query names no variables or nodes")
    node_ids = set()
    resolved: dict[str, str | None] = {}
    for ref in refs:
        node_id, var = resolve_ref(network, ref)
        node_ids.add(node_id)
        resolved[ref] = var
    if len(node_ids) > 1:
        raise UnknownVariable(
            f"query mixes variables from different nodes: {sorted(node_ids)}; "
            "queries are scoped to one node (use simulation for cross-node flows)"
        )
    node = network.node(node_ids.pop())
    targets = []
    for ref in q.targets:
        var = resolved[ref]
        if var is None:
            targets.extend(v.name for v in node.variables)
        else:
            targets.append(var)
    constraints = {resolved[ref]: c for ref, c in q.constraints.items()}
    if None in constraints:
        raise UnknownVariable("constraints must name a variable, not a whole node")
    return node, targets, constraints


def _check_fitted(node: ModelNode, q: Query) -> Density:
    if node.density is None:
        raise UnfittedNode(f"node {node.id!r} has no fitted density")
    if node.low_confidence and not q.allow_low_confidence:
        raise UnfittedNode(
            f"node {node.id!r} is low-confidence ({node.sample_count} rows); "
            "set allow_low_confidence to query it anyway"
        )
    return node.density


def continuous_summary(values: np.ndarray, edges: np.ndarray | None = None) -> dict:
    if edges is None:
        lo, hi = float(values.min()), float(values.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, HISTOGRAM_BINS + 1)
    counts, _ = np.histogram(values, bins=edges, density=True)
    q = np.quantile(values, [0.05, 0.25, 0.5, 0.75, 0.95])
    return {
        "histogram": {
            "edges": [float(e) for e in edges],
            "density": [float(c) for c in counts],
        },
        "mean": float(values.mean()),
        "std": float(values.std()),
        "quantiles": {
            "q05": float(q[0]), "q25": float(q[1]), "median": float(q[2]),
            "q75": float(q[3]), "q95": float(q[4]),
        },
        "n": int(values.size),
    }


def _distribution_payload(density: Density, targets: list[str], rng: SplitRng) -> dict:
    marg = density.marginal(tuple(targets))
    draws = marg.sample(rng, _DIST_DRAWS)
    out: dict = {}
    for name in targets:
        var = marg.var(name)
        if var.kind in ("bool", "string") or (
            isinstance(marg, CategoricalDensity)
        ):
            oov = 0.0
            if isinstance(marg, CategoricalDensity):
                probs = marg.value_probabilities(name)
                oov = marg.oov_mass
            elif isinstance(marg, MixtureDensity):
                probs = {
                    k[0]: v for k, v in marg.categorical_marginal(name).probs.items()
                }
            total = sum(probs.values()) or 1.0
            out[name] = {
                "values": {
                    str(k): float(v / total)
                    for k, v in sorted(probs.items(), key=lambda kv: repr(kv[0]))
                },
                "oov_mass": float(oov),
            }
        else:
            values = np.array([r[name] for r in draws], dtype=float)
            summary = continuous_summary(values)
            if isinstance(marg, MixtureDensity):
                summary["mean"] = float(marg.mean(name))  # analytic when available
            out[name] = summary
    return {"distributions": out}


def run(network: ModelNetwork, q: Query) -> QueryResult:
    """Execute one query; deterministic given q.seed."""
    node, targets, constraints = _resolve_query(network, q)
    density = _check_fitted(node, q)
    rng = SplitRng(q.seed, stream_id("query", node.id, tuple(sorted(constraints)), tuple(targets)))
    provenance = {
        "node": node.id,
        "node_kind": node.kind,
        "sample_count": node.sample_count,
        "low_confidence": node.low_confidence,
        "seed": q.seed,
        "query": q.canonical(),
    }

    if q.kind == "probability":
        ref, interval = q.target_interval
        _, var = resolve_ref(network, ref)
        conditioned = density.condition(constraints) if constraints else density
        p = conditioned.interval_probability(var, interval)
        return QueryResult("probability", node.id, {"probability": float(p)}, provenance)

    if q.kind == "distribution":
        conditioned = density.condition(constraints) if constraints else density
        payload = _distribution_payload(conditioned, targets, rng)
        return QueryResult("distribution", node.id, payload, provenance)

    if q.kind == "sample":
        conditioned = density.condition(constraints) if constraints else density
        if set(targets) != set(conditioned.variable_names()):
            conditioned = conditioned.marginal(tuple(targets))
        rows = conditioned.sample(rng, q.n)
        return QueryResult("sample", node.id, {"rows": rows, "n": q.n}, provenance)

    if q.kind == "score":
        score = quantile_score(density, constraints)
        return QueryResult(
            "score", node.id,
            {"score": float(score), "point": constraints},
            provenance,
        )

    raise UnknownVariable(f"unsupported query kind {q.kind!r}")


def fitted_curve(node: ModelNode, name: str) -> dict:
    """Observation histogram and fitted marginal density sampled at the
    same 256 bin centers (the node inspection view)."""
    summary = node.summaries.get(name)
    if summary is None:
        raise UnknownVariable(f"node {node.id!r} has no variable {name!r}")
    if summary.value_counts:
        total = sum(summary.value_counts.values()) or 1
        observed = {str(k): v / total for k, v in sorted(summary.value_counts.items(), key=lambda kv: repr(kv[0]))}
        fitted = {}
        if node.density is not None and not node.density.is_empty:
            marg = node.density.marginal((name,))
            if isinstance(marg, CategoricalDensity):
                fitted = {str(k): float(v) for k, v in sorted(marg.value_probabilities(name).items(), key=lambda kv: repr(kv[0]))}
            elif isinstance(marg, MixtureDensity):
                fitted = {
                    str(k[0]): float(v)
                    for k, v in sorted(marg.categorical_marginal(name).probs.items(), key=lambda kv: repr(kv[0]))
                }
        return {"kind": "categorical", "observed": observed, "fitted": fitted}
    edges = np.asarray(summary.bin_edges, dtype=float)
    counts = np.asarray(summary.bin_counts, dtype=float)
    width = np.diff(edges)
    total = counts.sum()
    observed_density = counts / (total * width) if total > 0 else counts
    centers = 0.5 * (edges[:-1] + edges[1:])
    fitted_vals = []
    if node.density is not None and not node.density.is_empty:
        marg = node.density.marginal((name,))
        for c in centers:
            try:
                fitted_vals.append(float(math.exp(marg.log_density({name: float(c)}))))
            except (ValueError, OverflowError):
                fitted_vals.append(0.0)
    return {
        "kind": "continuous",
        "edges": [float(e) for e in edges],
        "centers": [float(c) for c in centers],
        "observed_density": [float(v) for v in observed_density],
        "fitted_density": fitted_vals,
        "summary": {
            "count": summary.count, "min": summary.minimum, "max": summary.maximum,
            "mean": summary.mean, "std": summary.std,
            "q25": summary.q25, "median": summary.median, "q75": summary.q75,
        },
    }
