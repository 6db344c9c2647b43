"""Probabilistic execution: sample an entry executable's model and
push the sampled values through the call graph.

Each run samples the entry node's joint (optionally conditioned on
override values or ranges).  For every call site, the callee's model is
point-conditioned on the values it receives, argument by argument,
using the statically resolved argument sources; its remaining
variables, including the return, are then sampled.  Runs whose
conditioning values fall in a zero-probability region are counted and
skipped for that callee.  Recursion truncates at a fixed depth with a
warning.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from psm.density import CategoricalDensity, EmptyDensity
from psm.density.base import Interval
from psm.density.mixture import MixtureDensity
from psm.errors import UnfittedNode, UnknownNode, ZeroProbabilityCondition
from psm.inference.engine import continuous_summary
from psm.minilang.ast import SCALAR_KINDS
from psm.minilang.rng import SplitRng, stream_id
from psm.network import ModelNetwork
from psm.structure import ArgSource, StaticModel, object_param_prefix

MAX_CALL_DEPTH = 16


@dataclass
class SimulationSummary:
    entry: str
    runs: int
    seed: int
    per_node: dict[str, dict] = field(default_factory=dict)  # node -> var -> summary
    rows: dict[str, list[dict]] = field(default_factory=dict)
    zero_probability_runs: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self, include_rows: bool = False) -> dict:
        d = {
            "entry": self.entry,
            "runs": self.runs,
            "seed": self.seed,
            "per_node": self.per_node,
            "zero_probability_runs": self.zero_probability_runs,
            "warnings": self.warnings,
            "row_counts": {k: len(v) for k, v in self.rows.items()},
        }
        if include_rows:
            d["rows"] = self.rows
        return d


def _callee_param_var(callee_info, pname: str, ptype: str, static) -> list[tuple[str, str]]:
    """Callee variable names receiving one parameter: a scalar parameter
    is one cell, an object parameter is its flattened property cells
    (returned as (callee var, type-node var) pairs)."""
    if ptype in SCALAR_KINDS:
        return [(f"param.{pname}", "")]
    prefix = object_param_prefix(static, callee_info, pname, ptype)
    out = []
    for p in static.types[ptype].properties:
        if p.kind != "object":
            out.append((f"{prefix}{p.name}", p.name))
    return out


def _transfer_map(static: StaticModel, caller_id: str, site) -> dict[str, ArgSource]:
    """Callee variable -> caller-side source for one call site."""
    callee_info = static.executables.get(site.callee)
    if callee_info is None:
        return {}
    transfer: dict[str, ArgSource] = {}
    for source, (pname, ptype) in zip(site.arg_sources, callee_info.params):
        if source.kind in ("read", "param", "call") and ptype in SCALAR_KINDS:
            transfer[f"param.{pname}"] = source
        elif source.kind == "const" and ptype in SCALAR_KINDS:
            transfer[f"param.{pname}"] = source
        elif source.kind == "param_object" and ptype not in SCALAR_KINDS:
            # the caller's flattened object-parameter cells feed the
            # callee's flattened cells property by property
            caller_info = static.executables[caller_id]
            caller_ptype = dict(caller_info.params).get(source.name)
            if caller_ptype != ptype:
                continue
            caller_prefix = object_param_prefix(static, caller_info, source.name, ptype)
            for callee_var, prop_name in _callee_param_var(callee_info, pname, ptype, static):
                transfer[callee_var] = ArgSource("read", name=f"{caller_prefix}{prop_name}")
        # unknown sources leave the callee unconditioned on that argument
    return transfer


def _sample_node_conditioned(node, obs: dict[str, list], rng, n: int) -> list[dict | None]:
    density = node.density
    if isinstance(density, EmptyDensity):
        return [{} for _ in range(n)]
    if isinstance(density, MixtureDensity):
        usable = {k: v for k, v in obs.items() if k in density.variable_names()}
        return density.sample_conditional_batch(usable, rng, n)
    if isinstance(density, CategoricalDensity):
        rows: list[dict | None] = []
        for i in range(n):
            point = {
                k: v[i] for k, v in obs.items() if k in density.variable_names()
            }
            try:
                conditioned = density.condition(point) if point else density
                drawn = conditioned.sample(rng, 1)[0]
                drawn.update(point)
                rows.append(drawn)
            except ZeroProbabilityCondition:
                rows.append(None)
        return rows
    return [None] * n


def simulate(
    network: ModelNetwork,
    static: StaticModel,
    entry: str,
    n: int,
    seed: int = 0,
    overrides: dict[str, object] | None = None,
) -> SimulationSummary:
    if entry not in static.executables:
        raise UnknownNode(f"unknown executable {entry!r}")
    entry_node = network.node(entry)
    if entry_node.density is None:
        raise UnfittedNode(f"entry node {entry!r} is not fitted")
    summary = SimulationSummary(entry=entry, runs=n, seed=seed)
    if n == 0:
        return summary

    rng = SplitRng(seed, stream_id("simulate", entry))
    density = entry_node.density
    if overrides:
        for name in overrides:
            entry_node.variable(name)
        density = density.condition(dict(overrides))
    entry_rows_raw = density.sample(rng, n)
    # point overrides drop out of the conditioned density; restore them
    point_overrides = {
        k: v for k, v in (overrides or {}).items() if not isinstance(v, Interval)
    }
    entry_rows: list[dict | None] = []
    for row in entry_rows_raw:
        full = dict(row)
        full.update(point_overrides)
        entry_rows.append(full)
    summary.rows[entry] = [r for r in entry_rows if r is not None]

    queue: list[tuple[str, list[dict | None], int]] = [(entry, entry_rows, 0)]
    while queue:
        caller_id, caller_rows, depth = queue.pop(0)
        if depth >= MAX_CALL_DEPTH:
            summary.warnings.append(
                f"call depth {MAX_CALL_DEPTH} reached at {caller_id!r}; recursion truncated"
            )
            continue
        caller_info = static.executables[caller_id]
        for site in caller_info.invokes:
            callee_id = site.callee
            callee_node = network.nodes.get(callee_id)
            if callee_node is None:
                continue
            if callee_node.density is None:
                summary.warnings.append(f"callee {callee_id!r} unfitted; skipped")
                continue
            transfer = _transfer_map(static, caller_id, site)
            live = [r for r in caller_rows if r is not None]
            if not live:
                continue
            obs: dict[str, list] = {}
            for callee_var, source in transfer.items():
                if source.kind == "const":
                    obs[callee_var] = [source.value] * len(live)
                else:
                    values = [r.get(source.name) for r in live]
                    if any(v is None for v in values):
                        continue  # missing upstream cells: leave unconditioned
                    obs[callee_var] = values
            site_rng = rng.split("site", caller_id, callee_id, site.site_index, depth)
            callee_rows = _sample_node_conditioned(
                callee_node, obs, site_rng, len(live)
            )
            skipped = sum(1 for r in callee_rows if r is None)
            if skipped:
                summary.zero_probability_runs[callee_id] = (
                    summary.zero_probability_runs.get(callee_id, 0) + skipped
                )
            summary.rows.setdefault(callee_id, []).extend(
                r for r in callee_rows if r is not None
            )
            queue.append((callee_id, callee_rows, depth + 1))

    for node_id, rows in summary.rows.items():
        node = network.nodes[node_id]
        per_var: dict[str, dict] = {}
        for var in node.variables:
            values = [r[var.name] for r in rows if var.name in r]
            if not values:
                continue
            if var.kind in ("bool", "string"):
                counts: dict[str, int] = {}
                for v in values:
                    counts[str(v)] = counts.get(str(v), 0) + 1
                total = len(values)
                per_var[var.name] = {
                    "values": {k: c / total for k, c in sorted(counts.items())}
                }
            else:
                per_var[var.name] = continuous_summary(np.asarray(values, dtype=float))
        summary.per_node[node_id] = per_var
    return summary
