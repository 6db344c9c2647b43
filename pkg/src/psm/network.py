"""The probabilistic model network: one node per in-universe property,
type, and executable, with conditioning edges mirroring the static
structure, plus dataset assembly metadata and fitting orchestration.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from psm.density import Density, EmptyDensity, FitConfig, Variable, fit as fit_density
from psm.density.serialize import density_from_dict, density_to_dict
from psm.errors import SchemaMismatch, UnfittedNode, UnknownNode
from psm.structure import (
    StaticModel,
    flatten_exec_variables,
    flatten_type_variables,
)

HISTOGRAM_BINS = 256


@dataclass
class VariableSummary:
    """Per-variable observation summary captured at fit time; feeds the
    node view (histogram plus fitted overlay) and the test generator's
    bounding box."""

    name: str
    kind: str
    count: int = 0
    minimum: float | None = None
    maximum: float | None = None
    mean: float | None = None
    std: float | None = None
    q25: float | None = None
    median: float | None = None
    q75: float | None = None
    bin_edges: list = field(default_factory=list)
    bin_counts: list = field(default_factory=list)
    value_counts: dict = field(default_factory=dict)  # categorical only

    def to_dict(self) -> dict:
        return {
            "name": self.name, "kind": self.kind, "count": self.count,
            "min": self.minimum, "max": self.maximum, "mean": self.mean,
            "std": self.std, "q25": self.q25, "median": self.median,
            "q75": self.q75, "bin_edges": self.bin_edges,
            "bin_counts": self.bin_counts,
            "value_counts": {repr(k): v for k, v in self.value_counts.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VariableSummary":
        import ast as _ast

        return cls(
            name=d["name"], kind=d["kind"], count=d["count"],
            minimum=d["min"], maximum=d["max"], mean=d["mean"], std=d["std"],
            q25=d["q25"], median=d["median"], q75=d["q75"],
            bin_edges=list(d["bin_edges"]), bin_counts=list(d["bin_counts"]),
            value_counts={_ast.literal_eval(k): v for k, v in d["value_counts"].items()},
        )


def summarize_variable(name: str, kind: str, values: list) -> VariableSummary:
    s = VariableSummary(name=name, kind=kind, count=len(values))
    if not values:
        return s
    if kind in ("bool", "string"):
        for v in values:
            s.value_counts[v] = s.value_counts.get(v, 0) + 1
        return s
    arr = np.asarray(values, dtype=float)
    s.minimum = float(arr.min())
    s.maximum = float(arr.max())
    s.mean = float(arr.mean())
    s.std = float(arr.std())
    q = np.quantile(arr, [0.25, 0.5, 0.75])
    s.q25, s.median, s.q75 = float(q[0]), float(q[1]), float(q[2])
    lo, hi = s.minimum, s.maximum
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(arr, bins=HISTOGRAM_BINS, range=(lo, hi))
    s.bin_edges = [float(e) for e in edges]
    s.bin_counts = [int(c) for c in counts]
    return s


@dataclass
class ModelNode:
    id: str
    kind: str  # "property" | "type" | "executable"
    variables: tuple[Variable, ...]
    density: Density | None = None
    sample_count: int = 0
    low_confidence: bool = False
    summaries: dict[str, VariableSummary] = field(default_factory=dict)
    fit_info: dict = field(default_factory=dict)

    @property
    def fitted(self) -> bool:
        return self.density is not None

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise UnknownNode(f"node {self.id!r} has no variable {name!r}")


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    kind: str  # "param" | "read" | "call" | "member"
    site: int | None = None
    latent: bool = False  # endpoint outside the modeling universe


@dataclass
class ModelNetwork:
    nodes: dict[str, ModelNode] = field(default_factory=dict)
    edges: list[Edge] = field(default_factory=list)

    def node(self, node_id: str) -> ModelNode:
        if node_id not in self.nodes:
            raise UnknownNode(f"unknown node {node_id!r}")
        return self.nodes[node_id]

    def fitted_node(self, node_id: str) -> ModelNode:
        node = self.node(node_id)
        if not node.fitted:
            raise UnfittedNode(f"node {node_id!r} has no fitted density")
        return node


def build(model: StaticModel) -> ModelNetwork:
    """Mirror the static model: a bijection between in-universe elements
    (types, properties, executables) and nodes."""
    network = ModelNetwork()
    for tid, tinfo in sorted(model.types.items()):
        if not model.in_universe(tid):
            continue
        type_vars = tuple(
            Variable(p.name, p.kind) for p in flatten_type_variables(model, tid)
        )
        network.nodes[tid] = ModelNode(id=tid, kind="type", variables=type_vars)
        for prop in tinfo.properties:
            pvars = (Variable(prop.name, prop.kind),) if prop.modelable else ()
            network.nodes[prop.id] = ModelNode(id=prop.id, kind="property", variables=pvars)
            network.edges.append(Edge(src=prop.id, dst=tid, kind="member"))
    for eid, einfo in sorted(model.executables.items()):
        if not model.in_universe(einfo.owner):
            continue
        evars = tuple(
            Variable(p.name, p.kind) for p in flatten_exec_variables(model, eid)
        )
        network.nodes[eid] = ModelNode(id=eid, kind="executable", variables=evars)
        for pname, ptype in einfo.params:
            if ptype in model.types:
                network.edges.append(
                    Edge(src=eid, dst=ptype, kind="param",
                         latent=not model.in_universe(ptype))
                )
        props = model.property_map()
        for prop_id in einfo.reads:
            latent = prop_id not in props or not model.in_universe(props[prop_id].owner)
            network.edges.append(Edge(src=eid, dst=prop_id, kind="read", latent=latent))
        for site in einfo.invokes:
            callee_owner = site.callee.split(".")[0]
            latent = site.external or not model.in_universe(callee_owner)
            network.edges.append(
                Edge(src=eid, dst=site.callee, kind="call", site=site.site_index, latent=latent)
            )
    return network


def _node_seed(seed: int, node_id: str) -> int:
    digest = hashlib.sha256(f"{seed}:{node_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class FitReport:
    entries: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"nodes": self.entries}

    def render(self) -> str:
        lines = [
            f"{'node':40s} {'rows':>7s} {'family':12s} {'K':>3s} {'conv':>5s} {'flags'}"
        ]
        for e in self.entries:
            flags = []
            if e["low_confidence"]:
                flags.append("low-confidence")
            flags.extend(e.get("warnings", []))
            lines.append(
                f"{e['node']:40s} {e['rows']:7d} {e['family']:12s} "
                f"{str(e.get('k', '-')):>3s} {str(e.get('converged', '-')):>5s} "
                f"{'; '.join(flags)}"
            )
        return "\n".join(lines)


def fit_all(
    network: ModelNetwork,
    rows_by_node: dict[str, list[dict]],
    config: FitConfig | None = None,
) -> FitReport:
    """Fit every node's density from its assembled rows, in node-id order.

    Nodes with no rows stay unfitted and are flagged; per-node seeds
    derive from (config.seed, node id) so results are reproducible and
    independent of fitting order.
    """
    config = config or FitConfig()
    report = FitReport()
    for node_id in sorted(network.nodes):
        node = network.nodes[node_id]
        rows = rows_by_node.get(node_id, [])
        unknown = set()
        for row in rows:
            unknown.update(set(row) - {v.name for v in node.variables})
        if unknown:
            raise SchemaMismatch(
                f"rows for {node_id!r} reference unknown variables {sorted(unknown)}"
            )
        node.sample_count = len(rows)
        node.summaries = {
            v.name: summarize_variable(
                v.name, v.kind, [r[v.name] for r in rows if r.get(v.name) is not None]
            )
            for v in node.variables
        }
        entry = {
            "node": node_id,
            "kind": node.kind,
            "rows": len(rows),
            "family": None,
            "low_confidence": False,
            "warnings": [],
        }
        if not node.variables:
            node.density = EmptyDensity(sample_count=len(rows))
            entry["family"] = "empty"
        elif not rows:
            node.density = None
            node.low_confidence = True
            entry["family"] = "unfitted"
            entry["low_confidence"] = True
            entry["warnings"].append("no observations")
        else:
            node_config = FitConfig(
                kmax=config.kmax, tol=config.tol, max_iter=config.max_iter,
                restarts=config.restarts, reg_eps=config.reg_eps,
                categorical_max_values=config.categorical_max_values,
                alpha=config.alpha, min_samples=config.min_samples,
                seed=_node_seed(config.seed, node_id),
                full_cov_max_dim=config.full_cov_max_dim,
                lowrank_rank=config.lowrank_rank,
            )
            density = fit_density(node.variables, rows, node_config)
            node.density = density
            node.low_confidence = bool(getattr(density, "low_confidence", False))
            entry["family"] = density.family
            entry["low_confidence"] = node.low_confidence
            meta = getattr(density, "meta", None)
            if meta is not None:
                entry["k"] = meta.selected_k
                entry["converged"] = meta.converged
                entry["warnings"].extend(meta.warnings)
                entry["bic_trace"] = [list(t) for t in meta.bic_trace]
        node.fit_info = entry
        report.entries.append(entry)
    return report


def downstream(network: ModelNetwork, node_id: str) -> list[tuple[str, bool]]:
    """Nodes reachable in invocation direction, ordered by call depth.

    From an executable: its callees, transitively.  From a property or
    type: the executables reading it or taking it as a parameter, then
    their callees.  Each item is (node id, cyclic) where cyclic marks a
    truncated revisit.
    """
    network.node(node_id)
    start = network.nodes[node_id]
    roots: list[str] = []
    if start.kind == "executable":
        roots = [node_id]
    else:
        prop_ids = {node_id}
        if start.kind == "type":
            prop_ids |= {
                e.src for e in network.edges if e.kind == "member" and e.dst == node_id
            }
        for edge in network.edges:
            if edge.kind == "read" and edge.dst in prop_ids:
                roots.append(edge.src)
            if edge.kind == "param" and edge.dst == node_id:
                roots.append(edge.src)
        roots = sorted(set(roots))
    calls: dict[str, list[str]] = {}
    for edge in network.edges:
        if edge.kind == "call" and not edge.latent:
            calls.setdefault(edge.src, []).append(edge.dst)
    result: list[tuple[str, bool]] = []
    seen: set[str] = set()
    frontier = list(roots)
    if start.kind == "executable":
        seen.add(node_id)
        frontier = calls.get(node_id, [])
    while frontier:
        next_frontier: list[str] = []
        for nid in frontier:
            cyclic = nid in seen
            result.append((nid, cyclic))
            if cyclic:
                continue
            seen.add(nid)
            next_frontier.extend(calls.get(nid, []))
        frontier = next_frontier
    return result


# --- serialization ---


def network_to_dict(network: ModelNetwork) -> dict:
    return {
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind,
                "variables": [{"name": v.name, "kind": v.kind} for v in n.variables],
                "density": density_to_dict(n.density) if n.density is not None else None,
                "sample_count": n.sample_count,
                "low_confidence": n.low_confidence,
                "summaries": {k: s.to_dict() for k, s in sorted(n.summaries.items())},
                "fit_info": n.fit_info,
            }
            for _, n in sorted(network.nodes.items())
        ],
        "edges": [
            {
                "src": e.src, "dst": e.dst, "kind": e.kind,
                "site": e.site, "latent": e.latent,
            }
            for e in network.edges
        ],
    }


def network_from_dict(d: dict) -> ModelNetwork:
    network = ModelNetwork()
    for nd in d["nodes"]:
        node = ModelNode(
            id=nd["id"],
            kind=nd["kind"],
            variables=tuple(Variable(v["name"], v["kind"]) for v in nd["variables"]),
            density=density_from_dict(nd["density"]) if nd["density"] is not None else None,
            sample_count=nd["sample_count"],
            low_confidence=nd["low_confidence"],
            summaries={
                k: VariableSummary.from_dict(s) for k, s in nd["summaries"].items()
            },
            fit_info=nd.get("fit_info", {}),
        )
        network.nodes[node.id] = node
    for ed in d["edges"]:
        network.edges.append(
            Edge(src=ed["src"], dst=ed["dst"], kind=ed["kind"],
                 site=ed.get("site"), latent=ed.get("latent", False))
        )
    return network
