"""Integrity and compatibility diffing between fitted networks.

Integrity matches nodes by id across two versions and reports the
Jensen-Shannon divergence of their densities; added, removed, schema-
changed, and unfitted nodes are reported separately.  Compatibility
matches each resolvable call site's argument distribution on the caller
side against the callee's parameter distribution, aligned by position.
Verdict thresholds (bits) are calibration constants, not measurements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from psm.density import CategoricalDensity, js_divergence
from psm.density.base import Density, Variable
from psm.density.mixture import EmbedEntry, MixtureDensity
from psm.errors import NoOverlap
from psm.network import ModelNetwork
from psm.structure import StaticModel

COMPATIBLE_BITS = 0.05
WARNING_BITS = 0.2


def verdict(bits: float | None) -> str:
    if bits is None:
        return "incomparable"
    if bits < COMPATIBLE_BITS:
        return "compatible"
    if bits < WARNING_BITS:
        return "warning"
    return "divergent"


@dataclass
class DiffReport:
    mode: str
    entries: list[dict] = field(default_factory=list)
    added: list[str] = field(default_factory=list)
    removed: list[str] = field(default_factory=list)
    thresholds: dict = field(
        default_factory=lambda: {"compatible": COMPATIBLE_BITS, "warning": WARNING_BITS}
    )

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "thresholds": self.thresholds,
            "entries": self.entries,
            "added": self.added,
            "removed": self.removed,
        }

    def worst(self) -> dict | None:
        return self.entries[0] if self.entries else None


def _rename(density: Density, mapping: dict[str, str]) -> Density:
    """Same distribution with variables renamed (for positional alignment)."""
    if isinstance(density, MixtureDensity):
        entries = tuple(
            EmbedEntry(mapping.get(e.name, e.name), e.kind, e.dims, e.vocab)
            for e in density.entries
        )
        return MixtureDensity(
            entries, density.shift, density.scale, density.weights,
            density.means, density.covs, density.trunc, density.meta,
        )
    if isinstance(density, CategoricalDensity):
        variables = tuple(
            Variable(mapping.get(v.name, v.name), v.kind) for v in density.variables
        )
        return CategoricalDensity(
            variables, density.probs, density.oov_mass, density.alpha,
            density.sample_count, density.low_confidence,
        )
    return density


def compare_integrity(a: ModelNetwork, b: ModelNetwork) -> DiffReport:
    report = DiffReport(mode="integrity")
    ids_a, ids_b = set(a.nodes), set(b.nodes)
    report.added = sorted(ids_b - ids_a)
    report.removed = sorted(ids_a - ids_b)
    common = sorted(ids_a & ids_b)
    if not common:
        raise NoOverlap("networks share no node ids")
    for node_id in common:
        na, nb = a.nodes[node_id], b.nodes[node_id]
        entry = {"node": node_id, "kind": na.kind, "divergence_bits": None, "note": ""}
        vars_a = {(v.name, v.kind) for v in na.variables}
        vars_b = {(v.name, v.kind) for v in nb.variables}
        if vars_a != vars_b:
            entry["note"] = "variable sets differ"
            entry["verdict"] = "schema-changed"
        elif na.density is None or nb.density is None:
            entry["note"] = "unfitted on one side"
            entry["verdict"] = "incomparable"
        else:
            bits = js_divergence(na.density, nb.density)
            entry["divergence_bits"] = float(bits)
            entry["verdict"] = verdict(bits)
        report.entries.append(entry)
    report.entries.sort(
        key=lambda e: (-(e["divergence_bits"] if e["divergence_bits"] is not None else -1.0), e["node"])
    )
    return report


def compare_compatibility(
    a: ModelNetwork,
    b: ModelNetwork,
    static_a: StaticModel,
    static_b: StaticModel | None = None,
) -> DiffReport:
    """Caller-side argument distributions from `a` against callee
    parameter distributions from `b`, matched per call site by position."""
    static_b = static_b if static_b is not None else static_a
    report = DiffReport(mode="compatibility")
    for caller_id, info in sorted(static_a.executables.items()):
        caller_node = a.nodes.get(caller_id)
        if caller_node is None or caller_node.density is None:
            continue
        for site in info.invokes:
            callee_info = static_b.executables.get(site.callee)
            callee_node = b.nodes.get(site.callee)
            if callee_info is None or callee_node is None or callee_node.density is None:
                continue
            pairs = []  # (caller var, callee var, positional name)
            for pos, (source, (pname, ptype)) in enumerate(
                zip(site.arg_sources, callee_info.params)
            ):
                if source.kind not in ("read", "param", "call"):
                    continue
                callee_var = f"param.{pname}"
                if not any(v.name == source.name for v in caller_node.variables):
                    continue
                if not any(v.name == callee_var for v in callee_node.variables):
                    continue
                pairs.append((source.name, callee_var, f"arg{pos}"))
            if not pairs:
                continue
            caller_marg = caller_node.density.marginal(tuple(p[0] for p in pairs))
            callee_marg = callee_node.density.marginal(tuple(p[1] for p in pairs))
            caller_aligned = _rename(caller_marg, {p[0]: p[2] for p in pairs})
            callee_aligned = _rename(callee_marg, {p[1]: p[2] for p in pairs})
            entry = {
                "caller": caller_id,
                "callee": site.callee,
                "site": site.site_index,
                "arguments": [p[2] for p in pairs],
                "divergence_bits": None,
            }
            try:
                bits = js_divergence(caller_aligned, callee_aligned)
                entry["divergence_bits"] = float(bits)
                entry["verdict"] = verdict(bits)
            except Exception as exc:  # kind mismatches stay reported
                entry["verdict"] = "incomparable"
                entry["note"] = str(exc)
            report.entries.append(entry)
    if not report.entries:
        raise NoOverlap("no call site could be matched between the two networks")
    report.entries.sort(
        key=lambda e: (-(e["divergence_bits"] if e["divergence_bits"] is not None else -1.0), e["caller"])
    )
    return report


def compare(
    a: ModelNetwork,
    b: ModelNetwork,
    mode: str = "integrity",
    static_a: StaticModel | None = None,
    static_b: StaticModel | None = None,
) -> DiffReport:
    if mode == "integrity":
        return compare_integrity(a, b)
    if mode == "compatibility":
        if static_a is None:
            raise NoOverlap("compatibility mode needs the caller-side static model")
        return compare_compatibility(a, b, static_a, static_b)
    raise ValueError(f"unknown mode {mode!r}")
