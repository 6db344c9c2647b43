"""Anomaly detection against fitted reference behavior.

A value row is anomalous on a node when its quantile score falls below
the threshold.  Given a live trace, the report also follows the
anomalous object through the call tree: every frame below the origin
that observes the same object (or carries one of its values) is scored
against its node, and the ripple distance is the number of call-stack
frames from the origin frame to the first frame that perceives the
anomaly.  A never-perceived anomaly reports an infinite distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from psm.density import quantile_score
from psm.errors import UnfittedNode, UnknownNode
from psm.network import ModelNetwork
from psm.structure import StaticModel
from psm.trace import TraceLog, replay


@dataclass
class AnomalyConfig:
    threshold: float = 0.1
    scope: tuple[str, ...] | None = None  # node ids to monitor; None = all

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be in (0, 1)")


@dataclass
class RipplePoint:
    node: str
    frame: int
    depth: int  # call-stack frames below the origin frame
    score: float
    detected: bool

    def to_dict(self) -> dict:
        return {
            "node": self.node, "frame": self.frame, "depth": self.depth,
            "score": self.score, "detected": self.detected,
        }


@dataclass
class AnomalyReport:
    node: str
    values: dict
    score: float
    threshold: float
    detected: bool
    ripple: list[RipplePoint] = field(default_factory=list)
    ripple_distance: int | None = None  # None = never perceived ("infinite")
    traced: bool = False

    def to_dict(self) -> dict:
        return {
            "node": self.node,
            "values": self.values,
            "score": self.score,
            "threshold": self.threshold,
            "detected": self.detected,
            "traced": self.traced,
            "ripple": [p.to_dict() for p in self.ripple],
            "ripple_distance": self.ripple_distance,
            "perceived": self.ripple_distance is not None if self.traced else None,
        }


def _score_node(network: ModelNetwork, node_id: str, row: dict) -> float | None:
    node = network.nodes.get(node_id)
    if node is None or node.density is None or node.density.is_empty:
        return None
    cells = {k: v for k, v in row.items() if any(v_.name == k for v_ in node.variables)}
    if not cells:
        return None
    return quantile_score(node.density, cells)


def check(
    network: ModelNetwork,
    config: AnomalyConfig,
    node_id: str,
    row: dict,
    trace: TraceLog | None = None,
    static: StaticModel | None = None,
) -> AnomalyReport:
    node = network.node(node_id)
    if node.density is None:
        raise UnfittedNode(f"node {node_id!r} has no fitted density")
    score = quantile_score(node.density, row)
    report = AnomalyReport(
        node=node_id,
        values=dict(row),
        score=float(score),
        threshold=config.threshold,
        detected=score < config.threshold,
    )
    if trace is None:
        return report
    if static is None:
        raise UnknownNode("ripple analysis needs the static model alongside the trace")
    report.traced = True
    _trace_ripple(network, config, static, trace, node, row, report)
    return report


def _find_origin(state, static: StaticModel, node, row: dict):
    """First write event matching the anomalous values; returns
    (frame id, object id, seq, taint values)."""
    if node.kind in ("type", "property"):
        if node.kind == "type":
            prop_ids = {p.id: p.name for p in static.types[node.id].properties}
        else:
            prop = static.property_map()[node.id]
            prop_ids = {node.id: prop.name}
        wanted = {name: row[name] for name in row}
        for event in state.log.events:
            if event.kind != "write" or event.prop_id not in prop_ids:
                continue
            cell = prop_ids[event.prop_id]
            if cell in wanted and _values_match(event.value, wanted[cell]):
                return event.frame, event.obj_id, event.seq, set(row.values())
    else:  # executable origin: first completed frame whose row matches
        for record in state.frame_records:
            if record.exec_id != node.id or record.aborted:
                continue
            if all(
                k in record.row and _values_match(record.row[k], v)
                for k, v in row.items()
            ):
                return record.frame, None, record.entry_seq, set(row.values())
    return None


def _values_match(a, b) -> bool:
    if isinstance(a, float) and isinstance(b, (int, float)):
        return math.isclose(a, float(b), rel_tol=1e-12, abs_tol=1e-12)
    return a == b


def _trace_ripple(network, config, static, trace, node, row, report) -> None:
    state = replay(trace, static)
    origin = _find_origin(state, static, node, row)
    if origin is None:
        report.ripple_distance = None
        return
    origin_frame, origin_obj, origin_seq, taints = origin
    depths = {r.frame: r.depth for r in state.frame_records}
    parents = {r.frame: r.parent for r in state.frame_records}

    def is_below_origin(frame: int) -> bool:
        current = frame
        while current is not None:
            if current == origin_frame:
                return True
            current = parents.get(current)
        return False

    candidates = []
    for record in state.frame_records:
        if record.aborted or record.frame == origin_frame:
            continue
        if record.entry_seq <= origin_seq or not is_below_origin(record.frame):
            continue
        touches = origin_obj is not None and origin_obj in record.touched_objs
        carries = any(
            _matches_any(v, taints) for v in record.row.values()
        )
        if touches or carries:
            candidates.append(record)
    candidates.sort(key=lambda r: r.entry_seq)
    for record in candidates:
        if config.scope is not None and record.exec_id not in config.scope:
            continue
        score = _score_node(network, record.exec_id, record.row)
        if score is None:
            continue
        depth = depths[record.frame] - depths[origin_frame]
        detected = score < config.threshold
        report.ripple.append(
            RipplePoint(record.exec_id, record.frame, depth, float(score), detected)
        )
        if detected and report.ripple_distance is None:
            report.ripple_distance = depth


def _matches_any(value, taints) -> bool:
    return any(_values_match(value, t) for t in taints)
