"""Trace event model, newline-delimited JSON writer/reader, and the
assembly of raw events into per-node observation rows.

Format (docs/trace-format.md): one JSON object per line, preceded by a
versioned header line ``{"psm_trace": 1}``.  Floats are serialized with
full round-trip precision; object references appear as ``{"$obj": n}``.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from psm.errors import (
    MalformedLine,
    OrphanFrame,
    SequenceGap,
    TraceFormatError,
    UnresolvedId,
)

if TYPE_CHECKING:  # imported lazily at runtime to avoid an import cycle
    from psm.structure import StaticModel

TRACE_FORMAT_VERSION = 1

EVENT_KINDS = ("enter", "exit", "abort", "read", "write", "new")

# Per-kind required payload fields, beyond seq/kind/frame/parent.
_REQUIRED = {
    "enter": ("exec_id", "args"),
    "exit": ("exec_id",),
    "abort": ("exec_id", "error"),
    "read": ("prop_id", "obj_id", "value"),
    "write": ("prop_id", "obj_id", "value"),
    "new": ("type_id", "obj_id"),
}

_FIELD_ORDER = (
    "seq", "kind", "frame", "parent", "exec_id", "site", "args",
    "ret", "prop_id", "obj_id", "value", "type_id", "error",
)


@dataclass(frozen=True)
class ObjRef:
    """Reference to a heap object inside a trace value slot."""

    obj_id: int


def _encode_value(v):
    if isinstance(v, ObjRef):
        return {"$obj": v.obj_id}
    return v


def _decode_value(v):
    if isinstance(v, dict):
        if set(v.keys()) == {"$obj"} and isinstance(v["$obj"], int):
            return ObjRef(v["$obj"])
        raise ValueError(f"unexpected object value {v!r}")
    return v


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    kind: str
    frame: int
    parent: int | None = None
    exec_id: str | None = None
    site: int | None = None  # per-callee static call-site index (enter only)
    args: tuple | None = None  # ((name, value), ...) in parameter order
    ret: object = None
    prop_id: str | None = None
    obj_id: int | None = None
    value: object = None
    type_id: str | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        d = {"seq": self.seq, "kind": self.kind, "frame": self.frame, "parent": self.parent}
        if self.kind in ("enter", "exit", "abort"):
            d["exec_id"] = self.exec_id
        if self.kind == "enter":
            d["site"] = self.site
            d["args"] = {name: _encode_value(v) for name, v in (self.args or ())}
        if self.kind == "exit":
            d["ret"] = _encode_value(self.ret)
        if self.kind == "abort":
            d["error"] = self.error
        if self.kind in ("read", "write"):
            d["prop_id"] = self.prop_id
            d["obj_id"] = self.obj_id
            d["value"] = _encode_value(self.value)
        if self.kind == "new":
            d["type_id"] = self.type_id
            d["obj_id"] = self.obj_id
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TraceEvent":
        kind = d.get("kind")
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        for f in ("seq", "frame"):
            if not isinstance(d.get(f), int):
                raise ValueError(f"missing or non-integer field {f!r}")
        for f in _REQUIRED[kind]:
            if f not in d:
                raise ValueError(f"{kind} event missing field {f!r}")
        args = None
        if kind == "enter":
            args = tuple((name, _decode_value(v)) for name, v in d["args"].items())
        return cls(
            seq=d["seq"],
            kind=kind,
            frame=d["frame"],
            parent=d.get("parent"),
            exec_id=d.get("exec_id"),
            site=d.get("site"),
            args=args,
            ret=_decode_value(d.get("ret")),
            prop_id=d.get("prop_id"),
            obj_id=d.get("obj_id"),
            value=_decode_value(d.get("value")),
            type_id=d.get("type_id"),
            error=d.get("error"),
        )


@dataclass
class TraceLog:
    events: list[TraceEvent] = field(default_factory=list)
    version: int = TRACE_FORMAT_VERSION

    def __len__(self) -> int:
        return len(self.events)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TraceLog)
            and self.version == other.version
            and self.events == other.events
        )


class TraceWriter:
    """Single-writer event sink; enforces the monotone seq contract."""

    def __init__(self):
        self.events: list[TraceEvent] = []
        self._next_seq = 1

    def emit(self, kind: str, frame: int, parent: int | None, **fields) -> TraceEvent:
        event = TraceEvent(seq=self._next_seq, kind=kind, frame=frame, parent=parent, **fields)
        self._next_seq += 1
        self.events.append(event)
        return event

    def log(self) -> TraceLog:
        return TraceLog(events=self.events)


def _event_line(event: TraceEvent) -> str:
    d = event.to_dict()
    ordered = {k: d[k] for k in _FIELD_ORDER if k in d}
    return json.dumps(ordered, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def write_log(log: TraceLog, path_or_file) -> None:
    """Serialize a log as header line + one event per line."""
    if hasattr(path_or_file, "write"):
        _write_stream(log, path_or_file)
    else:
        with open(path_or_file, "w", encoding="utf-8") as fh:
            _write_stream(log, fh)


def _write_stream(log: TraceLog, fh) -> None:
    fh.write(json.dumps({"psm_trace": log.version}) + "\n")
    for event in log.events:
        fh.write(_event_line(event) + "\n")


def dumps_log(log: TraceLog) -> str:
    buf = io.StringIO()
    _write_stream(log, buf)
    return buf.getvalue()


def read_log(path_or_file) -> TraceLog:
    """Parse and validate a trace file.

    Raises MalformedLine / SequenceGap / OrphanFrame with the first
    offending line number.  The header line is optional on read so that
    hand-built event files are accepted.
    """
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        with open(path_or_file, "r", encoding="utf-8") as fh:
            text = fh.read()
    return loads_log(text)


def loads_log(text: str) -> TraceLog:
    lines = text.splitlines()
    version = TRACE_FORMAT_VERSION
    events: list[TraceEvent] = []
    expected_seq = 1
    open_frames: dict[int, str] = {}  # frame -> exec_id
    stack: list[int] = []
    start = 0
    if lines:
        first = lines[0].strip()
        if first:
            try:
                head = json.loads(first)
            except json.JSONDecodeError as exc:
                raise MalformedLine(1, f"invalid JSON: {exc.msg}")
            if isinstance(head, dict) and "psm_trace" in head:
                version = head["psm_trace"]
                if version != TRACE_FORMAT_VERSION:
                    raise TraceFormatError(
                        f"unsupported trace version {version!r}, expected {TRACE_FORMAT_VERSION}"
                    )
                start = 1
    for lineno0, raw in enumerate(lines[start:], start=start + 1):
        if not raw.strip():
            continue
        try:
            d = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedLine(lineno0, f"invalid JSON: {exc.msg}")
        try:
            event = TraceEvent.from_dict(d)
        except ValueError as exc:
            raise MalformedLine(lineno0, str(exc))
        if event.seq != expected_seq:
            raise SequenceGap(lineno0, expected_seq, event.seq)
        expected_seq += 1
        if event.kind == "enter":
            if event.parent is not None:
                if not stack or stack[-1] != event.parent:
                    raise OrphanFrame(lineno0, event.frame)
            elif stack:
                raise OrphanFrame(lineno0, event.frame)
            if event.frame in open_frames:
                raise MalformedLine(lineno0, f"frame {event.frame} entered twice")
            open_frames[event.frame] = event.exec_id
            stack.append(event.frame)
        elif event.kind in ("exit", "abort"):
            if not stack or stack[-1] != event.frame:
                raise MalformedLine(
                    lineno0, f"{event.kind} for frame {event.frame} violates stack discipline"
                )
            stack.pop()
            del open_frames[event.frame]
        else:  # read / write / new
            if not stack or stack[-1] != event.frame:
                raise MalformedLine(
                    lineno0, f"{event.kind} event outside its open frame {event.frame}"
                )
        events.append(event)
    if stack:
        raise TraceFormatError(f"unclosed frames at end of log: {stack}")
    return TraceLog(events=events, version=version)


# --- assembly into per-node observation rows ---


@dataclass
class FrameRecord:
    """A completed executable frame with its assembled observation row."""

    frame: int
    exec_id: str
    parent: int | None
    depth: int
    entry_seq: int
    site: int | None
    row: dict
    touched_objs: set[int] = field(default_factory=set)
    aborted: bool = False


@dataclass
class AssembleStats:
    completed_frames: int = 0
    aborted_frames: int = 0
    dropped_rows: int = 0
    dropped_snapshots: int = 0


@dataclass
class _ObjState:
    type_id: str
    fields: dict = field(default_factory=dict)
    created_frame: int | None = None


class _Replay:
    def __init__(self, log: TraceLog, model: "StaticModel"):
        self.log = log
        self.model = model
        self.props = model.property_map()
        self.objs: dict[int, _ObjState] = {}
        self.frames: dict[int, FrameRecord] = {}
        self.depths: dict[int, int] = {}
        self.open_cells: dict[int, dict] = {}
        self.frame_objs: dict[int, set[int]] = {}  # constructed or written per frame
        self.frame_records: list[FrameRecord] = []
        self.property_rows: dict[str, list[dict]] = {}
        self.type_rows: dict[str, list[dict]] = {}
        self.stats = AssembleStats()

    def _snapshot_object(self, obj_id: int) -> dict:
        from psm.structure import flatten_type_variables

        state = self.objs[obj_id]
        row: dict = {}
        for plan in flatten_type_variables(self.model, state.type_id):
            value = self._walk_path(obj_id, plan.name.split("."))
            if value is not None:
                row[plan.name] = value
        return row

    def _walk_path(self, obj_id: int, path: list[str]):
        current = self.objs.get(obj_id)
        for part in path[:-1]:
            ref = current.fields.get(part) if current else None
            if not isinstance(ref, ObjRef):
                return None
            current = self.objs.get(ref.obj_id)
        if current is None:
            return None
        value = current.fields.get(path[-1])
        if isinstance(value, ObjRef):
            return None
        return value

    def _enter(self, event: TraceEvent):
        from psm.structure import object_param_prefix

        info = self.model.executables.get(event.exec_id)
        if info is None:
            raise UnresolvedId(f"unknown executable {event.exec_id!r} at seq {event.seq}")
        depth = 0 if event.parent is None else self.depths[event.parent] + 1
        self.depths[event.frame] = depth
        record = FrameRecord(
            frame=event.frame,
            exec_id=event.exec_id,
            parent=event.parent,
            depth=depth,
            entry_seq=event.seq,
            site=event.site,
            row={},
        )
        cells: dict = {}
        for (pname, ptype), (aname, avalue) in zip(info.params, event.args or ()):
            if isinstance(avalue, ObjRef):
                record.touched_objs.add(avalue.obj_id)
                if avalue.obj_id in self.objs:
                    prefix = object_param_prefix(self.model, info, pname, ptype)
                    snap = self._snapshot_object(avalue.obj_id)
                    for name, value in snap.items():
                        cells[f"{prefix}{name}"] = value
            elif avalue is not None:
                cells[f"param.{pname}"] = avalue
        self.frames[event.frame] = record
        self.open_cells[event.frame] = cells
        self.frame_objs[event.frame] = set()

    def _close(self, event: TraceEvent, aborted: bool):
        record = self.frames[event.frame]
        cells = self.open_cells.pop(event.frame)
        record.aborted = aborted
        in_universe = self.model.in_universe(record.exec_id.split(".")[0])
        if aborted:
            self.stats.aborted_frames += 1
            if in_universe:
                self.stats.dropped_rows += 1
                self.stats.dropped_snapshots += len(self.frame_objs[event.frame])
        else:
            if not isinstance(event.ret, ObjRef) and event.ret is not None:
                cells["return"] = event.ret
            record.row = cells
            self.stats.completed_frames += 1
            # propagate the call-site return into the caller's row
            if event.parent in self.open_cells and record.site is not None:
                if not isinstance(event.ret, ObjRef) and event.ret is not None:
                    key = f"call{record.site}.{record.exec_id}.ret"
                    self.open_cells[event.parent][key] = event.ret
            for obj_id in sorted(self.frame_objs[event.frame]):
                state = self.objs[obj_id]
                if self.model.in_universe(state.type_id):
                    self.type_rows.setdefault(state.type_id, []).append(
                        self._snapshot_object(obj_id)
                    )
        self.frame_records.append(record)

    def run(self):
        for event in self.log.events:
            if event.kind == "enter":
                self._enter(event)
            elif event.kind == "exit":
                self._close(event, aborted=False)
            elif event.kind == "abort":
                self._close(event, aborted=True)
            elif event.kind == "new":
                if event.type_id not in self.model.types:
                    raise UnresolvedId(f"unknown type {event.type_id!r} at seq {event.seq}")
                self.objs[event.obj_id] = _ObjState(event.type_id, created_frame=event.frame)
                self.frame_objs[event.frame].add(event.obj_id)
            elif event.kind == "read":
                prop = self.props.get(event.prop_id)
                if prop is None:
                    raise UnresolvedId(f"unknown property {event.prop_id!r} at seq {event.seq}")
                self.frames[event.frame].touched_objs.add(event.obj_id)
                if prop.modelable and self.model.in_universe(prop.owner):
                    self.open_cells[event.frame][f"read.{event.prop_id}"] = event.value
            elif event.kind == "write":
                prop = self.props.get(event.prop_id)
                if prop is None:
                    raise UnresolvedId(f"unknown property {event.prop_id!r} at seq {event.seq}")
                state = self.objs.get(event.obj_id)
                if state is not None:
                    state.fields[prop.name] = event.value
                self.frame_objs[event.frame].add(event.obj_id)
                self.frames[event.frame].touched_objs.add(event.obj_id)
                if self.model.in_universe(prop.owner):
                    # object-valued writes contribute zero-width rows: the
                    # property has no random variable but the count stays
                    row = {prop.name: event.value} if prop.modelable else {}
                    self.property_rows.setdefault(event.prop_id, []).append(row)
        return self


def replay(log: TraceLog, model: "StaticModel") -> _Replay:
    """Low-level replay; exposed for ripple analysis."""
    return _Replay(log, model).run()


def assemble(log: TraceLog, model: "StaticModel") -> tuple[dict[str, list[dict]], AssembleStats]:
    """Group a trace into per-node observation rows.

    Returns a mapping from node id (type, property, or executable id in
    the modeling universe) to its rows, plus assembly statistics.
    Aborted frames contribute no executable row or type snapshot.
    """
    state = replay(log, model)
    rows: dict[str, list[dict]] = {}
    for tid, info in sorted(model.types.items()):
        if model.in_universe(tid):
            rows[tid] = state.type_rows.get(tid, [])
            for prop in info.properties:
                rows[prop.id] = state.property_rows.get(prop.id, [])
    for eid, info in sorted(model.executables.items()):
        if model.in_universe(info.owner):
            rows[eid] = []
    for record in state.frame_records:
        if record.aborted:
            continue
        owner = record.exec_id.split(".")[0]
        if model.in_universe(owner):
            rows[record.exec_id].append(record.row)
    return rows, state.stats
