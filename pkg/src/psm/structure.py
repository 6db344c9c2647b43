"""Static analysis: types, properties, executables, and dependency edges.

Extraction is syntactic.  `reads` collects the scalar property reads of
a body (one entry per property id; read chains through object-valued
properties are kept separately as metadata).  Call sites are recorded
per occurrence with a per-callee site index, plus a best-effort source
for each argument obtained by straight-line copy propagation, which the
simulator and the compatibility diff use to align caller and callee
variables.
"""

from __future__ import annotations

import fnmatch
import json
from dataclasses import dataclass, field, replace

from psm.errors import EmptyUniverse
from psm.minilang import ast
from psm.minilang.ast import SCALAR_KINDS

STATIC_SCHEMA = "psm-static/1"


@dataclass(frozen=True)
class PropertyInfo:
    id: str  # "Type.name"
    name: str
    owner: str
    kind: str  # scalar kind or "object"
    ref_type: str | None = None  # class name when kind == "object"

    @property
    def modelable(self) -> bool:
        return self.kind != "object"


@dataclass(frozen=True)
class ArgSource:
    """Where a call-site argument comes from in the caller's variable space."""

    kind: str  # "read" | "param" | "param_object" | "call" | "const" | "unknown"
    name: str | None = None  # caller variable name, or object param name
    value: object = None  # for const


@dataclass(frozen=True)
class CallSite:
    callee: str
    site_index: int  # index among sites with the same callee, body order
    arg_sources: tuple[ArgSource, ...] = ()
    external: bool = False


@dataclass(frozen=True)
class ExecutableInfo:
    id: str  # "Type.method"
    owner: str
    name: str
    params: tuple[tuple[str, str], ...]  # (name, kind-or-class)
    returns: str  # scalar kind, class name, or "void"
    reads: tuple[str, ...] = ()  # scalar property ids, sorted
    object_reads: tuple[str, ...] = ()  # object-valued property ids touched
    invokes: tuple[CallSite, ...] = ()
    external: bool = False


@dataclass(frozen=True)
class TypeInfo:
    id: str
    properties: tuple[PropertyInfo, ...] = ()
    external: bool = False


@dataclass
class StaticModel:
    types: dict[str, TypeInfo] = field(default_factory=dict)
    executables: dict[str, ExecutableInfo] = field(default_factory=dict)
    universe: set[str] = field(default_factory=set)
    source_sha256: str | None = None

    def property_map(self) -> dict[str, PropertyInfo]:
        return {p.id: p for t in self.types.values() for p in t.properties}

    def in_universe(self, type_id: str) -> bool:
        return type_id in self.universe


class _ArgResolver:
    """Straight-line copy propagation over a method body.

    Locals map to the caller-variable they currently hold: a scalar
    property read, a scalar parameter, a call-site return, an object
    parameter, or a constant.  Branches are walked in order with
    last-write-wins, which is an approximation; anything ambiguous
    degrades to "unknown".
    """

    def __init__(self, exec_info_params, class_names: set[str]):
        self.sources: dict[str, ArgSource] = {}
        for pname, ptype in exec_info_params:
            if ptype in class_names:
                self.sources[pname] = ArgSource("param_object", name=pname)
            else:
                self.sources[pname] = ArgSource("param", name=f"param.{pname}")

    def source_of(self, expr: ast.Expr, call_ids: dict[int, str]) -> ArgSource:
        if isinstance(expr, (ast.IntLit, ast.FloatLit, ast.BoolLit, ast.StrLit)):
            return ArgSource("const", value=expr.value)
        if isinstance(expr, ast.Name):
            return self.sources.get(expr.ident, ArgSource("unknown"))
        if isinstance(expr, ast.FieldAccess) and expr.is_scalar and expr.prop_id:
            return ArgSource("read", name=f"read.{expr.prop_id}")
        if isinstance(expr, ast.MethodCall) and id(expr) in call_ids:
            return ArgSource("call", name=call_ids[id(expr)])
        return ArgSource("unknown")

    def record_let(self, stmt: ast.Let, call_ids: dict[int, str]):
        self.sources[stmt.name] = self.source_of(stmt.value, call_ids)

    def record_assign(self, stmt: ast.Assign, call_ids: dict[int, str]):
        if isinstance(stmt.target, ast.Name):
            self.sources[stmt.target.ident] = self.source_of(stmt.value, call_ids)


def _walk_statements(block: ast.Block):
    for stmt in block.statements:
        yield stmt
        if isinstance(stmt, ast.If):
            yield from _walk_statements(stmt.then)
            if stmt.orelse is not None:
                yield from _walk_statements(stmt.orelse)
        elif isinstance(stmt, ast.While):
            yield from _walk_statements(stmt.body)


def _walk_expressions(stmt: ast.Stmt):
    def rec(expr):
        if expr is None:
            return
        yield expr
        if isinstance(expr, ast.FieldAccess):
            yield from rec(expr.obj)
        elif isinstance(expr, ast.MethodCall):
            yield from rec(expr.obj)
            for a in expr.args:
                yield from rec(a)
        elif isinstance(expr, ast.SamplerCall):
            for a in expr.args:
                yield from rec(a)
            for v, w in expr.pairs:
                yield from rec(v)
                yield from rec(w)
        elif isinstance(expr, ast.Unary):
            yield from rec(expr.operand)
        elif isinstance(expr, ast.Binary):
            yield from rec(expr.left)
            yield from rec(expr.right)

    if isinstance(stmt, ast.Let):
        yield from rec(stmt.value)
    elif isinstance(stmt, ast.Assign):
        # The write target itself is not a read; its receiver chain is
        # object-valued only, so no scalar read hides inside it.
        if isinstance(stmt.target, ast.FieldAccess):
            yield from rec(stmt.target.obj)
        yield from rec(stmt.value)
    elif isinstance(stmt, (ast.If, ast.While)):
        yield from rec(stmt.cond)
    elif isinstance(stmt, ast.Return):
        yield from rec(stmt.value)
    elif isinstance(stmt, ast.ExprStmt):
        yield from rec(stmt.expr)


def extract(program: ast.Program) -> StaticModel:
    """Build the static model of a checked program; deterministic."""
    class_names = set(program.class_map())
    types: dict[str, TypeInfo] = {}
    executables: dict[str, ExecutableInfo] = {}

    for cls in program.classes:
        props = tuple(
            PropertyInfo(
                id=f"{cls.name}.{p.name}",
                name=p.name,
                owner=cls.name,
                kind=p.type_name if p.type_name in SCALAR_KINDS else "object",
                ref_type=p.type_name if p.type_name not in SCALAR_KINDS else None,
            )
            for p in cls.properties
        )
        types[cls.name] = TypeInfo(id=cls.name, properties=props)

        for meth in cls.methods:
            exec_id = f"{cls.name}.{meth.name}"
            reads: set[str] = set()
            object_reads: set[str] = set()
            invokes: list[CallSite] = []
            resolver = _ArgResolver(meth.params, class_names)
            call_ids: dict[int, str] = {}
            for stmt in _walk_statements(meth.body):
                for expr in _walk_expressions(stmt):
                    if isinstance(expr, ast.FieldAccess) and expr.prop_id:
                        if expr.is_scalar:
                            reads.add(expr.prop_id)
                        else:
                            object_reads.add(expr.prop_id)
                    elif isinstance(expr, ast.MethodCall) and expr.callee_id:
                        sources = tuple(resolver.source_of(a, call_ids) for a in expr.args)
                        invokes.append(
                            CallSite(expr.callee_id, expr.site_index, sources)
                        )
                        call_ids[id(expr)] = (
                            f"call{expr.site_index}.{expr.callee_id}.ret"
                        )
                if isinstance(stmt, ast.Let):
                    resolver.record_let(stmt, call_ids)
                elif isinstance(stmt, ast.Assign):
                    resolver.record_assign(stmt, call_ids)
            executables[exec_id] = ExecutableInfo(
                id=exec_id,
                owner=cls.name,
                name=meth.name,
                params=tuple(meth.params),
                returns=meth.return_type,
                reads=tuple(sorted(reads)),
                object_reads=tuple(sorted(object_reads)),
                invokes=tuple(invokes),
            )

    return StaticModel(
        types=types,
        executables=executables,
        universe=set(types),
    )


def universe_filter(model: StaticModel, include_patterns: list[str]) -> StaticModel:
    """Restrict the modeling universe to types matching any glob pattern.

    Types outside the universe become external; dependency edges that
    cross the boundary are kept with the external endpoint marked, and
    no variables will be built for them downstream.
    """
    matched = {
        tid for tid in model.types
        if any(fnmatch.fnmatchcase(tid, pat) for pat in include_patterns)
    }
    if not matched:
        raise EmptyUniverse(f"no type matches {include_patterns!r}")
    types = {
        tid: replace(info, external=tid not in matched)
        for tid, info in model.types.items()
    }
    executables = {}
    for eid, info in model.executables.items():
        invokes = tuple(
            replace(site, external=site.callee.split(".")[0] not in matched)
            for site in info.invokes
        )
        executables[eid] = replace(
            info, invokes=invokes, external=info.owner not in matched
        )
    return StaticModel(
        types=types,
        executables=executables,
        universe=matched,
        source_sha256=model.source_sha256,
    )


# --- variable plans shared by trace assembly and network construction ---


@dataclass(frozen=True)
class VariablePlan:
    name: str
    kind: str  # scalar kind


def flatten_type_variables(model: StaticModel, type_id: str, _seen=None, _prefix="") -> list[VariablePlan]:
    """Scalar variable plan of a type node: direct scalar properties plus
    the flattened scalars of in-universe object-valued properties.
    Cycles truncate at the first revisit."""
    seen = set(_seen or ())
    if type_id in seen or type_id not in model.types or not model.in_universe(type_id):
        return []
    seen.add(type_id)
    plan: list[VariablePlan] = []
    for prop in model.types[type_id].properties:
        if prop.modelable:
            plan.append(VariablePlan(f"{_prefix}{prop.name}", prop.kind))
        elif prop.ref_type:
            plan.extend(
                flatten_type_variables(model, prop.ref_type, seen, f"{_prefix}{prop.name}.")
            )
    return plan


def object_param_prefix(model: StaticModel, exec_info: ExecutableInfo, param_name: str, param_type: str) -> str:
    """Cell prefix for a flattened object parameter.

    Uses the type name (matching how rows are addressed in queries)
    unless the same type appears in several parameters, in which case
    the parameter name disambiguates.
    """
    same_type = [n for n, t in exec_info.params if t == param_type]
    if len(same_type) > 1:
        return f"param.{param_name}."
    return f"param.{param_type}."


def flatten_exec_variables(model: StaticModel, exec_id: str) -> list[VariablePlan]:
    """Variable plan of an executable node: parameters (object-valued
    ones flattened to scalar property cells), property reads, call-site
    returns, then the executable's own return."""
    info = model.executables[exec_id]
    props = model.property_map()
    plan: list[VariablePlan] = []
    for pname, ptype in info.params:
        if ptype in SCALAR_KINDS:
            plan.append(VariablePlan(f"param.{pname}", ptype))
        else:
            prefix = object_param_prefix(model, info, pname, ptype)
            for sub in flatten_type_variables(model, ptype):
                plan.append(VariablePlan(f"{prefix}{sub.name}", sub.kind))
    for prop_id in info.reads:
        prop = props.get(prop_id)
        if prop is None or not prop.modelable or not model.in_universe(prop.owner):
            continue  # latent endpoint: no variable for external elements
        plan.append(VariablePlan(f"read.{prop_id}", prop.kind))
    for site in info.invokes:
        callee = model.executables.get(site.callee)
        if callee is None or site.external or not model.in_universe(callee.owner):
            continue
        if callee.returns in SCALAR_KINDS:
            plan.append(
                VariablePlan(f"call{site.site_index}.{site.callee}.ret", callee.returns)
            )
    if info.returns in SCALAR_KINDS:
        plan.append(VariablePlan("return", info.returns))
    return plan


# --- canonical JSON ---


def to_json_dict(model: StaticModel) -> dict:
    return {
        "schema": STATIC_SCHEMA,
        "source_sha256": model.source_sha256,
        "universe": sorted(model.universe),
        "types": [
            {
                "id": t.id,
                "external": t.external,
                "properties": [
                    {
                        "id": p.id,
                        "name": p.name,
                        "kind": p.kind,
                        "ref_type": p.ref_type,
                        "modelable": p.modelable,
                    }
                    for p in t.properties
                ],
            }
            for t in sorted(model.types.values(), key=lambda t: t.id)
        ],
        "executables": [
            {
                "id": e.id,
                "owner": e.owner,
                "name": e.name,
                "params": [{"name": n, "type": t} for n, t in e.params],
                "returns": e.returns,
                "reads": list(e.reads),
                "object_reads": list(e.object_reads),
                "invokes": [
                    {
                        "callee": s.callee,
                        "site_index": s.site_index,
                        "external": s.external,
                        "arg_sources": [
                            {"kind": a.kind, "name": a.name, "value": a.value}
                            for a in s.arg_sources
                        ],
                    }
                    for s in e.invokes
                ],
                "external": e.external,
            }
            for e in sorted(model.executables.values(), key=lambda e: e.id)
        ],
    }


def to_json(model: StaticModel) -> str:
    return json.dumps(to_json_dict(model), indent=2, sort_keys=True, allow_nan=False) + "\n"


def from_json_dict(d: dict) -> StaticModel:
    if d.get("schema") != STATIC_SCHEMA:
        raise ValueError(f"unsupported static model schema {d.get('schema')!r}")
    types = {}
    for t in d["types"]:
        props = tuple(
            PropertyInfo(
                id=p["id"],
                name=p["name"],
                owner=t["id"],
                kind=p["kind"],
                ref_type=p.get("ref_type"),
            )
            for p in t["properties"]
        )
        types[t["id"]] = TypeInfo(id=t["id"], properties=props, external=t["external"])
    executables = {}
    for e in d["executables"]:
        invokes = tuple(
            CallSite(
                callee=s["callee"],
                site_index=s["site_index"],
                external=s["external"],
                arg_sources=tuple(
                    ArgSource(kind=a["kind"], name=a.get("name"), value=a.get("value"))
                    for a in s.get("arg_sources", [])
                ),
            )
            for s in e["invokes"]
        )
        executables[e["id"]] = ExecutableInfo(
            id=e["id"],
            owner=e["owner"],
            name=e["name"],
            params=tuple((p["name"], p["type"]) for p in e["params"]),
            returns=e["returns"],
            reads=tuple(e["reads"]),
            object_reads=tuple(e.get("object_reads", ())),
            invokes=invokes,
            external=e["external"],
        )
    return StaticModel(
        types=types,
        executables=executables,
        universe=set(d["universe"]),
        source_sha256=d.get("source_sha256"),
    )


def from_json(text: str) -> StaticModel:
    return from_json_dict(json.loads(text))
