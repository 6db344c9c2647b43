"""Tree-walking interpreter for ML0 with trace emission.

Every method entry/exit, scalar property read, property write, and
object construction appends exactly one event to the log.  Reading an
object-valued property emits nothing (such properties carry no modeled
value); writing one records the reference so object state can be
replayed.  Runtime failures (division by zero, null field access,
invalid sampler parameters) unwind the current iteration with one
``abort`` event per open frame and execution continues with the next
iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from psm.errors import InvalidParams, PsmError
from psm.minilang import ast
from psm.minilang.rng import SplitRng
from psm.trace import ObjRef, TraceLog, TraceWriter

DEFAULTS = {"int": 0, "float": 0.0, "bool": False, "string": ""}


class MlRuntimeError(Exception):
    """Raised inside an iteration; recorded as abort events, not fatal."""


@dataclass
class MlObject:
    class_name: str
    obj_id: int
    fields: dict[str, object] = field(default_factory=dict)


class _ReturnSignal(Exception):
    def __init__(self, value):
        self.value = value


class Scope:
    """Lexical scope chain: declarations live in the block that made
    them, assignments mutate the declaring block."""

    __slots__ = ("vars", "parent")

    def __init__(self, parent: "Scope | None" = None):
        self.vars: dict = {}
        self.parent = parent

    def get(self, name: str):
        scope = self
        while scope is not None:
            if name in scope.vars:
                return scope.vars[name]
            scope = scope.parent
        raise KeyError(name)

    def set(self, name: str, value) -> None:
        scope = self
        while scope is not None:
            if name in scope.vars:
                scope.vars[name] = value
                return
            scope = scope.parent
        raise KeyError(name)

    def declare(self, name: str, value) -> None:
        self.vars[name] = value


class Interpreter:
    def __init__(self, program: ast.Program, seed: int):
        if program.entry is None:
            raise PsmError("program has no entry declaration")
        self.program = program
        self.classes = program.class_map()
        self.rng = SplitRng(seed, stream=0)
        self.writer = TraceWriter()
        self._next_frame = 1
        self._next_obj = 1
        self._stack: list[int] = []
        self._frame_exec: dict[int, str] = {}

    # --- object and frame plumbing ---

    def new_object(self, class_name: str) -> MlObject:
        cls = self.classes[class_name]
        obj = MlObject(class_name, self._next_obj)
        self._next_obj += 1
        for prop in cls.properties:
            obj.fields[prop.name] = DEFAULTS.get(prop.type_name)  # objects default to None
        self.writer.emit(
            "new", frame=self._stack[-1], parent=self._parent_of_top(),
            type_id=class_name, obj_id=obj.obj_id,
        )
        return obj

    def _parent_of_top(self) -> int | None:
        return self._stack[-2] if len(self._stack) >= 2 else None

    # --- execution ---

    def run_iteration(self) -> None:
        cls_name, meth_name = self.program.entry
        method = self._lookup_method(cls_name, meth_name)
        frame = self._next_frame
        self._next_frame += 1
        self.writer.emit(
            "enter", frame=frame, parent=None,
            exec_id=f"{cls_name}.{meth_name}", site=None, args=(),
        )
        self._stack.append(frame)
        self._frame_exec[frame] = f"{cls_name}.{meth_name}"
        try:
            receiver = self.new_object(cls_name)
            ret = self.call_body(method, receiver, {})
            self._stack.pop()
            self.writer.emit(
                "exit", frame=frame, parent=None,
                exec_id=f"{cls_name}.{meth_name}", ret=self._trace_value(ret),
            )
        except MlRuntimeError as exc:
            self._unwind(str(exc))

    def _unwind(self, message: str) -> None:
        # Innermost first, so the abort events honor stack discipline.
        while self._stack:
            frame = self._stack.pop()
            parent = self._stack[-1] if self._stack else None
            exec_id = self._frame_exec[frame]
            self.writer.emit("abort", frame=frame, parent=parent, exec_id=exec_id, error=message)

    def _lookup_method(self, cls_name: str, meth_name: str) -> ast.MethodDecl:
        cls = self.classes[cls_name]
        return next(m for m in cls.methods if m.name == meth_name)

    def call_body(self, method: ast.MethodDecl, receiver: MlObject, locals_: dict) -> object:
        scope = Scope()
        for name, value in locals_.items():
            scope.declare(name, value)
        try:
            self.exec_block(method.body, receiver, scope)
        except _ReturnSignal as sig:
            return sig.value
        return None

    def exec_block(self, block: ast.Block, this: MlObject, env: Scope) -> None:
        for stmt in block.statements:
            self.exec_stmt(stmt, this, env)

    def exec_stmt(self, stmt: ast.Stmt, this: MlObject, env: Scope) -> None:
        if isinstance(stmt, ast.Let):
            env.declare(stmt.name, self._coerce(stmt.type_name, self.eval(stmt.value, this, env)))
        elif isinstance(stmt, ast.Assign):
            value = self.eval(stmt.value, this, env)
            if isinstance(stmt.target, ast.Name):
                # Locals keep their declared kind; re-coerce int -> float.
                current = env.get(stmt.target.ident)
                if isinstance(current, float) and isinstance(value, int) and not isinstance(value, bool):
                    value = float(value)
                env.set(stmt.target.ident, value)
            else:
                self._write_field(stmt.target, value, this, env)
        elif isinstance(stmt, ast.If):
            if self.eval(stmt.cond, this, env):
                self.exec_block(stmt.then, this, Scope(env))
            elif stmt.orelse is not None:
                self.exec_block(stmt.orelse, this, Scope(env))
        elif isinstance(stmt, ast.While):
            while self.eval(stmt.cond, this, env):
                self.exec_block(stmt.body, this, Scope(env))
        elif isinstance(stmt, ast.Return):
            value = None if stmt.value is None else self.eval(stmt.value, this, env)
            raise _ReturnSignal(value)
        elif isinstance(stmt, ast.ExprStmt):
            self.eval(stmt.expr, this, env)
        else:
            raise AssertionError(f"unhandled statement {stmt!r}")

    def _write_field(self, target: ast.FieldAccess, value, this: MlObject, env: Scope) -> None:
        obj = self.eval(target.obj, this, env, emit_read=False)
        if obj is None:
            raise MlRuntimeError(f"null field access '{target.name}' at {target.pos.line}:{target.pos.column}")
        prop_type = self._prop_type(obj.class_name, target.name)
        obj.fields[target.name] = self._coerce(prop_type, value)
        self.writer.emit(
            "write", frame=self._stack[-1], parent=self._parent_of_top(),
            prop_id=target.prop_id, obj_id=obj.obj_id,
            value=self._trace_value(obj.fields[target.name]),
        )

    def _prop_type(self, class_name: str, prop_name: str) -> str:
        cls = self.classes[class_name]
        return next(p.type_name for p in cls.properties if p.name == prop_name)

    @staticmethod
    def _coerce(declared: str, value):
        if declared == "float" and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        return value

    def _trace_value(self, value):
        if isinstance(value, MlObject):
            return ObjRef(value.obj_id)
        return value

    # --- expressions ---

    def eval(self, expr: ast.Expr, this: MlObject, env: Scope, emit_read: bool = True):
        if isinstance(expr, ast.IntLit):
            return expr.value
        if isinstance(expr, ast.FloatLit):
            return expr.value
        if isinstance(expr, ast.BoolLit):
            return expr.value
        if isinstance(expr, ast.StrLit):
            return expr.value
        if isinstance(expr, ast.NullLit):
            return None
        if isinstance(expr, ast.This):
            return this
        if isinstance(expr, ast.Name):
            return env.get(expr.ident)
        if isinstance(expr, ast.New):
            return self.new_object(expr.class_name)
        if isinstance(expr, ast.FieldAccess):
            obj = self.eval(expr.obj, this, env)
            if obj is None:
                raise MlRuntimeError(
                    f"null field access '{expr.name}' at {expr.pos.line}:{expr.pos.column}"
                )
            value = obj.fields[expr.name]
            if expr.is_scalar and emit_read:
                self.writer.emit(
                    "read", frame=self._stack[-1], parent=self._parent_of_top(),
                    prop_id=expr.prop_id, obj_id=obj.obj_id, value=self._trace_value(value),
                )
            return value
        if isinstance(expr, ast.MethodCall):
            return self.eval_call(expr, this, env)
        if isinstance(expr, ast.SamplerCall):
            return self.eval_sampler(expr, this, env)
        if isinstance(expr, ast.Unary):
            operand = self.eval(expr.operand, this, env)
            if expr.op == "-":
                return -operand
            return not operand
        if isinstance(expr, ast.Binary):
            return self.eval_binary(expr, this, env)
        raise AssertionError(f"unhandled expression {expr!r}")

    def eval_call(self, expr: ast.MethodCall, this: MlObject, env: Scope):
        receiver = self.eval(expr.obj, this, env)
        if receiver is None:
            raise MlRuntimeError(
                f"call '{expr.name}' on null at {expr.pos.line}:{expr.pos.column}"
            )
        method = self._lookup_method(receiver.class_name, expr.name)
        arg_values = [self.eval(a, this, env) for a in expr.args]
        locals_ = {}
        traced_args = []
        for (pname, ptype), value in zip(method.params, arg_values):
            coerced = self._coerce(ptype, value)
            locals_[pname] = coerced
            traced_args.append((pname, self._trace_value(coerced)))
        frame = self._next_frame
        self._next_frame += 1
        parent = self._stack[-1]
        self.writer.emit(
            "enter", frame=frame, parent=parent,
            exec_id=expr.callee_id, site=expr.site_index, args=tuple(traced_args),
        )
        self._stack.append(frame)
        self._frame_exec[frame] = expr.callee_id
        ret = self.call_body(method, receiver, locals_)
        self._stack.pop()
        self.writer.emit(
            "exit", frame=frame, parent=parent,
            exec_id=expr.callee_id, ret=self._trace_value(ret),
        )
        return ret

    def eval_sampler(self, expr: ast.SamplerCall, this: MlObject, env: Scope):
        try:
            if expr.sampler == "categorical":
                pairs = [
                    (self.eval(v, this, env), self.eval(w, this, env))
                    for v, w in expr.pairs
                ]
                return self.rng.categorical(pairs)
            a = float(self.eval(expr.args[0], this, env))
            b = float(self.eval(expr.args[1], this, env))
            if expr.sampler == "normal":
                return self.rng.normal(a, b)
            if expr.sampler == "lognormal":
                return self.rng.lognormal(a, b)
            return self.rng.uniform(a, b)
        except InvalidParams as exc:
            raise MlRuntimeError(str(exc))

    def eval_binary(self, expr: ast.Binary, this: MlObject, env: Scope):
        op = expr.op
        if op == "&&":
            return bool(self.eval(expr.left, this, env)) and bool(self.eval(expr.right, this, env))
        if op == "||":
            return bool(self.eval(expr.left, this, env)) or bool(self.eval(expr.right, this, env))
        left = self.eval(expr.left, this, env)
        right = self.eval(expr.right, this, env)
        if op == "==":
            return self._equals(left, right)
        if op == "!=":
            return not self._equals(left, right)
        if op in ("<", "<=", ">", ">="):
            return {"<": left < right, "<=": left <= right, ">": left > right, ">=": left >= right}[op]
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if op == "/":
            if isinstance(left, int) and isinstance(right, int):
                if right == 0:
                    raise MlRuntimeError(f"division by zero at {expr.pos.line}:{expr.pos.column}")
                return int(math.trunc(left / right))  # truncating int division
            result = float(left) / float(right) if right != 0 else None
            if result is None or not math.isfinite(result):
                raise MlRuntimeError(f"division by zero at {expr.pos.line}:{expr.pos.column}")
            return result
        if op == "%":
            if right == 0:
                raise MlRuntimeError(f"modulo by zero at {expr.pos.line}:{expr.pos.column}")
            return left - int(math.trunc(left / right)) * right  # C-style sign
        raise AssertionError(f"unhandled operator {op}")

    @staticmethod
    def _equals(a, b) -> bool:
        if isinstance(a, MlObject) or isinstance(b, MlObject) or a is None or b is None:
            return a is b
        return a == b

    def execute(self, iterations: int) -> TraceLog:
        if iterations < 1:
            raise PsmError(f"iterations must be >= 1, got {iterations}")
        for _ in range(iterations):
            self.run_iteration()
        return self.writer.log()


def execute(program: ast.Program, seed: int, iterations: int) -> TraceLog:
    """Run the entry driver `iterations` times; deterministic in (program, seed, iterations)."""
    return Interpreter(program, seed).execute(iterations)
