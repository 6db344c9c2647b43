"""Name resolution, type checking, and static annotations for ML0.

Types are declared, never inferred; `int` widens implicitly to `float`.
Besides checking, this pass annotates the AST: expression types, the
property id and scalar flag of every field access, and per-callee call
site indices in body order.  Both the interpreter and the structural
analyzer consume those annotations, so they can never disagree.
"""

from __future__ import annotations

from psm.errors import Diagnostic
from psm.minilang import ast
from psm.minilang.ast import SCALAR_KINDS

NUMERIC = ("int", "float")


def _widen(a: str, b: str) -> str | None:
    """Result kind of a numeric pair, or None if not numeric."""
    if a in NUMERIC and b in NUMERIC:
        return "float" if "float" in (a, b) else "int"
    return None


def _assignable(target: str, value: str, classes) -> bool:
    if target == value:
        return True
    if target == "float" and value == "int":
        return True
    if target in classes and value == "null":
        return True
    return False


class _Checker:
    def __init__(self, program: ast.Program):
        self.program = program
        self.classes: dict[str, ast.ClassDecl] = {}
        self.diagnostics: list[tuple[str, Diagnostic]] = []

    def error(self, category: str, message: str, pos: ast.Pos):
        self.diagnostics.append((category, Diagnostic(message, pos.line, pos.column)))

    # --- declarations ---

    def declare(self):
        for cls in self.program.classes:
            if cls.name in self.classes:
                first = self.classes[cls.name].pos
                self.error(
                    "name",
                    f"duplicate class '{cls.name}' (first declared at {first.line}:{first.column})",
                    cls.pos,
                )
                continue
            self.classes[cls.name] = cls
        for cls in self.classes.values():
            seen: dict[str, ast.Pos] = {}
            for prop in cls.properties:
                if prop.name in seen:
                    self.error("name", f"duplicate property '{cls.name}.{prop.name}'", prop.pos)
                seen[prop.name] = prop.pos
                self.check_type_ref(prop.type_name, prop.pos)
            mseen: dict[str, ast.Pos] = {}
            for meth in cls.methods:
                if meth.name in mseen:
                    self.error("name", f"duplicate method '{cls.name}.{meth.name}'", meth.pos)
                if meth.name in seen:
                    self.error("name", f"method '{cls.name}.{meth.name}' collides with a property", meth.pos)
                mseen[meth.name] = meth.pos
                pseen: set[str] = set()
                for pname, ptype in meth.params:
                    if pname in pseen:
                        self.error("name", f"duplicate parameter '{pname}' in '{cls.name}.{meth.name}'", meth.pos)
                    pseen.add(pname)
                    self.check_type_ref(ptype, meth.pos)
                if meth.return_type != "void":
                    self.check_type_ref(meth.return_type, meth.pos)
        entry = self.program.entry
        if entry is None:
            pos = ast.Pos(1, 1)
            self.error("name", "missing entry declaration", pos)
        else:
            cls_name, meth_name = entry
            cls = self.classes.get(cls_name)
            if cls is None:
                self.error("name", f"entry class '{cls_name}' is not declared", ast.Pos(1, 1))
            else:
                meth = next((m for m in cls.methods if m.name == meth_name), None)
                if meth is None:
                    self.error("name", f"entry method '{cls_name}.{meth_name}' is not declared", cls.pos)
                elif meth.params:
                    self.error("type", f"entry method '{cls_name}.{meth_name}' must take no parameters", meth.pos)

    def check_type_ref(self, type_name: str, pos: ast.Pos):
        if type_name in SCALAR_KINDS or type_name in self.classes:
            return
        self.error("name", f"unknown type '{type_name}'", pos)

    # --- method bodies ---

    def check_bodies(self):
        for cls in self.classes.values():
            for meth in cls.methods:
                self.check_method(cls, meth)

    def check_method(self, cls: ast.ClassDecl, meth: ast.MethodDecl):
        scope: dict[str, str] = {}
        for pname, ptype in meth.params:
            scope[pname] = ptype
        site_counters: dict[str, int] = {}
        self.check_block(meth.body, cls, meth, dict(scope), site_counters)
        if meth.return_type != "void" and not self.always_returns(meth.body):
            self.error(
                "type",
                f"method '{cls.name}.{meth.name}' must return a value on every path",
                meth.pos,
            )

    def always_returns(self, block: ast.Block) -> bool:
        for stmt in block.statements:
            if isinstance(stmt, ast.Return):
                return True
            if isinstance(stmt, ast.If) and stmt.orelse is not None:
                if self.always_returns(stmt.then) and self.always_returns(stmt.orelse):
                    return True
        return False

    def check_block(self, block: ast.Block, cls, meth, scope: dict[str, str], sites: dict[str, int]):
        for stmt in block.statements:
            self.check_stmt(stmt, cls, meth, scope, sites)

    def check_stmt(self, stmt: ast.Stmt, cls, meth, scope, sites):
        if isinstance(stmt, ast.Let):
            self.check_type_ref(stmt.type_name, stmt.pos)
            vtype = self.check_expr(stmt.value, cls, meth, scope, sites)
            if stmt.name in scope:
                self.error("name", f"variable '{stmt.name}' already declared", stmt.pos)
            if vtype and not _assignable(stmt.type_name, vtype, self.classes):
                self.error("type", f"cannot assign {vtype} to {stmt.type_name} '{stmt.name}'", stmt.pos)
            scope[stmt.name] = stmt.type_name
        elif isinstance(stmt, ast.Assign):
            ttype = self.check_expr(stmt.target, cls, meth, scope, sites, lvalue=True)
            vtype = self.check_expr(stmt.value, cls, meth, scope, sites)
            if ttype and vtype and not _assignable(ttype, vtype, self.classes):
                self.error("type", f"cannot assign {vtype} to {ttype}", stmt.pos)
        elif isinstance(stmt, ast.If):
            ctype = self.check_expr(stmt.cond, cls, meth, scope, sites)
            if ctype and ctype != "bool":
                self.error("type", f"if condition must be bool, got {ctype}", stmt.pos)
            self.check_block(stmt.then, cls, meth, dict(scope), sites)
            if stmt.orelse is not None:
                self.check_block(stmt.orelse, cls, meth, dict(scope), sites)
        elif isinstance(stmt, ast.While):
            ctype = self.check_expr(stmt.cond, cls, meth, scope, sites)
            if ctype and ctype != "bool":
                self.error("type", f"while condition must be bool, got {ctype}", stmt.pos)
            self.check_block(stmt.body, cls, meth, dict(scope), sites)
        elif isinstance(stmt, ast.Return):
            if stmt.value is None:
                if meth.return_type != "void":
                    self.error("type", f"return needs a {meth.return_type} value", stmt.pos)
            else:
                vtype = self.check_expr(stmt.value, cls, meth, scope, sites)
                if meth.return_type == "void":
                    self.error("type", "void method cannot return a value", stmt.pos)
                elif vtype and not _assignable(meth.return_type, vtype, self.classes):
                    self.error("type", f"cannot return {vtype} from a {meth.return_type} method", stmt.pos)
        elif isinstance(stmt, ast.ExprStmt):
            self.check_expr(stmt.expr, cls, meth, scope, sites)

    # --- expressions ---

    def check_expr(self, expr: ast.Expr, cls, meth, scope, sites, lvalue: bool = False) -> str | None:
        t = self._expr_type(expr, cls, meth, scope, sites, lvalue)
        expr.type = t
        return t

    def _expr_type(self, expr, cls, meth, scope, sites, lvalue) -> str | None:
        if isinstance(expr, ast.IntLit):
            return "int"
        if isinstance(expr, ast.FloatLit):
            return "float"
        if isinstance(expr, ast.BoolLit):
            return "bool"
        if isinstance(expr, ast.StrLit):
            return "string"
        if isinstance(expr, ast.NullLit):
            return "null"
        if isinstance(expr, ast.This):
            return cls.name
        if isinstance(expr, ast.Name):
            if expr.ident not in scope:
                self.error("name", f"unknown variable '{expr.ident}'", expr.pos)
                return None
            return scope[expr.ident]
        if isinstance(expr, ast.New):
            if expr.class_name not in self.classes:
                self.error("name", f"unknown class '{expr.class_name}'", expr.pos)
                return None
            return expr.class_name
        if isinstance(expr, ast.FieldAccess):
            otype = self.check_expr(expr.obj, cls, meth, scope, sites)
            if otype is None:
                return None
            owner = self.classes.get(otype)
            if owner is None:
                self.error("type", f"cannot access field '{expr.name}' on {otype}", expr.pos)
                return None
            prop = next((p for p in owner.properties if p.name == expr.name), None)
            if prop is None:
                self.error("name", f"class '{otype}' has no property '{expr.name}'", expr.pos)
                return None
            expr.prop_id = f"{otype}.{prop.name}"
            expr.is_scalar = prop.type_name in SCALAR_KINDS
            return prop.type_name
        if isinstance(expr, ast.MethodCall):
            otype = self.check_expr(expr.obj, cls, meth, scope, sites)
            if otype is None:
                return None
            owner = self.classes.get(otype)
            if owner is None:
                self.error("type", f"cannot call method '{expr.name}' on {otype}", expr.pos)
                return None
            callee = next((m for m in owner.methods if m.name == expr.name), None)
            if callee is None:
                self.error("name", f"class '{otype}' has no method '{expr.name}'", expr.pos)
                return None
            expr.callee_id = f"{otype}.{callee.name}"
            expr.site_index = sites.get(expr.callee_id, 0)
            sites[expr.callee_id] = expr.site_index + 1
            if len(expr.args) != len(callee.params):
                self.error(
                    "type",
                    f"'{expr.callee_id}' expects {len(callee.params)} arguments, got {len(expr.args)}",
                    expr.pos,
                )
            for arg, (pname, ptype) in zip(expr.args, callee.params):
                atype = self.check_expr(arg, cls, meth, scope, sites)
                if atype and not _assignable(ptype, atype, self.classes):
                    self.error("type", f"argument '{pname}' of '{expr.callee_id}' needs {ptype}, got {atype}", arg.pos)
            return callee.return_type if callee.return_type != "void" else "void"
        if isinstance(expr, ast.SamplerCall):
            return self.check_sampler(expr, cls, meth, scope, sites)
        if isinstance(expr, ast.Unary):
            otype = self.check_expr(expr.operand, cls, meth, scope, sites)
            if expr.op == "-":
                if otype and otype not in NUMERIC:
                    self.error("type", f"unary '-' needs a numeric operand, got {otype}", expr.pos)
                return otype if otype in NUMERIC else None
            if otype and otype != "bool":
                self.error("type", f"'!' needs a bool operand, got {otype}", expr.pos)
            return "bool"
        if isinstance(expr, ast.Binary):
            return self.check_binary(expr, cls, meth, scope, sites)
        raise AssertionError(f"unhandled expression {expr!r}")

    def check_sampler(self, expr: ast.SamplerCall, cls, meth, scope, sites) -> str | None:
        if expr.sampler == "categorical":
            kinds = set()
            for value, weight in expr.pairs:
                vtype = self.check_expr(value, cls, meth, scope, sites)
                if not isinstance(value, (ast.IntLit, ast.FloatLit, ast.StrLit, ast.BoolLit)):
                    self.error("type", "categorical values must be literals", value.pos)
                elif vtype:
                    kinds.add(vtype)
                wtype = self.check_expr(weight, cls, meth, scope, sites)
                if wtype and wtype not in NUMERIC:
                    self.error("type", f"categorical weight must be numeric, got {wtype}", weight.pos)
            if len(kinds) > 1:
                self.error("type", f"categorical values must share one kind, got {sorted(kinds)}", expr.pos)
            return next(iter(kinds)) if len(kinds) == 1 else None
        if len(expr.args) != 2:
            self.error("type", f"{expr.sampler} expects 2 arguments, got {len(expr.args)}", expr.pos)
        for arg in expr.args:
            atype = self.check_expr(arg, cls, meth, scope, sites)
            if atype and atype not in NUMERIC:
                self.error("type", f"{expr.sampler} arguments must be numeric, got {atype}", arg.pos)
        return "float"

    def check_binary(self, expr: ast.Binary, cls, meth, scope, sites) -> str | None:
        lt = self.check_expr(expr.left, cls, meth, scope, sites)
        rt = self.check_expr(expr.right, cls, meth, scope, sites)
        op = expr.op
        if lt is None or rt is None:
            return None
        if op in ("&&", "||"):
            if lt != "bool" or rt != "bool":
                self.error("type", f"'{op}' needs bool operands, got {lt} and {rt}", expr.pos)
            return "bool"
        if op in ("==", "!="):
            comparable = (
                lt == rt
                or _widen(lt, rt) is not None
                or (lt in self.classes and rt in (lt, "null"))
                or (rt in self.classes and lt in (rt, "null"))
                or (lt == "null" and rt in self.classes)
            )
            if not comparable:
                self.error("type", f"cannot compare {lt} and {rt}", expr.pos)
            return "bool"
        if op in ("<", "<=", ">", ">="):
            if _widen(lt, rt) is None:
                self.error("type", f"'{op}' needs numeric operands, got {lt} and {rt}", expr.pos)
            return "bool"
        if op == "+" and lt == "string" and rt == "string":
            return "string"
        if op == "%":
            if lt == "int" and rt == "int":
                return "int"
            self.error("type", f"'%' needs int operands, got {lt} and {rt}", expr.pos)
            return None
        widened = _widen(lt, rt)
        if widened is None:
            self.error("type", f"'{op}' needs numeric operands, got {lt} and {rt}", expr.pos)
            return None
        return widened


def check_program(program: ast.Program) -> list[tuple[str, Diagnostic]]:
    """Return (category, diagnostic) pairs; empty means the program is valid."""
    checker = _Checker(program)
    checker.declare()
    if not any(cat == "name" for cat, _ in checker.diagnostics):
        checker.check_bodies()
    return checker.diagnostics
