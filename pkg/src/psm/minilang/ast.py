"""AST node definitions for ML0.

The checker annotates expressions in place: every expression gets a
static ``type`` (a scalar kind, a class name, or "void"/"null"), field
accesses get ``prop_id``/``is_scalar``, and method calls get
``callee_id``/``site_index`` so the interpreter and the static analyzer
agree on call-site numbering by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

SCALAR_KINDS = ("int", "float", "bool", "string")


@dataclass
class Pos:
    line: int
    column: int


@dataclass
class Node:
    pos: Pos


# --- expressions ---


@dataclass
class Expr(Node):
    type: str | None = field(default=None, init=False, compare=False)


@dataclass
class IntLit(Expr):
    value: int


@dataclass
class FloatLit(Expr):
    value: float


@dataclass
class BoolLit(Expr):
    value: bool


@dataclass
class StrLit(Expr):
    value: str


@dataclass
class NullLit(Expr):
    pass


@dataclass
class Name(Expr):
    ident: str


@dataclass
class This(Expr):
    pass


@dataclass
class New(Expr):
    class_name: str


@dataclass
class FieldAccess(Expr):
    obj: Expr
    name: str
    prop_id: str | None = field(default=None, init=False, compare=False)
    is_scalar: bool = field(default=False, init=False, compare=False)


@dataclass
class MethodCall(Expr):
    obj: Expr
    name: str
    args: list[Expr]
    callee_id: str | None = field(default=None, init=False, compare=False)
    site_index: int = field(default=0, init=False, compare=False)


@dataclass
class SamplerCall(Expr):
    sampler: str
    args: list[Expr]  # for categorical: empty, pairs used instead
    pairs: list[tuple[Expr, Expr]] = field(default_factory=list)


@dataclass
class Unary(Expr):
    op: str
    operand: Expr


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


# --- statements ---


@dataclass
class Stmt(Node):
    pass


@dataclass
class Block(Node):
    statements: list[Stmt]


@dataclass
class Let(Stmt):
    name: str
    type_name: str
    value: Expr


@dataclass
class Assign(Stmt):
    target: Expr  # Name or FieldAccess
    value: Expr


@dataclass
class If(Stmt):
    cond: Expr
    then: Block
    orelse: Block | None


@dataclass
class While(Stmt):
    cond: Expr
    body: Block


@dataclass
class Return(Stmt):
    value: Expr | None


@dataclass
class ExprStmt(Stmt):
    expr: Expr


# --- declarations ---


@dataclass
class PropertyDecl(Node):
    name: str
    type_name: str


@dataclass
class MethodDecl(Node):
    name: str
    params: list[tuple[str, str]]  # (name, type)
    return_type: str  # scalar kind, class name, or "void"
    body: Block


@dataclass
class ClassDecl(Node):
    name: str
    properties: list[PropertyDecl]
    methods: list[MethodDecl]


@dataclass
class Program:
    classes: list[ClassDecl]
    entry: tuple[str, str] | None  # (class, method) of the zero-arg driver

    def class_map(self) -> dict[str, ClassDecl]:
        return {c.name: c for c in self.classes}

    @property
    def entry_id(self) -> str | None:
        if self.entry is None:
            return None
        return f"{self.entry[0]}.{self.entry[1]}"
