"""Recursive-descent parser and front-end entry points for ML0.

`analyze_source` returns whatever could be built plus the collected
diagnostics; `parse` is the raising wrapper used by the rest of the
pipeline.  The grammar is documented in docs/ml0.md.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from psm.errors import (
    Diagnostic,
    MiniLangSyntaxError,
    NameResolutionError,
    SourceError,
    TypeCheckError,
)
from psm.minilang import ast
from psm.minilang.checker import check_program
from psm.minilang.lexer import Token, tokenize

SCALAR_TYPES = {"int", "float", "bool", "string"}


@dataclass
class ParseResult:
    program: ast.Program | None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.program is not None and not self.diagnostics


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, *kinds: str) -> bool:
        return self.cur.kind in kinds

    def expect(self, kind: str, what: str | None = None) -> Token:
        if self.cur.kind != kind:
            expected = what or f"'{kind}'"
            self.fail(f"expected {expected}, found '{self.cur.text or 'end of input'}'")
        return self.advance()

    def fail(self, message: str):
        raise MiniLangSyntaxError([Diagnostic(message, self.cur.line, self.cur.column)])

    def pos(self) -> ast.Pos:
        return ast.Pos(self.cur.line, self.cur.column)

    # --- declarations ---

    def parse_program(self) -> ast.Program:
        classes: list[ast.ClassDecl] = []
        entry: tuple[str, str] | None = None
        while not self.at("eof"):
            if self.at("class"):
                classes.append(self.parse_class())
            elif self.at("entry"):
                if entry is not None:
                    self.fail("duplicate entry declaration")
                self.advance()
                cls = self.expect("ident", "class name").text
                self.expect(".")
                meth = self.expect("ident", "method name").text
                self.expect(";")
                entry = (cls, meth)
            else:
                self.fail("expected 'class' or 'entry' declaration")
        return ast.Program(classes=classes, entry=entry)

    def parse_class(self) -> ast.ClassDecl:
        pos = self.pos()
        self.expect("class")
        name = self.expect("ident", "class name").text
        self.expect("{")
        properties: list[ast.PropertyDecl] = []
        methods: list[ast.MethodDecl] = []
        while not self.at("}"):
            if self.at("fun"):
                methods.append(self.parse_method())
            elif self.at("ident"):
                ppos = self.pos()
                pname = self.advance().text
                self.expect(":")
                ptype = self.parse_type()
                self.expect(";")
                prop = ast.PropertyDecl(ppos, pname, ptype)
                properties.append(prop)
            else:
                self.fail("expected property or method declaration")
        self.expect("}")
        return ast.ClassDecl(pos, name, properties, methods)

    def parse_method(self) -> ast.MethodDecl:
        pos = self.pos()
        self.expect("fun")
        name = self.expect("ident", "method name").text
        self.expect("(")
        params: list[tuple[str, str]] = []
        if not self.at(")"):
            while True:
                pname = self.expect("ident", "parameter name").text
                self.expect(":")
                ptype = self.parse_type()
                params.append((pname, ptype))
                if self.at(","):
                    self.advance()
                    continue
                break
        self.expect(")")
        self.expect(":")
        if self.at("void"):
            self.advance()
            ret = "void"
        else:
            ret = self.parse_type()
        body = self.parse_block()
        return ast.MethodDecl(pos, name, params, ret, body)

    def parse_type(self) -> str:
        if self.cur.kind in SCALAR_TYPES:
            return self.advance().text
        if self.at("ident"):
            return self.advance().text
        self.fail("expected a type name")

    # --- statements ---

    def parse_block(self) -> ast.Block:
        pos = self.pos()
        self.expect("{")
        statements: list[ast.Stmt] = []
        while not self.at("}"):
            statements.append(self.parse_statement())
        self.expect("}")
        return ast.Block(pos, statements)

    def parse_statement(self) -> ast.Stmt:
        pos = self.pos()
        if self.at("let"):
            self.advance()
            name = self.expect("ident", "variable name").text
            self.expect(":")
            type_name = self.parse_type()
            self.expect("=")
            value = self.parse_expr()
            self.expect(";")
            return ast.Let(pos, name, type_name, value)
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then = self.parse_block()
            orelse = None
            if self.at("else"):
                self.advance()
                if self.at("if"):
                    nested = self.parse_statement()
                    orelse = ast.Block(nested.pos, [nested])
                else:
                    orelse = self.parse_block()
            return ast.If(pos, cond, then, orelse)
        if self.at("while"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            body = self.parse_block()
            return ast.While(pos, cond, body)
        if self.at("return"):
            self.advance()
            value = None
            if not self.at(";"):
                value = self.parse_expr()
            self.expect(";")
            return ast.Return(pos, value)
        expr = self.parse_expr()
        if self.at("="):
            if not isinstance(expr, (ast.Name, ast.FieldAccess)):
                self.fail("left side of assignment must be a variable or field")
            self.advance()
            value = self.parse_expr()
            self.expect(";")
            return ast.Assign(pos, expr, value)
        self.expect(";")
        return ast.ExprStmt(pos, expr)

    # --- expressions, lowest to highest precedence ---

    def parse_expr(self) -> ast.Expr:
        return self.parse_or()

    def parse_or(self) -> ast.Expr:
        left = self.parse_and()
        while self.at("||"):
            pos = ast.Pos(self.cur.line, self.cur.column)
            self.advance()
            left = ast.Binary(pos, "||", left, self.parse_and())
        return left

    def parse_and(self) -> ast.Expr:
        left = self.parse_equality()
        while self.at("&&"):
            pos = ast.Pos(self.cur.line, self.cur.column)
            self.advance()
            left = ast.Binary(pos, "&&", left, self.parse_equality())
        return left

    def parse_equality(self) -> ast.Expr:
        left = self.parse_comparison()
        while self.at("==", "!="):
            pos = ast.Pos(self.cur.line, self.cur.column)
            op = self.advance().kind
            left = ast.Binary(pos, op, left, self.parse_comparison())
        return left

    def parse_comparison(self) -> ast.Expr:
        left = self.parse_additive()
        while self.at("<", "<=", ">", ">="):
            pos = ast.Pos(self.cur.line, self.cur.column)
            op = self.advance().kind
            left = ast.Binary(pos, op, left, self.parse_additive())
        return left

    def parse_additive(self) -> ast.Expr:
        left = self.parse_multiplicative()
        while self.at("+", "-"):
            pos = ast.Pos(self.cur.line, self.cur.column)
            op = self.advance().kind
            left = ast.Binary(pos, op, left, self.parse_multiplicative())
        return left

    def parse_multiplicative(self) -> ast.Expr:
        left = self.parse_unary()
        while self.at("*", "/", "%"):
            pos = ast.Pos(self.cur.line, self.cur.column)
            op = self.advance().kind
            left = ast.Binary(pos, op, left, self.parse_unary())
        return left

    def parse_unary(self) -> ast.Expr:
        if self.at("-", "!"):
            pos = self.pos()
            op = self.advance().kind
            return ast.Unary(pos, op, self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self) -> ast.Expr:
        expr = self.parse_primary()
        while self.at("."):
            pos = self.pos()
            self.advance()
            name = self.expect("ident", "member name").text
            if self.at("("):
                args = self.parse_args()
                expr = ast.MethodCall(pos, expr, name, args)
            else:
                expr = ast.FieldAccess(pos, expr, name)
        return expr

    def parse_args(self) -> list[ast.Expr]:
        self.expect("(")
        args: list[ast.Expr] = []
        if not self.at(")"):
            while True:
                args.append(self.parse_expr())
                if self.at(","):
                    self.advance()
                    continue
                break
        self.expect(")")
        return args

    def parse_primary(self) -> ast.Expr:
        pos = self.pos()
        tok = self.cur
        if tok.kind == "int":
            self.advance()
            return ast.IntLit(pos, tok.value)
        if tok.kind == "float":
            self.advance()
            return ast.FloatLit(pos, tok.value)
        if tok.kind == "string":
            self.advance()
            return ast.StrLit(pos, tok.value)
        if tok.kind in ("true", "false"):
            self.advance()
            return ast.BoolLit(pos, tok.kind == "true")
        if tok.kind == "null":
            self.advance()
            return ast.NullLit(pos)
        if tok.kind == "this":
            self.advance()
            return ast.This(pos)
        if tok.kind == "new":
            self.advance()
            name = self.expect("ident", "class name").text
            self.expect("(")
            self.expect(")")
            return ast.New(pos, name)
        if tok.kind in ("normal", "lognormal", "uniform"):
            self.advance()
            args = self.parse_args()
            return ast.SamplerCall(pos, tok.kind, args)
        if tok.kind == "categorical":
            self.advance()
            return self.parse_categorical(pos)
        if tok.kind == "ident":
            self.advance()
            return ast.Name(pos, tok.text)
        if tok.kind == "(":
            self.advance()
            expr = self.parse_expr()
            self.expect(")")
            return expr
        self.fail(f"expected an expression, found '{tok.text or 'end of input'}'")

    def parse_categorical(self, pos: ast.Pos) -> ast.Expr:
        self.expect("(")
        pairs: list[tuple[ast.Expr, ast.Expr]] = []
        while True:
            value = self.parse_primary()
            self.expect(":")
            weight = self.parse_expr()
            pairs.append((value, weight))
            if self.at(","):
                self.advance()
                continue
            break
        self.expect(")")
        return ast.SamplerCall(pos, "categorical", [], pairs)


def analyze_source(source: str) -> ParseResult:
    """Parse and check, collecting diagnostics instead of raising."""
    try:
        tokens = tokenize(source)
        program = _Parser(tokens).parse_program()
    except SourceError as exc:
        return ParseResult(None, exc.diagnostics)
    tagged = check_program(program)
    return ParseResult(program, [d for _, d in tagged])


def parse(source: str) -> ast.Program:
    """Parse, resolve, and type-check ML0 source; raise on any diagnostic."""
    tokens = tokenize(source)
    program = _Parser(tokens).parse_program()
    tagged = check_program(program)
    if tagged:
        name_diags = [d for cat, d in tagged if cat == "name"]
        if name_diags:
            raise NameResolutionError(name_diags)
        raise TypeCheckError([d for _, d in tagged])
    return program
