"""Textual query language over fitted nodes.

Forms (docs/query-language.md):

    P(Person.weight > 80)
    P(Person.weight > 80 | Person.height < 175)
    DIST(Person.weight | 169 < Person.height < 170)
    SAMPLE(Person, n=100, seed=7)
    SAMPLE(Person.weight | Person.height > 180, n=50)
    SCORE(Person.weight = -10)

References are dotted names resolved against the node catalog at run
time (longest node-id prefix wins), so `Person.weight` addresses the
`weight` variable of the `Person` type node.  A bare node reference
targets all of the node's variables.  Parsing round-trips through
`canonical()`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from psm.density.base import Interval
from psm.errors import QuerySyntaxError

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<ref>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)"
    r"|(?P<str>\"(?:[^\"\\]|\\.)*\")"
    r"|(?P<op><=|>=|=|<|>|\(|\)|,|\|))"
)

KINDS = ("probability", "distribution", "sample", "score", "divergence")
_HEADS = {"P": "probability", "DIST": "distribution", "SAMPLE": "sample", "SCORE": "score", "DIV": "divergence"}


@dataclass
class Query:
    kind: str
    targets: list[str] = field(default_factory=list)  # dotted refs
    target_interval: tuple[str, Interval] | None = None  # probability only
    constraints: dict[str, object] = field(default_factory=dict)  # ref -> point | Interval
    n: int = 0
    seed: int = 0
    allow_low_confidence: bool = False
    node: str | None = None  # filled at resolution time

    def canonical(self) -> str:
        head = {v: k for k, v in _HEADS.items()}[self.kind]
        parts: list[str] = []
        if self.kind == "probability":
            ref, iv = self.target_interval
            parts.append(_render_predicate(ref, iv))
        else:
            parts.extend(self.targets)
        opts = []
        if self.kind == "sample":
            opts.append(f"n={self.n}")
            if self.seed:
                opts.append(f"seed={self.seed}")
        body = ", ".join(parts + opts) if self.kind != "score" else ", ".join(
            f"{ref} = {_render_value(v)}" for ref, v in self.constraints.items()
        )
        cond = ""
        if self.kind != "score" and self.constraints:
            cond = " | " + ", ".join(
                _render_constraint(ref, c) for ref, c in self.constraints.items()
            )
        return f"{head}({body}{cond})"


def _render_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return repr(v)


def _render_predicate(ref: str, iv: Interval) -> str:
    if math.isfinite(iv.lo) and math.isfinite(iv.hi):
        return f"{_render_value(iv.lo)} < {ref} < {_render_value(iv.hi)}"
    if math.isfinite(iv.lo):
        op = ">" if iv.lo_strict else ">="
        return f"{ref} {op} {_render_value(iv.lo)}"
    op = "<" if iv.hi_strict else "<="
    return f"{ref} {op} {_render_value(iv.hi)}"


def _render_constraint(ref: str, c) -> str:
    if isinstance(c, Interval):
        return _render_predicate(ref, c)
    return f"{ref} = {_render_value(c)}"


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.items: list[tuple[str, object, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                if text[pos:].strip():
                    raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
                break
            if m.lastgroup == "num":
                raw = m.group("num")
                value = float(raw) if ("." in raw or "e" in raw or "E" in raw) else int(raw)
                self.items.append(("num", value, m.start()))
            elif m.lastgroup == "ref":
                self.items.append(("ref", m.group("ref"), m.start()))
            elif m.lastgroup == "str":
                raw = m.group("str")[1:-1]
                value = raw.replace('\\"', '"').replace("\\\\", "\\")
                self.items.append(("str", value, m.start()))
            else:
                self.items.append((m.group("op"), m.group("op"), m.start()))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.items[self.i] if self.i < len(self.items) else ("eof", None, len(self.text))

    def next(self):
        item = self.peek()
        if item[0] != "eof":
            self.i += 1
        return item

    def expect(self, kind: str):
        item = self.next()
        if item[0] != kind:
            raise QuerySyntaxError(f"expected {kind!r}, found {item[1]!r}", item[2])
        return item


def _parse_value(tokens: _Tokens):
    kind, value, pos = tokens.next()
    if kind == "num":
        return value
    if kind == "str":
        return value
    if kind == "ref" and value in ("true", "false"):
        return value == "true"
    raise QuerySyntaxError(f"expected a value, found {value!r}", pos)


def _parse_predicate(tokens: _Tokens):
    """One predicate: ref cmp num | num cmp ref cmp num | ref = value."""
    kind, value, pos = tokens.peek()
    if kind == "num":
        lo = _parse_value(tokens)
        op1 = tokens.next()
        if op1[0] not in ("<", "<="):
            raise QuerySyntaxError("expected '<' or '<=' after bound", op1[2])
        ref = tokens.expect("ref")[1]
        op2 = tokens.next()
        if op2[0] not in ("<", "<="):
            raise QuerySyntaxError("expected '<' or '<=' after reference", op2[2])
        hi = _parse_value(tokens)
        return ref, Interval(float(lo), float(hi), lo_strict=op1[0] == "<", hi_strict=op2[0] == "<")
    ref = tokens.expect("ref")[1]
    op, _, oppos = tokens.next()
    if op == "=":
        return ref, _parse_value(tokens)
    if op in (">", ">="):
        lo = _parse_value(tokens)
        return ref, Interval(float(lo), math.inf, lo_strict=op == ">")
    if op in ("<", "<="):
        hi = _parse_value(tokens)
        return ref, Interval(-math.inf, float(hi), hi_strict=op == "<")
    raise QuerySyntaxError(f"expected a comparison, found {op!r}", oppos)


def parse_query(text: str) -> Query:
    tokens = _Tokens(text)
    kind_tok, head, pos = tokens.next()
    if kind_tok != "ref" or head not in _HEADS:
        raise QuerySyntaxError(
            f"expected one of {sorted(_HEADS)} at the start", pos
        )
    query = Query(kind=_HEADS[head])
    tokens.expect("(")

    if query.kind == "probability":
        ref, pred = _parse_predicate(tokens)
        if not isinstance(pred, Interval):
            pred_interval = Interval(float(pred), float(pred), lo_strict=False, hi_strict=False)
            pred = pred_interval
        query.target_interval = (ref, pred)
        query.targets = [ref]
    elif query.kind == "score":
        while True:
            ref = tokens.expect("ref")[1]
            tokens.expect("=")
            query.constraints[ref] = _parse_value(tokens)
            if tokens.peek()[0] == ",":
                tokens.next()
                continue
            break
        query.targets = list(query.constraints)
    else:
        while tokens.peek()[0] == "ref":
            save = tokens.i
            ref = tokens.next()[1]
            if tokens.peek()[0] == "=" and ref in ("n", "seed"):
                tokens.next()
                value = _parse_value(tokens)
                if ref == "n":
                    query.n = int(value)
                else:
                    query.seed = int(value)
            elif tokens.peek()[0] in ("<", "<=", ">", ">=", "="):
                tokens.i = save
                break
            else:
                query.targets.append(ref)
            if tokens.peek()[0] == ",":
                tokens.next()
                continue
            break

    if query.kind != "score" and tokens.peek()[0] == "|":
        tokens.next()
        while True:
            ref, pred = _parse_predicate(tokens)
            query.constraints[ref] = pred
            if tokens.peek()[0] == ",":
                tokens.next()
                continue
            break
    tokens.expect(")")
    tail = tokens.peek()
    if tail[0] != "eof":
        raise QuerySyntaxError(f"unexpected trailing input {tail[1]!r}", tail[2])
    if query.kind in ("probability",) and query.constraints and query.target_interval is None:
        raise QuerySyntaxError("probability query needs a target predicate", 0)
    if query.kind in ("distribution", "sample") and not query.targets:
        raise QuerySyntaxError(f"{query.kind} query needs at least one target", 0)
    if query.n < 0:
        raise QuerySyntaxError("sample count must be >= 0", 0)
    return query
