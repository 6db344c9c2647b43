"""Tokenizer for ML0 source text."""

from __future__ import annotations

from dataclasses import dataclass

from psm.errors import Diagnostic, MiniLangSyntaxError

KEYWORDS = {
    "class", "fun", "let", "if", "else", "while", "return", "entry",
    "new", "this", "true", "false", "null", "void",
    "int", "float", "bool", "string",
    "normal", "lognormal", "uniform", "categorical",
}

SYMBOLS = [
    "&&", "||", "==", "!=", "<=", ">=",
    "{", "}", "(", ")", ",", ";", ":", ".", "=", "<", ">",
    "+", "-", "*", "/", "%", "!",
]


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "int", "float", "string", a keyword, or a symbol
    text: str
    line: int
    column: int
    value: object = None

    def __repr__(self) -> str:
        return f"Token({self.kind!r}, {self.text!r}, {self.line}:{self.column})"


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def err(msg: str, ln: int, cl: int):
        raise MiniLangSyntaxError([Diagnostic(msg, ln, cl)])

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
                if j < n and source[j] in "eE":
                    k = j + 1
                    if k < n and source[k] in "+-":
                        k += 1
                    if k < n and source[k].isdigit():
                        j = k
                        while j < n and source[j].isdigit():
                            j += 1
                text = source[i:j]
                tokens.append(Token("float", text, start_line, start_col, float(text)))
            else:
                text = source[i:j]
                tokens.append(Token("int", text, start_line, start_col, int(text)))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            kind = text if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, start_line, start_col))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            buf = []
            while j < n and source[j] != '"':
                if source[j] == "\n":
                    err("unterminated string literal", start_line, start_col)
                if source[j] == "\\":
                    if j + 1 >= n:
                        err("unterminated escape", start_line, start_col)
                    esc = source[j + 1]
                    mapped = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc)
                    if mapped is None:
                        err(f"unknown escape \\{esc}", line, col + (j - i))
                    buf.append(mapped)
                    j += 2
                else:
                    buf.append(source[j])
                    j += 1
            if j >= n:
                err("unterminated string literal", start_line, start_col)
            tokens.append(Token("string", source[i : j + 1], start_line, start_col, "".join(buf)))
            col += j + 1 - i
            i = j + 1
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token(sym, sym, start_line, start_col))
                i += len(sym)
                col += len(sym)
                break
        else:
            err(f"unexpected character {ch!r}", start_line, start_col)
    tokens.append(Token("eof", "", line, col))
    return tokens
