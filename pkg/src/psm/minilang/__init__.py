"""ML0: a small class-based language with a tracing interpreter."""

from psm.minilang.ast import ClassDecl, MethodDecl, Program
from psm.minilang.parser import analyze_source, parse
from psm.minilang.interpreter import execute
from psm.minilang.rng import SplitRng

__all__ = [
    "Program",
    "ClassDecl",
    "MethodDecl",
    "parse",
    "analyze_source",
    "execute",
    "SplitRng",
]
