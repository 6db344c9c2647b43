"""Exception hierarchy shared across the workbench.

Everything user-facing derives from PsmError so the CLI can map
validation failures to a distinct exit code; genuine bugs surface as
ordinary exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    """A positioned message produced by the ML0 front end."""

    message: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}"


class PsmError(Exception):
    """Base class for data and validation errors (CLI exit code 2)."""


class SourceError(PsmError):
    """ML0 front-end failure carrying one or more diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class MiniLangSyntaxError(SourceError):
    pass


class NameResolutionError(SourceError):
    pass


class TypeCheckError(SourceError):
    pass


class InvalidParams(PsmError):
    """Builtin sampler called with parameters outside its family."""


class TraceFormatError(PsmError):
    pass


class MalformedLine(TraceFormatError):
    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {reason}")


class SequenceGap(TraceFormatError):
    def __init__(self, line_number: int, expected: int, found: int):
        self.line_number = line_number
        super().__init__(
            f"line {line_number}: expected seq {expected}, found {found}"
        )


class OrphanFrame(TraceFormatError):
    def __init__(self, line_number: int, frame: int):
        self.line_number = line_number
        super().__init__(f"line {line_number}: frame {frame} has no open parent")


class EmptyUniverse(PsmError):
    pass


class UnresolvedId(PsmError):
    pass


class NoData(PsmError):
    pass


class KindMismatch(PsmError):
    pass


class EmptyDensityError(PsmError):
    pass


class ZeroProbabilityCondition(PsmError):
    pass


class VariableMismatch(PsmError):
    pass


class SchemaMismatch(PsmError):
    pass


class UnknownNode(PsmError):
    pass


class UnknownVariable(PsmError):
    pass


class UnfittedNode(PsmError):
    pass


class QuerySyntaxError(PsmError):
    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} (at offset {position})")


class StratumUnsatisfiable(PsmError):
    def __init__(self, message: str, achieved: int):
        self.achieved = achieved
        super().__init__(message)


class NoOverlap(PsmError):
    pass


class BundleFormatError(PsmError):
    pass
