"""Source spans, diagnostics, and the error types shared by every pipeline stage."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Span:
    """Half-open byte range [start, end) into the source text."""

    start: int
    end: int

    def merge(self, other: "Span") -> "Span":
        return Span(min(self.start, other.start), max(self.end, other.end))


EMPTY_SPAN = Span(0, 0)


def line_col(source: str, offset: int) -> tuple[int, int]:
    """1-based line and column of a byte offset."""
    if offset > len(source):
        offset = len(source)
    line = source.count("\n", 0, offset) + 1
    last_nl = source.rfind("\n", 0, offset)
    col = offset - last_nl  # last_nl is -1 on the first line, so col is 1-based
    return line, col


@dataclass
class Diagnostic:
    severity: str  # "error" or "warning"
    code: str  # stable short string, e.g. "E-CONSUMED"
    message: str
    span: Span = field(default=EMPTY_SPAN)

    def render(self, source: str, filename: str = "<input>") -> str:
        line, col = line_col(source, self.span.start)
        return f"{filename}:{line}:{col}: {self.severity}[{self.code}]: {self.message}"


class FuseError(Exception):
    """Base for all compiler-reported failures; carries one diagnostic."""

    def __init__(self, diag: Diagnostic):
        super().__init__(diag.message)
        self.diag = diag

    @property
    def code(self) -> str:
        return self.diag.code


class ParseError(FuseError):
    pass


class CheckError(FuseError):
    pass


def err(code: str, message: str, span: Span = EMPTY_SPAN) -> Diagnostic:
    return Diagnostic("error", code, message, span)
