"""Source positions and diagnostics shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Pos:
    line: int
    col: int
    offset: int = 0
    file: str | None = None

    def __str__(self) -> str:
        prefix = f"{self.file}:" if self.file else ""
        return f"{prefix}{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    pos: Pos | None = None

    def format(self, file: str | None = None) -> str:
        where = file or (self.pos.file if self.pos else None) or "<input>"
        line, col = (self.pos.line, self.pos.col) if self.pos else (0, 0)
        return f"{where}:{line}:{col}: {self.code}: {self.message}"

    def __str__(self) -> str:
        return self.format()


class SaxError(Exception):
    """Raised with one or more diagnostics when a stage cannot continue."""

    def __init__(self, diagnostics: Diagnostic | list[Diagnostic]):
        if isinstance(diagnostics, Diagnostic):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    @property
    def code(self) -> str:
        return self.diagnostics[0].code


def fail(code: str, message: str, pos: Pos | None = None):
    raise SaxError(Diagnostic(code, message, pos))
