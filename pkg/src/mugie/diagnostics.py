from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional

from mugie.syntax import Loc

ERROR = "error"
WARNING = "warning"

# diagnostic codes
SYNTAX = "syntax"
UNSUPPORTED = "unsupported"
UNRESOLVED = "unresolved"
TYPE_MISMATCH = "type"
DUPLICATE = "duplicate"
NO_PROCEDURE = "implementation"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    loc: Optional[Loc]
    message: str
    code: str = SYNTAX

    def __str__(self) -> str:
        where = f"{self.loc}: " if self.loc is not None else ""
        return f"{where}{self.severity}: {self.message}"


class IVLError(Exception):
    """Raised with one or more error diagnostics attached."""

    def __init__(self, diagnostics: Iterable[Diagnostic]):
        self.diagnostics: List[Diagnostic] = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    @property
    def codes(self) -> set:
        return {d.code for d in self.diagnostics}


class ParseError(IVLError):
    pass


class TypeCheckError(IVLError):
    pass
