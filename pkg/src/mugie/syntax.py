"""Abstract syntax of the supported Boogie subset.

All nodes are frozen dataclasses.  Source locations are carried for
diagnostics but never take part in equality or hashing, so two parses of
the same text compare equal regardless of layout.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple, Union


@dataclass(frozen=True)
class Loc:
    file: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


def _loc():
    return field(default=None, compare=False, hash=False, repr=False)


@dataclass(frozen=True)
class Attribute:
    """Opaque ``{:name args}`` payload; args keep their token text."""

    name: str
    args: str = ""


Attrs = Tuple[Attribute, ...]


# -- types -------------------------------------------------------------------


@dataclass(frozen=True)
class IntType:
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class BoolType:
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class NamedType:
    name: str
    loc: Optional[Loc] = _loc()

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class MapType:
    domain: Tuple["Type", ...]
    range: "Type"

    def __str__(self) -> str:
        return "[" + ", ".join(str(t) for t in self.domain) + "]" + str(self.range)


Type = Union[IntType, BoolType, NamedType, MapType]

INT = IntType()
BOOL = BoolType()


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Ident:
    name: str
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class MapSelect:
    map: "Expr"
    indices: Tuple["Expr", ...]
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class MapUpdate:
    map: "Expr"
    indices: Tuple["Expr", ...]
    value: "Expr"
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Unary:
    op: str  # "!" or "-"
    operand: "Expr"
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class BoundVar:
    name: str
    type: Type
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Trigger:
    terms: Tuple["Expr", ...]
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Quantifier:
    kind: str  # "forall" or "exists"
    bound: Tuple[BoundVar, ...]
    attributes: Attrs
    triggers: Tuple[Trigger, ...]
    body: "Expr"
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class FunctionApp:
    name: str
    args: Tuple["Expr", ...]
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Old:
    expr: "Expr"
    loc: Optional[Loc] = _loc()


Expr = Union[IntLit, BoolLit, Ident, MapSelect, MapUpdate, Unary, Binary, Quantifier, FunctionApp, Old]


# -- specifications and statements -------------------------------------------

REQUIRES = "requires"
ENSURES = "ensures"
INVARIANT = "invariant"
ASSERT = "assert"


@dataclass(frozen=True)
class SpecClause:
    kind: str  # REQUIRES, ENSURES or INVARIANT
    expr: Expr
    free: bool = False
    attributes: Attrs = ()
    loc: Optional[Loc] = _loc()

    @property
    def mutable(self) -> bool:
        # free and attributed clauses are never mutation sites
        return not self.free and not self.attributes


@dataclass(frozen=True)
class Specification:
    requires: Tuple[SpecClause, ...] = ()
    ensures: Tuple[SpecClause, ...] = ()
    modifies: Tuple[str, ...] = ()


@dataclass(frozen=True)
class LocalVarDecl:
    names: Tuple[str, ...]
    type: Type
    attributes: Attrs = ()
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Assign:
    lhs: Tuple[Expr, ...]  # Ident or MapSelect rooted at an Ident
    rhs: Tuple[Expr, ...]
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Assert:
    expr: Expr
    attributes: Attrs = ()
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Assume:
    expr: Expr
    attributes: Attrs = ()
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Havoc:
    names: Tuple[str, ...]
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple[Expr, ...]
    outs: Tuple[str, ...] = ()
    attributes: Attrs = ()
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Block:
    stmts: Tuple["Statement", ...] = ()


@dataclass(frozen=True)
class If:
    cond: Optional[Expr]  # None is the nondeterministic guard ``*``
    then: Block
    else_: Optional[Block] = None
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class While:
    cond: Optional[Expr]
    invariants: Tuple[SpecClause, ...]
    body: Block
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Return:
    loc: Optional[Loc] = _loc()


Statement = Union[LocalVarDecl, Assign, Assert, Assume, Havoc, Call, If, While, Return, Block]


# -- declarations ------------------------------------------------------------


@dataclass(frozen=True)
class Formal:
    name: Optional[str]  # function parameters may be anonymous
    type: Type
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class TypeDecl:
    name: str
    synonym: Optional[Type] = None
    attributes: Attrs = ()
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class ConstDecl:
    names: Tuple[str, ...]
    type: Type
    unique: bool = False
    attributes: Attrs = ()
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class GlobalVarDecl:
    names: Tuple[str, ...]
    type: Type
    attributes: Attrs = ()
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    params: Tuple[Formal, ...]
    result: Formal
    body: Optional[Expr] = None
    attributes: Attrs = ()
    explicit_returns: bool = True  # False for the ``: T`` result form
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class AxiomDecl:
    expr: Expr
    attributes: Attrs = ()
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class ProcedureDecl:
    name: str
    params: Tuple[Formal, ...]
    returns: Tuple[Formal, ...]
    spec: Specification = Specification()
    body: Optional[Block] = None
    attributes: Attrs = ()
    explicit_returns: bool = True
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class ImplementationDecl:
    name: str
    params: Tuple[Formal, ...]
    returns: Tuple[Formal, ...]
    body: Block
    attributes: Attrs = ()
    explicit_returns: bool = True
    loc: Optional[Loc] = _loc()


Declaration = Union[
    TypeDecl, ConstDecl, GlobalVarDecl, FunctionDecl, AxiomDecl, ProcedureDecl, ImplementationDecl
]


@dataclass(frozen=True)
class Program:
    declarations: Tuple[Declaration, ...] = ()

    def __len__(self) -> int:
        return len(self.declarations)

    def __add__(self, other: "Program") -> "Program":
        return Program(self.declarations + other.declarations)


def is_node(value) -> bool:
    return dataclasses.is_dataclass(value) and not isinstance(value, type)


def walk(node) -> Iterator:
    """Yield ``node`` and every AST node below it in pre-order."""
    yield node
    for f in dataclasses.fields(node):
        if f.name == "loc":
            continue
        value = getattr(node, f.name)
        if isinstance(value, tuple):
            for item in value:
                if is_node(item):
                    yield from walk(item)
        elif is_node(value):
            yield from walk(value)


def normalize(p: Program) -> Program:
    """Give every function, procedure and implementation an explicit returns clause."""
    decls = []
    for d in p.declarations:
        if isinstance(d, (FunctionDecl, ProcedureDecl, ImplementationDecl)) and not d.explicit_returns:
            d = dataclasses.replace(d, explicit_returns=True)
        decls.append(d)
    return Program(tuple(decls))


def program_fingerprint(p: Program) -> str:
    """SHA-256 of the normalized printed text (lineage header excluded)."""
    from mugie.printer import print_program

    return hashlib.sha256(print_program(p).encode("utf-8")).hexdigest()
