"""Deterministic concrete syntax for :class:`~mugie.syntax.Program`.

Layout is canonical: one declaration per line group, two-space
indentation, and every compound operand of an operator is parenthesized
so the output reparses to the same tree regardless of precedence.
Signatures always carry an explicit ``returns`` clause.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, List

from mugie.syntax import (
    Assert,
    Assign,
    Assume,
    Attribute,
    AxiomDecl,
    Binary,
    Block,
    BoolLit,
    Call,
    ConstDecl,
    Formal,
    FunctionApp,
    FunctionDecl,
    GlobalVarDecl,
    Havoc,
    Ident,
    If,
    ImplementationDecl,
    IntLit,
    LocalVarDecl,
    MapSelect,
    MapUpdate,
    Old,
    ProcedureDecl,
    Program,
    Quantifier,
    Return,
    SpecClause,
    TypeDecl,
    Unary,
    While,
)

if TYPE_CHECKING:
    from mugie.genloop import MutantRecord

INDENT = "  "
_ATOMIC = (IntLit, BoolLit, Ident, MapSelect, MapUpdate, FunctionApp, Old, Quantifier)


def attrs(attributes) -> str:
    return "".join(_attr(a) + " " for a in attributes)


def _attr(a: Attribute) -> str:
    return "{:" + a.name + (" " + a.args if a.args else "") + "}"


def operand(e) -> str:
    text = expr(e)
    return text if isinstance(e, _ATOMIC) else "(" + text + ")"


def expr(e) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, MapSelect):
        return operand(e.map) + "[" + ", ".join(expr(i) for i in e.indices) + "]"
    if isinstance(e, MapUpdate):
        idx = ", ".join(expr(i) for i in e.indices)
        return operand(e.map) + "[" + idx + " := " + expr(e.value) + "]"
    if isinstance(e, Unary):
        return e.op + operand(e.operand)
    if isinstance(e, Binary):
        return f"{operand(e.left)} {e.op} {operand(e.right)}"
    if isinstance(e, FunctionApp):
        return e.name + "(" + ", ".join(expr(a) for a in e.args) + ")"
    if isinstance(e, Old):
        return "old(" + expr(e.expr) + ")"
    if isinstance(e, Quantifier):
        bound = ", ".join(f"{b.name}: {b.type}" for b in e.bound)
        extras = attrs(e.attributes) + "".join(
            "{" + ", ".join(expr(t) for t in trig.terms) + "} " for trig in e.triggers
        )
        return f"({e.kind} {bound} :: {extras}{expr(e.body)})"
    raise TypeError(f"not an expression: {e!r}")


def _formals(formals) -> str:
    return "(" + ", ".join(f"{f.name}: {f.type}" for f in formals) + ")"


def _function_formal(f: Formal) -> str:
    return str(f.type) if f.name is None else f"{f.name}: {f.type}"


def _clause(c: SpecClause) -> str:
    return ("free " if c.free else "") + c.kind + " " + attrs(c.attributes) + expr(c.expr) + ";"


def block(b: Block, depth: int) -> List[str]:
    lines = []
    for s in b.stmts:
        lines.extend(statement(s, depth))
    return lines


def _braced(b: Block, depth: int, opener: str) -> List[str]:
    return [INDENT * depth + opener + "{"] + block(b, depth + 1) + [INDENT * depth + "}"]


def statement(s, depth: int) -> List[str]:
    pad = INDENT * depth
    if isinstance(s, LocalVarDecl):
        return [f"{pad}var {attrs(s.attributes)}{', '.join(s.names)}: {s.type};"]
    if isinstance(s, Assign):
        lhs = ", ".join(expr(e) for e in s.lhs)
        rhs = ", ".join(expr(e) for e in s.rhs)
        return [f"{pad}{lhs} := {rhs};"]
    if isinstance(s, Assert):
        return [f"{pad}assert {attrs(s.attributes)}{expr(s.expr)};"]
    if isinstance(s, Assume):
        return [f"{pad}assume {attrs(s.attributes)}{expr(s.expr)};"]
    if isinstance(s, Havoc):
        return [f"{pad}havoc {', '.join(s.names)};"]
    if isinstance(s, Call):
        outs = ", ".join(s.outs) + " := " if s.outs else ""
        args = ", ".join(expr(a) for a in s.args)
        return [f"{pad}call {attrs(s.attributes)}{outs}{s.name}({args});"]
    if isinstance(s, If):
        cond = "*" if s.cond is None else expr(s.cond)
        lines = _braced(s.then, depth, f"if ({cond}) ")
        if s.else_ is not None:
            tail = _braced(s.else_, depth, "")
            lines[-1] += " else " + tail[0].lstrip()
            lines.extend(tail[1:])
        return lines
    if isinstance(s, While):
        cond = "*" if s.cond is None else expr(s.cond)
        lines = [f"{pad}while ({cond})"]
        lines.extend(pad + INDENT + _clause(c) for c in s.invariants)
        return lines + _braced(s.body, depth, "")
    if isinstance(s, Return):
        return [pad + "return;"]
    if isinstance(s, Block):
        return _braced(s, depth, "")
    raise TypeError(f"not a statement: {s!r}")


def declaration(d) -> str:
    if isinstance(d, TypeDecl):
        rhs = f" = {d.synonym}" if d.synonym is not None else ""
        return f"type {attrs(d.attributes)}{d.name}{rhs};"
    if isinstance(d, ConstDecl):
        unique = "unique " if d.unique else ""
        return f"const {attrs(d.attributes)}{unique}{', '.join(d.names)}: {d.type};"
    if isinstance(d, GlobalVarDecl):
        return f"var {attrs(d.attributes)}{', '.join(d.names)}: {d.type};"
    if isinstance(d, FunctionDecl):
        params = "(" + ", ".join(_function_formal(f) for f in d.params) + ")"
        head = f"function {attrs(d.attributes)}{d.name}{params} returns ({_function_formal(d.result)})"
        if d.body is None:
            return head + ";"
        return head + " { " + expr(d.body) + " }"
    if isinstance(d, AxiomDecl):
        return f"axiom {attrs(d.attributes)}{expr(d.expr)};"
    if isinstance(d, ProcedureDecl):
        head = f"procedure {attrs(d.attributes)}{d.name}{_formals(d.params)} returns {_formals(d.returns)}"
        spec = [INDENT + _clause(c) for c in d.spec.requires]
        if d.spec.modifies:
            spec.append(INDENT + "modifies " + ", ".join(d.spec.modifies) + ";")
        spec.extend(INDENT + _clause(c) for c in d.spec.ensures)
        if d.body is None:
            return "\n".join([head + ";"] + spec)
        return "\n".join([head] + spec + _braced(d.body, 0, ""))
    if isinstance(d, ImplementationDecl):
        head = f"implementation {attrs(d.attributes)}{d.name}{_formals(d.params)} returns {_formals(d.returns)}"
        return "\n".join([head] + _braced(d.body, 0, ""))
    raise TypeError(f"not a declaration: {d!r}")


def print_program(p: Program) -> str:
    if not p.declarations:
        return ""
    return "\n".join(declaration(d) for d in p.declarations) + "\n"


def print_with_lineage(p: Program, rec: "MutantRecord") -> str:
    return rec.header() + "\n" + print_program(p)
