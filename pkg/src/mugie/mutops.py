"""Mutation operators.

Every operator is a pure function ``(Program, Site) -> MutationResult``.
Sites are structural addresses valid only for the program they were
enumerated from.  Their textual form is what appears in lineage headers:

* ``S1(i,j)``             swap top-level declarations ``i < j``
* ``S5(proc)``            split an inline procedure body into an implementation
* ``S6(i)``               move declaration ``i`` to a companion file
* ``L1(body,i,j)``        swap two local variable declarations
* ``L2(body,d)``          split ``var x, y, ...: T`` into ``var x: T; var y, ...: T``
* ``L4(proc,i,j)``        join two preconditions with ``&&``
* ``L5(proc,i,j)``        join two postconditions with ``&&``
* ``L6(elem,kind,i,j)``   swap two clauses of one kind (adjacent ones for asserts)
* ``L8(stmt)``            negate an if condition and exchange its branches
* ``G1(elem,kind,pos)``   insert a ``true`` clause
* ``G2(decl/q,t)``        drop trigger ``t`` of the ``q``-th quantifier of a declaration

``body`` names a procedure or implementation body (``name`` or ``name@k``
when several declarations of that name carry bodies).  Statement and block
paths extend a body name with ``/``-separated steps: a statement index,
then ``t``/``e`` for if branches or ``b`` for a loop body.
"""

from __future__ import annotations

import dataclasses
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from mugie.syntax import (
    ASSERT,
    ENSURES,
    INVARIANT,
    REQUIRES,
    Assert,
    Binary,
    Block,
    BoolLit,
    If,
    ImplementationDecl,
    LocalVarDecl,
    ProcedureDecl,
    Program,
    Quantifier,
    SpecClause,
    Unary,
    While,
    is_node,
    walk,
)


class OperatorKind(str, Enum):
    S1 = "S1"
    S5 = "S5"
    S6 = "S6"
    L1 = "L1"
    L2 = "L2"
    L4 = "L4"
    L5 = "L5"
    L6 = "L6"
    L8 = "L8"
    G1 = "G1"
    G2 = "G2"

    @property
    def semantics_risky(self) -> bool:
        return self is OperatorKind.G2

    def __str__(self) -> str:
        return self.value


# fixed order; weighted choice and tie-breaking depend on it
OPERATORS: Tuple[OperatorKind, ...] = tuple(OperatorKind)

Arg = Union[int, str]


class InvalidSite(ValueError):
    pass


class OperatorDisabled(RuntimeError):
    pass


@dataclass(frozen=True)
class Site:
    op: OperatorKind
    args: Tuple[Arg, ...]

    def __str__(self) -> str:
        return f"{self.op.value}({','.join(str(a) for a in self.args)})"

    @classmethod
    def parse(cls, text: str) -> "Site":
        m = re.fullmatch(r"\s*([A-Z]\d)\((.*)\)\s*", text)
        if m is None:
            raise ValueError(f"malformed site {text!r}")
        try:
            op = OperatorKind(m.group(1))
        except ValueError:
            raise ValueError(f"unknown operator in {text!r}") from None
        raw = m.group(2)
        args = tuple(int(a) if re.fullmatch(r"-?\d+", a) else a for a in raw.split(",")) if raw else ()
        return cls(op, args)


def split_sites(text: str) -> List[Site]:
    """Parse a comma-separated list of sites such as ``S1(0,2),L4(p,0,1)``."""
    sites, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            sites.append(Site.parse(text[start:i]))
            start = i + 1
    if text[start:].strip():
        sites.append(Site.parse(text[start:]))
    return sites


@dataclass(frozen=True)
class MutationResult:
    primary: Program
    companion: Optional[Program]
    applied: Site


# -- addressing helpers ------------------------------------------------------


def _has_body(d) -> bool:
    return isinstance(d, ImplementationDecl) or (isinstance(d, ProcedureDecl) and d.body is not None)


def bodies(p: Program) -> List[Tuple[str, int]]:
    """``(body_ref, declaration_index)`` for every declaration carrying a body."""
    counts = Counter(d.name for d in p.declarations if _has_body(d))
    seen: Counter = Counter()
    out = []
    for i, d in enumerate(p.declarations):
        if _has_body(d):
            ref = d.name if counts[d.name] == 1 else f"{d.name}@{seen[d.name]}"
            seen[d.name] += 1
            out.append((ref, i))
    return out


def _body_index(p: Program, ref: str) -> int:
    for r, i in bodies(p):
        if r == ref:
            return i
    raise InvalidSite(f"no body named {ref!r}")


def _procedure_index(p: Program, name) -> int:
    for i, d in enumerate(p.declarations):
        if isinstance(d, ProcedureDecl) and d.name == name:
            return i
    raise InvalidSite(f"no procedure named {name!r}")


def _split_path(path) -> Tuple[str, list]:
    if not isinstance(path, str):
        raise InvalidSite(f"bad path {path!r}")
    ref, *rest = path.split("/")
    steps: list = []
    for k, s in enumerate(rest):
        if k % 2 == 0:
            if not s.isdigit():
                raise InvalidSite(f"bad path {path!r}")
            steps.append(int(s))
        else:
            if s not in ("t", "e", "b"):
                raise InvalidSite(f"bad path {path!r}")
            steps.append(s)
    return ref, steps


def _child(stmt, sel: str) -> Block:
    if sel == "t" and isinstance(stmt, If):
        return stmt.then
    if sel == "e" and isinstance(stmt, If) and stmt.else_ is not None:
        return stmt.else_
    if sel == "b" and isinstance(stmt, While):
        return stmt.body
    raise InvalidSite(f"no block {sel!r} under {type(stmt).__name__}")


def _with_child(stmt, sel: str, block: Block):
    field = {"t": "then", "e": "else_", "b": "body"}[sel]
    return dataclasses.replace(stmt, **{field: block})


def _stmt_at(block: Block, idx) -> object:
    if not isinstance(idx, int) or not 0 <= idx < len(block.stmts):
        raise InvalidSite(f"statement index {idx!r} out of range")
    return block.stmts[idx]


def _get_block(block: Block, steps: list) -> Block:
    for k in range(0, len(steps), 2):
        block = _child(_stmt_at(block, steps[k]), steps[k + 1])
    return block


def _map_block(block: Block, steps: list, fn: Callable[[Block], Block]) -> Block:
    if not steps:
        return fn(block)
    idx, sel, rest = steps[0], steps[1], steps[2:]
    stmt = _stmt_at(block, idx)
    new_stmt = _with_child(stmt, sel, _map_block(_child(stmt, sel), rest, fn))
    return Block(block.stmts[:idx] + (new_stmt,) + block.stmts[idx + 1:])


def _replace_decl(p: Program, i: int, d) -> Program:
    return Program(p.declarations[:i] + (d,) + p.declarations[i + 1:])


def _map_body_block(p: Program, path: str, fn: Callable[[Block], Block]) -> Program:
    ref, steps = _split_path(path)
    if len(steps) % 2:
        raise InvalidSite(f"{path!r} addresses a statement, not a block")
    i = _body_index(p, ref)
    d = p.declarations[i]
    return _replace_decl(p, i, dataclasses.replace(d, body=_map_block(d.body, steps, fn)))


def _map_stmt(p: Program, path: str, fn) -> Program:
    ref, steps = _split_path(path)
    if len(steps) % 2 == 0:
        raise InvalidSite(f"{path!r} addresses a block, not a statement")
    block_path = "/".join([ref] + [str(s) for s in steps[:-1]])
    idx = steps[-1]

    def update(block: Block) -> Block:
        stmt = _stmt_at(block, idx)
        return Block(block.stmts[:idx] + (fn(stmt),) + block.stmts[idx + 1:])

    return _map_body_block(p, block_path, update)


def _get_stmt(p: Program, path: str):
    ref, steps = _split_path(path)
    if len(steps) % 2 == 0:
        raise InvalidSite(f"{path!r} addresses a block, not a statement")
    body = p.declarations[_body_index(p, ref)].body
    return _stmt_at(_get_block(body, steps[:-1]), steps[-1])


def _get_body_block(p: Program, path: str) -> Block:
    ref, steps = _split_path(path)
    if len(steps) % 2:
        raise InvalidSite(f"{path!r} addresses a statement, not a block")
    return _get_block(p.declarations[_body_index(p, ref)].body, steps)


def iter_blocks(p: Program):
    """Yield ``(block_path, block, is_body_root)`` for every block in every body."""

    def rec(block: Block, path: str):
        for k, s in enumerate(block.stmts):
            if isinstance(s, If):
                yield path + f"/{k}/t", s.then
                yield from rec(s.then, path + f"/{k}/t")
                if s.else_ is not None:
                    yield path + f"/{k}/e", s.else_
                    yield from rec(s.else_, path + f"/{k}/e")
            elif isinstance(s, While):
                yield path + f"/{k}/b", s.body
                yield from rec(s.body, path + f"/{k}/b")

    for ref, i in bodies(p):
        root = p.declarations[i].body
        yield ref, root, True
        for path, block in rec(root, ref):
            yield path, block, False


def iter_stmts(p: Program, kind):
    for path, block, _ in iter_blocks(p):
        for k, s in enumerate(block.stmts):
            if isinstance(s, kind):
                yield f"{path}/{k}", s


def _locals_count(block: Block) -> int:
    n = 0
    while n < len(block.stmts) and isinstance(block.stmts[n], LocalVarDecl):
        n += 1
    return n


def _pairs(indices: Sequence[int]) -> List[Tuple[int, int]]:
    return [(a, b) for x, a in enumerate(indices) for b in indices[x + 1:]]


def _mutable_indices(clauses) -> List[int]:
    return [k for k, c in enumerate(clauses) if c.mutable]


def _swap(items: tuple, i: int, j: int) -> tuple:
    out = list(items)
    out[i], out[j] = out[j], out[i]
    return tuple(out)


def _check_pair(i, j, n: int):
    if not (isinstance(i, int) and isinstance(j, int) and 0 <= i < j < n):
        raise InvalidSite(f"invalid index pair ({i}, {j}) for {n} items")


def _args(site: Site, op: OperatorKind, n: int) -> tuple:
    if site.op is not op:
        raise InvalidSite(f"site {site} is not a {op.value} site")
    if len(site.args) != n:
        raise InvalidSite(f"site {site} needs {n} arguments")
    return site.args


def _clause_list(p: Program, elem, kind: str) -> Tuple[SpecClause, ...]:
    if kind == REQUIRES:
        return p.declarations[_procedure_index(p, elem)].spec.requires
    if kind == ENSURES:
        return p.declarations[_procedure_index(p, elem)].spec.ensures
    if kind == INVARIANT:
        loop = _get_stmt(p, elem)
        if not isinstance(loop, While):
            raise InvalidSite(f"{elem!r} is not a loop")
        return loop.invariants
    raise InvalidSite(f"unknown clause kind {kind!r}")


def _map_clause_list(p: Program, elem, kind: str, fn) -> Program:
    if kind in (REQUIRES, ENSURES):
        i = _procedure_index(p, elem)
        d = p.declarations[i]
        field = "requires" if kind == REQUIRES else "ensures"
        spec = dataclasses.replace(d.spec, **{field: fn(getattr(d.spec, field))})
        return _replace_decl(p, i, dataclasses.replace(d, spec=spec))
    if kind == INVARIANT:
        return _map_stmt(p, elem, lambda loop: dataclasses.replace(loop, invariants=fn(loop.invariants)))
    raise InvalidSite(f"unknown clause kind {kind!r}")


# -- site enumeration --------------------------------------------------------


def _sites_S1(p):
    return [(i, j) for i, j in _pairs(range(len(p.declarations)))]


def _sites_S5(p):
    return [(d.name,) for d in p.declarations if isinstance(d, ProcedureDecl) and d.body is not None]


def _sites_S6(p):
    return [(i,) for i in range(len(p.declarations))] if len(p.declarations) >= 2 else []


def _sites_L1(p):
    out = []
    for ref, i in bodies(p):
        n = _locals_count(p.declarations[i].body)
        out.extend((ref, a, b) for a, b in _pairs(range(n)))
    return out


def _sites_L2(p):
    out = []
    for ref, i in bodies(p):
        body = p.declarations[i].body
        for k in range(_locals_count(body)):
            v = body.stmts[k]
            if len(v.names) >= 2 and not v.attributes:
                out.append((ref, k))
    return out


def _join_sites(p, field):
    out = []
    for d in p.declarations:
        if isinstance(d, ProcedureDecl):
            clauses = getattr(d.spec, field)
            out.extend((d.name, i, j) for i, j in _pairs(_mutable_indices(clauses)))
    return out


def _sites_L4(p):
    return _join_sites(p, "requires")


def _sites_L5(p):
    return _join_sites(p, "ensures")


def _sites_L6(p):
    out = []
    for d in p.declarations:
        if isinstance(d, ProcedureDecl):
            for kind, clauses in ((REQUIRES, d.spec.requires), (ENSURES, d.spec.ensures)):
                out.extend((d.name, kind, i, j) for i, j in _pairs(_mutable_indices(clauses)))
    for path, loop in iter_stmts(p, While):
        out.extend((path, INVARIANT, i, j) for i, j in _pairs(_mutable_indices(loop.invariants)))
    for path, block, _ in iter_blocks(p):
        s = block.stmts
        for k in range(len(s) - 1):
            if _plain_assert(s[k]) and _plain_assert(s[k + 1]):
                out.append((path, ASSERT, k, k + 1))
    return out


def _plain_assert(s) -> bool:
    return isinstance(s, Assert) and not s.attributes


def _sites_L8(p):
    return [(path,) for path, s in iter_stmts(p, If) if s.else_ is not None and s.cond is not None]


def _sites_G1(p):
    out = []
    for d in p.declarations:
        if isinstance(d, ProcedureDecl):
            out.extend((d.name, REQUIRES, k) for k in range(len(d.spec.requires) + 1))
            out.extend((d.name, ENSURES, k) for k in range(len(d.spec.ensures) + 1))
    for path, loop in iter_stmts(p, While):
        out.extend((path, INVARIANT, k) for k in range(len(loop.invariants) + 1))
    for path, block, root in iter_blocks(p):
        first = _locals_count(block) if root else 0
        out.extend((path, ASSERT, k) for k in range(first, len(block.stmts) + 1))
    return out


def _quantifiers(decl) -> List[Quantifier]:
    return [n for n in walk(decl) if isinstance(n, Quantifier)]


def _sites_G2(p):
    out = []
    for i, d in enumerate(p.declarations):
        for q, quant in enumerate(_quantifiers(d)):
            out.extend((f"{i}/{q}", t) for t in range(len(quant.triggers)))
    return out


_ENUMERATORS = {
    OperatorKind.S1: _sites_S1,
    OperatorKind.S5: _sites_S5,
    OperatorKind.S6: _sites_S6,
    OperatorKind.L1: _sites_L1,
    OperatorKind.L2: _sites_L2,
    OperatorKind.L4: _sites_L4,
    OperatorKind.L5: _sites_L5,
    OperatorKind.L6: _sites_L6,
    OperatorKind.L8: _sites_L8,
    OperatorKind.G1: _sites_G1,
    OperatorKind.G2: _sites_G2,
}


def enumerate_sites(p: Program, kind: OperatorKind) -> List[Site]:
    """All valid sites of ``kind`` in ``p``, in a deterministic order, without duplicates."""
    kind = OperatorKind(kind)
    return [Site(kind, args) for args in _ENUMERATORS[kind](p)]


# -- operators ---------------------------------------------------------------


def _result(p: Program, site: Site, companion: Optional[Program] = None) -> MutationResult:
    return MutationResult(p, companion, site)


def apply_S1(p: Program, site: Site) -> MutationResult:
    i, j = _args(site, OperatorKind.S1, 2)
    if isinstance(i, int) and isinstance(j, int) and i > j:
        i, j = j, i
    _check_pair(i, j, len(p.declarations))
    return _result(Program(_swap(p.declarations, i, j)), site)


def apply_S5(p: Program, site: Site) -> MutationResult:
    (name,) = _args(site, OperatorKind.S5, 1)
    i = _procedure_index(p, name)
    proc = p.declarations[i]
    if proc.body is None:
        raise InvalidSite(f"procedure {name!r} has no inline body")
    impl = ImplementationDecl(proc.name, proc.params, proc.returns, proc.body, (), proc.explicit_returns)
    decls = p.declarations[:i] + (dataclasses.replace(proc, body=None), impl) + p.declarations[i + 1:]
    return _result(Program(decls), site)


def apply_S6(p: Program, site: Site) -> MutationResult:
    (i,) = _args(site, OperatorKind.S6, 1)
    n = len(p.declarations)
    if n < 2:
        raise InvalidSite("S6 needs at least two declarations")
    if not isinstance(i, int) or not 0 <= i < n:
        raise InvalidSite(f"declaration index {i!r} out of range")
    primary = Program(p.declarations[:i] + p.declarations[i + 1:])
    return _result(primary, site, Program((p.declarations[i],)))


def apply_L1(p: Program, site: Site) -> MutationResult:
    ref, i, j = _args(site, OperatorKind.L1, 3)
    body = p.declarations[_body_index(p, ref)].body
    _check_pair(i, j, _locals_count(body))
    return _result(_map_body_block(p, ref, lambda b: Block(_swap(b.stmts, i, j))), site)


def apply_L2(p: Program, site: Site) -> MutationResult:
    ref, k = _args(site, OperatorKind.L2, 2)
    body = p.declarations[_body_index(p, ref)].body
    if not isinstance(k, int) or not 0 <= k < _locals_count(body):
        raise InvalidSite(f"no local declaration at {k!r}")
    v = body.stmts[k]
    if len(v.names) < 2 or v.attributes:
        raise InvalidSite("L2 needs an unattributed declaration of several variables")
    first = LocalVarDecl(v.names[:1], v.type, loc=v.loc)
    rest = LocalVarDecl(v.names[1:], v.type, loc=v.loc)
    return _result(_map_body_block(p, ref, lambda b: Block(b.stmts[:k] + (first, rest) + b.stmts[k + 1:])), site)


def _join(p: Program, site: Site, op: OperatorKind, kind: str) -> MutationResult:
    proc, i, j = _args(site, op, 3)
    clauses = _clause_list(p, proc, kind)
    _check_pair(i, j, len(clauses))
    if not (clauses[i].mutable and clauses[j].mutable):
        raise InvalidSite("free or attributed clauses are not mutation sites")

    def join(cs):
        joined = dataclasses.replace(cs[i], expr=Binary("&&", cs[i].expr, cs[j].expr))
        return cs[:i] + (joined,) + cs[i + 1:j] + cs[j + 1:]

    return _result(_map_clause_list(p, proc, kind, join), site)


def apply_L4(p: Program, site: Site) -> MutationResult:
    return _join(p, site, OperatorKind.L4, REQUIRES)


def apply_L5(p: Program, site: Site) -> MutationResult:
    return _join(p, site, OperatorKind.L5, ENSURES)


def apply_L6(p: Program, site: Site) -> MutationResult:
    elem, kind, i, j = _args(site, OperatorKind.L6, 4)
    if kind == ASSERT:
        block = _get_body_block(p, elem)
        if not (isinstance(i, int) and isinstance(j, int) and j == i + 1 and 0 <= i and j < len(block.stmts)):
            raise InvalidSite("L6 on assertions needs two adjacent statements")
        if not (_plain_assert(block.stmts[i]) and _plain_assert(block.stmts[j])):
            raise InvalidSite("L6 on assertions needs two unattributed assert statements")
        return _result(_map_body_block(p, elem, lambda b: Block(_swap(b.stmts, i, j))), site)
    clauses = _clause_list(p, elem, kind)
    _check_pair(i, j, len(clauses))
    if not (clauses[i].mutable and clauses[j].mutable):
        raise InvalidSite("free or attributed clauses are not mutation sites")
    return _result(_map_clause_list(p, elem, kind, lambda cs: _swap(cs, i, j)), site)


def apply_L8(p: Program, site: Site) -> MutationResult:
    (path,) = _args(site, OperatorKind.L8, 1)
    stmt = _get_stmt(p, path)
    if not isinstance(stmt, If) or stmt.else_ is None or stmt.cond is None:
        raise InvalidSite("L8 needs an if statement with a condition and an else branch")
    flipped = If(Unary("!", stmt.cond), stmt.else_, stmt.then, loc=stmt.loc)
    return _result(_map_stmt(p, path, lambda _: flipped), site)


def apply_G1(p: Program, site: Site) -> MutationResult:
    elem, kind, pos = _args(site, OperatorKind.G1, 3)
    if not isinstance(pos, int):
        raise InvalidSite(f"bad position {pos!r}")
    if kind == ASSERT:
        block = _get_body_block(p, elem)
        first = _locals_count(block) if "/" not in elem else 0
        if not first <= pos <= len(block.stmts):
            raise InvalidSite(f"position {pos} out of range")
        stmt = Assert(BoolLit(True))
        return _result(_map_body_block(p, elem, lambda b: Block(b.stmts[:pos] + (stmt,) + b.stmts[pos:])), site)
    clauses = _clause_list(p, elem, kind)
    if not 0 <= pos <= len(clauses):
        raise InvalidSite(f"position {pos} out of range")
    clause = SpecClause(kind, BoolLit(True))
    return _result(_map_clause_list(p, elem, kind, lambda cs: cs[:pos] + (clause,) + cs[pos:]), site)


def _map_nth_quantifier(node, n: int, fn):
    seen = [0]

    def visit(x):
        if isinstance(x, tuple):
            return tuple(visit(item) for item in x)
        if not is_node(x):
            return x
        if isinstance(x, Quantifier):
            k = seen[0]
            seen[0] += 1
            if k == n:
                return fn(x)
        changes = {}
        for f in dataclasses.fields(x):
            if f.name == "loc":
                continue
            changes[f.name] = visit(getattr(x, f.name))
        return dataclasses.replace(x, **changes) if changes else x

    return visit(node)


def apply_G2(p: Program, site: Site) -> MutationResult:
    qpath, t = _args(site, OperatorKind.G2, 2)
    m = re.fullmatch(r"(\d+)/(\d+)", str(qpath))
    if m is None:
        raise InvalidSite(f"bad quantifier path {qpath!r}")
    i, q = int(m.group(1)), int(m.group(2))
    if not 0 <= i < len(p.declarations):
        raise InvalidSite(f"declaration index {i} out of range")
    quants = _quantifiers(p.declarations[i])
    if not 0 <= q < len(quants):
        raise InvalidSite(f"quantifier index {q} out of range")
    if not isinstance(t, int) or not 0 <= t < len(quants[q].triggers):
        raise InvalidSite(f"trigger index {t!r} out of range")

    def drop(quant: Quantifier) -> Quantifier:
        return dataclasses.replace(quant, triggers=quant.triggers[:t] + quant.triggers[t + 1:])

    return _result(_replace_decl(p, i, _map_nth_quantifier(p.declarations[i], q, drop)), site)


_APPLY: Dict[OperatorKind, Callable[[Program, Site], MutationResult]] = {
    OperatorKind.S1: apply_S1,
    OperatorKind.S5: apply_S5,
    OperatorKind.S6: apply_S6,
    OperatorKind.L1: apply_L1,
    OperatorKind.L2: apply_L2,
    OperatorKind.L4: apply_L4,
    OperatorKind.L5: apply_L5,
    OperatorKind.L6: apply_L6,
    OperatorKind.L8: apply_L8,
    OperatorKind.G1: apply_G1,
    OperatorKind.G2: apply_G2,
}


def apply(p: Program, site: Site, *, trigger_mutation: bool = False) -> MutationResult:
    """Apply ``site`` to ``p``.  G2 runs only when ``trigger_mutation`` is set."""
    if site.op.semantics_risky and not trigger_mutation:
        raise OperatorDisabled(f"{site.op.value} is disabled unless trigger mutation is enabled")
    try:
        return _APPLY[site.op](p, site)
    except (IndexError, KeyError, TypeError, AttributeError) as exc:
        raise InvalidSite(f"site {site} does not apply: {exc}") from exc
