"""Name resolution and monomorphic type checking.

Top-level names are collected over the whole unit before anything is
checked, so the result never depends on declaration order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Set

from mugie.diagnostics import (
    DUPLICATE,
    ERROR,
    NO_PROCEDURE,
    TYPE_MISMATCH,
    UNRESOLVED,
    Diagnostic,
    TypeCheckError,
)
from mugie.syntax import (
    BOOL,
    INT,
    Assert,
    Assign,
    Assume,
    AxiomDecl,
    Binary,
    Block,
    BoolLit,
    BoolType,
    Call,
    ConstDecl,
    Expr,
    FunctionApp,
    FunctionDecl,
    GlobalVarDecl,
    Havoc,
    Ident,
    If,
    ImplementationDecl,
    IntLit,
    IntType,
    LocalVarDecl,
    Loc,
    MapSelect,
    MapType,
    MapUpdate,
    NamedType,
    Old,
    ProcedureDecl,
    Program,
    Quantifier,
    Return,
    SpecClause,
    Type,
    TypeDecl,
    Unary,
    While,
    walk,
)

ARITH = frozenset(["+", "-", "*", "div", "mod"])
ORDER = frozenset(["<", "<=", ">", ">="])
EQUALITY = frozenset(["==", "!="])
LOGIC = frozenset(["&&", "||", "==>", "<==>"])


@dataclass(frozen=True)
class Var:
    type: Type
    assignable: bool
    is_global: bool = False


class _Checker:
    def __init__(self, p: Program):
        self.program = p
        self.diags: List[Diagnostic] = []
        self.types: Dict[str, TypeDecl] = {}
        self.globals: Dict[str, Var] = {}
        self.functions: Dict[str, FunctionDecl] = {}
        self.procedures: Dict[str, ProcedureDecl] = {}
        # per-body state
        self.modifies: Set[str] = set()
        self.two_state = False  # old(...) is allowed in postconditions and bodies only

    def error(self, loc: Optional[Loc], message: str, code: str):
        self.diags.append(Diagnostic(ERROR, loc, message, code))

    # -- phase 1: collect ----------------------------------------------------

    def collect(self):
        for d in self.program.declarations:
            if isinstance(d, TypeDecl):
                self._declare(self.types, d.name, d, d.loc, "type")
            elif isinstance(d, (ConstDecl, GlobalVarDecl)):
                assignable = isinstance(d, GlobalVarDecl)
                for name in d.names:
                    self._declare(self.globals, name, Var(d.type, assignable, True), d.loc, "variable or constant")
            elif isinstance(d, FunctionDecl):
                self._declare(self.functions, d.name, d, d.loc, "function")
            elif isinstance(d, ProcedureDecl):
                self._declare(self.procedures, d.name, d, d.loc, "procedure")

    def _declare(self, table: dict, name: str, value, loc, what: str):
        if name in table:
            self.error(loc, f"duplicate {what} '{name}'", DUPLICATE)
        else:
            table[name] = value

    # -- types ---------------------------------------------------------------

    def resolve(self, ty: Type, loc: Optional[Loc] = None, _seen: frozenset = frozenset()) -> Optional[Type]:
        """Expand synonyms; report unknown type names.  None means already reported."""
        if isinstance(ty, (IntType, BoolType)):
            return ty
        if isinstance(ty, MapType):
            dom = [self.resolve(t, loc, _seen) for t in ty.domain]
            rng = self.resolve(ty.range, loc, _seen)
            if rng is None or any(t is None for t in dom):
                return None
            return MapType(tuple(dom), rng)
        decl = self.types.get(ty.name)
        if decl is None:
            self.error(ty.loc or loc, f"unresolved type '{ty.name}'", UNRESOLVED)
            return None
        if decl.synonym is None:
            return NamedType(ty.name)
        if ty.name in _seen:
            self.error(decl.loc, f"cyclic type synonym '{ty.name}'", TYPE_MISMATCH)
            return None
        return self.resolve(decl.synonym, decl.loc, _seen | {ty.name})

    def expect_type(self, actual: Optional[Type], expected: Optional[Type], loc, what: str):
        if actual is None or expected is None:
            return
        if actual != expected:
            self.error(loc, f"type mismatch in {what}: expected {expected}, got {actual}", TYPE_MISMATCH)

    # -- expressions ---------------------------------------------------------

    def lookup(self, name: str, scope: Dict[str, Var]) -> Optional[Var]:
        if name in scope:
            return scope[name]
        return self.globals.get(name)

    def expr(self, e: Expr, scope: Dict[str, Var]) -> Optional[Type]:
        if isinstance(e, IntLit):
            return INT
        if isinstance(e, BoolLit):
            return BOOL
        if isinstance(e, Ident):
            var = self.lookup(e.name, scope)
            if var is None:
                self.error(e.loc, f"unresolved identifier '{e.name}'", UNRESOLVED)
                return None
            return self.resolve(var.type, e.loc)
        if isinstance(e, Old):
            if not self.two_state:
                self.error(e.loc, "old expression outside a postcondition or procedure body", TYPE_MISMATCH)
            return self.expr(e.expr, scope)
        if isinstance(e, Unary):
            t = self.expr(e.operand, scope)
            want = BOOL if e.op == "!" else INT
            self.expect_type(t, want, e.loc, f"operand of '{e.op}'")
            return want
        if isinstance(e, Binary):
            return self.binary(e, scope)
        if isinstance(e, (MapSelect, MapUpdate)):
            return self.map_access(e, scope)
        if isinstance(e, FunctionApp):
            fn = self.functions.get(e.name)
            args = [self.expr(a, scope) for a in e.args]
            if fn is None:
                self.error(e.loc, f"unresolved identifier '{e.name}'", UNRESOLVED)
                return None
            if len(args) != len(fn.params):
                self.error(e.loc, f"'{e.name}' expects {len(fn.params)} arguments, got {len(args)}", TYPE_MISMATCH)
            else:
                for a, f in zip(args, fn.params):
                    self.expect_type(a, self.resolve(f.type, f.loc), e.loc, f"argument of '{e.name}'")
            return self.resolve(fn.result.type, fn.loc)
        if isinstance(e, Quantifier):
            inner = dict(scope)
            for b in e.bound:
                if self.resolve(b.type, b.loc) is None:
                    continue
                inner[b.name] = Var(b.type, False)
            names = {b.name for b in e.bound}
            for trig in e.triggers:
                for term in trig.terms:
                    self.expr(term, inner)
                    mentioned = {n.name for n in walk(term) if isinstance(n, Ident)}
                    if not mentioned & names:
                        self.error(trig.loc, "trigger term mentions no bound variable", TYPE_MISMATCH)
            self.expect_type(self.expr(e.body, inner), BOOL, e.loc, "quantifier body")
            return BOOL
        raise TypeError(f"not an expression: {e!r}")

    def binary(self, e: Binary, scope) -> Optional[Type]:
        lt = self.expr(e.left, scope)
        rt = self.expr(e.right, scope)
        if e.op in ARITH:
            self.expect_type(lt, INT, e.loc, f"left operand of '{e.op}'")
            self.expect_type(rt, INT, e.loc, f"right operand of '{e.op}'")
            return INT
        if e.op in ORDER:
            self.expect_type(lt, INT, e.loc, f"left operand of '{e.op}'")
            self.expect_type(rt, INT, e.loc, f"right operand of '{e.op}'")
            return BOOL
        if e.op in EQUALITY:
            self.expect_type(rt, lt, e.loc, f"operands of '{e.op}'")
            return BOOL
        if e.op in LOGIC:
            self.expect_type(lt, BOOL, e.loc, f"left operand of '{e.op}'")
            self.expect_type(rt, BOOL, e.loc, f"right operand of '{e.op}'")
            return BOOL
        raise ValueError(f"unknown operator {e.op}")

    def map_access(self, e, scope) -> Optional[Type]:
        mt = self.expr(e.map, scope)
        idx = [self.expr(i, scope) for i in e.indices]
        value = self.expr(e.value, scope) if isinstance(e, MapUpdate) else None
        if mt is None:
            return None
        if not isinstance(mt, MapType):
            self.error(e.loc, f"indexing a non-map of type {mt}", TYPE_MISMATCH)
            return None
        if len(idx) != len(mt.domain):
            self.error(e.loc, f"map expects {len(mt.domain)} indices, got {len(idx)}", TYPE_MISMATCH)
        else:
            for got, want in zip(idx, mt.domain):
                self.expect_type(got, want, e.loc, "map index")
        if isinstance(e, MapUpdate):
            self.expect_type(value, mt.range, e.loc, "map update value")
            return mt
        return mt.range

    # -- declarations --------------------------------------------------------

    def check(self):
        self.collect()
        for name, decl in self.types.items():
            if decl.synonym is not None:
                self.resolve(NamedType(name, loc=decl.loc))
        for d in self.program.declarations:
            if isinstance(d, (ConstDecl, GlobalVarDecl)):
                self.resolve(d.type, d.loc)
            elif isinstance(d, FunctionDecl):
                self.function(d)
            elif isinstance(d, AxiomDecl):
                self.expect_type(self.expr(d.expr, {}), BOOL, d.loc, "axiom")
            elif isinstance(d, ProcedureDecl):
                self.procedure(d)
            elif isinstance(d, ImplementationDecl):
                self.implementation(d)

    def function(self, d: FunctionDecl):
        scope: Dict[str, Var] = {}
        for f in d.params:
            self.resolve(f.type, f.loc)
            if f.name is not None:
                if f.name in scope:
                    self.error(f.loc, f"duplicate parameter '{f.name}'", DUPLICATE)
                scope[f.name] = Var(f.type, False)
        result = self.resolve(d.result.type, d.result.loc)
        if d.body is not None:
            self.expect_type(self.expr(d.body, scope), result, d.loc, f"body of function '{d.name}'")

    def signature_scope(self, params, returns) -> Dict[str, Var]:
        scope: Dict[str, Var] = {}
        for f, assignable in [(f, False) for f in params] + [(f, True) for f in returns]:
            self.resolve(f.type, f.loc)
            if f.name in scope:
                self.error(f.loc, f"duplicate parameter '{f.name}'", DUPLICATE)
            scope[f.name] = Var(f.type, assignable)
        return scope

    def procedure(self, d: ProcedureDecl):
        scope = self.signature_scope(d.params, d.returns)
        in_scope = {f.name: scope[f.name] for f in d.params if f.name in scope}
        for c in d.spec.requires:
            self.clause(c, in_scope)
        self.two_state = True
        for c in d.spec.ensures:
            self.clause(c, scope)
        self.two_state = False
        for name in d.spec.modifies:
            var = self.globals.get(name)
            if var is None:
                self.error(d.loc, f"unresolved identifier '{name}' in modifies clause", UNRESOLVED)
            elif not var.assignable:
                self.error(d.loc, f"modifies clause names constant '{name}'", TYPE_MISMATCH)
        if d.body is not None:
            self.body(d.body, scope, set(d.spec.modifies))

    def implementation(self, d: ImplementationDecl):
        proc = self.procedures.get(d.name)
        scope = self.signature_scope(d.params, d.returns)
        if proc is None:
            self.error(d.loc, f"implementation of undeclared procedure '{d.name}'", NO_PROCEDURE)
            modifies: Set[str] = set()
        else:
            modifies = set(proc.spec.modifies)
            mine = [self.resolve(f.type, f.loc) for f in d.params], [self.resolve(f.type, f.loc) for f in d.returns]
            theirs = (
                [self.resolve(f.type, f.loc) for f in proc.params],
                [self.resolve(f.type, f.loc) for f in proc.returns],
            )
            if mine != theirs:
                self.error(d.loc, f"implementation signature does not match procedure '{d.name}'", NO_PROCEDURE)
        self.body(d.body, scope, modifies)

    def clause(self, c: SpecClause, scope):
        self.expect_type(self.expr(c.expr, scope), BOOL, c.loc, c.kind + " clause")

    # -- statements ----------------------------------------------------------

    def body(self, block: Block, scope: Dict[str, Var], modifies: Set[str]):
        scope = dict(scope)
        self.modifies = modifies
        self.two_state = True
        for s in block.stmts:
            if isinstance(s, LocalVarDecl):
                self.resolve(s.type, s.loc)
                for name in s.names:
                    if name in scope:
                        self.error(s.loc, f"duplicate local variable '{name}'", DUPLICATE)
                    scope[name] = Var(s.type, True)
        self.block(block, scope)
        self.two_state = False

    def block(self, block: Block, scope):
        for s in block.stmts:
            self.statement(s, scope)

    def target(self, name: str, loc, scope) -> Optional[Var]:
        var = self.lookup(name, scope)
        if var is None:
            self.error(loc, f"unresolved identifier '{name}'", UNRESOLVED)
            return None
        if not var.assignable:
            self.error(loc, f"'{name}' is not assignable", TYPE_MISMATCH)
        elif var.is_global and name not in scope and name not in self.modifies:
            self.error(loc, f"global '{name}' is assigned but not in the modifies clause", TYPE_MISMATCH)
        return var

    def statement(self, s, scope):
        if isinstance(s, LocalVarDecl):
            return
        if isinstance(s, (Assert, Assume)):
            self.expect_type(self.expr(s.expr, scope), BOOL, s.loc, type(s).__name__.lower())
        elif isinstance(s, Assign):
            if len(s.lhs) != len(s.rhs):
                self.error(s.loc, "assignment has mismatched left and right sides", TYPE_MISMATCH)
            for lhs, rhs in zip(s.lhs, s.rhs):
                root = lhs
                while isinstance(root, MapSelect):
                    root = root.map
                self.target(root.name, lhs.loc, scope)
                self.expect_type(self.expr(rhs, scope), self.expr(lhs, scope), s.loc, "assignment")
        elif isinstance(s, Havoc):
            for name in s.names:
                self.target(name, s.loc, scope)
        elif isinstance(s, Call):
            self.call(s, scope)
        elif isinstance(s, If):
            if s.cond is not None:
                self.expect_type(self.expr(s.cond, scope), BOOL, s.loc, "if condition")
            self.block(s.then, scope)
            if s.else_ is not None:
                self.block(s.else_, scope)
        elif isinstance(s, While):
            if s.cond is not None:
                self.expect_type(self.expr(s.cond, scope), BOOL, s.loc, "loop condition")
            for c in s.invariants:
                self.clause(c, scope)
            self.block(s.body, scope)
        elif isinstance(s, Return):
            return
        elif isinstance(s, Block):
            self.block(s, scope)
        else:
            raise TypeError(f"not a statement: {s!r}")

    def call(self, s: Call, scope):
        args = [self.expr(a, scope) for a in s.args]
        proc = self.procedures.get(s.name)
        if proc is None:
            self.error(s.loc, f"unresolved identifier '{s.name}'", UNRESOLVED)
            return
        if len(args) != len(proc.params):
            self.error(s.loc, f"'{s.name}' expects {len(proc.params)} arguments, got {len(args)}", TYPE_MISMATCH)
        else:
            for a, f in zip(args, proc.params):
                self.expect_type(a, self.resolve(f.type, f.loc), s.loc, f"argument of '{s.name}'")
        if len(s.outs) != len(proc.returns):
            self.error(s.loc, f"'{s.name}' returns {len(proc.returns)} values, got {len(s.outs)} targets", TYPE_MISMATCH)
        else:
            for name, f in zip(s.outs, proc.returns):
                var = self.target(name, s.loc, scope)
                if var is not None:
                    self.expect_type(self.resolve(f.type, f.loc), self.resolve(var.type, s.loc), s.loc, f"result of '{s.name}'")
        missing = [g for g in proc.spec.modifies if g not in self.modifies]
        if missing:
            self.error(s.loc, f"call to '{s.name}' modifies {', '.join(missing)} outside the caller's modifies clause", TYPE_MISMATCH)


def check_diagnostics(p: Program) -> List[Diagnostic]:
    checker = _Checker(p)
    checker.check()
    return checker.diags


def typecheck(p: Program) -> Program:
    """Return ``p`` unchanged if it is well formed, else raise :class:`TypeCheckError`."""
    diags = check_diagnostics(p)
    if diags:
        raise TypeCheckError(diags)
    return p


def well_formed(p: Program) -> bool:
    return not check_diagnostics(p)
