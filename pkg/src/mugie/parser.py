"""Recursive-descent parser for the supported Boogie subset.

Parsing and name resolution are separate passes (see :mod:`mugie.typecheck`),
so declarations may refer to names declared later in the unit.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import List, Optional, Tuple, Union

from mugie.diagnostics import ERROR, SYNTAX, UNSUPPORTED, Diagnostic, ParseError
from mugie.lexer import UNSUPPORTED_KEYWORDS, Token, tokenize
from mugie.syntax import (
    BOOL,
    ENSURES,
    INT,
    INVARIANT,
    REQUIRES,
    Assert,
    Assign,
    Assume,
    Attribute,
    AxiomDecl,
    Binary,
    Block,
    BoolLit,
    BoundVar,
    Call,
    ConstDecl,
    Declaration,
    Expr,
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
    MapType,
    MapUpdate,
    NamedType,
    Old,
    ProcedureDecl,
    Program,
    Quantifier,
    Return,
    SpecClause,
    Specification,
    Statement,
    Trigger,
    Type,
    TypeDecl,
    Unary,
    While,
)

DECL_KEYWORDS = frozenset("type const var function axiom procedure implementation".split())
REL_OPS = frozenset(["==", "!=", "<", "<=", ">", ">="])
ADD_OPS = frozenset(["+", "-"])
MUL_OPS = frozenset(["*", "div", "mod"])
_BV_TYPE = re.compile(r"bv\d+$")


class _Abort(Exception):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic


class Parser:
    def __init__(self, tokens: List[Token]):
        self.toks = tokens
        self.pos = 0

    # -- token helpers -------------------------------------------------------

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text: str, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok.kind in ("punct", "kw") and tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected '{text}' but found {self.describe(self.peek())}")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            self.fail(f"expected {what} but found {self.describe(tok)}")
        if tok.text in UNSUPPORTED_KEYWORDS:
            self.unsupported(f"'{tok.text}'", tok)
        return self.advance()

    @staticmethod
    def describe(tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else f"'{tok.text}'"

    def fail(self, message: str, tok: Optional[Token] = None, code: str = SYNTAX):
        tok = tok or self.peek()
        raise _Abort(Diagnostic(ERROR, tok.loc, message, code))

    def unsupported(self, what: str, tok: Optional[Token] = None):
        self.fail(f"unsupported construct: {what}", tok, UNSUPPORTED)

    def check_unsupported_word(self):
        tok = self.peek()
        if tok.kind == "ident" and tok.text in UNSUPPORTED_KEYWORDS:
            self.unsupported(f"'{tok.text}'", tok)

    # -- program -------------------------------------------------------------

    def program(self) -> Tuple[Program, List[Diagnostic]]:
        decls: List[Declaration] = []
        diags: List[Diagnostic] = []
        while self.peek().kind != "eof":
            start = self.pos
            try:
                decls.append(self.declaration())
            except _Abort as abort:
                diags.append(abort.diagnostic)
                self.recover(start)
        return Program(tuple(decls)), diags

    def recover(self, start: int):
        # skip to the next top-level declaration keyword after the failed one
        self.pos = start + 1
        depth = 0
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind == "punct" and tok.text == "{":
                depth += 1
            elif tok.kind == "punct" and tok.text == "}":
                depth -= 1
            elif tok.kind == "kw" and tok.text in DECL_KEYWORDS and depth <= 0:
                return
            self.pos += 1

    def declaration(self) -> Declaration:
        tok = self.peek()
        if tok.kind == "kw" and tok.text in DECL_KEYWORDS:
            return getattr(self, "decl_" + tok.text)()
        self.check_unsupported_word()
        self.fail(f"expected a declaration but found {self.describe(tok)}")

    def attributes(self) -> Tuple[Attribute, ...]:
        attrs = []
        while self.at("{") and self.at(":", 1):
            attrs.append(self.attribute())
        return tuple(attrs)

    def attribute(self) -> Attribute:
        self.expect("{")
        self.expect(":")
        name = self.ident("attribute name").text
        parts = []
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                self.fail("unterminated attribute")
            if tok.kind == "punct" and tok.text == "}":
                if depth == 0:
                    break
                depth -= 1
            elif tok.kind == "punct" and tok.text == "{":
                depth += 1
            parts.append(self.advance().text)
        self.expect("}")
        return Attribute(name, " ".join(parts))

    def decl_type(self) -> TypeDecl:
        start = self.advance()
        attrs = self.attributes()
        self.check_unsupported_word()
        name = self.ident("type name").text
        if self.peek().kind == "ident":
            self.unsupported("type constructor parameters")
        synonym = None
        if self.accept("="):
            synonym = self.type_()
        self.expect(";")
        return TypeDecl(name, synonym, attrs, loc=start.loc)

    def ids_type(self) -> Tuple[Tuple[str, ...], Type]:
        names = [self.ident().text]
        while self.accept(","):
            names.append(self.ident().text)
        self.expect(":")
        ty = self.type_()
        self.check_unsupported_word()
        if self.at(","):
            self.unsupported("several typed groups in one declaration")
        return tuple(names), ty

    def decl_const(self) -> ConstDecl:
        start = self.advance()
        attrs = self.attributes()
        unique = self.accept("unique")
        names, ty = self.ids_type()
        self.expect(";")
        return ConstDecl(names, ty, unique, attrs, loc=start.loc)

    def decl_var(self) -> GlobalVarDecl:
        start = self.advance()
        attrs = self.attributes()
        names, ty = self.ids_type()
        self.expect(";")
        return GlobalVarDecl(names, ty, attrs, loc=start.loc)

    def decl_function(self) -> FunctionDecl:
        start = self.advance()
        attrs = self.attributes()
        name = self.ident("function name").text
        if self.at("<"):
            self.unsupported("polymorphic type parameters")
        self.expect("(")
        params: List[Formal] = []
        if not self.at(")"):
            params.extend(self.function_formal())
            while self.accept(","):
                params.extend(self.function_formal())
        self.expect(")")
        if self.accept("returns"):
            self.expect("(")
            formals = self.function_formal()
            self.expect(")")
            if len(formals) != 1:
                self.fail("a function has exactly one result")
            result, explicit = formals[0], True
        elif self.accept(":"):
            rtok = self.peek()
            result, explicit = Formal(None, self.type_(), loc=rtok.loc), False
        else:
            self.fail(f"expected 'returns' or ':' but found {self.describe(self.peek())}")
        body = None
        if self.accept("{"):
            body = self.expression()
            self.expect("}")
        else:
            self.expect(";")
        return FunctionDecl(name, tuple(params), result, body, attrs, explicit, loc=start.loc)

    def function_formal(self) -> List[Formal]:
        tok = self.peek()
        if tok.kind == "ident" and (self.at(":", 1) or self.at(",", 1) and self._named_group_ahead()):
            names, ty = self.formal_group()
            return [Formal(n, ty, loc=tok.loc) for n in names]
        return [Formal(None, self.type_(), loc=tok.loc)]

    def _named_group_ahead(self) -> bool:
        # "x, y: int" versus two anonymous types "T, U"
        k = 0
        while self.peek(k).kind == "ident" and self.at(",", k + 1):
            k += 2
        return self.peek(k).kind == "ident" and self.at(":", k + 1)

    def formal_group(self) -> Tuple[Tuple[str, ...], Type]:
        names = [self.ident().text]
        while self.accept(","):
            names.append(self.ident().text)
        self.expect(":")
        ty = self.type_()
        self.check_unsupported_word()
        return tuple(names), ty

    def formals(self) -> Tuple[Formal, ...]:
        self.expect("(")
        out: List[Formal] = []
        if not self.at(")"):
            while True:
                tok = self.peek()
                names, ty = self.formal_group()
                out.extend(Formal(n, ty, loc=tok.loc) for n in names)
                if not self.accept(","):
                    break
        self.expect(")")
        return tuple(out)

    def decl_axiom(self) -> AxiomDecl:
        start = self.advance()
        attrs = self.attributes()
        expr = self.expression()
        self.expect(";")
        return AxiomDecl(expr, attrs, loc=start.loc)

    def decl_procedure(self) -> ProcedureDecl:
        start = self.advance()
        attrs = self.attributes()
        name = self.ident("procedure name").text
        if self.at("<"):
            self.unsupported("polymorphic type parameters")
        params = self.formals()
        explicit = self.accept("returns")
        returns = self.formals() if explicit else ()
        if self.accept(";"):
            spec = self.specification()
            body = None
            if self.at("{"):
                self.fail("a procedure declared with ';' cannot have a body")
        else:
            spec = self.specification()
            if not self.at("{"):
                self.fail(f"expected ';' or a body but found {self.describe(self.peek())}")
            body = self.body()
        return ProcedureDecl(name, params, returns, spec, body, attrs, explicit, loc=start.loc)

    def specification(self) -> Specification:
        requires: List[SpecClause] = []
        ensures: List[SpecClause] = []
        modifies: List[str] = []
        while True:
            tok = self.peek()
            free = False
            if self.at("free"):
                free = True
                self.advance()
                if not (self.at("requires") or self.at("ensures")):
                    self.fail("expected 'requires' or 'ensures' after 'free'")
            if self.accept("requires"):
                requires.append(self.clause(REQUIRES, free, tok))
            elif self.accept("ensures"):
                ensures.append(self.clause(ENSURES, free, tok))
            elif self.accept("modifies"):
                modifies.append(self.ident().text)
                while self.accept(","):
                    modifies.append(self.ident().text)
                self.expect(";")
            else:
                break
        return Specification(tuple(requires), tuple(ensures), tuple(modifies))

    def clause(self, kind: str, free: bool, tok: Token) -> SpecClause:
        attrs = self.attributes()
        expr = self.expression()
        self.expect(";")
        return SpecClause(kind, expr, free, attrs, loc=tok.loc)

    def decl_implementation(self) -> ImplementationDecl:
        start = self.advance()
        attrs = self.attributes()
        name = self.ident("procedure name").text
        if self.at("<"):
            self.unsupported("polymorphic type parameters")
        params = self.formals()
        explicit = self.accept("returns")
        returns = self.formals() if explicit else ()
        if not self.at("{"):
            self.fail(f"expected an implementation body but found {self.describe(self.peek())}")
        body = self.body()
        return ImplementationDecl(name, params, returns, body, attrs, explicit, loc=start.loc)

    # -- types ---------------------------------------------------------------

    def type_(self) -> Type:
        tok = self.peek()
        if self.accept("int"):
            return INT
        if self.accept("bool"):
            return BOOL
        if self.at("<"):
            self.unsupported("polymorphic map type")
        if self.accept("["):
            domain = [self.type_()]
            while self.accept(","):
                domain.append(self.type_())
            self.expect("]")
            return MapType(tuple(domain), self.type_())
        if self.accept("("):
            ty = self.type_()
            self.expect(")")
            return ty
        if tok.kind == "ident":
            if _BV_TYPE.match(tok.text):
                self.unsupported(f"bitvector type {tok.text}")
            name = self.ident("type").text
            if self.peek().kind == "ident" and self.peek().text not in UNSUPPORTED_KEYWORDS:
                self.unsupported("type constructor arguments")
            return NamedType(name, loc=tok.loc)
        self.fail(f"expected a type but found {self.describe(tok)}")

    # -- statements ----------------------------------------------------------

    def body(self) -> Block:
        self.expect("{")
        stmts: List[Statement] = []
        while self.at("var"):
            tok = self.advance()
            attrs = self.attributes()
            names, ty = self.ids_type()
            self.expect(";")
            stmts.append(LocalVarDecl(names, ty, attrs, loc=tok.loc))
        stmts.extend(self.statements())
        self.expect("}")
        return Block(tuple(stmts))

    def block(self) -> Block:
        self.expect("{")
        stmts = self.statements()
        self.expect("}")
        return Block(tuple(stmts))

    def statements(self) -> List[Statement]:
        out = []
        while not self.at("}") and self.peek().kind != "eof":
            out.append(self.statement())
        return out

    def statement(self) -> Statement:
        tok = self.peek()
        if self.accept("assert"):
            attrs = self.attributes()
            expr = self.expression()
            self.expect(";")
            return Assert(expr, attrs, loc=tok.loc)
        if self.accept("assume"):
            attrs = self.attributes()
            expr = self.expression()
            self.expect(";")
            return Assume(expr, attrs, loc=tok.loc)
        if self.accept("havoc"):
            names = [self.ident().text]
            while self.accept(","):
                names.append(self.ident().text)
            self.expect(";")
            return Havoc(tuple(names), loc=tok.loc)
        if self.accept("call"):
            return self.call(tok)
        if self.at("if"):
            return self.if_()
        if self.accept("while"):
            cond = self.guard()
            invariants = []
            while self.at("invariant") or self.at("free"):
                itok = self.peek()
                free = self.accept("free")
                self.expect("invariant")
                invariants.append(self.clause(INVARIANT, free, itok))
            body = self.block()
            return While(cond, tuple(invariants), body, loc=tok.loc)
        if self.accept("return"):
            self.expect(";")
            return Return(loc=tok.loc)
        if self.at("var"):
            self.fail("local variable declarations must appear at the start of a body")
        if tok.kind == "ident":
            if tok.text in UNSUPPORTED_KEYWORDS:
                self.unsupported(f"'{tok.text}' statement")
            if self.at(":", 1):
                self.unsupported("labels")
            return self.assignment()
        if self.at("{"):
            self.fail("unexpected '{': blocks only appear as branch or loop bodies")
        self.fail(f"expected a statement but found {self.describe(tok)}")

    def call(self, start: Token) -> Call:
        attrs = self.attributes()
        if self.peek().kind == "ident" and self.peek().text == "forall":
            self.unsupported("call forall")
        outs: List[str] = []
        if self.peek().kind == "ident" and (self.at(",", 1) or self.at(":=", 1)):
            outs.append(self.ident().text)
            while self.accept(","):
                outs.append(self.ident().text)
            self.expect(":=")
        name = self.ident("procedure name").text
        self.expect("(")
        args = self.expressions(")")
        self.expect(")")
        self.expect(";")
        return Call(name, tuple(args), tuple(outs), attrs, loc=start.loc)

    def if_(self) -> If:
        tok = self.expect("if")
        cond = self.guard()
        then = self.block()
        else_ = None
        if self.accept("else"):
            if self.at("if"):
                else_ = Block((self.if_(),))
            else:
                else_ = self.block()
        return If(cond, then, else_, loc=tok.loc)

    def guard(self) -> Optional[Expr]:
        self.expect("(")
        if self.accept("*"):
            cond = None
        else:
            cond = self.expression()
        self.expect(")")
        return cond

    def assignment(self) -> Assign:
        tok = self.peek()
        lhs = [self.lhs()]
        while self.accept(","):
            lhs.append(self.lhs())
        self.expect(":=")
        rhs = [self.expression()]
        while self.accept(","):
            rhs.append(self.expression())
        self.expect(";")
        return Assign(tuple(lhs), tuple(rhs), loc=tok.loc)

    def lhs(self) -> Expr:
        tok = self.ident("assignment target")
        target: Expr = Ident(tok.text, loc=tok.loc)
        while self.at("["):
            btok = self.advance()
            indices = self.expressions("]")
            self.expect("]")
            target = MapSelect(target, tuple(indices), loc=btok.loc)
        return target

    # -- expressions ---------------------------------------------------------

    def expressions(self, closer: str) -> List[Expr]:
        out: List[Expr] = []
        if self.at(closer):
            return out
        out.append(self.expression())
        while self.accept(","):
            out.append(self.expression())
        return out

    def expression(self) -> Expr:
        left = self.implies()
        while self.at("<==>"):
            tok = self.advance()
            left = Binary("<==>", left, self.implies(), loc=tok.loc)
        return left

    def implies(self) -> Expr:
        left = self.logical()
        if self.at("==>"):
            tok = self.advance()
            return Binary("==>", left, self.implies(), loc=tok.loc)
        if self.at("<=="):
            self.unsupported("'<==' (explies)")
        return left

    def logical(self) -> Expr:
        left = self.relation()
        if self.at("&&") or self.at("||"):
            op = self.peek().text
            while self.at(op):
                tok = self.advance()
                left = Binary(op, left, self.relation(), loc=tok.loc)
            other = "||" if op == "&&" else "&&"
            if self.at(other):
                self.fail("'&&' and '||' cannot be mixed without parentheses")
        return left

    def relation(self) -> Expr:
        left = self.term()
        tok = self.peek()
        if tok.kind == "punct" and tok.text in REL_OPS:
            self.advance()
            return Binary(tok.text, left, self.term(), loc=tok.loc)
        if self.at("<:"):
            self.unsupported("'<:' (partial order)")
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.peek().kind == "punct" and self.peek().text in ADD_OPS:
            tok = self.advance()
            left = Binary(tok.text, left, self.factor(), loc=tok.loc)
        if self.at("++"):
            self.unsupported("'++' (bitvector concatenation)")
        return left

    def factor(self) -> Expr:
        left = self.unary()
        while self.peek().text in MUL_OPS and self.peek().kind in ("punct", "kw"):
            tok = self.advance()
            left = Binary(tok.text, left, self.unary(), loc=tok.loc)
        if self.at("/") or self.at("%") or self.at("**"):
            self.unsupported(f"'{self.peek().text}' operator")
        return left

    def unary(self) -> Expr:
        tok = self.peek()
        if self.accept("!"):
            return Unary("!", self.unary(), loc=tok.loc)
        if self.accept("-"):
            return Unary("-", self.unary(), loc=tok.loc)
        return self.postfix()

    def postfix(self) -> Expr:
        expr = self.atom()
        while self.at("["):
            tok = self.advance()
            indices = self.expressions("]")
            if not indices:
                self.fail("a map index needs at least one expression")
            if self.accept(":="):
                value = self.expression()
                self.expect("]")
                expr = MapUpdate(expr, tuple(indices), value, loc=tok.loc)
            else:
                self.expect("]")
                expr = MapSelect(expr, tuple(indices), loc=tok.loc)
        if self.at(":") and not self.at("::"):
            # coercions only; a bare ':' here is never valid in the subset
            self.unsupported("type coercion")
        return expr

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            return IntLit(int(tok.text), loc=tok.loc)
        if self.accept("true"):
            return BoolLit(True, loc=tok.loc)
        if self.accept("false"):
            return BoolLit(False, loc=tok.loc)
        if self.accept("old"):
            self.expect("(")
            inner = self.expression()
            self.expect(")")
            return Old(inner, loc=tok.loc)
        if self.at("if"):
            self.unsupported("if-then-else expression")
        if tok.kind == "ident":
            name = self.ident().text
            if self.accept("("):
                args = self.expressions(")")
                self.expect(")")
                return FunctionApp(name, tuple(args), loc=tok.loc)
            return Ident(name, loc=tok.loc)
        if self.accept("("):
            if self.at("forall") or self.at("exists"):
                q = self.quantifier(tok)
            else:
                if self.peek().kind == "ident" and self.peek().text == "lambda":
                    self.unsupported("lambda expression")
                q = self.expression()
            self.expect(")")
            return q
        if self.at("|"):
            self.unsupported("code expression")
        self.fail(f"expected an expression but found {self.describe(tok)}")

    def quantifier(self, start: Token) -> Quantifier:
        kind = self.advance().text
        if self.at("<"):
            self.unsupported("quantifier type parameters")
        bound: List[BoundVar] = []
        while True:
            tok = self.peek()
            names, ty = self.formal_group()
            bound.extend(BoundVar(n, ty, loc=tok.loc) for n in names)
            if not self.accept(","):
                break
        self.expect("::")
        attrs: List[Attribute] = []
        triggers: List[Trigger] = []
        while self.at("{"):
            if self.at(":", 1):
                attrs.append(self.attribute())
            else:
                ttok = self.advance()
                terms = self.expressions("}")
                if not terms:
                    self.fail("a trigger needs at least one term")
                self.expect("}")
                triggers.append(Trigger(tuple(terms), loc=ttok.loc))
        body = self.expression()
        return Quantifier(kind, tuple(bound), tuple(attrs), tuple(triggers), body, loc=start.loc)


def parse(source: str, origin: str = "<input>") -> Program:
    """Parse ``source``; raise :class:`ParseError` carrying every diagnostic."""
    parser = Parser(tokenize(source, origin))
    program, diags = parser.program()
    if diags:
        raise ParseError(diags)
    return program


def parse_file(path: Union[str, Path]) -> Program:
    path = Path(path)
    return parse(path.read_text(encoding="utf-8"), path.name)
