"""Tokenizer for the Boogie subset.  Comments are discarded here."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List

from mugie.diagnostics import ERROR, SYNTAX, UNSUPPORTED, Diagnostic, ParseError
from mugie.syntax import Loc

KEYWORDS = frozenset(
    """
    type const unique var function axiom procedure implementation returns
    requires ensures modifies free invariant assert assume havoc call if
    else while return true false old forall exists int bool div mod
    """.split()
)

# recognised so they can be reported as unsupported rather than as syntax errors
UNSUPPORTED_KEYWORDS = frozenset(
    "goto break where lambda real finite complete extends par yield async".split()
)

PUNCT = [
    "<==>", "==>", "<==", "::", ":=", "==", "!=", "<=", ">=", "&&", "||", "<:", "++", "**",
    "(", ")", "[", "]", "{", "}", ",", ";", ":", "=", "<", ">", "+", "-", "*", "/", "%", "!", "|",
]

_IDENT_START = "A-Za-z'~#$^_.?`\\\\"
_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*)
  | (?P<bv>\d+bv\d+)
  | (?P<real>\d+\.\d+)
  | (?P<int>\d+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[%s][%s0-9]*)
  | (?P<punct>%s)
    """
    % (_IDENT_START, _IDENT_START, "|".join(re.escape(p) for p in PUNCT)),
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, kw, int, string, punct, eof
    text: str
    loc: Loc


def _skip_block_comment(source: str, pos: int) -> int:
    # Boogie block comments nest
    depth = 0
    while pos < len(source):
        if source.startswith("/*", pos):
            depth += 1
            pos += 2
        elif source.startswith("*/", pos):
            depth -= 1
            pos += 2
            if depth == 0:
                return pos
        else:
            pos += 1
    return -1


def tokenize(source: str, origin: str = "<input>") -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    line, line_start = 1, 0

    def loc_at(p: int) -> Loc:
        return Loc(origin, line, p - line_start + 1)

    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError([Diagnostic(ERROR, loc_at(pos), f"unexpected character {source[pos]!r}", SYNTAX)])
        kind = m.lastgroup
        start, end = m.start(), m.end()
        if kind == "block_comment":
            end = _skip_block_comment(source, start)
            if end < 0:
                raise ParseError([Diagnostic(ERROR, loc_at(start), "unterminated block comment", SYNTAX)])
        elif kind in ("bv", "real"):
            what = "bitvector literal" if kind == "bv" else "real literal"
            raise ParseError([Diagnostic(ERROR, loc_at(start), f"unsupported construct: {what} {m.group()}", UNSUPPORTED)])
        elif kind not in ("ws", "line_comment"):
            text = m.group()
            if kind == "ident" and text in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, text, loc_at(start)))
        # keep line accounting across whatever we consumed
        chunk = source[start:end]
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = start + chunk.rindex("\n") + 1
        pos = end
    tokens.append(Token("eof", "", loc_at(pos)))
    return tokens
