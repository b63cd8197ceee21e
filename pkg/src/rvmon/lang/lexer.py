from __future__ import annotations

import re
from typing import NamedTuple

from ..errors import SpecSyntaxError

KEYWORDS = {"in", "def", "out", "true", "false", "prev", "abs", "default", "Events"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|->|&&|\|\||<=|>=|==|!=|[-+*/<>!():,\[\]])
    """,
    re.VERBOSE,
)


class Token(NamedTuple):
    kind: str  # number, ident, keyword, op, eof
    text: str
    line: int
    column: int


def tokenize(text: str) -> list:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SpecSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        group = m.lastgroup
        col = pos - line_start + 1
        if group == "nl":
            line += 1
            line_start = m.end()
        elif group == "number":
            tokens.append(Token("number", m.group(), line, col))
        elif group == "ident":
            word = m.group()
            tokens.append(Token("keyword" if word in KEYWORDS else "ident", word, line, col))
        elif group == "op":
            tokens.append(Token("op", m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens
