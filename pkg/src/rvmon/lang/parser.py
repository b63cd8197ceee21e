"""Recursive-descent parser for ``.tsl`` monitor specifications.

Grammar::

    spec    := { stmt } ;
    stmt    := "in" ID ":" "Events[" kind "]" | "def" ID ":=" expr | "out" ID ;
    kind    := "Int" | "Float" | "Bool" ;
    expr    := or ; or := and { "||" and } ; and := imp { "&&" imp } ;
    imp     := cmp [ "->" imp ] ;
    cmp     := add [ ("<"|"<="|">"|">="|"=="|"!=") add ] ;
    add     := mul { ("+"|"-") mul } ; mul := unary { ("*"|"/") unary } ;
    unary   := ("-"|"!") unary | atom ;
    atom    := NUMBER | "true" | "false" | ID | "(" expr ")"
             | "prev" "(" expr ")" | "abs" "(" expr ")"
             | "default" "(" expr "," literal ")" ;

Names are resolved while parsing: a definition may only refer to inputs and
earlier definitions.
"""

from __future__ import annotations

from ..errors import DuplicateName, SpecSyntaxError, UnknownIdentifier
from ..streams import Kind
from .ast import Abs, Binary, Default, Definition, Input, Literal, Name, Output, Prev, SpecAst, Unary
from .lexer import tokenize

_KINDS = {k.value: k for k in Kind}
_COMPARISONS = {"<", "<=", ">", ">=", "==", "!="}


def _number(text: str):
    if "." in text or "e" in text or "E" in text:
        return float(text)
    return int(text)


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.scope: dict = {}

    # -- token helpers
    @property
    def tok(self):
        return self.tokens[self.i]

    def _advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def _at(self, text, kind=None):
        t = self.tok
        return t.text == text and t.kind in ((kind,) if kind else ("op", "keyword"))

    def _expect(self, text, kind=None):
        if not self._at(text, kind):
            self._fail(f"expected {text!r}")
        return self._advance()

    def _expect_ident(self, what="identifier"):
        if self.tok.kind != "ident":
            self._fail(f"expected {what}")
        return self._advance()

    def _fail(self, message):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise SpecSyntaxError(f"{message}, found {found}", t.line, t.column)

    # -- statements
    def parse(self) -> SpecAst:
        inputs, defs, outputs = [], [], []
        while self.tok.kind != "eof":
            tok = self.tok
            if self._at("in", "keyword"):
                self._advance()
                name = self._expect_ident("input name")
                self._expect(":", "op")
                self._expect("Events", "keyword")
                self._expect("[", "op")
                kind_tok = self._expect_ident("Int, Float or Bool")
                if kind_tok.text not in _KINDS:
                    raise SpecSyntaxError(
                        f"unknown kind {kind_tok.text!r}", kind_tok.line, kind_tok.column
                    )
                self._expect("]", "op")
                self._declare(name)
                inputs.append(Input(name.text, _KINDS[kind_tok.text], pos=(tok.line, tok.column)))
            elif self._at("def", "keyword"):
                self._advance()
                name = self._expect_ident("definition name")
                self._expect(":=", "op")
                expr = self.expr()
                self._declare(name)
                defs.append(Definition(name.text, expr, pos=(tok.line, tok.column)))
            elif self._at("out", "keyword"):
                self._advance()
                name = self._expect_ident("output name")
                outputs.append(Output(name.text, pos=(name.line, name.column)))
            else:
                self._fail("expected 'in', 'def' or 'out'")
        seen = set()
        for o in outputs:
            if o.name not in self.scope:
                raise UnknownIdentifier(f"unknown output {o.name!r}", *o.pos)
            if o.name in seen:
                raise DuplicateName(f"duplicate output {o.name!r}", *o.pos)
            seen.add(o.name)
        return SpecAst(tuple(inputs), tuple(defs), tuple(outputs))

    def _declare(self, tok):
        if tok.text in self.scope:
            raise DuplicateName(f"duplicate name {tok.text!r}", tok.line, tok.column)
        self.scope[tok.text] = tok

    # -- expressions
    def expr(self):
        return self._or()

    def _or(self):
        left = self._and()
        while self._at("||", "op"):
            t = self._advance()
            left = Binary("||", left, self._and(), pos=(t.line, t.column))
        return left

    def _and(self):
        left = self._imp()
        while self._at("&&", "op"):
            t = self._advance()
            left = Binary("&&", left, self._imp(), pos=(t.line, t.column))
        return left

    def _imp(self):
        left = self._cmp()
        if self._at("->", "op"):
            t = self._advance()
            return Binary("->", left, self._imp(), pos=(t.line, t.column))
        return left

    def _cmp(self):
        left = self._add()
        if self.tok.kind == "op" and self.tok.text in _COMPARISONS:
            t = self._advance()
            return Binary(t.text, left, self._add(), pos=(t.line, t.column))
        return left

    def _add(self):
        left = self._mul()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            t = self._advance()
            left = Binary(t.text, left, self._mul(), pos=(t.line, t.column))
        return left

    def _mul(self):
        left = self._unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            t = self._advance()
            left = Binary(t.text, left, self._unary(), pos=(t.line, t.column))
        return left

    def _unary(self):
        if self.tok.kind == "op" and self.tok.text in ("-", "!"):
            t = self._advance()
            op = "neg" if t.text == "-" else "!"
            return Unary(op, self._unary(), pos=(t.line, t.column))
        return self._atom()

    def _atom(self):
        t = self.tok
        pos = (t.line, t.column)
        if t.kind == "number":
            self._advance()
            return Literal(_number(t.text), pos=pos)
        if t.kind == "keyword" and t.text in ("true", "false"):
            self._advance()
            return Literal(t.text == "true", pos=pos)
        if t.kind == "ident":
            self._advance()
            if t.text not in self.scope:
                raise UnknownIdentifier(f"unknown identifier {t.text!r}", t.line, t.column)
            return Name(t.text, pos=pos)
        if self._at("(", "op"):
            self._advance()
            inner = self.expr()
            self._expect(")", "op")
            return inner
        if t.kind == "keyword" and t.text in ("prev", "abs"):
            self._advance()
            self._expect("(", "op")
            inner = self.expr()
            self._expect(")", "op")
            return (Prev if t.text == "prev" else Abs)(inner, pos=pos)
        if self._at("default", "keyword"):
            self._advance()
            self._expect("(", "op")
            inner = self.expr()
            self._expect(",", "op")
            fallback = self._literal()
            self._expect(")", "op")
            return Default(inner, fallback, pos=pos)
        self._fail("expected an expression")

    def _literal(self):
        negate = False
        if self._at("-", "op"):
            self._advance()
            negate = True
        t = self.tok
        if t.kind == "number":
            self._advance()
            v = _number(t.text)
            return -v if negate else v
        if not negate and t.kind == "keyword" and t.text in ("true", "false"):
            self._advance()
            return t.text == "true"
        self._fail("expected a literal")


def parse(text: str) -> SpecAst:
    return Parser(text).parse()
