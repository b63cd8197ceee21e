from __future__ import annotations

from dataclasses import dataclass, replace

from ..errors import SpecTypeError, UnknownIdentifier
from ..streams import Kind, kind_of
from .ast import Abs, Binary, Default, Definition, Expr, Literal, Name, Prev, SpecAst, Unary, format_expr

NUMERIC = (Kind.INT, Kind.FLOAT)


@dataclass(frozen=True)
class TypedSpec:
    ast: SpecAst
    kinds: dict  # every input and definition name -> Kind

    def output_kind(self, name: str) -> Kind:
        return self.kinds[name]

    @property
    def outputs(self) -> list:
        return self.ast.output_names

    @property
    def inputs(self) -> dict:
        return {i.name: i.kind for i in self.ast.inputs}


def _error(e: Expr, expected: str, actual):
    line, col = e.pos if e.pos else (None, None)
    got = ", ".join(str(k) for k in actual) if isinstance(actual, tuple) else str(actual)
    raise SpecTypeError(f"in `{format_expr(e)}`: expected {expected}, got {got}", line, col)


def _annotate(e: Expr, env: dict) -> Expr:
    if isinstance(e, Literal):
        return replace(e, kind=kind_of(e.value))
    if isinstance(e, Name):
        if e.id not in env:
            line, col = e.pos if e.pos else (None, None)
            raise UnknownIdentifier(f"unknown identifier {e.id!r}", line, col)
        return replace(e, kind=env[e.id])
    if isinstance(e, Unary):
        inner = _annotate(e.operand, env)
        if e.op == "!":
            if inner.kind is not Kind.BOOL:
                _error(e, "Bool operand for '!'", inner.kind)
        elif inner.kind not in NUMERIC:
            _error(e, "numeric operand for unary '-'", inner.kind)
        return replace(e, operand=inner, kind=inner.kind)
    if isinstance(e, Binary):
        left, right = _annotate(e.left, env), _annotate(e.right, env)
        kinds = (left.kind, right.kind)
        if e.op in ("+", "-", "*", "/"):
            if not all(k in NUMERIC for k in kinds):
                _error(e, f"numeric operands for '{e.op}'", kinds)
            kind = Kind.FLOAT if Kind.FLOAT in kinds else Kind.INT
        elif e.op in ("<", "<=", ">", ">="):
            if not all(k in NUMERIC for k in kinds):
                _error(e, f"numeric operands for '{e.op}'", kinds)
            kind = Kind.BOOL
        elif e.op in ("==", "!="):
            if (kinds[0] is Kind.BOOL) != (kinds[1] is Kind.BOOL):
                _error(e, f"operands of one kind for '{e.op}'", kinds)
            kind = Kind.BOOL
        else:  # && || ->
            if kinds != (Kind.BOOL, Kind.BOOL):
                _error(e, f"Bool operands for '{e.op}'", kinds)
            kind = Kind.BOOL
        return replace(e, left=left, right=right, kind=kind)
    if isinstance(e, Prev):
        inner = _annotate(e.operand, env)
        return replace(e, operand=inner, kind=inner.kind)
    if isinstance(e, Abs):
        inner = _annotate(e.operand, env)
        if inner.kind not in NUMERIC:
            _error(e, "numeric operand for abs", inner.kind)
        return replace(e, operand=inner, kind=inner.kind)
    if isinstance(e, Default):
        inner = _annotate(e.operand, env)
        lit = kind_of(e.fallback)
        fallback = e.fallback
        if lit is not inner.kind:
            if inner.kind is Kind.FLOAT and lit is Kind.INT:
                fallback = float(fallback)
            else:
                _error(e, f"{inner.kind} fallback literal", lit)
        return replace(e, operand=inner, fallback=fallback, kind=inner.kind)
    raise TypeError(f"not an expression: {e!r}")


def typecheck(ast: SpecAst) -> TypedSpec:
    env = {i.name: i.kind for i in ast.inputs}
    defs = []
    for d in ast.definitions:
        expr = _annotate(d.expr, env)
        env[d.name] = expr.kind
        defs.append(Definition(d.name, expr, pos=d.pos))
    return TypedSpec(replace(ast, definitions=tuple(defs)), env)
