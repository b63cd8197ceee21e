"""Syntax tree for monitor specifications and a pretty-printer.

Source positions and inferred kinds are carried on nodes but excluded from
equality, so two trees compare equal when they are structurally identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..streams import Kind


@dataclass(frozen=True)
class Expr:
    pass


def _meta():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Literal(Expr):
    value: Union[int, float, bool]
    pos: Optional[tuple] = _meta()
    kind: Optional[Kind] = _meta()


@dataclass(frozen=True)
class Name(Expr):
    id: str
    pos: Optional[tuple] = _meta()
    kind: Optional[Kind] = _meta()


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "neg" or "!"
    operand: Expr
    pos: Optional[tuple] = _meta()
    kind: Optional[Kind] = _meta()


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    pos: Optional[tuple] = _meta()
    kind: Optional[Kind] = _meta()


@dataclass(frozen=True)
class Prev(Expr):
    operand: Expr
    pos: Optional[tuple] = _meta()
    kind: Optional[Kind] = _meta()


@dataclass(frozen=True)
class Abs(Expr):
    operand: Expr
    pos: Optional[tuple] = _meta()
    kind: Optional[Kind] = _meta()


@dataclass(frozen=True)
class Default(Expr):
    operand: Expr
    fallback: Union[int, float, bool]
    pos: Optional[tuple] = _meta()
    kind: Optional[Kind] = _meta()


@dataclass(frozen=True)
class Input:
    name: str
    kind: Kind
    pos: Optional[tuple] = _meta()


@dataclass(frozen=True)
class Definition:
    name: str
    expr: Expr
    pos: Optional[tuple] = _meta()


@dataclass(frozen=True)
class Output:
    name: str
    pos: Optional[tuple] = _meta()


@dataclass(frozen=True)
class SpecAst:
    inputs: tuple = ()
    definitions: tuple = ()
    outputs: tuple = ()

    @property
    def input_names(self) -> list:
        return [i.name for i in self.inputs]

    @property
    def output_names(self) -> list:
        return [o.name for o in self.outputs]


# -- printing ------------------------------------------------------------------

_SYMBOL = {"neg": "-", "!": "!"}


def _literal(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value)


def format_expr(e: Expr) -> str:
    """Fully parenthesized rendering; reparses to the same tree."""
    if isinstance(e, Literal):
        return _literal(e.value)
    if isinstance(e, Name):
        return e.id
    if isinstance(e, Unary):
        inner = format_expr(e.operand)
        # "--" would start a comment
        sep = " " if inner.startswith("-") else ""
        return f"({_SYMBOL[e.op]}{sep}{inner})"
    if isinstance(e, Binary):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    if isinstance(e, Prev):
        return f"prev({format_expr(e.operand)})"
    if isinstance(e, Abs):
        return f"abs({format_expr(e.operand)})"
    if isinstance(e, Default):
        return f"default({format_expr(e.operand)}, {_literal(e.fallback)})"
    raise TypeError(f"not an expression: {e!r}")


def pretty(spec: SpecAst) -> str:
    lines = [f"in {i.name}: Events[{i.kind}]" for i in spec.inputs]
    lines += [f"def {d.name} := {format_expr(d.expr)}" for d in spec.definitions]
    lines += [f"out {o.name}" for o in spec.outputs]
    return "\n".join(lines) + "\n"


def children(e: Expr) -> tuple:
    if isinstance(e, (Unary, Prev, Abs, Default)):
        return (e.operand,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    return ()
