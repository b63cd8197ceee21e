"""Monitor specification language: parsing, typing and compilation."""

from .ast import SpecAst, format_expr, pretty
from .compiler import DataflowGraph, GraphEvaluator, Node, compile_spec
from .parser import parse
from .typecheck import TypedSpec, typecheck


def load_spec(text: str) -> TypedSpec:
    """Parse and typecheck specification source."""
    return typecheck(parse(text))


__all__ = [
    "DataflowGraph",
    "GraphEvaluator",
    "Node",
    "SpecAst",
    "TypedSpec",
    "compile_spec",
    "format_expr",
    "load_spec",
    "parse",
    "pretty",
    "typecheck",
]
