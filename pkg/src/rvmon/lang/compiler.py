"""Compilation of typed specifications into a shared-node dataflow graph."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..streams import UNDEF, Kind, lift
from .ast import Abs, Binary, Default, Literal, Name, Prev, Unary
from .typecheck import TypedSpec


@dataclass(frozen=True)
class Node:
    id: int
    op: str  # source, const, prev, unary, binary, abs, default
    args: tuple
    kind: Kind
    payload: object = None  # input name, constant, operator symbol or fallback


@dataclass
class DataflowGraph:
    nodes: list = field(default_factory=list)
    sinks: dict = field(default_factory=dict)  # output name -> node id
    inputs: dict = field(default_factory=dict)  # input name -> Kind

    @property
    def edges(self) -> list:
        return [(a, n.id) for n in self.nodes for a in n.args]

    def count(self, op: str, payload=None) -> int:
        return sum(1 for n in self.nodes if n.op == op and (payload is None or n.payload == payload))

    def sink_kind(self, name: str) -> Kind:
        return self.nodes[self.sinks[name]].kind


class _Builder:
    def __init__(self):
        self.graph = DataflowGraph()
        self._memo: dict = {}

    def node(self, op, args, kind, payload=None) -> int:
        # repr keeps 1, 1.0, True and 0.0/-0.0 apart
        key = (op, args, kind, repr(payload))
        if key not in self._memo:
            n = Node(len(self.graph.nodes), op, args, kind, payload)
            self.graph.nodes.append(n)
            self._memo[key] = n.id
        return self._memo[key]


def compile_spec(spec: TypedSpec) -> DataflowGraph:
    b = _Builder()
    env = {}
    for inp in spec.ast.inputs:
        env[inp.name] = b.node("source", (), inp.kind, inp.name)
        b.graph.inputs[inp.name] = inp.kind

    def lower(e) -> int:
        if isinstance(e, Literal):
            return b.node("const", (), e.kind, e.value)
        if isinstance(e, Name):
            return env[e.id]
        if isinstance(e, Unary):
            return b.node("unary", (lower(e.operand),), e.kind, e.op)
        if isinstance(e, Binary):
            return b.node("binary", (lower(e.left), lower(e.right)), e.kind, e.op)
        if isinstance(e, Prev):
            return b.node("prev", (lower(e.operand),), e.kind)
        if isinstance(e, Abs):
            return b.node("abs", (lower(e.operand),), e.kind)
        if isinstance(e, Default):
            return b.node("default", (lower(e.operand),), e.kind, e.fallback)
        raise TypeError(f"cannot lower {e!r}")

    for d in spec.ast.definitions:
        env[d.name] = lower(d.expr)
    for name in spec.ast.output_names:
        b.graph.sinks[name] = env[name]
    return b.graph


class GraphEvaluator:
    """Per-instance evaluation state for one compiled graph."""

    def __init__(self, graph: DataflowGraph):
        self.graph = graph
        live = set()
        stack = list(graph.sinks.values())
        while stack:
            i = stack.pop()
            if i not in live:
                live.add(i)
                stack.extend(graph.nodes[i].args)
        self._order = [n for n in graph.nodes if n.id in live]
        self._prev_nodes = [n for n in self._order if n.op == "prev"]
        self._stored: dict = {n.id: UNDEF for n in self._prev_nodes}

    def step(self, inputs: dict) -> dict:
        """Evaluate one aligned tick; ``inputs`` maps input names to values or UNDEF."""
        vals: list = [UNDEF] * len(self.graph.nodes)
        for n in self._order:
            op = n.op
            if op == "source":
                v = inputs.get(n.payload, UNDEF)
            elif op == "const":
                v = n.payload
            elif op == "prev":
                v = self._stored[n.id]
            elif op == "binary":
                v = lift(n.payload, vals[n.args[0]], vals[n.args[1]])
            elif op == "unary":
                v = lift(n.payload, vals[n.args[0]])
            elif op == "abs":
                v = lift("abs", vals[n.args[0]])
            elif op == "default":
                v = vals[n.args[0]]
                if v is UNDEF:
                    v = n.payload
            else:
                raise ValueError(f"unknown node op {op!r}")
            vals[n.id] = v
        for n in self._prev_nodes:
            v = vals[n.args[0]]
            if v is not UNDEF:
                self._stored[n.id] = v
        return {name: vals[i] for name, i in self.graph.sinks.items()}

