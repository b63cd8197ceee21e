"""Online evaluation of compiled monitors and multi-level monitor sets."""

from __future__ import annotations

import enum
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .errors import KindMismatch, RVError, UnboundChannel
from .lang import DataflowGraph, GraphEvaluator, TypedSpec, compile_spec, load_spec
from .lang.ast import Abs, Binary, Default, Literal, Name, Prev, Unary, children
from .streams import UNDEF, Aligner, Event, EventStream, Kind, align, fmt_seconds, lift, merge_events, to_ms
from .traceio import format_event

log = logging.getLogger(__name__)


class Level(str, enum.Enum):
    DATA = "data"
    FUNCTIONAL = "functional"

    def __str__(self):
        return self.value


@dataclass
class MonitorInstance:
    id: str
    level: Level
    spec: TypedSpec
    binding: dict = field(default_factory=dict)  # spec input -> trace channel
    verdict_channel: Optional[str] = None
    graph: Optional[DataflowGraph] = None

    def __post_init__(self):
        self.level = Level(self.level)
        inputs = self.spec.inputs
        unknown = set(self.binding) - set(inputs)
        if unknown:
            raise UnboundChannel(f"monitor {self.id!r}: binding names unknown inputs {sorted(unknown)}")
        # identity binding for anything not mapped explicitly
        self.binding = {name: self.binding.get(name, name) for name in inputs}
        if self.verdict_channel is not None:
            if self.verdict_channel not in self.spec.outputs:
                raise ValueError(f"monitor {self.id!r}: {self.verdict_channel!r} is not an output")
            if self.spec.output_kind(self.verdict_channel) is not Kind.BOOL:
                raise ValueError(f"monitor {self.id!r}: verdict {self.verdict_channel!r} is not Bool")
        if self.graph is None:
            self.graph = compile_spec(self.spec)

    @classmethod
    def from_source(cls, id, text, level=Level.DATA, binding=None, verdict=None):
        spec = load_spec(text)
        if verdict is None:
            verdict = default_verdict(spec)
        return cls(id, level, spec, dict(binding or {}), verdict)

    @property
    def channels(self) -> set:
        return set(self.binding.values())


def default_verdict(spec: TypedSpec) -> Optional[str]:
    """Pick the output that designates a violation.

    ``violation`` or ``attack`` if present, else the last Bool output.
    """
    bools = [o for o in spec.outputs if spec.output_kind(o) is Kind.BOOL]
    for name in ("violation", "attack"):
        if name in bools:
            return name
    return bools[-1] if bools else None


@dataclass
class MonitorReport:
    id: str
    level: Level
    verdict_channel: Optional[str] = None
    intervals: list = field(default_factory=list)  # [start_ms, end_ms]
    violation_ticks: int = 0
    first_detection: Optional[int] = None
    evaluated_ticks: int = 0
    error: Optional[str] = None

    def to_dict(self) -> dict:
        def secs(ms):
            return float(fmt_seconds(ms))

        return {
            "id": self.id,
            "level": str(self.level),
            "verdict_channel": self.verdict_channel,
            "intervals": [[secs(a), secs(b)] for a, b in self.intervals],
            "violation_ticks": self.violation_ticks,
            "first_detection": None if self.first_detection is None else secs(self.first_detection),
            "evaluated_ticks": self.evaluated_ticks,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MonitorReport":
        return cls(
            id=d["id"],
            level=Level(d["level"]),
            verdict_channel=d.get("verdict_channel"),
            intervals=[[to_ms(a), to_ms(b)] for a, b in d["intervals"]],
            violation_ticks=d["violation_ticks"],
            first_detection=None if d["first_detection"] is None else to_ms(d["first_detection"]),
            evaluated_ticks=d["evaluated_ticks"],
            error=d.get("error"),
        )


class _IntervalBuilder:
    """Merges violations on adjacent evaluated ticks into closed intervals."""

    def __init__(self, report: MonitorReport):
        self.report = report
        self._last_violated = False

    def tick(self, t: int, violated: bool):
        r = self.report
        r.evaluated_ticks += 1
        if violated:
            r.violation_ticks += 1
            if self._last_violated:
                r.intervals[-1][1] = t
            else:
                r.intervals.append([t, t])
            if r.first_detection is None:
                r.first_detection = t
        self._last_violated = violated


class OnlineMonitor:
    """Streaming evaluation of one monitor instance.

    Feed time-ordered ``(channel, Event)`` batches; each call returns the
    output events of every tick that became complete.
    """

    def __init__(self, monitor: MonitorInstance):
        self.monitor = monitor
        self.evaluator = GraphEvaluator(monitor.graph)
        self._by_channel: dict = {}
        for name, channel in monitor.binding.items():
            self._by_channel.setdefault(channel, []).append(name)
        self._aligner = Aligner(self._by_channel)
        self._declared = monitor.spec.inputs
        self._checked: set = set()
        self.ticks: list = []
        self.outputs: dict = {name: [] for name in monitor.spec.outputs}
        self.report = MonitorReport(monitor.id, monitor.level, monitor.verdict_channel)
        self._intervals = _IntervalBuilder(self.report)

    def _check_kind(self, channel, e: Event):
        for name in self._by_channel[channel]:
            want, got = self._declared[name], e.kind
            if got is not want and not (want is Kind.FLOAT and got is Kind.INT):
                raise KindMismatch(
                    f"monitor {self.monitor.id!r}: input {name!r} is {want}, "
                    f"channel {channel!r} carries {got}"
                )
        self._checked.add(channel)

    def feed(self, events: Iterable) -> list:
        emitted = []
        for channel, e in events:
            if channel not in self._by_channel:
                continue
            if channel not in self._checked:
                self._check_kind(channel, e)
            for tick in self._aligner.push(channel, e):
                emitted.extend(self._evaluate(tick))
        return emitted

    def finish(self) -> list:
        emitted = []
        for tick in self._aligner.flush():
            emitted.extend(self._evaluate(tick))
        return emitted

    def _evaluate(self, tick) -> list:
        inputs = {}
        for channel, names in self._by_channel.items():
            v = tick.values[channel]
            for name in names:
                if v is not UNDEF and self._declared[name] is Kind.FLOAT:
                    inputs[name] = float(v)
                else:
                    inputs[name] = v
        out = self.evaluator.step(inputs)
        self.ticks.append(tick.t)
        emitted = []
        for name, v in out.items():
            if v is not UNDEF:
                self.outputs[name].append(Event(tick.t, v))
                emitted.append((tick.t, name, v))
        verdict = self.monitor.verdict_channel
        self._intervals.tick(tick.t, verdict is not None and out[verdict] is True)
        return emitted

    def result(self) -> "EvaluationResult":
        streams = {name: EventStream(name, evs) for name, evs in self.outputs.items()}
        return EvaluationResult(self.monitor, streams, list(self.ticks), self.report)


@dataclass
class EvaluationResult:
    monitor: MonitorInstance
    outputs: dict  # output name -> EventStream
    ticks: list
    report: MonitorReport

    @property
    def verdict(self) -> Optional[EventStream]:
        name = self.monitor.verdict_channel
        return None if name is None else self.outputs[name]

    def ok_flags(self) -> Optional[EventStream]:
        """The verdict stream with inverted polarity, as 1/0 integers."""
        v = self.verdict
        if v is None:
            return None
        return EventStream("ok", tuple(Event(e.t, 0 if e.value else 1) for e in v))

    def violation_times(self) -> list:
        v = self.verdict
        return [] if v is None else [e.t for e in v if e.value]

    def verdict_lines(self) -> list:
        rows = []
        for name, stream in self.outputs.items():
            for e in stream:
                rows.append((e.t, name, e.value))
        rows.sort(key=lambda r: r[0])
        return [format_event(t, ch, v, monitor=self.monitor.id) for t, ch, v in rows]


def _as_streams(trace) -> dict:
    if isinstance(trace, Mapping):
        return dict(trace)
    return {s.channel: s for s in trace}


def evaluate(monitor: MonitorInstance, trace) -> EvaluationResult:
    """Evaluate one monitor offline over a whole trace."""
    streams = _as_streams(trace)
    if streams:
        missing = sorted(c for c in monitor.channels if c not in streams)
        if missing:
            raise UnboundChannel(f"monitor {monitor.id!r}: trace has no channel(s) {missing}")
    online = OnlineMonitor(monitor)
    bound = [streams[c] for c in sorted(monitor.channels) if c in streams]
    online.feed(merge_events(bound))
    online.finish()
    return online.result()


@dataclass
class VerdictReport:
    monitors: dict = field(default_factory=dict)  # id -> MonitorReport
    results: dict = field(default_factory=dict, repr=False)  # id -> EvaluationResult

    def to_dict(self) -> dict:
        return {"monitors": [r.to_dict() for r in self.monitors.values()]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "VerdictReport":
        reports = [MonitorReport.from_dict(m) for m in d["monitors"]]
        return cls({r.id: r for r in reports})

    @property
    def total_violations(self) -> int:
        return sum(r.violation_ticks for r in self.monitors.values())

    def detections(self, level: Level) -> int:
        """Number of violation intervals across monitors of one level."""
        return sum(len(r.intervals) for r in self.monitors.values() if r.level is Level(level))

    def verdict_lines(self) -> list:
        lines = []
        for result in self.results.values():
            lines.extend(result.verdict_lines())
        return lines


def _safe_evaluate(monitor, streams):
    try:
        return evaluate(monitor, streams)
    except RVError as exc:
        log.warning("monitor %s failed: %s", monitor.id, exc)
        report = MonitorReport(monitor.id, monitor.level, monitor.verdict_channel, error=str(exc))
        return EvaluationResult(monitor, {}, [], report)


def _check_ids(monitors):
    ids = [m.id for m in monitors]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate monitor ids in {ids}")


def run_set(monitors: list, trace, workers: Optional[int] = None) -> VerdictReport:
    """Evaluate every monitor independently over a shared, read-only trace."""
    monitors = list(monitors)
    _check_ids(monitors)
    streams = _as_streams(trace)
    if workers and workers > 1 and len(monitors) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda m: _safe_evaluate(m, streams), monitors))
    else:
        results = [_safe_evaluate(m, streams) for m in monitors]
    report = VerdictReport()
    for r in results:
        report.monitors[r.monitor.id] = r.report
        report.results[r.monitor.id] = r
    return report


class MonitorSet:
    """Streaming counterpart of :func:`run_set`; one failing monitor is dropped, not fatal."""

    def __init__(self, monitors: list):
        monitors = list(monitors)
        _check_ids(monitors)
        self.online = {m.id: OnlineMonitor(m) for m in monitors}
        self.errors: dict = {}

    def _each(self, fn) -> list:
        out = []
        for mid, om in self.online.items():
            if mid in self.errors:
                continue
            try:
                out.extend((mid, t, ch, v) for t, ch, v in fn(om))
            except RVError as exc:
                log.warning("monitor %s failed: %s", mid, exc)
                self.errors[mid] = str(exc)
        return out

    def feed(self, events: Iterable) -> list:
        events = list(events)
        return self._each(lambda om: om.feed(events))

    def finish(self) -> VerdictReport:
        self._each(lambda om: om.finish())
        report = VerdictReport()
        for mid, om in self.online.items():
            if mid in self.errors:
                m = om.monitor
                report.monitors[mid] = MonitorReport(m.id, m.level, m.verdict_channel, error=self.errors[mid])
                report.results[mid] = EvaluationResult(m, {}, [], report.monitors[mid])
            else:
                report.monitors[mid] = om.report
                report.results[mid] = om.result()
        return report


# -- reference interpreter -------------------------------------------------------


def interpret_reference(spec: TypedSpec, trace, binding: Optional[dict] = None) -> dict:
    """Tree-walking evaluation of a typed spec; the oracle for compiled graphs.

    Returns ``{output name: EventStream}``.
    """
    binding = dict(binding or {})
    inputs = spec.inputs
    binding = {name: binding.get(name, name) for name in inputs}
    streams = _as_streams(trace)
    if streams:
        missing = sorted(c for c in set(binding.values()) if c not in streams)
        if missing:
            raise UnboundChannel(f"trace has no channel(s) {missing}")
    outputs = {name: [] for name in spec.outputs}
    bound = [streams[c] for c in sorted(set(binding.values())) if c in streams]
    if not bound:
        return {name: EventStream(name) for name in outputs}
    for channel in set(binding.values()):
        s = streams[channel]
        if s.kind is None:
            continue
        for name, ch in binding.items():
            if ch == channel:
                want = inputs[name]
                if s.kind is not want and not (want is Kind.FLOAT and s.kind is Kind.INT):
                    raise KindMismatch(f"input {name!r} is {want}, channel {channel!r} is {s.kind}")

    definitions = {d.name: d.expr for d in spec.ast.definitions}
    prev_nodes = []

    def collect(e):
        if isinstance(e, Prev):
            prev_nodes.append(e)
        for c in children(e):
            collect(c)

    def uses(e, acc):
        if isinstance(e, Name) and e.id in definitions and e.id not in acc:
            acc.add(e.id)
            uses(definitions[e.id], acc)
        for c in children(e):
            uses(c, acc)
        return acc

    # only definitions feeding an output are ever evaluated
    live = set()
    for name in spec.outputs:
        uses(Name(name), live)
    for name, expr in definitions.items():
        if name in live:
            collect(expr)
    stored = {id(p): UNDEF for p in prev_nodes}

    for tick in align(bound):
        env = {}
        for name, ch in binding.items():
            v = tick.values[ch]
            if v is not UNDEF and inputs[name] is Kind.FLOAT:
                v = float(v)
            env[name] = v

        def ev(e):
            if isinstance(e, Literal):
                return e.value
            if isinstance(e, Name):
                return env[e.id] if e.id in env else ev(definitions[e.id])
            if isinstance(e, Unary):
                return lift(e.op, ev(e.operand))
            if isinstance(e, Binary):
                left = ev(e.left)
                right = ev(e.right)
                return lift(e.op, left, right)
            if isinstance(e, Prev):
                return stored[id(e)]
            if isinstance(e, Abs):
                return lift("abs", ev(e.operand))
            if isinstance(e, Default):
                v = ev(e.operand)
                return e.fallback if v is UNDEF else v
            raise TypeError(f"cannot evaluate {e!r}")

        values = {name: ev(Name(name)) for name in spec.outputs}
        updates = {id(p): ev(p.operand) for p in prev_nodes}
        for key, v in updates.items():
            if v is not UNDEF:
                stored[key] = v
        for name, v in values.items():
            if v is not UNDEF:
                outputs[name].append(Event(tick.t, v))
    return {name: EventStream(name, evs) for name, evs in outputs.items()}

