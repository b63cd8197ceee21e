"""Timestamped event streams and the scalar stream algebra.

Time is kept as an integer number of milliseconds so that grid instants such
as 3.1 s compare exactly.  Values are ``int``, ``float`` or ``bool``.
"""

from __future__ import annotations

import enum
import heapq
import math
from collections import deque
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Iterable, Iterator, NamedTuple, Optional, Union

from .errors import DivisionByZero, KindMismatch, NonMonotoneTimestamp

Value = Union[int, float, bool]

MS_PER_S = 1000


class Kind(enum.Enum):
    INT = "Int"
    FLOAT = "Float"
    BOOL = "Bool"

    def __str__(self):
        return self.value


class _Undefined:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "undefined"

    def __reduce__(self):
        return (_Undefined, ())


UNDEF = _Undefined()


def kind_of(value) -> Kind:
    # bool first: bool is a subclass of int
    if isinstance(value, bool):
        return Kind.BOOL
    if isinstance(value, int):
        return Kind.INT
    if isinstance(value, float):
        return Kind.FLOAT
    raise KindMismatch(f"unsupported value {value!r} of type {type(value).__name__}")


def to_ms(seconds) -> int:
    """Convert decimal seconds to integer milliseconds.

    Floats are read through their shortest repr, so ``3.1`` maps to 3100
    exactly.  Anything finer than a millisecond is rejected.
    """
    if isinstance(seconds, bool):
        raise ValueError("time must be numeric")
    if isinstance(seconds, int):
        return seconds * MS_PER_S
    try:
        d = Decimal(repr(seconds)) if isinstance(seconds, float) else Decimal(seconds)
    except (InvalidOperation, TypeError) as exc:
        raise ValueError(f"bad time value {seconds!r}") from exc
    if not d.is_finite():
        raise ValueError(f"bad time value {seconds!r}")
    ms = d * MS_PER_S
    rounded = ms.to_integral_value()
    if ms != rounded:
        # tolerate float noise such as 0.30000000000000004
        if isinstance(seconds, float) and abs(ms - rounded) < Decimal("1e-6"):
            return int(rounded)
        raise ValueError(f"time {seconds!r} is not a multiple of 1 ms")
    return int(rounded)


def fmt_seconds(ms: int) -> str:
    """Render milliseconds as the shortest decimal seconds string ("3.1", "0.0")."""
    sign = "-" if ms < 0 else ""
    whole, frac = divmod(abs(ms), MS_PER_S)
    frac_s = f"{frac:03d}".rstrip("0") or "0"
    return f"{sign}{whole}.{frac_s}"


def seconds(ms: int) -> float:
    return ms / MS_PER_S


@dataclass(frozen=True)
class Event:
    t: int  # milliseconds
    value: Value

    def __post_init__(self):
        if isinstance(self.t, bool) or not isinstance(self.t, int):
            raise TypeError(f"event time must be integer milliseconds, got {self.t!r}")
        if self.t < 0:
            raise ValueError(f"event time must be non-negative, got {self.t}")
        kind_of(self.value)

    @classmethod
    def at(cls, secs, value) -> "Event":
        return cls(to_ms(secs), value)

    @property
    def kind(self) -> Kind:
        return kind_of(self.value)

    @property
    def seconds(self) -> float:
        return self.t / MS_PER_S


@dataclass(frozen=True)
class EventStream:
    channel: str
    events: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        last = None
        kind = None
        for e in self.events:
            _check_next(self.channel, last, kind, e)
            last = e.t
            kind = kind if kind is not None else e.kind

    @classmethod
    def of(cls, channel: str, pairs: Iterable) -> "EventStream":
        """Build from ``(seconds, value)`` pairs."""
        return cls(channel, tuple(Event.at(t, v) for t, v in pairs))

    @property
    def kind(self) -> Optional[Kind]:
        return self.events[0].kind if self.events else None

    @property
    def last(self) -> Optional[Event]:
        return self.events[-1] if self.events else None

    def append(self, e: Event) -> "EventStream":
        last = self.events[-1].t if self.events else None
        _check_next(self.channel, last, self.kind, e)
        stream = object.__new__(EventStream)
        object.__setattr__(stream, "channel", self.channel)
        object.__setattr__(stream, "events", self.events + (e,))
        return stream

    def truncate(self, t_ms: int) -> "EventStream":
        """Events with timestamp <= t_ms."""
        return EventStream(self.channel, tuple(e for e in self.events if e.t <= t_ms))

    def times(self) -> list:
        return [e.t for e in self.events]

    def values(self) -> list:
        return [e.value for e in self.events]

    def __len__(self):
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)


def _check_next(channel, last_t, kind, e: Event):
    if last_t is not None and e.t <= last_t:
        raise NonMonotoneTimestamp(
            f"channel {channel!r}: t={fmt_seconds(e.t)} not after t={fmt_seconds(last_t)}"
        )
    if kind is not None and e.kind is not kind:
        raise KindMismatch(f"channel {channel!r}: expected {kind}, got {e.kind} ({e.value!r})")


def append(stream: EventStream, e: Event) -> EventStream:
    return stream.append(e)


class StreamWindow:
    """The last ``depth + 1`` events of one channel."""

    def __init__(self, channel: str, depth: int = 1):
        if depth < 0:
            raise ValueError("depth must be >= 0")
        self.channel = channel
        self.depth = depth
        self.buffer: deque = deque(maxlen=depth + 1)

    def push(self, e: Event) -> None:
        if self.buffer:
            _check_next(self.channel, self.buffer[-1].t, self.buffer[-1].kind, e)
        self.buffer.append(e)

    @classmethod
    def over(cls, stream: EventStream, depth: int = 1) -> "StreamWindow":
        w = cls(stream.channel, depth)
        for e in stream:
            w.push(e)
        return w

    @property
    def current(self) -> Optional[Event]:
        return self.buffer[-1] if self.buffer else None

    def __len__(self):
        return len(self.buffer)


def prev(window: StreamWindow) -> Optional[Event]:
    if len(window.buffer) < 2:
        return None
    return window.buffer[-2]


class Tick(NamedTuple):
    t: int
    values: dict


class Aligner:
    """Incremental sample-and-hold alignment.

    Events must arrive ordered by time.  A tick at time t is released once an
    event with a later timestamp arrives or on :meth:`flush`, so that every
    channel's event at t has been seen.
    """

    def __init__(self, channels: Iterable[str]):
        self.held = {c: UNDEF for c in channels}
        self._pending_t: Optional[int] = None
        self._last_released: Optional[int] = None
        self._pending_seen: set = set()
        self._kinds: dict = {}

    def push(self, channel: str, e: Event) -> list:
        if channel not in self.held:
            return []
        out = []
        if self._last_released is not None and e.t <= self._last_released:
            raise NonMonotoneTimestamp(
                f"channel {channel!r}: t={fmt_seconds(e.t)} arrives after released "
                f"t={fmt_seconds(self._last_released)}"
            )
        if self._pending_t is not None:
            if e.t < self._pending_t:
                raise NonMonotoneTimestamp(
                    f"channel {channel!r}: t={fmt_seconds(e.t)} arrives after "
                    f"t={fmt_seconds(self._pending_t)}"
                )
            if e.t > self._pending_t:
                out.append(self._release())
            elif channel in self._pending_seen:
                raise NonMonotoneTimestamp(
                    f"channel {channel!r}: duplicate timestamp t={fmt_seconds(e.t)}"
                )
        k = self._kinds.setdefault(channel, e.kind)
        if e.kind is not k:
            raise KindMismatch(f"channel {channel!r}: expected {k}, got {e.kind}")
        self._pending_t = e.t
        self._pending_seen.add(channel)
        self.held[channel] = e.value
        return out

    def _release(self) -> Tick:
        tick = Tick(self._pending_t, dict(self.held))
        self._last_released = self._pending_t
        self._pending_t = None
        self._pending_seen = set()
        return tick

    def flush(self) -> list:
        if self._pending_t is None:
            return []
        return [self._release()]


def merge_events(streams: Iterable[EventStream]) -> Iterator[tuple]:
    """Yield ``(channel, event)`` for all streams in global time order."""
    def keyed(i, s):
        return ((e.t, i, s.channel, e) for e in s.events)

    iters = [keyed(i, s) for i, s in enumerate(streams)]
    for _t, _i, channel, e in heapq.merge(*iters):
        yield channel, e


def align(streams: Iterable[EventStream]) -> list:
    streams = list(streams)
    if not streams:
        raise ValueError("align needs at least one stream")
    aligner = Aligner(s.channel for s in streams)
    ticks = []
    for channel, e in merge_events(streams):
        ticks.extend(aligner.push(channel, e))
    ticks.extend(aligner.flush())
    return ticks


# -- lifted scalar operators -------------------------------------------------

ARITH = {"+", "-", "*", "/"}
ORDER = {"<", "<=", ">", ">="}
EQUALITY = {"==", "!="}
LOGIC = {"&&", "||", "->"}
UNARY = {"neg", "!", "abs"}


def _numeric(op, *vals):
    for v in vals:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise KindMismatch(f"operator {op!r} needs numeric operands, got {v!r}")


def _boolean(op, *vals):
    for v in vals:
        if not isinstance(v, bool):
            raise KindMismatch(f"operator {op!r} needs boolean operands, got {v!r}")


def _divide(a, b):
    if b == 0:
        raise DivisionByZero(f"division by zero ({a!r} / {b!r})")
    if isinstance(a, int) and isinstance(b, int):
        q = abs(a) // abs(b)
        return q if (a >= 0) == (b >= 0) else -q
    return a / b


def _widen(a, b):
    if isinstance(a, float) or isinstance(b, float):
        return float(a), float(b)
    return a, b


def lift(op: str, *operands):
    """Apply ``op`` to already aligned operand values.

    Any undefined operand makes the result undefined; the operands are still
    kind-checked when defined.
    """
    if op in UNARY:
        if len(operands) != 1:
            raise TypeError(f"{op!r} takes one operand")
        (a,) = operands
        if a is UNDEF:
            return UNDEF
        if op == "!":
            _boolean(op, a)
            return not a
        _numeric(op, a)
        return -a if op == "neg" else abs(a)

    if len(operands) != 2:
        raise TypeError(f"{op!r} takes two operands")
    a, b = operands
    if op in ARITH or op in ORDER:
        for v in (a, b):
            if v is not UNDEF:
                _numeric(op, v)
    elif op in LOGIC:
        for v in (a, b):
            if v is not UNDEF:
                _boolean(op, v)
    elif op in EQUALITY:
        if a is not UNDEF and b is not UNDEF:
            ka, kb = kind_of(a), kind_of(b)
            if (ka is Kind.BOOL) != (kb is Kind.BOOL):
                raise KindMismatch(f"cannot compare {a!r} with {b!r}")
    else:
        raise ValueError(f"unknown operator {op!r}")
    if a is UNDEF or b is UNDEF:
        return UNDEF

    if op in ARITH:
        a, b = _widen(a, b)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        return _divide(a, b)
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if op == "&&":
        return a and b
    if op == "||":
        return a or b
    return (not a) or b


def values_equal(a, b) -> bool:
    """Equality that treats NaN as equal to itself and keeps kinds apart."""
    if a is UNDEF or b is UNDEF:
        return a is b
    if kind_of(a) is not kind_of(b):
        return False
    if isinstance(a, float) and math.isnan(a) and math.isnan(b):
        return True
    return a == b
