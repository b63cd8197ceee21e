"""Attack injection: sensed-data spoofing and controller-output faults.

Both attack classes work on a live :class:`~rvmon.sim.Simulator` (through its
hooks) and data spoofing also works offline on a recorded trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

from .errors import ConfigError, InvalidClampValue, KindMismatch, ScheduleOutOfRange, UnknownChannel
from .sim import Simulator
from .streams import Event, EventStream, Kind, fmt_seconds, to_ms

DATA_SPOOF = "data_spoof"
FUNCTIONAL_FAULT = "functional_fault"
POSITION_REPLAY = "position_replay"
KINDS = (DATA_SPOOF, FUNCTIONAL_FAULT, POSITION_REPLAY)

# relative-velocity spoofs used for the data-level demonstration
VELOCITY_SPOOF_SCHEDULE = ((3.1, 0.1, 12.0), (4.4, 0.1, 12.0))


class Spoof(NamedTuple):
    start: int  # ms
    duration: int  # ms
    magnitude: float

    @property
    def end(self) -> int:
        return self.start + self.duration

    def active(self, t: int) -> bool:
        return self.start <= t < self.end


class Clamp(NamedTuple):
    start: int  # ms
    value: int


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    target: str = ""
    schedule: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown attack kind {self.kind!r}")
        sched = tuple(sorted(self.schedule))
        object.__setattr__(self, "schedule", sched)
        if self.kind == DATA_SPOOF:
            for s in sched:
                if not isinstance(s, Spoof):
                    raise ConfigError(f"data spoof entries must be Spoof, got {s!r}")
                if s.duration <= 0:
                    raise ConfigError("spoof duration must be positive")
            for a, b in zip(sched, sched[1:]):
                if b.start < a.end:
                    raise ConfigError(f"overlapping spoofs at t={fmt_seconds(b.start)}")
        elif self.kind == FUNCTIONAL_FAULT:
            for c in sched:
                if not isinstance(c, Clamp):
                    raise ConfigError(f"functional fault entries must be Clamp, got {c!r}")
                if isinstance(c.value, bool) or c.value not in (0, 1, 2, 3):
                    raise InvalidClampValue(f"clamp value must be 0..3, got {c.value!r}")
            starts = [c.start for c in sched]
            if len(set(starts)) != len(starts):
                raise ConfigError("overlapping clamps with the same start time")

    @classmethod
    def data_spoof(cls, target: str, entries) -> "AttackSpec":
        """``entries`` are ``(t_start, duration, magnitude)`` in seconds and channel units."""
        return cls(DATA_SPOOF, target, tuple(Spoof(to_ms(t), to_ms(d), m) for t, d, m in entries))

    @classmethod
    def functional_fault(cls, clamp: int, start: float = 0.0) -> "AttackSpec":
        return cls(FUNCTIONAL_FAULT, "aeb_status", (Clamp(to_ms(start), clamp),))

    def check_range(self, start_ms: int, end_ms: int) -> None:
        for entry in self.schedule:
            if not start_ms <= entry.start <= end_ms:
                raise ScheduleOutOfRange(
                    f"attack at t={fmt_seconds(entry.start)} outside "
                    f"[{fmt_seconds(start_ms)}, {fmt_seconds(end_ms)}]"
                )

    def offset(self, t: int) -> float:
        return sum(s.magnitude for s in self.schedule if s.active(t))

    def clamp_at(self, t: int) -> Optional[int]:
        current = None
        for c in self.schedule:
            if c.start <= t:
                current = c.value
        return current


def velocity_spoof(magnitude: float = 12.0) -> AttackSpec:
    return AttackSpec.data_spoof("rel_vel", [(t, d, magnitude) for t, d, _ in VELOCITY_SPOOF_SCHEDULE])


def stage_clamp(clamp: int = 1) -> AttackSpec:
    return AttackSpec.functional_fault(clamp, 0.0)


def _spoof_stream(stream: EventStream, spec: AttackSpec) -> EventStream:
    kind = stream.kind
    for s in spec.schedule:
        if kind is Kind.BOOL or (kind is Kind.INT and float(s.magnitude) != int(s.magnitude)):
            raise KindMismatch(f"cannot offset {kind} channel {stream.channel!r} by {s.magnitude!r}")
    out = []
    for e in stream:
        delta = spec.offset(e.t)
        if delta:
            value = e.value + (int(delta) if kind is Kind.INT else float(delta))
            e = Event(e.t, value)
        out.append(e)
    return EventStream(stream.channel, out)


def inject_data_spoof(target: Union[Simulator, EventStream, dict], spec: AttackSpec):
    """Add the scheduled offsets to one channel.

    With a simulator the offsets are applied to the sensed value before the
    controller sees it; with a stream or ``{channel: stream}`` trace a modified
    copy is returned and the input is left untouched.
    """
    if spec.kind != DATA_SPOOF:
        raise ConfigError(f"expected a data_spoof attack, got {spec.kind!r}")
    if isinstance(target, Simulator):
        if spec.target not in Simulator.SENSED:
            raise UnknownChannel(f"live spoofing supports {Simulator.SENSED}, not {spec.target!r}")
        spec.check_range(0, to_ms(target.cfg.duration))

        def hook(t, channel, value):
            if channel == spec.target:
                delta = spec.offset(t)
                if delta:
                    return value + delta
            return value

        target.sensor_hooks.append(hook)
        return target
    if isinstance(target, EventStream):
        if target.channel != spec.target:
            raise UnknownChannel(f"attack targets {spec.target!r}, stream is {target.channel!r}")
        if target.events:
            spec.check_range(target.events[0].t, target.events[-1].t)
        return _spoof_stream(target, spec)
    if spec.target not in target:
        raise UnknownChannel(f"trace has no channel {spec.target!r}")
    out = dict(target)
    out[spec.target] = inject_data_spoof(target[spec.target], spec)
    return out


def inject_functional_fault(sim: Simulator, spec: AttackSpec) -> Simulator:
    """Cap the controller's braking-stage output from each clamp's start time."""
    if spec.kind != FUNCTIONAL_FAULT:
        raise ConfigError(f"expected a functional_fault attack, got {spec.kind!r}")
    spec.check_range(0, to_ms(sim.cfg.duration))

    def hook(t, stage):
        clamp = spec.clamp_at(t)
        return stage if clamp is None else min(stage, clamp)

    sim.stage_hooks.append(hook)
    return sim


def apply(sim: Simulator, spec: Optional[AttackSpec]) -> Simulator:
    if spec is None:
        return sim
    if spec.kind == DATA_SPOOF:
        return inject_data_spoof(sim, spec)
    if spec.kind == FUNCTIONAL_FAULT:
        return inject_functional_fault(sim, spec)
    raise ConfigError(f"attack kind {spec.kind!r} cannot be applied to a simulation")


def position_replay() -> EventStream:
    """Position samples (m) of the rate-bound example: a 5 m/s limit broken at t=4 s and t=5 s."""
    return EventStream.of("x", [(0, 1), (1, 5), (2, 10), (3, 15), (4, 100), (5, 20)])
