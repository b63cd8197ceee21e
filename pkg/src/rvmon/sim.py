"""Fixed-step longitudinal simulator of an AEB-equipped ego vehicle.

The world is one-dimensional: the ego car starts at x = 0 and drives toward
an optional lead vehicle and a pedestrian who enters the lane (becomes
visible) at a configured time.  The most important object (MIO) is the
nearest visible object ahead.  The controller escalates FCW -> PB1 -> PB2 ->
FB by comparing |TTC| with stopping times, and once a braking stage is
engaged it is held until the ego car stops.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, fields, replace
from typing import Callable, NamedTuple, Optional

from .errors import ConfigError
from .streams import Event, EventStream, to_ms

CHANNELS = (
    "rel_dist",
    "rel_vel",
    "ego_v",
    "ttc",
    "pb2_stop_time",
    "aeb_status",
    "fcw_active",
    "headway",
)


@dataclass(frozen=True)
class SimConfig:
    # [sim]
    dt: float = 0.1
    duration: float = 8.0
    noise_std: float = 0.0
    seed: int = 0
    # [ego]
    ego_v0: float = 16.7
    # [mio]
    lead_gap: float = 0.0  # 0 disables the lead vehicle
    lead_v: float = 0.0
    ped_x: float = 70.0
    ped_reveal_t: float = 2.7
    ped_v: float = 0.0
    # [controller]
    a_driver: float = 4.0
    a_pb1: float = 3.8
    a_pb2: float = 5.3
    a_fb: float = 9.8
    t_react: float = 1.2
    headway_stop: float = 0.0

    def __post_init__(self):
        try:
            dt_ms = to_ms(self.dt)
            dur_ms = to_ms(self.duration)
            to_ms(self.ped_reveal_t)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if dt_ms <= 0:
            raise ConfigError("dt must be positive")
        if dur_ms < 0:
            raise ConfigError("duration must be non-negative")
        if min(self.a_driver, self.a_pb1, self.a_pb2, self.a_fb) <= 0:
            raise ConfigError("decelerations must be positive")
        if not self.a_pb1 < self.a_pb2 < self.a_fb:
            raise ConfigError("need a_pb1 < a_pb2 < a_fb")
        if self.t_react < 0 or self.noise_std < 0 or self.headway_stop < 0:
            raise ConfigError("t_react, noise_std and headway_stop must be non-negative")
        if self.ego_v0 < 0 or self.lead_gap < 0:
            raise ConfigError("ego_v0 and lead_gap must be non-negative")

    @property
    def dt_ms(self) -> int:
        return to_ms(self.dt)

    @property
    def steps(self) -> int:
        return to_ms(self.duration) // self.dt_ms

    def decel(self, stage: int) -> float:
        return (0.0, self.a_pb1, self.a_pb2, self.a_fb)[stage]


CONFIG_FIELDS = tuple(f.name for f in fields(SimConfig))


class StopTimes(NamedTuple):
    fcw: float
    pb1: float
    pb2: float
    fb: float


def ttc(rel_dist: float, rel_vel: float) -> Optional[float]:
    """Time to collision; negative while closing, None without relative motion."""
    if rel_vel == 0:
        return None
    return rel_dist / rel_vel


def stopping_times(ego_v: float, cfg: SimConfig) -> StopTimes:
    return StopTimes(
        fcw=cfg.t_react + ego_v / cfg.a_driver,
        pb1=ego_v / cfg.a_pb1,
        pb2=ego_v / cfg.a_pb2,
        fb=ego_v / cfg.a_fb,
    )


def decide_stage(ttc_s: Optional[float], stops: StopTimes) -> tuple:
    """Memoryless stage decision: ``(aeb_status, fcw_active)``."""
    if ttc_s is None or not ttc_s < 0:
        return 0, 0
    t = abs(ttc_s)
    if t < stops.fb:
        status = 3
    elif t < stops.pb2:
        status = 2
    elif t < stops.pb1:
        status = 1
    else:
        status = 0
    fcw = 1 if status >= 1 or t < stops.fcw else 0
    return status, fcw


@dataclass
class SimState:
    t: int  # ms
    ego_x: float
    ego_v: float
    lead_x: Optional[float]
    ped_x: float
    mio: str = "none"  # lead, pedestrian, none
    mio_x: Optional[float] = None
    mio_v: Optional[float] = None
    headway: Optional[float] = None  # true gap to the MIO
    rel_dist: Optional[float] = None  # sensed
    rel_vel: Optional[float] = None  # sensed, v_mio - v_ego
    ttc: Optional[float] = None
    stop_times: Optional[StopTimes] = None
    decided: int = 0
    latched: int = 0
    aeb_status: int = 0
    fcw_active: int = 0
    collided: bool = False
    ped_blocked: bool = False  # pedestrian appeared behind the ego car; ignored

    @property
    def seconds(self) -> float:
        return self.t / 1000


SensorHook = Callable[[int, str, float], float]
StageHook = Callable[[int, int], int]


class Simulator:
    """Plant, sensor and controller loop.

    ``sensor_hooks`` may rewrite sensed ``rel_dist``/``rel_vel`` before the
    controller sees them; ``stage_hooks`` may rewrite the braking stage the
    controller outputs.  Both are how attacks are injected into a live run.
    """

    SENSED = ("rel_dist", "rel_vel")

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.sensor_hooks: list = []
        self.stage_hooks: list = []
        self._rng = random.Random(cfg.seed)

    def initial_state(self) -> SimState:
        cfg = self.cfg
        lead_x = cfg.lead_gap if cfg.lead_gap > 0 else None
        state = SimState(t=0, ego_x=0.0, ego_v=float(cfg.ego_v0), lead_x=lead_x, ped_x=float(cfg.ped_x))
        return self._observe_and_control(state)

    def step(self, state: SimState) -> SimState:
        cfg = self.cfg
        dt = cfg.dt_ms / 1000
        a = cfg.decel(state.aeb_status)
        v = state.ego_v
        # constant deceleration over the step, exact including a stop mid-step
        if a > 0 and v - a * dt <= 0:
            tau = v / a
            dx, v_new = v * tau - 0.5 * a * tau * tau, 0.0
        else:
            dx, v_new = v * dt - 0.5 * a * dt * dt, v - a * dt
        new = replace(
            state,
            t=state.t + cfg.dt_ms,
            ego_x=state.ego_x + max(dx, 0.0),
            ego_v=v_new,
            lead_x=None if state.lead_x is None else state.lead_x + cfg.lead_v * dt,
        )
        new.ped_x = state.ped_x + cfg.ped_v * dt
        return self._observe_and_control(new)

    # -- internals
    def _select_mio(self, s: SimState):
        cfg = self.cfg
        objects = []
        if s.lead_x is not None:
            objects.append(("lead", s.lead_x, float(cfg.lead_v)))
        revealed = s.t >= to_ms(cfg.ped_reveal_t)
        if revealed and not s.ped_blocked:
            if s.mio != "pedestrian" and s.ped_x <= s.ego_x:
                s.ped_blocked = True
            else:
                objects.append(("pedestrian", s.ped_x, float(cfg.ped_v)))
        if s.collided and s.mio != "none":
            return next(o for o in objects if o[0] == s.mio)
        if not objects:
            return None
        return min(objects, key=lambda o: o[1])

    def _observe_and_control(self, s: SimState) -> SimState:
        cfg = self.cfg
        mio = self._select_mio(s)
        if mio is None:
            s.mio, s.mio_x, s.mio_v = "none", None, None
            s.headway = s.rel_dist = s.rel_vel = s.ttc = None
        else:
            s.mio, s.mio_x, s.mio_v = mio
            gap = s.mio_x - s.ego_x
            if gap <= 0:
                s.collided = True
            s.headway = 0.0 if s.collided else gap
            rel_dist = s.headway
            rel_vel = s.mio_v - s.ego_v
            if cfg.noise_std:
                rel_dist = max(rel_dist + self._rng.gauss(0.0, cfg.noise_std), 0.0)
                rel_vel = rel_vel + self._rng.gauss(0.0, cfg.noise_std)
            for hook in self.sensor_hooks:
                rel_dist = hook(s.t, "rel_dist", rel_dist)
                rel_vel = hook(s.t, "rel_vel", rel_vel)
            s.rel_dist = max(rel_dist, 0.0)
            s.rel_vel = rel_vel
            s.ttc = ttc(max(s.rel_dist - cfg.headway_stop, 0.0), s.rel_vel)

        s.stop_times = stopping_times(s.ego_v, cfg)
        decided, fcw = decide_stage(s.ttc, s.stop_times)
        s.decided = decided
        stage = max(decided, s.latched) if s.ego_v > 0 else 0
        s.latched = stage
        s.fcw_active = 1 if stage >= 1 else fcw
        for hook in self.stage_hooks:
            stage = hook(s.t, stage)
        s.aeb_status = stage
        return s

    def run(self, on_tick: Optional[Callable[[SimState], None]] = None) -> "SimRun":
        state = self.initial_state()
        states = [state]
        if on_tick:
            on_tick(state)
        for _ in range(self.cfg.steps):
            state = self.step(state)
            states.append(state)
            if on_tick:
                on_tick(state)
        return SimRun(self.cfg, states)


def step(state: SimState, cfg: SimConfig) -> SimState:
    return Simulator(cfg).step(state)


def simulate(cfg: SimConfig) -> "SimRun":
    return Simulator(cfg).run()


def tick_events(s: SimState) -> list:
    """``(channel, Event)`` pairs emitted at one simulation tick."""
    out = []
    if s.rel_dist is not None:
        out.append(("rel_dist", Event(s.t, float(s.rel_dist))))
        out.append(("rel_vel", Event(s.t, float(s.rel_vel))))
    out.append(("ego_v", Event(s.t, float(s.ego_v))))
    if s.ttc is not None:
        out.append(("ttc", Event(s.t, float(s.ttc))))
    out.append(("pb2_stop_time", Event(s.t, float(s.stop_times.pb2))))
    out.append(("aeb_status", Event(s.t, int(s.aeb_status))))
    out.append(("fcw_active", Event(s.t, int(s.fcw_active))))
    if s.headway is not None:
        out.append(("headway", Event(s.t, float(s.headway))))
    return out


@dataclass
class SimRun:
    cfg: SimConfig
    states: list = field(default_factory=list)

    @property
    def collided(self) -> bool:
        return any(s.collided for s in self.states)

    @property
    def min_headway(self) -> float:
        gaps = [s.headway for s in self.states if s.headway is not None]
        return min(gaps) if gaps else math.inf

    @property
    def stop_time(self) -> Optional[int]:
        """First tick (ms) at which the ego car is stationary."""
        return next((s.t for s in self.states if s.ego_v == 0), None)

    def collision_time(self) -> Optional[int]:
        return next((s.t for s in self.states if s.collided), None)


def emit_trace(run: SimRun) -> dict:
    """The run as ``{channel: EventStream}`` on the dt grid.

    Channels describing the MIO carry no event while no object is tracked,
    and ``ttc`` has none while relative velocity is zero.
    """
    events = {c: [] for c in CHANNELS}
    for s in run.states:
        for channel, e in tick_events(s):
            events[channel].append(e)
    return {c: EventStream(c, evs) for c, evs in events.items()}
