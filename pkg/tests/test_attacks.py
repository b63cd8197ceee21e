from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import trace_digest
from rvmon import attacks
from rvmon.attacks import AttackSpec, Clamp, Spoof, inject_data_spoof, inject_functional_fault, position_replay
from rvmon.builtin import builtin_monitor
from rvmon.engine import evaluate, run_set
from rvmon.errors import ConfigError, InvalidClampValue, KindMismatch, ScheduleOutOfRange, UnknownChannel
from rvmon.sim import SimConfig, Simulator, emit_trace, simulate
from rvmon.streams import Event, EventStream
from rvmon.traceio import trace_lines

CFG = SimConfig()


def run_with(spec, cfg=CFG):
    return attacks.apply(Simulator(cfg), spec).run()


def test_spec_validation():
    with pytest.raises(ConfigError):
        AttackSpec.data_spoof("rel_vel", [(1.0, 0.5, 2.0), (1.2, 0.1, 2.0)])
    with pytest.raises(ConfigError):
        AttackSpec.data_spoof("rel_vel", [(1.0, 0.0, 2.0)])
    with pytest.raises(InvalidClampValue):
        AttackSpec.functional_fault(4)
    with pytest.raises(InvalidClampValue):
        AttackSpec.functional_fault(True)
    with pytest.raises(ConfigError):
        AttackSpec("dos")


def test_schedule_times_are_exact():
    spec = attacks.velocity_spoof()
    assert spec.schedule == (Spoof(3100, 100, 12.0), Spoof(4400, 100, 12.0))
    assert spec.offset(3100) == 12.0 and spec.offset(3200) == 0 and spec.offset(3099) == 0


# -- offline data spoofing --------------------------------------------------------------


def clean_trace():
    return emit_trace(simulate(CFG))


def test_zero_magnitude_is_identity():
    trace = clean_trace()
    spec = AttackSpec.data_spoof("rel_vel", [(3.1, 0.1, 0.0), (4.4, 0.1, 0.0)])
    assert inject_data_spoof(trace, spec) == trace


def test_spoof_diff_nonzero_exactly_inside_windows():
    trace = clean_trace()
    spec = AttackSpec.data_spoof("rel_vel", [(3.1, 0.1, 12.0), (4.0, 0.3, -2.5)])
    spoofed = inject_data_spoof(trace, spec)
    windows = [(3100, 3200), (4000, 4300)]
    for a, b in zip(trace["rel_vel"], spoofed["rel_vel"]):
        assert a.t == b.t
        inside = any(s <= a.t < e for s, e in windows)
        assert (b.value - a.value != 0) == inside, a.t
    for ch in trace:
        if ch != "rel_vel":
            assert spoofed[ch] is trace[ch]


def test_offline_spoof_does_not_mutate_input():
    trace = clean_trace()
    digest = trace_digest(trace)
    inject_data_spoof(trace, attacks.velocity_spoof())
    assert trace_digest(trace) == digest


def test_spoof_errors():
    trace = clean_trace()
    with pytest.raises(UnknownChannel):
        inject_data_spoof(trace, AttackSpec.data_spoof("lidar", [(3.1, 0.1, 1.0)]))
    with pytest.raises(ScheduleOutOfRange):
        inject_data_spoof(trace, AttackSpec.data_spoof("rel_vel", [(50.0, 0.1, 1.0)]))
    with pytest.raises(ScheduleOutOfRange):
        inject_data_spoof(Simulator(CFG), AttackSpec.data_spoof("rel_vel", [(9.0, 0.1, 1.0)]))
    with pytest.raises(UnknownChannel):
        inject_data_spoof(Simulator(CFG), AttackSpec.data_spoof("ego_v", [(1.0, 0.1, 1.0)]))
    with pytest.raises(KindMismatch):
        inject_data_spoof(trace, AttackSpec.data_spoof("aeb_status", [(3.0, 0.1, 0.5)]))


def test_spoof_on_single_stream():
    s = EventStream("v", [Event(0, 1.0), Event(100, 1.0)])
    out = inject_data_spoof(s, AttackSpec.data_spoof("v", [(0.1, 0.1, 2.0)]))
    assert out.values() == [1.0, 3.0] and out.times() == s.times()


# -- live attacks ----------------------------------------------------------------------


def test_live_spoof_touches_scheduled_ticks():
    run = run_with(attacks.velocity_spoof())
    clean = simulate(CFG)
    diffs = {s.t for s, c in zip(run.states, clean.states) if s.rel_vel != c.rel_vel}
    assert diffs == {3100, 4400}


def test_clamp_three_is_no_attack():
    a = trace_lines(emit_trace(run_with(attacks.stage_clamp(3))).values())
    b = trace_lines(emit_trace(simulate(CFG)).values())
    assert a == b


@pytest.mark.parametrize("clamp", [0, 1, 2])
def test_clamped_run_identical_before_divergence(clamp):
    clean = simulate(CFG)
    first = next(s.t for s in clean.states if s.aeb_status > clamp)
    clamped = run_with(attacks.stage_clamp(clamp))
    a = {c: s.truncate(first - 1) for c, s in emit_trace(clean).items()}
    b = {c: s.truncate(first - 1) for c, s in emit_trace(clamped).items()}
    assert a == b
    at = next(s for s in clamped.states if s.t == first)
    assert at.aeb_status == clamp


def test_clamp_leaves_other_controller_outputs_alone():
    clean = simulate(CFG)
    clamped = run_with(attacks.stage_clamp(1))
    s_c, s_a = clean.states[27], clamped.states[27]
    assert (s_a.ttc, s_a.stop_times, s_a.fcw_active) == (s_c.ttc, s_c.stop_times, s_c.fcw_active)
    assert (s_c.aeb_status, s_a.aeb_status) == (3, 1)


def test_clamp_from_later_start():
    spec = AttackSpec.functional_fault(0, start=3.5)
    run = run_with(spec)
    assert [s.aeb_status for s in run.states if s.t in (3400, 3500)] == [3, 0]


def test_functional_fault_errors():
    with pytest.raises(ScheduleOutOfRange):
        inject_functional_fault(Simulator(CFG), AttackSpec.functional_fault(1, start=20.0))
    with pytest.raises(ConfigError):
        inject_functional_fault(Simulator(CFG), attacks.velocity_spoof())


def test_reproducible_violated_ticks():
    cfg = replace(CFG, noise_std=0.05, seed=3)
    monitors = [builtin_monitor("p2"), builtin_monitor("p3")]

    def ticks():
        rep = run_set(monitors, emit_trace(run_with(attacks.velocity_spoof(), cfg)))
        return {mid: r.violation_times() for mid, r in rep.results.items()}

    assert ticks() == ticks()


# -- DM threshold fidelity ---------------------------------------------------------------


# the per-sample delta seen by P2 is the spoof step plus the signal's own
# change; a cruising scenario keeps the latter at zero
CRUISE = replace(CFG, lead_gap=60.0, lead_v=CFG.ego_v0, ped_x=1000.0)


def cruise_trace():
    return emit_trace(simulate(CRUISE))


def test_cruise_rel_vel_is_flat():
    assert set(cruise_trace()["rel_vel"].values()) == {0.0}


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0))
def test_small_spoofs_not_flagged(mag):
    trace = inject_data_spoof(cruise_trace(), attacks.velocity_spoof(mag))
    assert evaluate(builtin_monitor("p2"), trace).report.violation_ticks == 0


@settings(max_examples=30, deadline=None)
@given(st.floats(1.0, 50.0).filter(lambda m: m > 1.0))
def test_large_spoofs_flagged(mag):
    trace = inject_data_spoof(cruise_trace(), attacks.velocity_spoof(mag))
    rep = evaluate(builtin_monitor("p2"), trace).report
    # entering and leaving each spoof are both jumps
    assert rep.intervals == [[3100, 3200], [4400, 4500]]


def test_threshold_on_constant_signal_is_exact():
    # on a flat signal the per-sample delta equals the magnitude exactly
    s = EventStream("rel_vel", [Event(i * 100, -5.0) for i in range(20)])
    for mag, flagged in [(1.0, False), (1.0000001, True), (0.99, False), (12.0, True)]:
        spoofed = inject_data_spoof({"rel_vel": s}, AttackSpec.data_spoof("rel_vel", [(0.5, 0.1, mag)]))
        assert (evaluate(builtin_monitor("p2"), spoofed).report.violation_ticks > 0) == flagged, mag


# -- position replay ----------------------------------------------------------------------


def test_position_replay():
    s = position_replay()
    assert len(s) == 6 and s.values() == [1, 5, 10, 15, 100, 20]
    assert s.times() == [0, 1000, 2000, 3000, 4000, 5000]


def test_clamp_schedule_entries():
    spec = AttackSpec("functional_fault", "aeb_status", (Clamp(0, 2), Clamp(1000, 1)))
    assert [spec.clamp_at(t) for t in (0, 999, 1000)] == [2, 2, 1]
