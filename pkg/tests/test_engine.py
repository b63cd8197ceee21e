import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import trace_digest
from rvmon.attacks import position_replay
from rvmon.builtin import builtin_monitor, resolve_monitor
from rvmon.engine import (
    Level,
    MonitorInstance,
    MonitorSet,
    VerdictReport,
    evaluate,
    interpret_reference,
    run_set,
)
from rvmon.errors import DivisionByZero, KindMismatch, UnboundChannel
from rvmon.streams import Event, EventStream, merge_events, values_equal

from specgen import SpecGen, random_trace


def fcw_golden_trace():
    fcw = EventStream("fcw_active", [Event(i * 100, v) for i, v in enumerate((0, 0, 1, 1))])
    aeb = EventStream("aeb_status", [Event(i * 100, v) for i, v in enumerate((0, 1, 1, 2))])
    return {"fcw_active": fcw, "aeb_status": aeb}


def rate_monitor():
    return builtin_monitor("p1")


def test_rate_monitor_on_replay():
    res = evaluate(rate_monitor(), {"x": position_replay()})
    attack = [(e.t // 1000, e.value) for e in res.outputs["attack"]]
    assert attack == [(1, False), (2, False), (3, False), (4, True), (5, True)]
    assert [e.value for e in res.outputs["x"]] == [1, 5, 10, 15, 100, 20]
    assert res.report.intervals == [[4000, 5000]]
    assert res.report.violation_ticks == 2
    assert res.report.first_detection == 4000


def test_fcw_golden_ok_flags():
    res = evaluate(builtin_monitor("p4"), fcw_golden_trace())
    assert [e.value for e in res.ok_flags()] == [1, 0, 1, 1]
    assert [e.value for e in res.verdict] == [False, True, False, False]


def test_empty_trace_gives_empty_verdicts():
    res = evaluate(rate_monitor(), {})
    assert res.outputs["attack"].events == () and res.report.evaluated_ticks == 0


def test_missing_channel():
    with pytest.raises(UnboundChannel):
        evaluate(builtin_monitor("p4"), {"fcw_active": fcw_golden_trace()["fcw_active"]})


def test_binding_renames_channels():
    m = builtin_monitor("p1", binding={"x": "pos"})
    res = evaluate(m, {"pos": EventStream("pos", position_replay().events)})
    assert res.report.violation_ticks == 2


def test_binding_to_unknown_input():
    with pytest.raises(UnboundChannel):
        builtin_monitor("p1", binding={"y": "pos"})


def test_kind_mismatch_at_first_event():
    bad = EventStream("x", [Event(0, True)])
    with pytest.raises(KindMismatch):
        evaluate(rate_monitor(), {"x": bad})


def test_float_input_accepts_int_channel():
    m = builtin_monitor("p2")
    res = evaluate(m, {"rel_vel": EventStream("rel_vel", [Event(0, 0), Event(100, 2)])})
    assert [e.value for e in res.verdict] == [True]


def test_constant_definition():
    m = MonitorInstance.from_source("c", "in x: Events[Int]\ndef c := 5\nout c")
    res = evaluate(m, {"x": position_replay()})
    assert [e.value for e in res.outputs["c"]] == [5] * 6
    assert m.verdict_channel is None and res.report.violation_ticks == 0


def test_default_makes_verdict_total():
    src = "in x: Events[Int]\ndef attack := default(abs(x - prev(x)) > 5, false)\nout attack"
    res = evaluate(MonitorInstance.from_source("d", src), {"x": position_replay()})
    assert [e.value for e in res.outputs["attack"]] == [False, False, False, False, True, True]


def test_threshold_1000_never_fires():
    src = builtin_monitor("p1")
    text = "in x: Events[Int]\ndef attack:= x- prev(x) > 1000 || x- prev(x) < -1000\nout attack"
    res = evaluate(MonitorInstance.from_source("hi", text), {"x": position_replay()})
    assert not any(e.value for e in res.outputs["attack"])
    assert src.verdict_channel == "attack"


def test_verdict_must_be_bool_output():
    with pytest.raises(ValueError):
        MonitorInstance.from_source("m", "in x: Events[Int]\nout x", verdict="x")


def test_intervals_split_on_gaps():
    v = [0.0, 5.0, 5.0, 5.0, 0.0, 0.0, 9.0, 9.0, 9.0, 2.0]
    trace = {"rel_vel": EventStream("rel_vel", [Event(i * 100, x) for i, x in enumerate(v)])}
    rep = evaluate(builtin_monitor("p2"), trace).report
    assert rep.intervals == [[100, 100], [400, 400], [600, 600], [900, 900]]
    v = [0.0, 2.0, 4.0, 6.0, 6.0]
    trace = {"rel_vel": EventStream("rel_vel", [Event(i * 100, x) for i, x in enumerate(v)])}
    assert evaluate(builtin_monitor("p2"), trace).report.intervals == [[100, 300]]


def test_report_round_trip():
    res = evaluate(rate_monitor(), {"x": position_replay()})
    d = res.report.to_dict()
    assert d["intervals"] == [[4.0, 5.0]] and d["first_detection"] == 4.0
    assert type(res.report).from_dict(d) == res.report


# -- monitor sets ------------------------------------------------------------------


def test_empty_set_gives_empty_report():
    rep = run_set([], fcw_golden_trace())
    assert rep.monitors == {} and rep.to_dict() == {"monitors": []} and rep.total_violations == 0


def test_run_set_isolation_and_independence():
    trace = fcw_golden_trace()
    trace["x"] = position_replay()
    digest = trace_digest(trace)
    alone = run_set([builtin_monitor("p4")], trace)
    both = run_set([rate_monitor(), builtin_monitor("p4")], trace, workers=4)
    assert trace_digest(trace) == digest
    assert both.monitors["p4_fcw_consistency"] == alone.monitors["p4_fcw_consistency"]
    assert both.detections(Level.DATA) == 1 and both.detections(Level.FUNCTIONAL) == 1


def test_run_set_isolates_failures():
    div = MonitorInstance.from_source("div", "in x: Events[Int]\ndef violation := 1 / (x - x) > 0\nout violation")
    rep = run_set([div, rate_monitor()], {"x": position_replay()})
    assert "division by zero" in rep.monitors["div"].error
    assert rep.monitors["p1_position_rate"].violation_ticks == 2


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        run_set([rate_monitor(), rate_monitor()], {})


def test_verdict_report_json_round_trip():
    rep = run_set([rate_monitor(), builtin_monitor("p4")], {**fcw_golden_trace(), "x": position_replay()})
    back = VerdictReport.from_dict(rep.to_dict())
    assert back.monitors == rep.monitors


def test_monitor_set_streaming_matches_offline():
    trace = {**fcw_golden_trace(), "x": position_replay()}
    monitors = [rate_monitor(), builtin_monitor("p4")]
    offline = run_set(monitors, trace)
    online = MonitorSet(monitors)
    emitted = []
    for channel, e in merge_events(trace.values()):
        emitted.extend(online.feed([(channel, e)]))
    report = online.finish()
    assert report.to_dict() == offline.to_dict()
    assert report.verdict_lines() == offline.verdict_lines()


def test_monitor_set_drops_failing_monitor():
    div = MonitorInstance.from_source("div", "in x: Events[Int]\ndef violation := 1 / (x - 1) > 0\nout violation")
    ms = MonitorSet([div, rate_monitor()])
    ms.feed(merge_events([position_replay()]))
    rep = ms.finish()
    assert rep.monitors["div"].error and rep.monitors["p1_position_rate"].violation_ticks == 2


def test_verdict_lines_format():
    res = evaluate(builtin_monitor("p4"), fcw_golden_trace())
    assert res.verdict_lines()[2] == '{"t": 0.1, "monitor": "p4_fcw_consistency", "channel": "ok", "value": false}'


def test_resolve_monitor_from_file(tmp_path):
    p = tmp_path / "mine.tsl"
    p.write_text("in x: Events[Int]\ndef attack := x > 50\nout attack\n")
    m = resolve_monitor(str(p), level=Level.FUNCTIONAL)
    assert m.id == "mine" and m.level is Level.FUNCTIONAL


# -- reference interpreter and properties ---------------------------------------------


def _outputs_equal(a, b):
    assert a.keys() == b.keys()
    for k in a:
        x, y = a[k].events, b[k].events
        assert len(x) == len(y), k
        for p, q in zip(x, y):
            assert p.t == q.t and values_equal(p.value, q.value), (k, p, q)


def test_interpreter_on_replay():
    m = rate_monitor()
    ref = interpret_reference(m.spec, {"x": position_replay()})
    _outputs_equal(ref, evaluate(m, {"x": position_replay()}).outputs)


def run_both(m, trace):
    try:
        a = evaluate(m, trace).outputs
    except DivisionByZero:
        a = DivisionByZero
    try:
        b = interpret_reference(m.spec, trace, m.binding)
    except DivisionByZero:
        b = DivisionByZero
    return a, b


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_compiled_equals_interpreter(seed):
    rng = random.Random(seed)
    src, inputs = SpecGen(rng).spec()
    m = MonitorInstance.from_source("m", src)
    a, b = run_both(m, random_trace(rng, inputs))
    if a is DivisionByZero or b is DivisionByZero:
        assert a is b
    else:
        _outputs_equal(a, b)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 1200))
def test_prefix_stability(seed, cut):
    rng = random.Random(seed)
    src, inputs = SpecGen(rng, allow_div=False).spec()
    m = MonitorInstance.from_source("m", src)
    trace = random_trace(rng, inputs)
    full = evaluate(m, trace).outputs
    cut_trace = {c: s.truncate(cut) for c, s in trace.items()}
    if not any(s.events for s in cut_trace.values()):
        return
    part = evaluate(m, cut_trace).outputs
    _outputs_equal(part, {k: s.truncate(cut) for k, s in full.items()})


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_determinism_and_immutability(seed):
    rng = random.Random(seed)
    src, inputs = SpecGen(rng, allow_div=False).spec()
    m = MonitorInstance.from_source("m", src)
    trace = random_trace(rng, inputs)
    digest = trace_digest(trace)
    a = run_set([m], trace)
    b = run_set([m], trace)
    assert a.verdict_lines() == b.verdict_lines() and a.to_dict() == b.to_dict()
    assert trace_digest(trace) == digest
