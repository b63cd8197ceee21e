"""Command-line front end: ``rvmon check``, ``rvmon sim`` and ``rvmon report``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Optional

from . import attacks
from .builtin import resolve_monitor
from .engine import Level, MonitorSet, VerdictReport, run_set
from .errors import RVError, SpecError
from .scenario import dump_scenario, load_attack_file, load_scenario
from .sim import SimConfig, Simulator, emit_trace, tick_events
from .streams import fmt_seconds
from .traceio import read_trace, write_trace

log = logging.getLogger("rvmon")

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2
DEFAULT_MONITORS = "p2,p3,p4"
PLOT_COLUMNS = ("headway", "rel_vel", "ttc", "pb2_stop_time", "aeb_status", "fcw_active")


def _setup_logging():
    level = os.environ.get("RVMON_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def _parse_bindings(items) -> dict:
    binding = {}
    for item in items or ():
        name, sep, channel = item.partition("=")
        if not sep or not name or not channel:
            raise RVError(f"--bind expects in=channel, got {item!r}")
        binding[name] = channel
    return binding


def _monitors(refs, binding=None, level=None, verdict=None) -> list:
    monitors = []
    for ref in refs:
        m = resolve_monitor(ref, level=level, verdict=verdict)
        if binding:
            m.binding.update({k: v for k, v in binding.items() if k in m.binding})
        monitors.append(m)
    return monitors


def _attack_arg(value: Optional[str]):
    """Return ``(AttackSpec or None, explicit)``; ``explicit`` is False when not given."""
    if value is None:
        return None, False
    if value == "none":
        return None, True
    if value == "data":
        return attacks.velocity_spoof(), True
    if value == "functional":
        return attacks.stage_clamp(), True
    if value.startswith("file:"):
        return load_attack_file(value[5:]), True
    raise RVError(f"unknown attack {value!r}")


def _write_lines(path: Path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def _write_json(path: Path, doc):
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def cmd_check(args) -> int:
    level = Level(args.level) if args.level else None
    monitors = _monitors(args.spec, _parse_bindings(args.bind), level, args.verdict)
    trace = read_trace(args.trace)
    spec, _ = _attack_arg(args.attack)
    if spec is not None:
        if spec.kind != attacks.DATA_SPOOF:
            raise RVError("only data attacks can be applied to a recorded trace")
        trace = attacks.inject_data_spoof(trace, spec)
    report = run_set(monitors, trace)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_lines(out / "verdicts.jsonl", report.verdict_lines())
    _write_json(out / "report.json", report.to_dict())
    print(summarize(report.to_dict()))
    if any(r.error for r in report.monitors.values()):
        return EXIT_ERROR
    return EXIT_VIOLATION if report.total_violations else EXIT_OK


def _finite(x):
    return None if x == float("inf") else x


def _plot_rows(states, verdicts: dict) -> list:
    rows = []
    for s in states:
        row = {"t": fmt_seconds(s.t)}
        values = {ch: e.value for ch, e in tick_events(s)}
        for col in PLOT_COLUMNS:
            v = values.get(col)
            row[col] = "" if v is None else repr(v)
        for mid, series in verdicts.items():
            v = series.get(s.t)
            row[mid] = "" if v is None else int(v)
        rows.append(row)
    return rows


def cmd_sim(args) -> int:
    if args.scenario:
        cfg, scenario_attack = load_scenario(args.scenario)
    else:
        cfg, scenario_attack = SimConfig(), None
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    spec, explicit = _attack_arg(args.attack)
    attack = spec if explicit else scenario_attack
    if attack is not None and attack.kind == attacks.POSITION_REPLAY:
        raise RVError("position_replay is a trace source, not a simulator attack")
    monitors = _monitors([m.strip() for m in args.monitors.split(",") if m.strip()])

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    clean = Simulator(cfg).run()
    write_trace(emit_trace(clean).values(), out / "trace_clean.jsonl")

    sim = attacks.apply(Simulator(cfg), attack)
    online = MonitorSet(monitors)

    def on_tick(state):
        for mid, t, ch, v in online.feed(tick_events(state)):
            if v is True and ch == online.online[mid].monitor.verdict_channel:
                log.info("t=%s %s: violation", fmt_seconds(t), mid)

    run = sim.run(on_tick)
    report = online.finish()
    if attack is not None:
        write_trace(emit_trace(run).values(), out / "trace_attacked.jsonl")
    _write_lines(out / "verdicts.jsonl", report.verdict_lines())

    clean_min = _finite(clean.min_headway)
    run_min = _finite(run.min_headway)
    deviation = None
    if clean_min and run_min is not None:
        deviation = abs(run_min - clean_min) / clean_min
    doc = {
        "scenario": asdict(cfg),
        "attack": None if attack is None else attack.kind,
        "run": {
            "collision": run.collided,
            "collision_time": None if run.collision_time() is None else float(fmt_seconds(run.collision_time())),
            "min_headway": run_min,
            "clean_min_headway": clean_min,
            "headway_deviation": deviation,
        },
        **report.to_dict(),
    }
    _write_json(out / "report.json", doc)
    (out / "scenario.toml").write_text(dump_scenario(cfg, attack), encoding="utf-8")

    verdicts = {}
    for mid, result in report.results.items():
        v = result.verdict
        verdicts[mid] = {} if v is None else {e.t: e.value for e in v}
    rows = _plot_rows(run.states, verdicts)
    with open(out / "plot.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["t", *PLOT_COLUMNS, *verdicts])
        writer.writeheader()
        writer.writerows(rows)
    print(summarize(doc))
    return EXIT_ERROR if any(r.error for r in report.monitors.values()) else EXIT_OK


def summarize(doc: dict) -> str:
    lines = [f"{'monitor':<24} {'level':<11} {'detections':>10} {'ticks':>6}  first"]
    counts = {level: 0 for level in Level}
    for m in doc["monitors"]:
        first = "-" if m["first_detection"] is None else f"{m['first_detection']} s"
        if m.get("error"):
            first = f"error: {m['error']}"
        lines.append(
            f"{m['id']:<24} {m['level']:<11} {len(m['intervals']):>10} {m['violation_ticks']:>6}  {first}"
        )
        counts[Level(m["level"])] += len(m["intervals"])
    run = doc.get("run")
    if run is not None:
        gap = "n/a" if run["min_headway"] is None else f"{run['min_headway']:.2f} m"
        lines.append(f"collision: {'yes' if run['collision'] else 'no'}; min headway {gap}")
    if not any(counts.values()):
        lines.append("no violations")
    else:
        lines.append(
            f"Data monitor: {counts[Level.DATA]} detections; "
            f"Functional monitor: {counts[Level.FUNCTIONAL]}"
        )
    return "\n".join(lines)


def cmd_report(args) -> int:
    path = Path(args.run_dir) / "report.json"
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        VerdictReport.from_dict(doc)
    except FileNotFoundError:
        raise RVError(f"no report.json in {args.run_dir}")
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise RVError(f"corrupt report {path}: {exc}")
    print(summarize(doc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rvmon", description="Stream runtime verification for an AEB system")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="evaluate monitors over a recorded trace")
    c.add_argument("--spec", action="append", required=True, help="built-in name or .tsl path (repeatable)")
    c.add_argument("--trace", required=True, help="JSON Lines trace")
    c.add_argument("--bind", action="append", metavar="IN=CHANNEL", help="bind a spec input to a trace channel")
    c.add_argument("--level", choices=[lv.value for lv in Level], help="level for non-built-in specs")
    c.add_argument("--verdict", help="output naming a violation (default: violation/attack)")
    c.add_argument("--attack", help="data or file:PATH, applied to the trace before checking")
    c.add_argument("--out", default=".", help="output directory")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("sim", help="simulate the AEB scenario and monitor it online")
    s.add_argument("--scenario", help="scenario TOML (default: built-in pedestrian scenario)")
    s.add_argument("--attack", help="none, data, functional or file:PATH")
    s.add_argument("--monitors", default=DEFAULT_MONITORS, help="comma list of built-ins or .tsl paths")
    s.add_argument("--seed", type=int, help="seed for optional sensor noise")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_sim)

    r = sub.add_parser("report", help="summarize a run directory")
    r.add_argument("run_dir")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    except (RVError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
