"""JSON Lines trace files: one ``{"t", "channel", "value"}`` object per line."""

from __future__ import annotations

import json
from decimal import Decimal
from pathlib import Path
from typing import Iterable

from .errors import KindMismatch, NonMonotoneTimestamp, TraceFormatError
from .streams import Event, EventStream, fmt_seconds, merge_events, to_ms


def _decode_value(raw, lineno):
    if isinstance(raw, bool) or isinstance(raw, int):
        return raw
    if isinstance(raw, Decimal):
        return float(raw)
    raise TraceFormatError(f"line {lineno}: value must be a number or boolean, got {raw!r}")


def parse_trace_lines(lines: Iterable[str]) -> dict:
    """Parse trace lines into ``{channel: EventStream}`` preserving first-seen order."""
    events: dict = {}
    last_t = None
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line, parse_float=Decimal)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"line {lineno}: {exc.msg}") from exc
        if not isinstance(obj, dict) or set(obj) != {"t", "channel", "value"}:
            raise TraceFormatError(f"line {lineno}: expected keys t, channel, value")
        channel = obj["channel"]
        if not isinstance(channel, str) or not channel:
            raise TraceFormatError(f"line {lineno}: channel must be a non-empty string")
        raw_t = obj["t"]
        if isinstance(raw_t, bool) or not isinstance(raw_t, (int, Decimal)):
            raise TraceFormatError(f"line {lineno}: t must be a number")
        try:
            t = to_ms(raw_t)
            e = Event(t, _decode_value(obj["value"], lineno))
        except ValueError as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from exc
        if last_t is not None and t < last_t:
            raise NonMonotoneTimestamp(f"line {lineno}: trace not sorted by t")
        last_t = t
        chan = events.setdefault(channel, [])
        if chan and chan[-1].t == t:
            raise NonMonotoneTimestamp(f"line {lineno}: duplicate t={fmt_seconds(t)} on {channel!r}")
        if chan and chan[-1].kind is not e.kind:
            raise KindMismatch(f"line {lineno}: channel {channel!r} changes kind")
        chan.append(e)
    return {c: EventStream(c, evs) for c, evs in events.items()}


def read_trace(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_trace_lines(fh)


def _encode_value(v):
    if isinstance(v, float):
        # json would emit NaN/Infinity, which is not JSON
        if v != v or v in (float("inf"), float("-inf")):
            raise TraceFormatError(f"non-finite value {v!r} cannot be serialized")
        return repr(v)
    return json.dumps(v)


def format_event(t_ms: int, channel: str, value, **extra) -> str:
    head = f'{{"t": {fmt_seconds(t_ms)}'
    for key, val in extra.items():
        head += f", {json.dumps(key)}: {json.dumps(val)}"
    return f'{head}, "channel": {json.dumps(channel)}, "value": {_encode_value(value)}}}'


def trace_lines(streams: Iterable[EventStream]) -> list:
    return [format_event(e.t, ch, e.value) for ch, e in merge_events(streams)]


def write_trace(streams: Iterable[EventStream], path) -> None:
    lines = trace_lines(streams)
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
