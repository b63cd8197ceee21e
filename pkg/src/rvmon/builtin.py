"""The four shipped monitor specifications and how they are instantiated."""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Optional

from .engine import Level, MonitorInstance

BUILTINS = {
    "p1_position_rate": Level.DATA,
    "p2_velocity_rate": Level.DATA,
    "p3_ttc_pb2": Level.FUNCTIONAL,
    "p4_fcw_consistency": Level.FUNCTIONAL,
}
ALIASES = {name.split("_", 1)[0]: name for name in BUILTINS}


def canonical(name: str) -> Optional[str]:
    name = name.removesuffix(".tsl")
    if name in BUILTINS:
        return name
    return ALIASES.get(name)


def spec_text(name: str) -> str:
    full = canonical(name)
    if full is None:
        raise KeyError(f"no built-in spec {name!r}; choose from {sorted(BUILTINS)}")
    return resources.files("rvmon.specs").joinpath(f"{full}.tsl").read_text(encoding="utf-8")


def builtin_monitor(name: str, id: Optional[str] = None, binding: Optional[dict] = None,
                    level: Optional[Level] = None, verdict: Optional[str] = None) -> MonitorInstance:
    full = canonical(name)
    text = spec_text(name)
    return MonitorInstance.from_source(id or full, text, level or BUILTINS[full], binding, verdict)


def resolve_monitor(ref: str, binding: Optional[dict] = None, level: Optional[Level] = None,
                    id: Optional[str] = None, verdict: Optional[str] = None) -> MonitorInstance:
    """A built-in name (``p2`` or ``p2_velocity_rate``) or a path to a ``.tsl`` file."""
    if canonical(ref) is not None and not Path(ref).is_file():
        return builtin_monitor(ref, id=id, binding=binding, level=level, verdict=verdict)
    path = Path(ref)
    text = path.read_text(encoding="utf-8")
    return MonitorInstance.from_source(id or path.stem, text, level or Level.DATA, binding, verdict)
