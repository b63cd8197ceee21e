"""Scenario files: TOML with [sim], [ego], [mio], [controller] and [attack]."""

from __future__ import annotations

import sys
from dataclasses import asdict
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .attacks import DATA_SPOOF, FUNCTIONAL_FAULT, AttackSpec
from .errors import ConfigError
from .sim import SimConfig

SECTIONS = {
    "sim": {"dt": "dt", "duration": "duration", "noise_std": "noise_std", "seed": "seed"},
    "ego": {"v0": "ego_v0"},
    "mio": {
        "lead_gap": "lead_gap",
        "lead_v": "lead_v",
        "ped_x": "ped_x",
        "ped_reveal_t": "ped_reveal_t",
        "ped_v": "ped_v",
    },
    "controller": {
        "a_driver": "a_driver",
        "a_pb1": "a_pb1",
        "a_pb2": "a_pb2",
        "a_fb": "a_fb",
        "t_react": "t_react",
        "headway_stop": "headway_stop",
    },
}
ATTACK_KEYS = {"kind", "target", "schedule", "clamp", "start"}


def _number(section, key, value):
    if key == "seed":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"[{section}] {key} must be an integer")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{section}] {key} must be a number")
    return float(value)


def parse_attack(table: dict) -> Optional[AttackSpec]:
    unknown = set(table) - ATTACK_KEYS
    if unknown:
        raise ConfigError(f"[attack] unknown keys {sorted(unknown)}")
    kind = table.get("kind", "none")
    if kind == "none":
        return None
    if kind == DATA_SPOOF:
        entries = table.get("schedule")
        if not entries:
            raise ConfigError("[attack] data_spoof needs a schedule")
        try:
            return AttackSpec.data_spoof(table.get("target", "rel_vel"), [tuple(e) for e in entries])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[attack] bad schedule: {exc}") from exc
    if kind == FUNCTIONAL_FAULT:
        if "clamp" not in table:
            raise ConfigError("[attack] functional_fault needs a clamp value")
        return AttackSpec.functional_fault(table["clamp"], table.get("start", 0.0))
    raise ConfigError(f"[attack] unknown kind {kind!r}")


def load_scenario_text(text: str) -> tuple:
    """Return ``(SimConfig, AttackSpec or None)``."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    unknown = set(doc) - set(SECTIONS) - {"attack"}
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    kwargs = {}
    for section, keys in SECTIONS.items():
        table = doc.get(section, {})
        if not isinstance(table, dict):
            raise ConfigError(f"[{section}] must be a table")
        bad = set(table) - set(keys)
        if bad:
            raise ConfigError(f"[{section}] unknown keys {sorted(bad)}")
        for key, value in table.items():
            kwargs[keys[key]] = _number(section, key, value)
    cfg = SimConfig(**kwargs)
    attack = parse_attack(doc.get("attack", {}))
    return cfg, attack


def load_attack_file(path) -> Optional[AttackSpec]:
    """Read the [attack] table of a TOML file (a full scenario or just the table)."""
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from exc
    if "attack" not in doc:
        raise ConfigError(f"{path} has no [attack] table")
    return parse_attack(doc["attack"])


def load_scenario(path) -> tuple:
    with open(path, encoding="utf-8") as fh:
        return load_scenario_text(fh.read())


def dump_scenario(cfg: SimConfig, attack: Optional[AttackSpec] = None) -> str:
    values = asdict(cfg)
    lines = []
    for section, keys in SECTIONS.items():
        lines.append(f"[{section}]")
        for key, name in keys.items():
            lines.append(f"{key} = {values[name]!r}")
        lines.append("")
    if attack is not None:
        lines.append("[attack]")
        lines.append(f'kind = "{attack.kind}"')
        if attack.kind == DATA_SPOOF:
            lines.append(f'target = "{attack.target}"')
            rows = ", ".join(f"[{s.start / 1000!r}, {s.duration / 1000!r}, {float(s.magnitude)!r}]" for s in attack.schedule)
            lines.append(f"schedule = [{rows}]")
        else:
            c = attack.schedule[0]
            lines.append(f"clamp = {c.value}")
            lines.append(f"start = {c.start / 1000!r}")
        lines.append("")
    return "\n".join(lines)
