from dataclasses import replace

import pytest

from rvmon import attacks
from rvmon.errors import ConfigError, InvalidClampValue
from rvmon.scenario import SECTIONS, dump_scenario, load_attack_file, load_scenario, load_scenario_text
from rvmon.sim import CONFIG_FIELDS, SimConfig

FULL = """
[sim]
dt = 0.1
duration = 6.0
noise_std = 0.0
seed = 4

[ego]
v0 = 20.0

[mio]
lead_gap = 0.0
lead_v = 0.0
ped_x = 80.0
ped_reveal_t = 2.0
ped_v = 0.0

[controller]
a_driver = 4.0
a_pb1 = 3.8
a_pb2 = 5.3
a_fb = 9.8
t_react = 1.2
headway_stop = 0.0

[attack]
kind = "data_spoof"
target = "rel_vel"
schedule = [[3.1, 0.1, 12.0], [4.4, 0.1, 12.0]]
"""


def test_every_config_field_has_a_key():
    keys = {name for table in SECTIONS.values() for name in table.values()}
    assert keys == set(CONFIG_FIELDS)


def test_load_full_scenario():
    cfg, attack = load_scenario_text(FULL)
    assert cfg == SimConfig(duration=6.0, seed=4, ego_v0=20.0, ped_x=80.0, ped_reveal_t=2.0)
    assert attack == attacks.velocity_spoof()


def test_missing_sections_use_defaults():
    cfg, attack = load_scenario_text("[ego]\nv0 = 10\n")
    assert cfg == replace(SimConfig(), ego_v0=10.0) and attack is None


@pytest.mark.parametrize(
    "text",
    [
        "[sim]\ndtt = 0.1\n",
        "[wheather]\nrain = 1\n",
        "[attack]\nkind = 'data_spoof'\nmagnitude = 3\n",
        "[sim]\ndt = 'fast'\n",
        "[sim]\nseed = 1.5\n",
        "[controller]\na_pb1 = 9.0\n",
        "[attack]\nkind = 'dos'\n",
        "[attack]\nkind = 'data_spoof'\n",
        "[attack]\nkind = 'functional_fault'\n",
        "[sim\n",
    ],
)
def test_rejected(text):
    with pytest.raises(ConfigError):
        load_scenario_text(text)


def test_bad_clamp():
    with pytest.raises(InvalidClampValue):
        load_scenario_text("[attack]\nkind = 'functional_fault'\nclamp = 7\n")


@pytest.mark.parametrize("attack", [None, attacks.velocity_spoof(), attacks.stage_clamp(1)])
def test_dump_round_trip(tmp_path, attack):
    cfg = SimConfig(ego_v0=12.5, lead_gap=40.0, lead_v=3.0, noise_std=0.1, seed=9)
    path = tmp_path / "s.toml"
    path.write_text(dump_scenario(cfg, attack))
    assert load_scenario(path) == (cfg, attack)


def test_attack_file(tmp_path):
    path = tmp_path / "a.toml"
    path.write_text("[attack]\nkind = 'functional_fault'\nclamp = 1\nstart = 0.5\n")
    assert load_attack_file(path) == attacks.AttackSpec.functional_fault(1, 0.5)
    path.write_text("[sim]\ndt = 0.1\n")
    with pytest.raises(ConfigError):
        load_attack_file(path)
