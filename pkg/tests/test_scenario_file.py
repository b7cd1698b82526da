import numpy as np
import pytest

from conftest import tiny_profile
from swarmsplit.cnn_profile import save_profile
from swarmsplit.errors import ParseError
from swarmsplit.scenario_file import MEMORY_LEVELS, load_scenario, memory_value, parse_scenario, parse_sweep

MINIMAL = """\
[swarm]
n = 2
positions = [[0, 0, 50], [30, 0, 50]]

[requests]
origins = [2, 1]
"""


def test_minimal_file_defaults():
    sf = parse_scenario(MINIMAL)
    assert sf.origins == (1, 0)
    assert sf.mem_budget == 512 * 2 ** 20
    assert sf.profile.model_name.lower().startswith("lenet")
    assert sf.interference_mode == "all_others" and sf.backend == "highs"
    sc = sf.scenario()
    assert sc.N == 2 and sc.T == 1 and sc.rates[0, 0, 1] > 0
    assert sc.compute_budget[0] == pytest.approx(9.5e9)


def test_static_positions_repeat_over_horizon():
    sf = parse_scenario(MINIMAL + "[mobility]\nhorizon = 4\n")
    traj = sf.trajectory()
    assert traj.positions.shape == (4, 2, 3)
    assert np.all(traj.positions == traj.positions[0])


def test_group_mobility_used_without_positions():
    text = """\
[swarm]
n = 4
member_deviation_sigma = 2.0
[requests]
origins = [1]
[mobility]
horizon = 3
seed = 9
"""
    a = parse_scenario(text).trajectory()
    b = parse_scenario(text).trajectory()
    assert a.positions.shape == (3, 4, 3)
    assert np.array_equal(a.positions, b.positions)


def test_memory_values():
    assert memory_value("low") == MEMORY_LEVELS["low"] == 256 * 2 ** 20
    assert memory_value(1000) == 1000.0
    assert memory_value([1, "high"], 2).tolist() == [1.0, 512 * 2 ** 20]
    for bad in ("medium", True, {"a": 1}):
        with pytest.raises(ValueError):
            memory_value(bad)
    with pytest.raises(ValueError):
        memory_value([1, 2, 3], 2)


def test_profile_path_relative_to_file(tmp_path):
    save_profile(tiny_profile(), tmp_path / "tiny.csv")
    (tmp_path / "s.toml").write_text(MINIMAL + '[model]\npath = "tiny.csv"\nhead = 2\n')
    sf = load_scenario(tmp_path / "s.toml")
    assert sf.profile.M == 2


@pytest.mark.parametrize("extra,line,needle", [
    ("[requests]\norigins = [1]\nfoo = 2\n", None, "unknown key 'foo'"),
    ("[planet]\nx = 1\n", None, "unknown section"),
])
def test_unknown_keys_name_their_line(extra, line, needle):
    text = "[swarm]\nn = 2\n" + extra
    with pytest.raises(ParseError) as info:
        parse_scenario(text)
    assert needle in str(info.value)
    bad_line = text.splitlines().index(next(l for l in text.splitlines() if l.startswith(("foo", "[planet"))))
    assert info.value.line == bad_line + 1


@pytest.mark.parametrize("text,needle", [
    ("[swarm]\nn = 2\n[requests]\norigins = [3]\n", "origins"),
    ("[swarm]\nn = 2\n[requests]\norigins = []\n", "origins"),
    ("[swarm]\nn = 0\n[requests]\norigins = [1]\n", "n must be"),
    ("[requests]\norigins = [1]\n", "needs 'n'"),
    ("[swarm]\nn = 2\n", "needs 'origins'"),
    ("[swarm]\nn = 2\nmem_budget = \"huge\"\n[requests]\norigins = [1]\n", "memory level"),
    ("[swarm]\nn = 2\npositions = [[0, 0, 50]]\n[requests]\norigins = [1]\n", "positions"),
    ("[swarm]\nn = 2\n[requests]\norigins = [1]\n[model]\nname = \"resnet\"\n", "unknown model"),
    ("[swarm]\nn = 2\n[requests]\norigins = [1]\n[model]\nname = \"lenet\"\npath = \"x.csv\"\n", "exactly one"),
    ("[swarm]\nn = 2\n[requests]\norigins = [1]\n[solver]\nbackend = \"gurobi\"\n", "backend"),
    ("[swarm]\nn = 2\n[requests]\norigins = [1]\n[solver]\ninterference_mode = \"x\"\n", "interference"),
    ("[swarm]\nn = 2\n[requests]\norigins = [1]\n[solver]\ntime_limit = 0\n", "time_limit"),
    ("[swarm]\nn = \"two\"\n[requests]\norigins = [1]\n", "bad value"),
    ("[swarm]\nn = 2\nleader_speed = -1.0\n[requests]\norigins = [1]\n", "leader_speed"),
    ("[swarm]\nn = 2\n[requests]\norigins = [1]\n[radio]\nbandwidth_hz = -1\n", "radio"),
    ("[swarm\nn = 2\n", ""),
])
def test_bad_files(text, needle):
    with pytest.raises(ParseError) as info:
        parse_scenario(text)
    assert needle in str(info.value)


def test_toml_syntax_error_has_line():
    with pytest.raises(ParseError) as info:
        parse_scenario("[swarm]\nn = 2\nbroken line\n")
    assert info.value.line == 3


def test_sweep_file(tmp_path):
    spec = parse_sweep('[sweep]\nn_list = [4]\nmem_levels = ["low", 1024]\nmethods = ["ould", "nearest-hrm"]\n'
                       '[radio]\nbandwidth_hz = 1e6\n', tmp_path)
    assert spec.n_list == (4,) and spec.mem_levels == (256 * 2 ** 20, 1024)
    assert spec.methods == ("ould", "nearest_hrm") and spec.radio.bandwidth_hz == 1e6
    with pytest.raises(ParseError) as info:
        parse_sweep("[sweep]\nn_list = [4]\nspeed = 3\n")
    assert info.value.line == 3
    with pytest.raises(ParseError):
        parse_sweep("[sweep]\nr_range = [3, 1]\n")
