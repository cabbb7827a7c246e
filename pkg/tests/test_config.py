import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mullins_sekerka.config import (ConfigParseError, SimulationConfig, config_from_dict,
                                    initial_profile, parse_config, serialize_config,
                                    smooth_step, window)
from mullins_sekerka.errors import ConfigurationError, InvalidData


def test_defaults_are_valid():
    cfg = parse_config("")
    assert cfg == SimulationConfig()
    assert cfg.grid.n == 256 and cfg.grid.L == pytest.approx(8 * math.pi)
    assert cfg.output.formats == ("csv", "json")


def test_ints_accepted_for_reals():
    cfg = parse_config("[grid]\nL = 10\n")
    assert cfg.grid.L == 10.0 and isinstance(cfg.grid.L, float)


def test_non_power_of_two_names_field():
    with pytest.raises(ConfigurationError) as info:
        parse_config("[grid]\nn = 300\n")
    assert "grid.n" in str(info.value)


def test_all_errors_collected():
    text = """
seed = -1
bogus = 1
[grid]
n = 300
L = -1.0
[stepping]
dt = 0.0
snapshot_every = 0
extra = 2
[output]
formats = ["csv", "hdf5"]
"""
    with pytest.raises(ConfigurationError) as info:
        parse_config(text)
    names = [e.split(":")[0] for e in info.value.errors]
    for key in ("seed", "bogus", "grid.n", "grid.L", "stepping.dt", "stepping.snapshot_every",
                "stepping.extra", "output.formats"):
        assert key in names


def test_syntax_error_position():
    with pytest.raises(ConfigParseError) as info:
        parse_config("[grid]\nn = 256\nL = = 3\n")
    assert info.value.line == 3
    assert info.value.column is not None
    assert "line 3" in str(info.value)
    assert isinstance(info.value, ConfigurationError)


def test_section_must_be_a_table():
    with pytest.raises(ConfigurationError, match="grid: expected a table"):
        parse_config("grid = 3\n")


reals = st.floats(min_value=1e-6, max_value=1e3, allow_nan=False, allow_infinity=False)


@given(L=reals, n=st.sampled_from([16, 64, 256, 4096]), amp=st.floats(-10, 10),
       dt=reals, t_end=reals, every=st.integers(1, 1000), seed=st.integers(0, 2 ** 32),
       preset=st.sampled_from(["gaussian", "cosine_packet", "zero"]),
       formats=st.sampled_from([[], ["csv"], ["json"], ["csv", "json"]]),
       directory=st.text(st.characters(codec="utf-8", exclude_categories=["Cs", "Cc"]), min_size=1, max_size=12))
def test_serialize_round_trip(L, n, amp, dt, t_end, every, seed, preset, formats, directory):
    cfg = config_from_dict({
        "seed": seed,
        "grid": {"L": L, "n": n},
        "initial": {"preset": preset, "amplitude": amp, "wavenumber": 2.5},
        "stepping": {"dt": dt, "t_end": t_end, "snapshot_every": every},
        "output": {"directory": directory, "formats": formats},
    })
    assert parse_config(serialize_config(cfg)) == cfg


def test_with_overrides_revalidates():
    cfg = SimulationConfig()
    assert cfg.with_overrides(stepping={"dt": 1e-4}).stepping.dt == 1e-4
    assert cfg.with_overrides(seed=7).seed == 7
    with pytest.raises(ConfigurationError):
        cfg.with_overrides(grid={"n": 100})


def test_file_preset(tmp_path):
    cfg = SimulationConfig().with_overrides(grid={"L": 8.0, "n": 32})
    x = cfg.make_grid().nodes
    path = tmp_path / "profile.csv"
    rows = ["x,f"] + [f"{float(a)!r},{0.2 * math.exp(-a * a)!r}" for a in x]
    path.write_text("\n".join(rows) + "\n")
    cfg = cfg.with_overrides(initial={"preset": "file", "path": str(path)})
    f = initial_profile(cfg)
    np.testing.assert_allclose(f.values, 0.2 * np.exp(-x * x), rtol=1e-15, atol=0)


def test_file_preset_rejects_mismatched_nodes(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("\n".join(f"{i},{0.0}" for i in range(32)) + "\n")
    cfg = SimulationConfig().with_overrides(grid={"L": 8.0, "n": 32},
                                            initial={"preset": "file", "path": str(path)})
    with pytest.raises(InvalidData, match="grid nodes"):
        initial_profile(cfg)


def test_file_preset_missing_path(tmp_path):
    with pytest.raises(ConfigurationError, match="initial.path"):
        SimulationConfig().with_overrides(initial={"preset": "file", "path": str(tmp_path / "none.csv")})
    with pytest.raises(ConfigurationError, match="required"):
        SimulationConfig().with_overrides(initial={"preset": "file"})


def test_undecayed_profile_rejected():
    cfg = SimulationConfig().with_overrides(grid={"L": 3.0, "n": 64}, initial={"amplitude": 1.0})
    with pytest.raises(InvalidData, match="enlarge grid.L"):
        initial_profile(cfg)


def test_presets():
    cfg = SimulationConfig().with_overrides(grid={"L": 8.0, "n": 64},
                                            initial={"preset": "cosine_packet", "amplitude": 0.5,
                                                     "wavenumber": 3.0})
    f = initial_profile(cfg)
    x = cfg.make_grid().nodes
    inner = np.abs(x) <= 0.3 * 8.0
    assert np.allclose(f.values[inner], 0.5 * np.cos(3 * x[inner]))
    assert np.all(f.values[np.abs(x) >= 0.8 * 8.0] == 0.0)
    assert np.all(initial_profile(cfg.with_overrides(initial={"preset": "zero"})).values == 0)


@given(st.floats(-2, 3))
def test_smooth_step_range(t):
    v = float(smooth_step(np.array([t]))[0])
    assert 0.0 <= v <= 1.0
    if t <= 0:
        assert v == 0.0
    if t >= 1:
        assert v == 1.0


def test_window_is_monotone_and_symmetric():
    x = np.linspace(-10, 10, 2001)
    w = window(x, 10.0)
    assert np.allclose(w, w[::-1])
    right = w[x >= 0]
    assert np.all(np.diff(right) <= 0)
    assert smooth_step(np.array([0.5]))[0] == pytest.approx(0.5)
