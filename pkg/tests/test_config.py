import json

import numpy as np
import pytest

from planewave.config import RunConfig, WaveConfig, load_json, make_base_flow, make_energy
from planewave.driver import init_from_flow, weak_residual
from planewave.errors import ConfigError
from planewave.spectral import TorusGrid
from planewave.state_algebra import SourceMatrix


def test_defaults():
    cfg = RunConfig()
    assert cfg.n == [128, 128]
    assert (cfg.cutoff_fraction, cfg.min_ramp_cells, cfg.ramp_oscillations) == (0.9, 12, 2.5)
    assert len(cfg.sweep_schedule()) == 3
    assert np.all(cfg.source_matrix().B == 0)
    assert cfg.omega_box() is None
    assert cfg.search_config().rng_seed == 0


@pytest.mark.parametrize("doc", [
    {"d": 1},
    {"n": 63},
    {"n": [64, 64, 64]},
    {"mode": "bounded"},
    {"gamma": 1.0},
    {"cutoff_fraction": 0.0},
    {"ramp_oscillations": -1.0},
    {"B": [1.0, 2.0, 3.0]},
    {"omega": {"lo": [1, 1], "hi": [5, 5]}},
    {"mode": "compact"},
    {"mode": "compact", "omega": {"lo": [0.0, 0.0], "hi": [5.0, 5.0]}},
    {"schedule": {"n_sweeps": 2, "speed": 1}},
    {"energy": {"kind": "gaussian"}},
    {"energy": {"kind": "constant", "level": -1.0}},
    {"tolerances": {"nonsense": 1}},
    {"flavour": "vanilla"},
])
def test_invalid_run_configs(doc):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(doc)


def test_overrides_and_dict_form():
    cfg = RunConfig(schedule={"n_sweeps": 1, "lam0": 2.0})
    seeded = cfg.with_overrides(rng_seed=7)
    assert seeded.rng_seed == 7
    assert seeded.search_config().rng_seed == 7
    assert RunConfig.from_dict(seeded.to_dict()) == seeded


def test_energy_profiles():
    grid = TorusGrid(2, 32)
    assert np.all(make_energy({"kind": "constant", "level": 2.0}).sample(grid) == 2.0)
    cos = make_energy({"kind": "cosine", "level": 1.0, "amplitude": 0.5}).sample(grid)
    assert cos.min() == pytest.approx(0.5, abs=0.01) and cos.max() == pytest.approx(1.5)
    bump = make_energy({"kind": "bump", "lo": [1.0, 1.0], "hi": [5.0, 5.0]}).sample(grid)
    x1, x2 = grid.coordinates()
    outside = (x1 < 1.0) | (x1 > 5.0) | (x2 < 1.0) | (x2 > 5.0)
    assert np.all(bump[outside] == 0)
    assert bump.max() == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        make_energy({"kind": "cosine", "level": 1.0, "amplitude": 2.0})


def test_base_flows():
    grid = TorusGrid(2, 32)
    v0, p0 = make_base_flow({"kind": "shear", "amplitude": 0.3, "mode": 2}, grid)
    x1, x2 = grid.coordinates()
    assert np.allclose(v0[..., 0], 0.3 * np.sin(2 * x2))
    assert np.all(v0[..., 1] == 0) and np.all(p0 == 0)
    with pytest.raises(ConfigError):
        make_base_flow({"kind": "shear", "speed": 1.0}, grid)


def test_shear_base_flow_passes_the_solution_gate():
    grid = TorusGrid(2, 64)
    v0, p0 = make_base_flow({"kind": "shear", "amplitude": 0.3, "mode": 2}, grid)
    state = init_from_flow(grid, v0, p0, 1.0, SourceMatrix.zero(2))
    assert state.initial.weak_residual <= 1e-8
    assert state.initial.residual_div_v <= 1e-8
    assert state.initial.residual_relaxed <= 1e-8
    assert state.initial.relaxed_violations == 0
    assert weak_residual(grid, v0, SourceMatrix.zero(2)) <= 1e-8


def test_wave_config_builds_a_cone_direction():
    cfg = WaveConfig.from_dict({"n": 128, "lam": 8.0, "w_bar": {"v": [1.0, 0.0], "U": [[0.5, 0.0], [0.0, -0.5]]}})
    spec = cfg.build_spec()
    assert spec.lam == 8.0
    assert np.allclose(spec.w_bar.v, [1.0, 0.0])
    assert spec.cutoff_delta == pytest.approx(0.9 * (2 * np.pi) ** 2)
    with pytest.raises(ConfigError, match="wave cone"):
        WaveConfig.from_dict({"w_bar": {"v": [1.0, 0.0], "U": [[0.0, 1.0], [1.0, 0.0]]}}).build_spec()


def test_wave_config_searches_a_segment():
    spec = WaveConfig.from_dict({"d": 2, "lam": 4.0, "r": 1.0}).build_spec()
    assert spec.center.norm() == pytest.approx(0.0, abs=1e-12)
    assert spec.mu1 == spec.mu2 == 0.5


def test_load_json(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"d": 2, "n": 32}))
    assert load_json(str(good)) == {"d": 2, "n": 32}
    bad = tmp_path / "bad.json"
    bad.write_text("{d: 2")
    with pytest.raises(ConfigError):
        load_json(str(bad))
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_json(str(listing))
    with pytest.raises(OSError):
        load_json(str(tmp_path / "missing.json"))
