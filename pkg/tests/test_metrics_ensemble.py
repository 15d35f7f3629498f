import numpy as np
import pytest

from planewave.config import RunConfig
from planewave.driver import init_zero
from planewave.ensemble import RunEnsemble, generate_config_list, print_available_metrics
from planewave.metrics import METRICS, evaluate_metrics, rank_states
from planewave.spectral import TorusGrid
from planewave.state_algebra import SourceMatrix


def test_every_metric_declares_its_direction():
    for name, func in METRICS.items():
        assert isinstance(func.lower_is_better, bool), name
    assert METRICS["total_deficit"].lower_is_better
    assert not METRICS["min_hull_margin"].lower_is_better


def test_metrics_of_the_zero_state():
    grid = TorusGrid(2, 16)
    state = init_zero(grid, 1.0, SourceMatrix.zero(2))
    values = evaluate_metrics(state)
    assert set(values) == set(METRICS)
    assert values["total_deficit"] == pytest.approx((2 * np.pi) ** 2)
    assert values["sup_deficit"] == pytest.approx(1.0)
    assert values["min_hull_margin"] == pytest.approx(0.5)
    assert values["hminus1_to_v0"] == 0.0
    with pytest.raises(ValueError, match="not defined"):
        evaluate_metrics(state, ["sharpe_ratio"])


def test_print_available_metrics(capsys):
    print_available_metrics()
    out = capsys.readouterr().out
    assert " - min_hull_margin (higher is better)" in out
    assert " - total_deficit (lower is better)" in out


def test_rank_states_follows_the_direction():
    values = [3.0, 1.0, 2.0]
    assert list(rank_states(values, "total_deficit")) == [1, 2, 0]
    assert list(rank_states(values, "min_hull_margin")) == [0, 2, 1]


def test_generate_config_list():
    configs = generate_config_list({"rng_seed": [1, 2], "gamma": [0.5, 0.8]}, base={"n": 32})
    assert len(configs) == 4
    assert {(c["rng_seed"], c["gamma"]) for c in configs} == {(1, 0.5), (1, 0.8), (2, 0.5), (2, 0.8)}
    assert all(c["n"] == 32 for c in configs)


def test_ensemble_without_sweeps():
    base = {"n": 16, "schedule": {"n_sweeps": 0}}
    ensemble = RunEnsemble(generate_config_list({"rng_seed": [1, 2]}, base=base),
                           metric_names=["total_deficit", "l2_to_v0"])
    summary, distances = ensemble.run()
    assert list(summary.index) == ["periodic_d2_seed1_S0_g0.9", "periodic_d2_seed2_S0_g0.9"]
    assert list(summary.columns) == ["total_deficit", "l2_to_v0", "sweeps", "weak_residual"]
    assert np.all(summary["sweeps"] == 0)
    assert np.allclose(distances.to_numpy(), 0.0)


def test_ensemble_validation():
    with pytest.raises(ValueError):
        RunEnsemble([])
    with pytest.raises(ValueError, match="share the grid"):
        RunEnsemble([RunConfig(n=16), RunConfig(n=32)])
    duplicate = RunEnsemble([{"n": 16, "schedule": {"n_sweeps": 0}}] * 2)
    with pytest.raises(ValueError, match="duplicate"):
        duplicate.run()
