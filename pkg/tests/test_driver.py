import numpy as np
import pytest

from planewave import spectral
from planewave.config import RunConfig
from planewave.driver import (DriverSettings, IterationState, _cell_spec, assemble_solution, cell_boxes,
                              finest_level, history_frame, init_from_flow, init_zero, run, safe_amplitude,
                              sweep, weak_residual)
from planewave.errors import PreconditionError
from planewave.fieldio import read_field, read_jsonl
from planewave.schedule import Sweep
from planewave.spectral import TorusGrid
from planewave.state_algebra import SourceMatrix, StatePoint, hull_margin_field
from planewave.wave_builder import frequency_window


def _zero_state(d=2, n=64, level=1.0, settings=None):
    grid = TorusGrid(d, n)
    return init_zero(grid, level, SourceMatrix.zero(d), settings=settings)


def test_weak_residual_of_known_fields():
    grid = TorusGrid(2, 32)
    x1, x2 = grid.coordinates()
    B = SourceMatrix(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    assert weak_residual(grid, np.zeros(grid.shape + (2,)), B) == 0.0
    shear = np.stack([np.sin(x2), np.zeros_like(x2)], axis=-1)
    assert weak_residual(grid, shear, SourceMatrix.zero(2)) <= 1e-8
    compressible = np.stack([np.sin(x1), np.zeros_like(x1)], axis=-1)
    assert weak_residual(grid, compressible, SourceMatrix.zero(2)) > 1e-3


def test_init_from_zero_flow():
    grid = TorusGrid(2, 32)
    state = init_from_flow(grid, np.zeros(grid.shape + (2,)), np.zeros(grid.shape), 1.0, SourceMatrix.zero(2))
    assert state.initial.min_hull_margin == pytest.approx(0.5)
    assert state.initial.total_deficit == pytest.approx((2 * np.pi) ** 2)
    assert state.initial.relaxed_violations == 0
    assert state.initial.weak_residual == 0.0


def test_init_from_flow_preconditions():
    grid = TorusGrid(2, 32)
    x1, x2 = grid.coordinates()
    p0 = np.zeros(grid.shape)
    fast = np.stack([2.0 * np.sin(x2), np.zeros_like(x2)], axis=-1)
    with pytest.raises(PreconditionError, match="energy"):
        init_from_flow(grid, fast, p0, 1.0, SourceMatrix.zero(2))
    compressible = np.stack([np.sin(x1), np.zeros_like(x1)], axis=-1)
    with pytest.raises(PreconditionError, match="not a solution"):
        init_from_flow(grid, compressible, p0, 4.0, SourceMatrix.zero(2))


@pytest.mark.parametrize("d, n", [(2, 32), (3, 16)])
def test_init_zero(d, n):
    state = _zero_state(d, n)
    assert state.initial.min_hull_margin == pytest.approx(1.0 / d)
    assert state.initial.relaxed_violations == 0
    assert state.initial.total_deficit == pytest.approx((2 * np.pi) ** d)


def test_init_zero_in_compact_mode_needs_energy_inside_omega():
    grid = TorusGrid(2, 32)
    omega = (np.array([1.0, 1.0]), np.array([5.0, 5.0]))
    with pytest.raises(PreconditionError, match="omega"):
        init_zero(grid, 1.0, SourceMatrix.zero(2), omega)


def test_assemble_solution():
    grid = TorusGrid(2, 16)
    rng = np.random.default_rng(0)
    v = rng.standard_normal(grid.shape + (2,))
    e = np.full(grid.shape, 3.0)
    U = v[..., :, None] * v[..., None, :] - (e / 2)[..., None, None] * np.eye(2)
    state = IterationState(grid, v, U, np.zeros(grid.shape), e, SourceMatrix.zero(2), v)
    v_out, p, violation = assemble_solution(state)
    assert np.array_equal(v_out, v)
    assert np.allclose(p, -1.5)
    assert violation.max() <= 1e-12

    zero = _zero_state(2, 16)
    _, p, violation = assemble_solution(zero)
    assert np.allclose(p, -0.5)
    assert np.allclose(violation, np.sqrt(2) * 0.5)


def test_cell_boxes_cover_the_torus():
    state = _zero_state(2, 16)
    boxes = cell_boxes(state, 2)
    assert len(boxes) == 16
    assert np.allclose(boxes[0][0], 0.0)
    assert np.allclose(boxes[-1][1], 2 * np.pi)
    assert np.allclose(boxes[1][0], [0.0, np.pi / 2])


def test_safe_amplitude_keeps_the_margin():
    v = np.zeros((4, 2))
    U = np.zeros((4, 2, 2))
    e = np.ones(4)
    direction = StatePoint([1.0, 0.0], [[0.5, 0.0], [0.0, -0.5]])
    amp = safe_amplitude(v, U, e, direction, 0.25, cap=10.0)
    assert 0 < amp < 10.0
    unit = direction * (1.0 / direction.norm())
    for sign in (1.0, -1.0):
        margins = hull_margin_field(v + sign * amp * unit.v, U + sign * amp * unit.U, e)
        assert margins.min() >= 0.25 - 1e-9
    assert safe_amplitude(v, U, e, direction, 0.25, cap=1e-3) == 1e-3


def test_sweep_with_zero_gamma_is_the_identity():
    settings = DriverSettings(gamma=0.0)
    state = _zero_state(2, 32, settings=settings)
    after = sweep(state, Sweep(0, 1, 2.0, 0.1), settings)
    assert np.array_equal(after.v, state.v)
    assert np.array_equal(after.q, state.q)
    record = after.history[-1]
    assert record.cells_active == 0
    assert record.cells_skipped == len(cell_boxes(state, record.k_cells))
    assert record.total_deficit == pytest.approx(state.initial.total_deficit)
    assert state.history == []


def test_finest_level_follows_the_grid():
    settings = DriverSettings()
    assert finest_level(_zero_state(2, 32), 3, settings) == 0
    assert finest_level(_zero_state(2, 128), 3, settings) == 0
    assert finest_level(_zero_state(2, 512), 3, settings) == 2
    assert finest_level(_zero_state(2, 512), 0, settings) == 0
    assert finest_level(_zero_state(2, 512), 3, DriverSettings(ramp_oscillations=0.0)) == 3


def test_cell_spec_skips_cells_the_grid_cannot_resolve():
    state = _zero_state(2, 32)
    lo, hi = cell_boxes(state, 1)[0]
    spec, reason = _cell_spec(state, Sweep(0, 1, 16.0, 0.1), lo, hi, DriverSettings())
    assert spec is None
    assert reason.startswith(("frequency window empty", "under-resolved"))


def test_cell_spec_moves_lambda_into_the_window():
    state = _zero_state(2, 128)
    lo, hi = cell_boxes(state, 0)[0]
    settings = DriverSettings()
    for lam in (2.0, 16.0, 64.0):
        spec, reason = _cell_spec(state, Sweep(0, 0, lam, 0.1), lo, hi, settings)
        assert reason is None
        lam_min, lam_max = frequency_window(spec.xi, spec.ramp(), state.grid, settings.ramp_oscillations)
        assert lam_min - 1e-12 <= spec.lam <= lam_max + 1e-12


def test_default_schedule_skips_instead_of_aborting():
    state = run(RunConfig(n=128, schedule={"n_sweeps": 3}))
    assert len(state.history) == 3
    for record in state.history:
        assert record.k_cells == 0
        assert record.cells_active + record.cells_skipped == 1
        if record.cells_active:
            assert record.lam <= 16.0 * np.sqrt(2) + 1e-9


def test_one_sweep_lowers_the_deficit():
    state = _zero_state(2, 128)
    after = sweep(state, Sweep(0, 1, 16.0, 0.1))
    record = after.history[-1]
    assert record.cells_active >= 1
    assert record.total_deficit < state.initial.total_deficit
    assert record.relaxed_violations == 0
    assert record.residual_div_v <= 1e-6
    assert record.residual_relaxed <= 1e-6
    assert record.linf_ok
    assert spectral.l2_norm(after.grid, after.v) > 0


@pytest.mark.slow
def test_one_sweep_in_three_dimensions():
    settings = DriverSettings(ramp_oscillations=1.0)
    state = _zero_state(3, 64, settings=settings)
    after = sweep(state, Sweep(0, 1, 8.0, 0.1), settings)
    record = after.history[-1]
    assert record.cells_active >= 1
    assert record.total_deficit < state.initial.total_deficit
    assert record.relaxed_violations == 0


def test_empty_schedule_returns_the_initial_state():
    state = run(RunConfig(n=32, schedule={"n_sweeps": 0}))
    assert state.history == []
    assert len(history_frame(state)) == 1
    assert np.all(state.v == 0)


def _assert_strictly_decreasing(state):
    frame = history_frame(state)
    deficits = frame["total_deficit"].to_numpy()
    assert len(frame) == len(state.history) + 1
    assert all(r.cells_active >= 1 for r in state.history)
    assert np.all(np.diff(deficits) < 0)
    for record in state.history:
        assert record.relaxed_violations == 0
        assert record.linf_ok
        assert record.residual_div_v <= 1e-6
        assert record.residual_relaxed <= 1e-6
        assert record.lam >= 16.0 - 1e-12
    final = state.history[-1]
    assert final.hminus1_to_v0 <= 0.5 * final.l2_to_v0
    return deficits[-1] / deficits[0]


@pytest.mark.slow
@pytest.mark.parametrize("B", [None, [0.0, 1.0, -1.0, 0.0]])
def test_full_run_is_monotone(tmp_path, B):
    cfg = RunConfig(n=128, B=B, schedule={"n_sweeps": 3, "lams": [16.0, 16.0, 16.0]},
                    output_dir=str(tmp_path))
    seen = []
    state = run(cfg, on_record=seen.append)
    ratio = _assert_strictly_decreasing(state)
    assert ratio < 1.0
    assert [r["sweep"] for r in read_jsonl(str(tmp_path / "diagnostics.jsonl"))] == [1, 2, 3]
    assert len(seen) == 3
    v, kind = read_field(str(tmp_path / "v.pwfg"))
    assert kind == "vector" and np.array_equal(v, state.v)


@pytest.mark.slow
def test_full_run_in_three_dimensions():
    cfg = RunConfig(d=3, n=64, ramp_oscillations=1.0, schedule={"n_sweeps": 3, "lams": [8.0, 8.0, 8.0]})
    state = run(cfg)
    deficits = history_frame(state)["total_deficit"].to_numpy()
    assert np.all(np.diff(deficits) <= 1e-9)
    assert deficits[-1] < deficits[0]
    assert state.history[-1].relaxed_violations == 0


@pytest.mark.slow
def test_seeds_give_different_subsolutions():
    base = {"n": 128, "schedule": {"n_sweeps": 2, "lams": [16.0, 16.0]}}
    a = run(RunConfig.from_dict({**base, "rng_seed": 1}))
    b = run(RunConfig.from_dict({**base, "rng_seed": 2}))
    assert spectral.l2_norm(a.grid, a.v - b.v) > 1e-3


@pytest.mark.slow
def test_compact_run_stays_near_omega():
    cfg = RunConfig(
        n=256, mode="compact", omega={"lo": [1.0, 1.0], "hi": [5.0, 5.0]},
        energy={"kind": "bump", "level": 1.0, "lo": [1.2, 1.2], "hi": [4.8, 4.8]},
        schedule={"n_sweeps": 2, "k0": 2, "lams": [16.0, 16.0]}, ramp_oscillations=1.0, min_ramp_cells=10,
    )
    state = run(cfg)
    final = state.history[-1]
    assert final.total_deficit < state.initial.total_deficit
    assert final.tail_outside_omega is not None
    assert final.relaxed_violations == 0
