import numpy as np
import pytest

from planewave.errors import PreconditionError, ResolutionError
from planewave.profiles import (LADDER_DEPTH, build_profiles, check_box, cutoff_bump, cutoff_ramp, smoothstep,
                                violation_volume)
from planewave.spectral import TorusGrid


@pytest.fixture(scope="module")
def ladder():
    return build_profiles(0.5, 0.5, 0.05)


def test_profile_bounds_and_means(ladder):
    h0 = ladder.h(0)
    assert h0.min() >= -0.5 - 1e-12 and h0.max() <= 0.5 + 1e-12
    assert np.max(np.abs(ladder.table.mean(axis=1))) <= 1e-12
    assert ladder.table.shape == (LADDER_DEPTH + 1, 8192)


def test_h0_takes_both_endpoint_values(ladder):
    h0 = ladder.h(0)
    assert np.mean(np.isclose(h0, 0.5, atol=1e-9)) > 0.4
    assert np.mean(np.isclose(h0, -0.5, atol=1e-9)) > 0.4


def test_ladder_is_a_chain_of_primitives(ladder):
    errors = ladder.derivative_errors()
    assert len(errors) == LADDER_DEPTH
    assert max(errors) < 1e-3


def test_sup_norms_halve(ladder):
    sup = np.abs(ladder.table).max(axis=1)
    assert np.all(sup[1:] <= 0.5 * sup[:-1] + 1e-12)


def test_asymmetric_weights():
    ladder = build_profiles(0.3, 0.7, 0.05, m=2048)
    h0 = ladder.h(0)
    assert h0.min() >= -0.7 - 1e-12 and h0.max() <= 0.3 + 1e-12
    assert abs(h0.mean()) <= 1e-12
    assert np.mean(h0 > 0) == pytest.approx(0.7, abs=0.03)


def test_evaluate_is_periodic(ladder):
    s = np.linspace(0.0, 1.0, 17)
    assert np.allclose(ladder.evaluate(3, s), ladder.evaluate(3, s + 2.0), atol=1e-14)
    nodes = ladder.nodes[::512]
    assert np.allclose(ladder.evaluate(0, nodes), ladder.h(0)[::512], atol=1e-12)


def test_profile_preconditions():
    with pytest.raises(PreconditionError):
        build_profiles(0.5, 0.6, 0.05)
    with pytest.raises(PreconditionError):
        build_profiles(0.5, 0.5, 0.3)
    with pytest.raises(PreconditionError):
        build_profiles(0.5, 0.5, 0.05, m=128)


def test_smoothstep():
    t = np.linspace(-0.5, 1.5, 41)
    S = smoothstep(t)
    assert np.all(S[t <= 0] == 0.0) and np.all(S[t >= 1] == 1.0)
    assert np.all(np.diff(S) >= 0)
    assert np.allclose(S + smoothstep(1 - t), 1.0)


def test_cutoff_ramp_measure():
    lo, hi = np.array([1.0, 1.0]), np.array([5.0, 4.0])
    rho = cutoff_ramp(lo, hi, 6.0)
    assert 12.0 - (4.0 - 2 * rho) * (3.0 - 2 * rho) == pytest.approx(0.9 * 6.0)
    with pytest.raises(PreconditionError):
        cutoff_ramp(lo, hi, 12.0)


def test_cutoff_bump_on_grid():
    grid = TorusGrid(2, 128)
    lo, hi = np.array([1.0, 1.0]), np.array([5.0, 5.0])
    phi = cutoff_bump(grid, lo, hi, 8.0)
    assert phi.min() >= 0.0 and phi.max() == pytest.approx(1.0)
    x1, x2 = grid.coordinates()
    outside = (x1 < lo[0]) | (x1 > hi[0]) | (x2 < lo[1]) | (x2 > hi[1])
    assert np.all(phi[outside] == 0.0)
    assert violation_volume(grid, phi, lo, hi) == pytest.approx(0.9 * 8.0, rel=0.15)


def test_slab_bump_ramps_only_the_listed_axis():
    grid = TorusGrid(2, 128)
    lo, hi = np.array([0.0, 1.0]), np.array([2 * np.pi, 5.0])
    rho = cutoff_ramp(lo, hi, 2.0, axes=(1,))
    assert 2 * np.pi * 4.0 - 2 * np.pi * (4.0 - 2 * rho) == pytest.approx(1.8)
    phi = cutoff_bump(grid, lo, hi, 2.0, axes=(1,))
    assert np.allclose(phi, phi[:1, :])
    assert phi.max() == pytest.approx(1.0)
    assert violation_volume(grid, phi, lo, hi) == pytest.approx(1.8, rel=0.15)
    with pytest.raises(PreconditionError):
        cutoff_ramp(lo, hi, 2.0, axes=())
    with pytest.raises(PreconditionError):
        cutoff_ramp(lo, hi, 2.0, axes=(2,))


def test_narrow_box_is_under_resolved():
    grid = TorusGrid(2, 16)
    with pytest.raises(ResolutionError):
        check_box(grid, [1.0, 1.0], [1.5, 4.0])
    with pytest.raises(PreconditionError):
        check_box(grid, [1.0, 1.0], [7.0, 4.0])
