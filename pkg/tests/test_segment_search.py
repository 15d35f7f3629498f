import numpy as np
import pytest

from planewave.errors import HullTooThinError, PreconditionError
from planewave.lamination_hull import in_lamination_hull
from planewave.segment_search import (SearchConfig, admissible_segment, admissible_segment_2d,
                                      caratheodory_bound, decompose, decompose_refining, find_segment,
                                      lift_segment, sphere_candidates, wave_vector_d3)
from planewave.state_algebra import StatePoint, hull_margin, in_K, in_relaxed, lift_to_K


def _interior_states(rng, d, n, r=1.0):
    out = []
    while len(out) < n:
        pts = rng.standard_normal((d + 3, d))
        pts = np.sqrt(r) * pts / np.linalg.norm(pts, axis=1, keepdims=True)
        weights = rng.dirichlet(np.ones(d + 3))
        lifted = [lift_to_K(p, r) for p in pts]
        w = StatePoint(sum(l * p.v for l, p in zip(weights, lifted)), sum(l * p.U for l, p in zip(weights, lifted)))
        if hull_margin(w, r) > 0.02:
            out.append(w)
    return out


def test_caratheodory_bound():
    assert caratheodory_bound(2) == 5
    assert caratheodory_bound(3) == 9


@pytest.mark.parametrize("d", [2, 3])
def test_decomposition_reconstructs(d):
    rng = np.random.default_rng(d)
    for w in _interior_states(rng, d, 8):
        dec = decompose_refining(w, 1.0, SearchConfig())
        assert dec.count <= caratheodory_bound(d)
        assert dec.residual(w) <= 1e-8
        assert all(in_K(p, 1.0) for p in dec.points)
        assert np.all(dec.weights > 0)
        assert dec.weights.sum() == pytest.approx(1.0)


def test_decomposition_of_a_point_on_K():
    w = lift_to_K([0.0, 1.0, 0.0], 1.0)
    dec = decompose(w, 1.0)
    assert dec.count == 1


def test_decomposition_rejects_boundary_and_outside():
    with pytest.raises(PreconditionError):
        decompose(StatePoint([2.0, 0.0, 0.0], np.zeros((3, 3))), 1.0)


def test_d3_segments_keep_cone_and_margin():
    rng = np.random.default_rng(21)
    for w in _interior_states(rng, 3, 10):
        seg = admissible_segment(w, 1.0)
        res_u, res_v = seg.cone_residuals()
        assert max(res_u, res_v) <= 1e-9
        assert min(seg.endpoint_margins()) >= 0.5 * seg.margin - 1e-9
        assert seg.half_length > 0
        assert np.isfinite(seg.deficit_ratio) and seg.deficit_ratio > 0


def test_d2_segment_at_origin_is_certified():
    seg = admissible_segment_2d(StatePoint.zero(2), 1.0)
    assert seg.check()
    for end in seg.endpoints:
        assert in_lamination_hull(end, 1.0, depth=1)
    w1, w2, mu1, mu2 = lift_segment(seg)
    center = w1 * mu1 + w2 * mu2
    assert np.allclose(center.as_vector(), 0.0)


def test_find_segment_dispatches_on_dimension():
    assert find_segment(StatePoint.zero(2), 1.0).d == 2
    assert find_segment(StatePoint.zero(3), 1.0).d == 3
    with pytest.raises(PreconditionError):
        admissible_segment(StatePoint.zero(2), 1.0)
    with pytest.raises(PreconditionError):
        admissible_segment(lift_to_K([1.0, 0.0, 0.0], 1.0), 1.0)


def test_segment_scaling():
    seg = find_segment(StatePoint.zero(3), 1.0)
    half = seg.scaled(0.5)
    assert half.half_length == pytest.approx(0.5 * seg.half_length)
    assert np.allclose(half.wave_vector, seg.wave_vector)


def test_wave_vector_d3_is_orthogonal():
    a, b = np.eye(3)[0], np.eye(3)[1]
    xi = wave_vector_d3(a, b)
    assert np.allclose(xi, [0.0, 0.0, 1.0])
    rng = np.random.default_rng(4)
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    xi = wave_vector_d3(a, b)
    assert np.linalg.norm(xi) == pytest.approx(1.0)
    assert abs(xi @ a) < 1e-12 and abs(xi @ b) < 1e-12


def test_sphere_candidates_depend_on_seed():
    a = sphere_candidates(3, 1.0, 32, 0)
    b = sphere_candidates(3, 1.0, 32, 1)
    assert np.allclose(np.sum(a * a, axis=1), 1.0)
    assert not np.allclose(a, b)
    assert np.array_equal(a, sphere_candidates(3, 1.0, 32, 0))


def test_exact_lattice_decomposes_into_quarter_weights():
    dec = decompose(StatePoint.zero(2), 1.0, sphere_resolution=4)
    assert dec.count == 4
    assert np.allclose(dec.weights, 0.25)
    assert dec.residual(StatePoint.zero(2)) <= 1e-12
    velocities = np.array(sorted(tuple(np.round(p.v, 12)) for p in dec.points))
    assert np.allclose(velocities, [[-1.0, 0.0], [0.0, -1.0], [0.0, 1.0], [1.0, 0.0]], atol=1e-12)


def test_jitter_can_be_switched_off():
    exact = sphere_candidates(2, 4.0, 4, 0, jitter=False)
    assert np.allclose(exact, [[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [0.0, -2.0]], atol=1e-12)
    assert not np.allclose(sphere_candidates(2, 4.0, 4, 0), exact, atol=1e-6)


def test_segment_between_two_lifted_axes():
    a, b = np.eye(3)[0], np.eye(3)[1]
    midpoint = (lift_to_K(a, 1.0) + lift_to_K(b, 1.0)) * 0.5
    assert hull_margin(midpoint, 1.0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(PreconditionError):
        admissible_segment(midpoint, 1.0)
    inner = midpoint * 0.8
    assert hull_margin(inner, 1.0) > 0
    seg = admissible_segment(inner, 1.0)
    res_u, res_v = seg.cone_residuals()
    assert max(res_u, res_v) <= 1e-9
    assert min(seg.endpoint_margins()) > 0
    assert min(seg.endpoint_margins()) >= 0.5 * seg.margin - 1e-9
    assert seg.half_length > 0


@pytest.mark.slow
def test_hundred_random_d3_states():
    rng = np.random.default_rng(100)
    for w in _interior_states(rng, 3, 100):
        dec = decompose_refining(w, 1.0, SearchConfig())
        assert dec.count <= caratheodory_bound(3)
        assert dec.residual(w) <= 1e-8
        seg = admissible_segment(w, 1.0)
        res_u, res_v = seg.cone_residuals()
        assert max(res_u, res_v) <= 1e-9
        assert min(seg.endpoint_margins()) >= 0.5 * seg.margin - 1e-9


@pytest.mark.slow
def test_hundred_random_d2_states():
    rng = np.random.default_rng(200)
    states = [StatePoint.zero(2)] + [w * 0.5 for w in _interior_states(rng, 2, 99)]
    built = relaxed = 0
    for w in states:
        dec = decompose_refining(w, 1.0, SearchConfig())
        assert dec.count <= caratheodory_bound(2)
        assert dec.residual(w) <= 1e-8
        if not in_relaxed(w, 1.0):
            continue
        relaxed += 1
        try:
            seg = admissible_segment_2d(w, 1.0)
        except HullTooThinError:
            continue
        built += 1
        res_u, res_v = seg.cone_residuals()
        assert max(res_u, res_v) <= 1e-9
        assert min(seg.endpoint_margins()) >= 0.5 * seg.margin - 1e-9
        for end in seg.endpoints:
            assert in_lamination_hull(end, 1.0, depth=1)
    assert built >= max(1, relaxed // 2)
