# segment_search.py
"""
Admissible Λ-segments through interior states.

For d >= 3 a state w in the interior of K_r^co is written as a convex
combination of points of K_r; the two points (w_1, w_j) with the largest
weighted velocity gap give the direction ½λ_j(w_j - w_1), which lies in the
wave cone with a wave vector orthogonal to v_1 and v_j (and q̄ = 0).

For d = 2 the search runs over the sampled Λ-directions of the lamination
hull and keeps the longest segment whose endpoints are certified one hull
level lower.
"""
import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.optimize import linprog, nnls

from .errors import (HullTooThinError, InfeasibleDecompositionError,
                     NumericalInvariantError, PreconditionError)
from .lamination_hull import HullConfig, _ray_extent, direction_set, in_hull_batch
from .state_algebra import (CONE_TOL, StatePoint, cone_residuals, hull_margin,
                            in_K, in_relaxed, lift_to_K)

logger = logging.getLogger(__name__)

RECONSTRUCTION_TOL = 1e-8
WEIGHT_FLOOR = 1e-14


@dataclass(frozen=True)
class SearchConfig:
    sphere_resolution: int = 96
    rng_seed: int = 0
    max_refinements: int = 3
    bisection_iters: int = 32
    max_halvings: int = 12
    hull: HullConfig = field(default_factory=HullConfig)

    def __post_init__(self):
        if self.sphere_resolution < 4:
            raise PreconditionError("sphere_resolution must be at least 4")
        if self.bisection_iters < 1 or self.max_halvings < 0 or self.max_refinements < 0:
            raise PreconditionError("search iteration counts must be positive")


def caratheodory_bound(d):
    """N + 1 with N = d(d+3)/2 - 1."""
    return d * (d + 3) // 2


@dataclass(frozen=True, eq=False)
class CaratheodoryDecomposition:
    points: Tuple[StatePoint, ...]
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if len(self.points) != weights.shape[0] or weights.shape[0] == 0:
            raise NumericalInvariantError("decomposition needs one weight per point")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise NumericalInvariantError("weights must be positive and sum to 1")
        if len(self.points) > caratheodory_bound(self.points[0].d):
            raise NumericalInvariantError("decomposition exceeds the Carathéodory bound")
        object.__setattr__(self, "weights", weights)

    @property
    def count(self):
        return len(self.points)

    def reconstruct(self):
        v = sum(l * p.v for l, p in zip(self.weights, self.points))
        U = sum(l * p.U for l, p in zip(self.weights, self.points))
        return StatePoint(v, U)

    def residual(self, w):
        return (self.reconstruct() - w).norm()


@dataclass(frozen=True, eq=False)
class AdmissibleSegment:
    """
    The segment [center - direction, center + direction]. `margin` is the
    hull margin of the center, `deficit_ratio` the measured |v̄| / (r - |v|^2).
    """
    center: StatePoint
    direction: StatePoint
    wave_vector: np.ndarray
    q_bar: float
    margin: float
    r: float
    deficit_ratio: float = float("nan")

    def __post_init__(self):
        xi = np.asarray(self.wave_vector, dtype=float)
        if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
            raise NumericalInvariantError("wave vector must have unit length")
        if np.linalg.norm(self.direction.v) <= CONE_TOL:
            raise PreconditionError("segment direction needs v̄ != 0")
        object.__setattr__(self, "wave_vector", xi)

    @property
    def d(self):
        return self.center.d

    @property
    def endpoints(self):
        return self.center - self.direction, self.center + self.direction

    @property
    def half_length(self):
        return self.direction.norm()

    def cone_residuals(self):
        return cone_residuals(self.direction, self.wave_vector, self.q_bar)

    def endpoint_margins(self):
        lo, hi = self.endpoints
        return hull_margin(lo, self.r), hull_margin(hi, self.r)

    def check(self, tol=CONE_TOL):
        """Raise NumericalInvariantError unless the cone and margin invariants hold."""
        res_u, res_v = self.cone_residuals()
        if res_u > tol or res_v > tol:
            raise NumericalInvariantError(f"direction leaves the wave cone ({res_u:.2e}, {res_v:.2e})")
        if min(self.endpoint_margins()) < 0.5 * self.margin - tol:
            raise NumericalInvariantError("endpoint margin below half the center margin")
        return True

    def scaled(self, factor):
        return AdmissibleSegment(self.center, self.direction * factor, self.wave_vector,
                                 self.q_bar * factor, self.margin, self.r, self.deficit_ratio)


def lift_segment(segment):
    """(w_1, w_2, μ_1, μ_2) with center = μ_1 w_1 + μ_2 w_2 for the centred segment."""
    w1, w2 = segment.endpoints
    return w1, w2, 0.5, 0.5


def _fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    polar = np.arccos(1.0 - 2.0 * i / n)
    azimuth = np.pi * (1.0 + np.sqrt(5.0)) * i
    return np.stack([np.cos(azimuth) * np.sin(polar), np.sin(azimuth) * np.sin(polar), np.cos(polar)], axis=1)


def sphere_candidates(d, r, n, rng_seed, jitter=True):
    """
    Quasi-uniform velocities with |v|^2 = r, optionally jittered by 10^-3 √r.
    Nonzero seeds also rotate the mesh, so different seeds select different
    points.
    """
    rng = np.random.default_rng(rng_seed)
    if d == 2:
        offset = rng.uniform(0, 2 * np.pi / n) if rng_seed else 0.0
        theta = 2 * np.pi * np.arange(n) / n + offset
        pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    elif d == 3:
        pts = _fibonacci_sphere(n)
        if rng_seed:
            Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
            pts = pts @ (Q * np.sign(np.diag(R))).T
    else:
        pts = rng.standard_normal((n, d))
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    if jitter:
        pts = pts + 1e-3 * rng.standard_normal(pts.shape)
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    return np.sqrt(r) * pts


def _features(w):
    """(1, v, trace-free upper triangle of U): N + 1 coordinates."""
    iu = np.triu_indices(w.d)
    upper = w.U[iu][:-1]
    return np.concatenate([[1.0], w.v, upper])


def _reduce_support(A, lam):
    """Carathéodory pivoting: drop points until the support is affinely independent."""
    support = np.nonzero(lam > WEIGHT_FLOOR)[0]
    lam = np.where(lam > WEIGHT_FLOOR, lam, 0.0)
    while support.size > A.shape[0]:
        _, _, vt = np.linalg.svd(A[:, support])
        z = vt[-1]
        if not np.any(z > 0):
            z = -z
        pos = z > 1e-15
        ratios = lam[support][pos] / z[pos]
        t = ratios.min()
        lam[support] = lam[support] - t * z
        lam[support[pos][np.argmin(ratios)]] = 0.0
        lam[lam < WEIGHT_FLOOR] = 0.0
        support = np.nonzero(lam > 0)[0]
    return support, lam


def decompose(w, r, sphere_resolution=96, rng_seed=0):
    """
    Convex combination of at most N + 1 points of K_r reproducing w.
    Raises InfeasibleDecompositionError when the sampled mesh is too coarse.
    The exact mesh is tried before the jittered one.
    """
    if in_K(w, r):
        return CaratheodoryDecomposition((lift_to_K(w.v, r),), np.ones(1))
    if hull_margin(w, r) <= 0:
        raise PreconditionError("decompose needs a state in the interior of K_r^co")
    try:
        return _decompose_on_mesh(w, r, sphere_resolution, rng_seed, jitter=False)
    except InfeasibleDecompositionError:
        return _decompose_on_mesh(w, r, sphere_resolution, rng_seed, jitter=True)


def _decompose_on_mesh(w, r, sphere_resolution, rng_seed, jitter):
    cands = [lift_to_K(v, r) for v in sphere_candidates(w.d, r, sphere_resolution, rng_seed, jitter)]
    A = np.stack([_features(p) for p in cands], axis=1)
    b = _features(w)
    res = linprog(np.zeros(A.shape[1]), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    if res.status == 0:
        lam = np.asarray(res.x, dtype=float)
    else:
        lam, _ = nnls(A, b)
    if np.linalg.norm(A @ lam - b) > 1e-6:
        raise InfeasibleDecompositionError(
            f"state not in the hull of {sphere_resolution} sampled points; increase sphere_resolution"
        )
    support, lam = _reduce_support(A, lam)
    weights = lam[support]
    exact, *_ = np.linalg.lstsq(A[:, support], b, rcond=None)
    if np.all(exact > 0):
        weights = exact
    weights = weights / weights.sum()
    dec = CaratheodoryDecomposition(tuple(cands[i] for i in support), weights)
    err = dec.residual(w)
    if err > RECONSTRUCTION_TOL:
        raise InfeasibleDecompositionError(f"reconstruction error {err:.2e} above {RECONSTRUCTION_TOL:.0e}")
    return dec


def decompose_refining(w, r, cfg):
    """decompose, doubling the sphere resolution after each infeasible attempt."""
    n = cfg.sphere_resolution
    for attempt in range(cfg.max_refinements + 1):
        try:
            return decompose(w, r, n, cfg.rng_seed + attempt)
        except InfeasibleDecompositionError:
            logger.debug("decomposition infeasible at resolution %d, doubling", n)
            n *= 2
    raise InfeasibleDecompositionError(f"decomposition failed up to sphere resolution {n // 2}")


def wave_vector_d3(a, b):
    """Unit ξ orthogonal to a and b (d >= 3); q̄ = 0 for the associated direction."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = a.shape[0]
    if d < 3:
        raise PreconditionError("wave_vector_d3 needs d >= 3")
    M = np.stack([a, b])
    _, s, vt = np.linalg.svd(M)
    rank = int(np.sum(s > 1e-12 * max(1.0, s[0])))
    null = vt[rank:]
    # the standard basis vector with the largest projection fixes the choice
    proj = null.T @ null
    k = int(np.argmax(np.linalg.norm(proj, axis=0)))
    xi = proj[:, k]
    xi = xi / np.linalg.norm(xi)
    first = int(np.argmax(np.abs(xi) > 1e-12))
    return -xi if xi[first] < 0 else xi


def _shrink_to_half_margin(w, direction, r, m0, hi, iters):
    """Largest t in [0, hi] with hull_margin(w ± t·direction) >= ½ m0; the margin is concave."""
    def ok(t):
        return min(hull_margin(w + direction * t, r), hull_margin(w - direction * t, r)) >= 0.5 * m0

    if ok(hi):
        return hi
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def admissible_segment(w, r, cfg=None):
    """Segment for d >= 3 built from the two dominant decomposition points."""
    cfg = cfg or SearchConfig()
    if w.d < 3:
        raise PreconditionError("admissible_segment needs d >= 3; use admissible_segment_2d")
    m0 = hull_margin(w, r)
    if m0 <= 0:
        raise PreconditionError(f"center must be interior to K_r^co (margin {m0:.3e})")
    dec = decompose_refining(w, r, cfg)
    if dec.count < 2:
        raise PreconditionError("interior state decomposed into a single point")
    lam = dec.weights
    i1 = int(np.argmax(lam))
    w1 = dec.points[i1]
    gaps = np.array([lam[i] * np.linalg.norm(p.v - w1.v) if i != i1 else -1.0
                     for i, p in enumerate(dec.points)])
    j = int(np.argmax(gaps))
    wj = dec.points[j]
    direction = (wj - w1) * (0.5 * lam[j])
    t = _shrink_to_half_margin(w, direction, r, m0, 1.0, cfg.bisection_iters)
    if t <= 0:
        raise HullTooThinError("no positive segment length keeps the half-margin rule")
    direction = direction * t
    xi = wave_vector_d3(w1.v, wj.v)
    ratio = float(np.linalg.norm(direction.v) / (r - w.v @ w.v))
    segment = AdmissibleSegment(w, direction, xi, 0.0, m0, float(r), ratio)
    segment.check()
    return segment


def _direction_state(row):
    return StatePoint(row[:2], np.array([[row[2], row[3]], [row[3], -row[2]]]))


def admissible_segment_2d(w, r, cfg=None, assume_relaxed=False):
    """
    Longest sampled Λ-segment through w whose endpoints lie one hull level
    lower (which puts the whole segment in the hull) and keep the half-margin rule.
    """
    cfg = cfg or SearchConfig()
    if w.d != 2:
        raise PreconditionError("admissible_segment_2d needs d = 2")
    hull = cfg.hull
    if not assume_relaxed and not in_relaxed(w, r, hull):
        raise PreconditionError("center is not in the relaxed set")
    m0 = hull_margin(w, r)
    point = np.array([w.v[0], w.v[1], w.U[0, 0], w.U[0, 1]])
    level = max(hull.depth - 1, 0)
    best = None
    for row in direction_set(hull.n_dirs, hull.rotation):
        D = row[:4]
        t_hi = min(_ray_extent(*point, float(r), *D), _ray_extent(*point, float(r), *(-D)))
        if t_hi <= 0 or (best is not None and t_hi <= best[0]):
            continue
        direction = _direction_state(D)
        t = _shrink_to_half_margin(w, direction, r, m0, t_hi, cfg.bisection_iters)
        for _ in range(cfg.max_halvings + 1):
            if t <= 0 or (best is not None and t <= best[0]):
                break
            ends = np.stack([point - t * D, point + t * D])
            if in_hull_batch(ends, float(r), hull, depth=level).all():
                best = (t, row)
                break
            t *= 0.5
    if best is None:
        raise HullTooThinError("hull too thin here: no sampled Λ-direction has a certified segment")
    t, row = best
    direction = _direction_state(row[:4]) * t
    xi = row[4:6] / np.linalg.norm(row[4:6])
    ratio = float(np.linalg.norm(direction.v) / (r - w.v @ w.v)) if r > w.v @ w.v else float("inf")
    segment = AdmissibleSegment(w, direction, xi, float(row[6] * t), m0, float(r), ratio)
    segment.check()
    return segment


def find_segment(w, r, cfg=None, assume_relaxed=False):
    """Dimension-appropriate admissible segment."""
    if w.d == 2:
        return admissible_segment_2d(w, r, cfg, assume_relaxed)
    return admissible_segment(w, r, cfg)


if __name__ == "__main__":
    a, b = np.eye(3)[0], np.eye(3)[1]
    center = (lift_to_K(a, 1.0) + lift_to_K(b, 1.0)) * 0.4
    seg = admissible_segment(center, 1.0)
    print("xi:", seg.wave_vector, "ratio:", seg.deficit_ratio, "margins:", seg.endpoint_margins())
