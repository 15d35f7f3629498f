# lamination_hull.py
"""
Finite-depth lamination hull for d = 2.

States are handled in the coordinates (a, b, c, d) with z = a + ib and
ζ = c + id. The base set is the rotated set

    V_r = {(z e^{iθ}, c e^{2iθ}) : f_r(z, c) < 1, 0 < |c| < r/2}

and level i+1 adds every point of a Λ-segment whose two endpoints are in
level i. A Λ-direction with v̄ != 0 is parametrised by two angles,

    D(α, β) = (cos β e^{iα}, sin β e^{2iα}),   ξ = (-sin α, cos α),  q̄ = sin β,

so that Im(z^2 ζ̄) = 0 holds exactly. Directions come from a Halton prefix
and sample offsets from a van der Corput prefix; both are nested in their
length, so membership is monotone in depth, n_dirs and n_samples.
"""
import logging
from dataclasses import dataclass

import numpy as np
import numba as nb

from .errors import PreconditionError
from .state_algebra import StatePoint, hull_margin

logger = logging.getLogger(__name__)

_EXTENT_ITERS = 48
_EXTENT_CAP = 1e6


@dataclass(frozen=True)
class HullConfig:
    depth: int = 2
    n_dirs: int = 64
    n_samples: int = 32
    node_depth: int = 1
    rotation: float = 0.0

    def __post_init__(self):
        if self.depth < 0 or self.node_depth < 0:
            raise PreconditionError("hull depth must be non-negative")
        if self.n_dirs < 1 or self.n_samples < 1:
            raise PreconditionError("n_dirs and n_samples must be positive")


def f_r(z, c, r):
    """√r|a|/(r/2 + c) + √r|b|/(r/2 - c) for z = a + ib."""
    if abs(c) >= r / 2:
        raise PreconditionError(f"f_r needs |c| < r/2, got c={c}, r={r}")
    z = complex(z)
    sr = np.sqrt(r)
    return float(sr * abs(z.real) / (r / 2 + c) + sr * abs(z.imag) / (r / 2 - c))


def cone_indicator(w):
    """Im(z^2 ζ̄); zero exactly on the d = 2 wave cone."""
    z = complex(w.v[0], w.v[1])
    zeta = complex(w.U[0, 0], w.U[0, 1])
    return float((z * z * zeta.conjugate()).imag)


def _radical_inverse(i, base):
    result, f = 0.0, 1.0 / base
    while i > 0:
        result += f * (i % base)
        i //= base
        f /= base
    return result


def direction_set(n_dirs, rotation=0.0):
    """
    Rows (da, db, dc, dd, ξ1, ξ2, q̄) for the first n_dirs Halton points.
    The (a, b, c, d) part has unit Euclidean norm.
    """
    out = np.empty((n_dirs, 7))
    for i in range(n_dirs):
        alpha = np.pi * _radical_inverse(i + 1, 2) + rotation
        beta = np.pi * (_radical_inverse(i + 1, 3) - 0.5)
        cb, sb = np.cos(beta), np.sin(beta)
        out[i] = (cb * np.cos(alpha), cb * np.sin(alpha),
                  sb * np.cos(2 * alpha), sb * np.sin(2 * alpha),
                  -np.sin(alpha), np.cos(alpha), sb)
    return out


def sample_offsets(n_samples):
    """Fractions u^2 of the ray extent, u from the van der Corput sequence."""
    u = np.array([_radical_inverse(i + 1, 2) for i in range(n_samples)])
    return u * u


@nb.njit(cache=True)
def _margin2(a, b, c, d, r):
    m11 = a * a - c
    m22 = b * b + c
    m12 = a * b - d
    half = 0.5 * (m11 - m22)
    return 0.5 * r - (0.5 * (m11 + m22) + np.sqrt(half * half + m12 * m12))


@nb.njit(cache=True)
def _in_base(a, b, c, d, r):
    rho = np.sqrt(c * c + d * d)
    if rho <= 0.0 or rho >= 0.5 * r:
        return False
    sr = np.sqrt(r)
    theta0 = 0.5 * np.arctan2(d, c)
    for k in range(2):
        theta = theta0 + 0.5 * np.pi * k
        ct = np.cos(theta)
        st = np.sin(theta)
        ar = a * ct + b * st
        br = -a * st + b * ct
        cr = rho if k == 0 else -rho
        f = sr * abs(ar) / (0.5 * r + cr) + sr * abs(br) / (0.5 * r - cr)
        if f < 1.0:
            return True
    return False


@nb.njit(cache=True)
def _ray_extent(a, b, c, d, r, da, db, dc, dd):
    # largest s >= 0 with w + s D inside K_r^co; the margin is concave along rays
    if _margin2(a, b, c, d, r) < 0.0:
        return 0.0
    lo = 0.0
    hi = np.sqrt(r)
    while _margin2(a + hi * da, b + hi * db, c + hi * dc, d + hi * dd, r) >= 0.0:
        lo = hi
        hi *= 2.0
        if hi > _EXTENT_CAP:
            return lo
    for _ in range(_EXTENT_ITERS):
        mid = 0.5 * (lo + hi)
        if _margin2(a + mid * da, b + mid * db, c + mid * dc, d + mid * dd, r) >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


@nb.njit(cache=True)
def _depth1_batch(points, r, dirs, offsets):
    n = points.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    for p in range(n):
        a, b, c, d = points[p, 0], points[p, 1], points[p, 2], points[p, 3]
        rp = r[p]
        if _in_base(a, b, c, d, rp):
            out[p] = True
            continue
        if _margin2(a, b, c, d, rp) <= 0.0:
            continue
        for j in range(dirs.shape[0]):
            found_pos = False
            found_neg = False
            for sign in (1.0, -1.0):
                da, db = sign * dirs[j, 0], sign * dirs[j, 1]
                dc, dd = sign * dirs[j, 2], sign * dirs[j, 3]
                t_max = _ray_extent(a, b, c, d, rp, da, db, dc, dd)
                if t_max <= 0.0:
                    break
                for k in range(offsets.shape[0]):
                    s = t_max * offsets[k]
                    if _in_base(a + s * da, b + s * db, c + s * dc, d + s * dd, rp):
                        if sign > 0:
                            found_pos = True
                        else:
                            found_neg = True
                        break
                if sign > 0 and not found_pos:
                    break
            if found_pos and found_neg:
                out[p] = True
                break
    return out


def _ray_points(point, r, direction, offsets):
    t_max = _ray_extent(point[0], point[1], point[2], point[3], r, *direction)
    if t_max <= 0.0:
        return None
    return point[None, :] + (t_max * offsets)[:, None] * np.asarray(direction)[None, :]


def _member(points, r, depth, dirs, offsets):
    """Membership of a stack of (a, b, c, d) rows sharing the energy r."""
    rr = np.full(points.shape[0], float(r))
    if depth == 0:
        return np.array([_in_base(p[0], p[1], p[2], p[3], r) for p in points], dtype=bool)
    if depth == 1:
        return _depth1_batch(np.ascontiguousarray(points), rr, dirs, offsets)
    return np.array([_member_point(p, r, depth, dirs, offsets) for p in points], dtype=bool)


def _member_point(point, r, depth, dirs, offsets):
    if _member(point[None, :], r, depth - 1, dirs, offsets)[0]:
        return True
    if _margin2(point[0], point[1], point[2], point[3], r) <= 0.0:
        return False
    for row in dirs:
        direction = row[:4]
        pos = _ray_points(point, r, direction, offsets)
        if pos is None or not _member(pos, r, depth - 1, dirs, offsets).any():
            continue
        neg = _ray_points(point, r, -direction, offsets)
        if neg is not None and _member(neg, r, depth - 1, dirs, offsets).any():
            return True
    return False


def _as_row(w):
    return np.array([w.v[0], w.v[1], w.U[0, 0], w.U[0, 1]])


def in_base_set(w, r):
    """Membership in the rotated base set V_r (level 0 of the hull)."""
    if w.d != 2:
        raise PreconditionError("the lamination hull is defined for d = 2")
    return bool(_in_base(w.v[0], w.v[1], w.U[0, 0], w.U[0, 1], float(r)))


def in_lamination_hull(w: StatePoint, r, depth=2, n_dirs=64, n_samples=32, rotation=0.0):
    """
    True if w is certified in level `depth` of the lamination hull of V_r
    using the first n_dirs directions and n_samples offsets per ray.
    """
    if w.d != 2:
        raise PreconditionError("the lamination hull is defined for d = 2")
    if depth < 0:
        raise PreconditionError("depth must be non-negative")
    if r <= 0 or hull_margin(w, r) <= 0:
        return False
    dirs = direction_set(n_dirs, rotation)
    offsets = sample_offsets(n_samples)
    return bool(_member(_as_row(w)[None, :], float(r), depth, dirs, offsets)[0])


def in_hull_batch(points, r, cfg=None, depth=None):
    """
    Vectorised membership for rows (a, b, c, d) with per-row energies r.
    Rows with r <= 0 are reported as outside.
    """
    cfg = cfg or HullConfig()
    depth = cfg.depth if depth is None else depth
    points = np.ascontiguousarray(points, dtype=float).reshape(-1, 4)
    r = np.broadcast_to(np.asarray(r, dtype=float), (points.shape[0],)).copy()
    valid = r > 0
    out = np.zeros(points.shape[0], dtype=bool)
    if not valid.any():
        return out
    dirs = direction_set(cfg.n_dirs, cfg.rotation)
    offsets = sample_offsets(cfg.n_samples)
    if depth == 1:
        out[valid] = _depth1_batch(points[valid], r[valid], dirs, offsets)
        return out
    for i in np.nonzero(valid)[0]:
        out[i] = _member(points[i:i + 1], r[i], depth, dirs, offsets)[0]
    return out


if __name__ == "__main__":
    origin = StatePoint.zero(2)
    for depth in range(3):
        print(f"origin in level {depth}:", in_lamination_hull(origin, 1.0, depth=depth))
