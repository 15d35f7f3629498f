# state_algebra.py
"""
Pointwise geometry of the state space R^d x S_0^{dxd}.

A state is w = (v, U) with U symmetric and trace-free. The constraint set is

    K_r    = {(v, U) : U = v⊗v - (r/d) I}
    K_r^co = {(v, U) : v⊗v - U <= (r/d) I}        (its convex hull)

and the wave cone of the linear system div U + grad q = Bv, div v = 0 is

    Lambda = {(v̄, Ū), v̄ != 0 : Ū ξ + q̄ ξ = 0 and v̄·ξ = 0 for some ξ != 0, q̄}.

Membership in K_r^co is decided through the eigenvalue gap
hull_margin(w, r) = r/d - λ_max(v⊗v - U).
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import PreconditionError

logger = logging.getLogger(__name__)

TAU_SYM = 1e-12
TAU_TR = 1e-12
MEMBERSHIP_TOL = 1e-9
CONE_TOL = 1e-9


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by the whole pipeline (natural units)."""
    sym: float = TAU_SYM
    trace: float = TAU_TR
    membership: float = MEMBERSHIP_TOL
    cone: float = CONE_TOL
    residual_gate: float = 1e-6
    residual_abort: float = 1e-6
    mean: float = 1e-10
    deficit_floor: float = 1e-6

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not np.isfinite(value) or value <= 0:
                raise PreconditionError(f"tolerance '{name}' must be positive and finite, got {value}")


def _as_matrix(U, d):
    U = np.asarray(U, dtype=float)
    if U.shape != (d, d):
        raise PreconditionError(f"U must have shape {(d, d)}, got {U.shape}")
    return U


@dataclass(frozen=True, eq=False)
class StatePoint:
    """
    One point w = (v, U) of the state space, optionally carrying the
    pressure-like scalar q.
    """
    v: np.ndarray
    U: np.ndarray
    q: Optional[float] = None

    def __post_init__(self):
        v = np.array(self.v, dtype=float).reshape(-1)
        d = v.shape[0]
        if d < 2:
            raise PreconditionError(f"state dimension must be >= 2, got {d}")
        U = _as_matrix(self.U, d).copy()
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(U))):
            raise PreconditionError("state entries must be finite")
        scale = max(1.0, float(np.max(np.abs(U))))
        if np.max(np.abs(U - U.T)) > TAU_SYM * scale:
            raise PreconditionError("U is not symmetric")
        if abs(np.trace(U)) > TAU_TR * scale * d:
            raise PreconditionError(f"U is not trace-free (trace {np.trace(U):.3e})")
        v.setflags(write=False)
        U.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "U", U)
        if self.q is not None:
            object.__setattr__(self, "q", float(self.q))

    @classmethod
    def zero(cls, d):
        return cls(np.zeros(d), np.zeros((d, d)))

    @property
    def d(self):
        return self.v.shape[0]

    @property
    def d_star(self):
        """Dimension of S_0^{dxd}: d(d+1)/2 - 1."""
        return self.d * (self.d + 1) // 2 - 1

    def as_vector(self):
        """Concatenation (v, U.ravel()) used for Euclidean distances in state space."""
        return np.concatenate([self.v, self.U.ravel()])

    def norm(self):
        return float(np.linalg.norm(self.as_vector()))

    def _combine_q(self, other, sign):
        # an absent q reads as zero unless both sides lack it
        if self.q is None and other.q is None:
            return None
        return (self.q or 0.0) + sign * (other.q or 0.0)

    def __add__(self, other):
        return StatePoint(self.v + other.v, self.U + other.U, self._combine_q(other, 1.0))

    def __sub__(self, other):
        return StatePoint(self.v - other.v, self.U - other.U, self._combine_q(other, -1.0))

    def __neg__(self):
        return StatePoint(-self.v, -self.U, None if self.q is None else -self.q)

    def __mul__(self, scalar):
        q = None if self.q is None else self.q * scalar
        return StatePoint(self.v * scalar, self.U * scalar, q)

    __rmul__ = __mul__

    def __repr__(self):
        return f"StatePoint(v={self.v.tolist()}, U={self.U.tolist()}, q={self.q})"


@dataclass(frozen=True, eq=False)
class SourceMatrix:
    """Constant matrix B of the source term Bv (units 1/time)."""
    B: np.ndarray

    def __post_init__(self):
        B = np.array(self.B, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise PreconditionError(f"B must be square, got shape {B.shape}")
        if not np.all(np.isfinite(B)):
            raise PreconditionError("B must have finite entries")
        B.setflags(write=False)
        object.__setattr__(self, "B", B)

    @classmethod
    def zero(cls, d):
        return cls(np.zeros((d, d)))

    @classmethod
    def from_row_major(cls, entries, d):
        entries = np.asarray(entries, dtype=float).reshape(-1)
        if entries.size != d * d:
            raise PreconditionError(f"B needs {d * d} entries, got {entries.size}")
        return cls(entries.reshape(d, d))

    @property
    def d(self):
        return self.B.shape[0]

    def apply(self, v):
        """B applied node-wise to a vector field with trailing component axis."""
        return np.einsum("ij,...j->...i", self.B, v)

    def norm(self):
        return float(np.linalg.norm(self.B, 2))


@dataclass(frozen=True, eq=False)
class EnergyProfile:
    """
    Prescribed energy density e(x) >= 0 (units velocity^2), either a
    closed-form function of the node coordinates or grid samples.
    `support` is the declared open box (lo, hi) of the compact mode.
    """
    name: str
    func: Optional[Callable] = None
    values: Optional[np.ndarray] = None
    support: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        if (self.func is None) == (self.values is None):
            raise PreconditionError("energy profile needs exactly one of func or values")

    @property
    def kind(self):
        return "closed-form" if self.func is not None else "grid"

    def sample(self, grid):
        if self.values is not None:
            values = np.asarray(self.values, dtype=float)
            if values.shape != tuple(grid.shape):
                raise PreconditionError(f"energy samples {values.shape} do not match grid {grid.shape}")
        else:
            values = np.broadcast_to(np.asarray(self.func(grid.coordinates()), dtype=float), grid.shape).copy()
        if not np.all(np.isfinite(values)) or values.min() < 0:
            raise PreconditionError(f"energy '{self.name}' must be finite and non-negative")
        return values


@dataclass(frozen=True, eq=False)
class ComplexState:
    """d = 2 coordinates: z = a + ib from v = (a, b), ζ = c + id from U = [[c, d], [d, -c]]."""
    z: complex
    zeta: complex

    def to_state(self):
        a, b = self.z.real, self.z.imag
        c, d = self.zeta.real, self.zeta.imag
        return StatePoint(np.array([a, b]), np.array([[c, d], [d, -c]]))

    @classmethod
    def from_state(cls, w):
        if w.d != 2:
            raise PreconditionError("complex coordinates exist only for d = 2")
        return cls(complex(w.v[0], w.v[1]), complex(w.U[0, 0], w.U[0, 1]))

    def in_L(self, tol=MEMBERSHIP_TOL):
        """Membership in the subspace L = {Im ζ = 0}."""
        return abs(self.zeta.imag) <= tol


def to_complex(w):
    return ComplexState.from_state(w)


def from_complex(z, zeta):
    return ComplexState(complex(z), complex(zeta)).to_state()


def rotate_state(w, theta):
    """R_θ(z, ζ) = (z e^{iθ}, ζ e^{2iθ}); equivalently v -> Rv, U -> R U R^T."""
    if w.d != 2:
        raise PreconditionError("rotate_state is defined for d = 2")
    c, s = np.cos(theta), np.sin(theta)
    R = np.array([[c, -s], [s, c]])
    return StatePoint(R @ w.v, R @ w.U @ R.T, w.q)


def conjugate_state(w):
    """(z, ζ) -> (z̄, ζ̄), the reflection x2 -> -x2."""
    if w.d != 2:
        raise PreconditionError("conjugate_state is defined for d = 2")
    S = np.diag([1.0, -1.0])
    return StatePoint(S @ w.v, S @ w.U @ S, w.q)


def state_norm(w):
    """Euclidean norm of (v, U), Frobenius on U."""
    return w.norm()


def sym0_project(M):
    """Projection onto symmetric trace-free matrices; works on stacks (..., d, d)."""
    M = np.asarray(M, dtype=float)
    d = M.shape[-1]
    S = 0.5 * (M + np.swapaxes(M, -1, -2))
    tr = np.trace(S, axis1=-2, axis2=-1)
    return S - (tr / d)[..., None, None] * np.eye(d)


def _require_positive(r):
    if not np.isfinite(r) or r <= 0:
        raise PreconditionError(f"r must be positive, got {r}")


def lift_to_K(v, r):
    """(v, v⊗v - (r/d) I); lies on K_r exactly when |v|^2 = r."""
    _require_positive(r)
    v = np.asarray(v, dtype=float).reshape(-1)
    d = v.shape[0]
    return StatePoint(v, np.outer(v, v) - (r / d) * np.eye(d))


def in_K(w, r, tol=MEMBERSHIP_TOL):
    _require_positive(r)
    if abs(float(w.v @ w.v) - r) > tol:
        return False
    target = np.outer(w.v, w.v) - (r / w.d) * np.eye(w.d)
    return bool(np.linalg.norm(w.U - target) <= tol)


def hull_margin(w, r):
    """
    r/d - λ_max(v⊗v - U). Positive inside K_r^co, zero on its boundary,
    negative outside.
    """
    _require_positive(r)
    M = np.outer(w.v, w.v) - w.U
    return float(r / w.d - np.linalg.eigvalsh(0.5 * (M + M.T))[-1])


def hull_margin_field(v, U, r):
    """
    Node-wise hull margin for a vector field v (..., d) and matrix field
    U (..., d, d); r may be a scalar or a field. Nodes with r <= 0 get the
    margin of the degenerate set K_0 = {0} (i.e. -λ_max).
    """
    v = np.asarray(v, dtype=float)
    U = np.asarray(U, dtype=float)
    d = v.shape[-1]
    r = np.asarray(r, dtype=float)
    M = v[..., :, None] * v[..., None, :] - U
    if d == 2:
        m11, m22, m12 = M[..., 0, 0], M[..., 1, 1], 0.5 * (M[..., 0, 1] + M[..., 1, 0])
        lam_max = 0.5 * (m11 + m22) + np.sqrt(0.25 * (m11 - m22) ** 2 + m12 ** 2)
    else:
        lam_max = np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, -1, -2)))[..., -1]
    return np.maximum(r, 0.0) / d - lam_max


def energy_deficit(w, r):
    """r - |v|^2, the surrogate for the distance from w to K_r."""
    return float(r - w.v @ w.v)


def _eigen_clusters(eigvals, tol):
    clusters = [[0]]
    for i in range(1, len(eigvals)):
        if abs(eigvals[i] - eigvals[clusters[-1][0]]) <= tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters


def in_wave_cone(w_bar, tol=CONE_TOL) -> Optional[Tuple[np.ndarray, float]]:
    """
    Return (ξ, q̄) with |ξ| = 1, Ū ξ + q̄ ξ = 0 and |v̄·ξ| <= tol, or None.

    Eigenspaces of Ū of dimension >= 2 always contain a vector orthogonal
    to v̄; for simple eigenvalues the eigenvector minimising |v̄·ξ| is taken.
    """
    v_bar = w_bar.v
    if np.linalg.norm(v_bar) <= tol:
        raise PreconditionError("wave-cone directions need v̄ != 0")
    U_bar = 0.5 * (w_bar.U + w_bar.U.T)
    eigvals, eigvecs = np.linalg.eigh(U_bar)
    scale = max(1.0, float(np.max(np.abs(eigvals))))
    best = None
    for cluster in _eigen_clusters(eigvals, tol * scale):
        E = eigvecs[:, cluster]
        if len(cluster) == 1:
            xi = E[:, 0]
        else:
            # vector of the eigenspace orthogonal to v̄
            _, _, vt = np.linalg.svd((v_bar @ E)[None, :])
            xi = E @ vt[-1]
        xi = xi / np.linalg.norm(xi)
        residual = abs(float(v_bar @ xi))
        q_bar = -float(np.mean(eigvals[cluster]))
        if best is None or residual < best[0]:
            best = (residual, xi, q_bar)
    residual, xi, q_bar = best
    if residual > tol:
        return None
    # fix the sign for reproducibility: first nonzero entry positive
    k = int(np.argmax(np.abs(xi) > 1e-12))
    if xi[k] < 0:
        xi = -xi
    return xi, q_bar


def cone_residuals(w_bar, xi, q_bar):
    """(|Ū ξ + q̄ ξ|, |v̄·ξ|) for an asserted wave-cone pair."""
    return (float(np.linalg.norm(w_bar.U @ xi + q_bar * xi)), abs(float(w_bar.v @ xi)))


def in_relaxed(w, r, cfg=None):
    """
    Membership in the relaxed set U_r: the interior of K_r^co for d >= 3,
    the (finite-depth) lamination hull of the rotated set V_r for d = 2.
    """
    _require_positive(r)
    if w.d >= 3:
        return hull_margin(w, r) > 0
    from .lamination_hull import HullConfig, in_lamination_hull
    cfg = cfg or HullConfig()
    return in_lamination_hull(w, r, cfg.depth, cfg.n_dirs, cfg.n_samples)


def relaxed_mask(v, U, r, cfg=None, depth=None):
    """
    Node-wise in_relaxed for fields v (..., d), U (..., d, d) and energy r
    (scalar or field). Nodes with r <= 0 are reported as not in the set.
    """
    v = np.asarray(v, dtype=float)
    U = np.asarray(U, dtype=float)
    d = v.shape[-1]
    r = np.broadcast_to(np.asarray(r, dtype=float), v.shape[:-1])
    margin = hull_margin_field(v, U, r)
    inside = (margin > 0) & (r > 0)
    if d >= 3:
        return inside
    from .lamination_hull import HullConfig, in_hull_batch
    cfg = cfg or HullConfig()
    depth = cfg.node_depth if depth is None else depth
    mask = np.zeros(v.shape[:-1], dtype=bool)
    idx = np.nonzero(inside)
    if idx[0].size == 0:
        return mask
    points = np.stack([v[idx][:, 0], v[idx][:, 1], U[idx][:, 0, 0], U[idx][:, 0, 1], r[idx]], axis=1)
    unique, inverse = np.unique(points, axis=0, return_inverse=True)
    member = in_hull_batch(unique[:, :4], unique[:, 4], cfg, depth=depth)
    mask[idx] = member[inverse.reshape(-1)]
    return mask


def linf_bounds_ok(v, U, e_bar, tol=MEMBERSHIP_TOL):
    """
    A-priori bounds of the relaxed class: |v|^2 <= ē and λ_min(U) >= -ē/d
    at every node.
    """
    v = np.asarray(v, dtype=float)
    U = np.asarray(U, dtype=float)
    d = v.shape[-1]
    speed2 = np.sum(v * v, axis=-1)
    lam_min = np.linalg.eigvalsh(0.5 * (U + np.swapaxes(U, -1, -2)))[..., 0]
    return bool(np.all(speed2 <= e_bar + tol) and np.all(lam_min >= -e_bar / d - tol))


if __name__ == "__main__":
    w = lift_to_K([1.0, 0.0], 1.0)
    print("lift:", w)
    print("in_K:", in_K(w, 1.0), "margin:", hull_margin(w, 1.0))
    print("cone:", in_wave_cone(from_complex(1.0, 0.5)))
