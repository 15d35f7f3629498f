# profiles.py
"""
Oscillation profiles and cutoffs for the localized plane waves.

The ladder h_0 ... h_6 is tabulated on s_i = i/m over one period:
h_0 is the mollified two-valued step (-μ2 on (0, μ1], μ1 on (μ1, 1]) and
every h_{k+1} is the zero-mean periodic primitive of h_k, so that
d^j h_k / ds^j = h_{k-j}.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import numba as nb
from scipy.interpolate import CubicSpline

from .errors import NumericalInvariantError, PreconditionError, ResolutionError

logger = logging.getLogger(__name__)

LADDER_DEPTH = 6
DEFAULT_TABLE_SIZE = 8192
MEAN_TOL = 1e-12
MOLLIFY_PASSES = 5


@nb.njit(cache=True)
def _cumulative_trapezoid(h, ds):
    n = h.shape[0]
    out = np.empty(n)
    out[0] = 0.0
    for i in range(1, n):
        out[i] = out[i - 1] + 0.5 * ds * (h[i - 1] + h[i])
    return out


def _step_cell_averages(mu1, mu2, m):
    # exact average of the step over [s_i - 1/2m, s_i + 1/2m]; zero mean up to rounding
    edges = (np.arange(m + 1) - 0.5) / m

    def primitive(s):
        # ∫_0^s h; periodic because the step has zero mean
        frac = np.mod(s, 1.0)
        return np.where(frac <= mu1, -mu2 * frac, -mu2 * mu1 + mu1 * (frac - mu1))

    return (primitive(edges[1:]) - primitive(edges[:-1])) * m


def _bump_kernel(width, m):
    s = np.fft.fftfreq(m, 1.0 / m) / m
    t = 2.0 * s / width
    kernel = np.zeros(m)
    inside = np.abs(t) < 1.0
    kernel[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    total = kernel.sum()
    if total <= 0:
        raise ResolutionError(f"mollifier width {width} is below the profile table spacing 1/{m}")
    return kernel / total


def _balance(h, mu1, mu2):
    """Rescale one sign of h so its mean vanishes; keeps -μ2 <= h <= μ1."""
    for _ in range(MOLLIFY_PASSES):
        h = np.clip(h, -mu2, mu1)
        pos = np.sum(np.maximum(h, 0.0))
        neg = -np.sum(np.minimum(h, 0.0))
        if pos == 0.0 or neg == 0.0:
            break
        if pos > neg:
            h = np.where(h > 0, h * (neg / pos), h)
        elif neg > pos:
            h = np.where(h < 0, h * (pos / neg), h)
        if abs(np.mean(h)) <= MEAN_TOL:
            break
    return h


@dataclass(frozen=True, eq=False)
class ProfileLadder:
    """Tabulated profiles h_0 ... h_6 with their step parameters."""
    mu1: float
    mu2: float
    delta: float
    table: np.ndarray
    _splines: dict = field(default_factory=dict, repr=False)

    @property
    def m(self):
        return self.table.shape[1]

    @property
    def nodes(self):
        return np.arange(self.m) / self.m

    def h(self, k):
        return self.table[k]

    def _spline(self, k):
        if k not in self._splines:
            s = np.append(self.nodes, 1.0)
            self._splines[k] = CubicSpline(s, np.append(self.table[k], self.table[k, 0]), bc_type="periodic")
        return self._splines[k]

    def evaluate(self, k, s):
        """h_k at arbitrary phases s (period 1)."""
        return self._spline(k)(np.mod(s, 1.0))

    def derivative_errors(self):
        """max |central difference of h_k - h_{k-1}| for k = 1..6."""
        m = self.m
        out = []
        for k in range(1, LADDER_DEPTH + 1):
            cd = (np.roll(self.table[k], -1) - np.roll(self.table[k], 1)) * (m / 2.0)
            out.append(float(np.max(np.abs(cd - self.table[k - 1]))))
        return out

    def check(self, tol=1e-12):
        """Raise NumericalInvariantError unless bounds, zero means and the sup-norm chain hold."""
        h0 = self.table[0]
        if h0.min() < -self.mu2 - tol or h0.max() > self.mu1 + tol:
            raise NumericalInvariantError("h_0 leaves [-mu2, mu1]")
        means = np.abs(self.table.mean(axis=1))
        if means.max() > tol:
            raise NumericalInvariantError(f"profile mean {means.max():.3e} exceeds {tol:.1e}")
        sup = np.abs(self.table).max(axis=1)
        if np.any(np.diff(sup) > tol):
            raise NumericalInvariantError("sup norms of the ladder are not non-increasing")
        return True


def build_profiles(mu1, mu2, delta, m=DEFAULT_TABLE_SIZE):
    if mu1 <= 0 or mu2 <= 0 or abs(mu1 + mu2 - 1.0) > 1e-12:
        raise PreconditionError(f"need mu1, mu2 > 0 with mu1 + mu2 = 1, got {mu1}, {mu2}")
    if not 0 < delta < min(mu1, mu2) / 2:
        raise PreconditionError(f"need 0 < delta < min(mu1, mu2)/2, got {delta}")
    if m < 256:
        raise PreconditionError(f"profile table needs m >= 256, got {m}")
    step = _step_cell_averages(mu1, mu2, m)
    kernel = _bump_kernel(delta / 4.0, m)
    h0 = np.real(np.fft.ifft(np.fft.fft(step) * np.fft.fft(kernel)))
    h0 = _balance(h0, mu1, mu2)
    table = np.empty((LADDER_DEPTH + 1, m))
    table[0] = h0
    for k in range(LADDER_DEPTH):
        prim = _cumulative_trapezoid(table[k], 1.0 / m)
        table[k + 1] = prim - prim.mean()
    ladder = ProfileLadder(float(mu1), float(mu2), float(delta), table)
    ladder.check()
    logger.debug("built profile ladder mu1=%.3f delta=%.3g m=%d", mu1, delta, m)
    return ladder


def smoothstep(t):
    """C^∞ transition: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        f0 = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        f1 = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return f0 / (f0 + f1)


def _ramp_axes(d, axes):
    if axes is None:
        return tuple(range(d))
    axes = tuple(sorted(set(int(i) for i in axes)))
    if any(i < 0 or i >= d for i in axes):
        raise PreconditionError(f"ramp axes {axes} out of range for d = {d}")
    return axes


def cutoff_ramp(lo, hi, delta, axes=None):
    """
    Ramp width ρ with vol(box) - vol(box shrunk by ρ along `axes`) = 0.9 δ.
    All axes ramp by default; the others keep the full box length.
    """
    lengths = np.asarray(hi, dtype=float) - np.asarray(lo, dtype=float)
    axes = _ramp_axes(lengths.size, axes)
    if not axes:
        raise PreconditionError("cutoff ramp needs at least one ramped axis")
    vol = float(np.prod(lengths))
    if not 0 < delta < vol:
        raise PreconditionError(f"cutoff delta must lie in (0, vol(box)={vol:.4g}), got {delta}")
    target = 0.9 * delta
    ramped = np.zeros(lengths.size, dtype=bool)
    ramped[list(axes)] = True
    a, b = 0.0, 0.5 * float(lengths[ramped].min())
    for _ in range(80):
        mid = 0.5 * (a + b)
        if vol - np.prod(np.where(ramped, lengths - 2 * mid, lengths)) < target:
            a = mid
        else:
            b = mid
    return a


def check_box(grid, lo, hi):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape != (grid.d,) or hi.shape != (grid.d,):
        raise PreconditionError("box corners must be d-vectors")
    if np.any(lo < -1e-12) or np.any(hi > 2 * np.pi + 1e-12) or np.any(hi <= lo):
        raise PreconditionError(f"box [{lo}, {hi}] must lie inside [0, 2π]^d")
    if np.any(hi - lo < 4 * np.asarray(grid.dx)):
        raise ResolutionError("box is narrower than four grid cells")
    return lo, hi


def box_block(grid, lo, hi):
    """Index slices of the nodes in the closed box and their local coordinates."""
    slices, coords = [], []
    for axis in range(grid.d):
        dx = grid.dx[axis]
        start = max(int(np.ceil(lo[axis] / dx - 1e-9)), 0)
        stop = min(int(np.floor(hi[axis] / dx + 1e-9)) + 1, grid.n[axis])
        slices.append(slice(start, stop))
        coords.append(np.arange(start, stop) * dx)
    return tuple(slices), tuple(np.meshgrid(*coords, indexing="ij"))


def cutoff_block(grid, lo, hi, rho, axes=None):
    """The bump restricted to the nodes of its box; returns (slices, coords, φ)."""
    slices, coords = box_block(grid, lo, hi)
    phi = np.ones(coords[0].shape)
    for axis in _ramp_axes(grid.d, axes):
        x = coords[axis]
        phi = phi * smoothstep((x - lo[axis]) / rho) * smoothstep((hi[axis] - x) / rho)
    return slices, coords, phi


def cutoff_bump(grid, lo, hi, delta, axes=None):
    """
    Tensor-product bump: 1 on the box shrunk by the ramp, 0 outside the box,
    smoothstep ramps in between. The box is [lo, hi] inside [0, 2π]^d; only
    the listed axes ramp, so a box spanning the torus along the others gives
    a slab.
    """
    lo, hi = check_box(grid, lo, hi)
    rho = cutoff_ramp(lo, hi, delta, axes)
    if rho <= 0:
        raise ResolutionError("cutoff ramp collapsed to zero width")
    phi = np.zeros(grid.shape)
    slices, _, block = cutoff_block(grid, lo, hi, rho, axes)
    phi[slices] = block
    return phi


def violation_volume(grid, phi, lo, hi):
    """Measure of {x in the open box : φ(x) != 1} by node counting."""
    inside = np.ones(grid.shape, dtype=bool)
    for axis, x in enumerate(grid.coordinates()):
        inside &= (x > lo[axis]) & (x < hi[axis])
    return float(np.count_nonzero(inside & (phi < 1.0)) * grid.cell_volume)


if __name__ == "__main__":
    ladder = build_profiles(0.5, 0.5, 0.05)
    print("sup norms:", np.abs(ladder.table).max(axis=1))
    print("h1(1/2) - h1(0):", ladder.table[1][ladder.m // 2] - ladder.table[1][0])
