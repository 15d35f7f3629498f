# spectral.py
"""
Periodic-torus calculus on [0, 2π)^d with Fourier multipliers.

Fields are plain numpy arrays laid out component-last:

    scalar  (n_1, ..., n_d)
    vector  (n_1, ..., n_d, d)
    matrix  (n_1, ..., n_d, d, d)

Derivatives use integer wavenumbers with the Nyquist entry set to zero
(even grids), so grad, div and laplacian are mutually consistent and map
real fields to real fields.
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import MeanObstructionError, PreconditionError

logger = logging.getLogger(__name__)

MAX_POINTS = 1 << 24
MEAN_TOL = 1e-10
NYQUIST_WARN = 1e-10


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid of the torus with period 2π on every axis."""
    d: int
    n: tuple
    max_points: int = MAX_POINTS

    def __post_init__(self):
        n = self.n
        if np.isscalar(n):
            n = (int(n),) * self.d
        n = tuple(int(x) for x in n)
        if self.d < 2 or len(n) != self.d:
            raise PreconditionError(f"grid needs d >= 2 sizes, got d={self.d}, n={n}")
        if any(x < 8 or x % 2 for x in n):
            raise PreconditionError(f"grid sizes must be even and >= 8, got {n}")
        if int(np.prod(n)) > self.max_points:
            raise PreconditionError(f"grid {n} exceeds the memory budget of {self.max_points} points")
        object.__setattr__(self, "n", n)

    @property
    def shape(self):
        return self.n

    @property
    def size(self):
        return int(np.prod(self.n))

    @property
    def axes(self):
        return tuple(range(self.d))

    @property
    def dx(self):
        return tuple(2 * np.pi / x for x in self.n)

    @property
    def cell_volume(self):
        return float(np.prod(self.dx))

    @property
    def volume(self):
        return (2 * np.pi) ** self.d

    def coordinates(self):
        """Node coordinates as a tuple of d broadcast arrays (ij indexing)."""
        return tuple(np.meshgrid(*[np.arange(x) * (2 * np.pi / x) for x in self.n], indexing="ij"))

    @cached_property
    def wavenumbers(self):
        """(n..., d) integer wavenumbers used for derivatives; Nyquist set to zero."""
        ks = []
        for x in self.n:
            k = np.fft.fftfreq(x, 1.0 / x)
            k[x // 2] = 0.0
            ks.append(k)
        return np.stack(np.meshgrid(*ks, indexing="ij"), axis=-1)

    @cached_property
    def full_wavenumbers(self):
        """(n..., d) integer wavenumbers including the Nyquist entry."""
        ks = [np.abs(np.fft.fftfreq(x, 1.0 / x)) for x in self.n]
        return np.stack(np.meshgrid(*ks, indexing="ij"), axis=-1)

    @cached_property
    def k_squared(self):
        return np.sum(self.wavenumbers ** 2, axis=-1)

    @cached_property
    def nyquist_only(self):
        """Nonzero modes whose derivative wavenumber vanishes (pure-Nyquist modes)."""
        full2 = np.sum(self.full_wavenumbers ** 2, axis=-1)
        return (self.k_squared == 0) & (full2 > 0)


def rank_of(grid, f):
    """0 for scalar, 1 for vector, 2 for matrix fields on the grid."""
    f = np.asarray(f)
    if f.shape[:grid.d] != grid.shape:
        raise PreconditionError(f"field shape {f.shape} does not match grid {grid.shape}")
    rank = f.ndim - grid.d
    if rank > 2 or any(s != grid.d for s in f.shape[grid.d:]):
        raise PreconditionError(f"unsupported field shape {f.shape}")
    return rank


def _fft(grid, f):
    return np.fft.fftn(f, axes=grid.axes)


def _ifft(grid, f_hat):
    return np.real(np.fft.ifftn(f_hat, axes=grid.axes))


def grad(grid, f):
    """Scalar -> vector; vector -> matrix with [..., i, j] = ∂_j f_i."""
    rank = rank_of(grid, f)
    if rank > 1:
        raise PreconditionError("grad takes a scalar or vector field")
    k = grid.wavenumbers
    f_hat = _fft(grid, f)
    if rank == 0:
        return _ifft(grid, 1j * k * f_hat[..., None])
    return _ifft(grid, 1j * f_hat[..., :, None] * k[..., None, :])


def div(grid, f):
    """Vector -> scalar; matrix -> vector with (div U)_i = Σ_j ∂_j U_ij."""
    rank = rank_of(grid, f)
    if rank == 0:
        raise PreconditionError("div takes a vector or matrix field")
    k = grid.wavenumbers
    f_hat = _fft(grid, f)
    if rank == 1:
        return _ifft(grid, 1j * np.sum(k * f_hat, axis=-1))
    return _ifft(grid, 1j * np.einsum("...ij,...j->...i", f_hat, k))


def div_div(grid, U):
    """Σ_ij ∂_i ∂_j U_ij."""
    return div(grid, div(grid, U))


def laplacian(grid, f):
    rank_of(grid, f)
    f_hat = _fft(grid, f)
    mult = -grid.k_squared.reshape(grid.shape + (1,) * (np.ndim(f) - grid.d))
    return _ifft(grid, mult * f_hat)


def mean_field(grid, f):
    """Torus average; a scalar, d-vector or d×d matrix."""
    rank_of(grid, f)
    return np.mean(f, axis=grid.axes)


def _check_mean(grid, f, tol):
    scale = float(np.max(np.abs(f))) if np.size(f) else 0.0
    if scale == 0.0:
        return
    mean = np.max(np.abs(mean_field(grid, f)))
    if mean > tol * scale:
        raise MeanObstructionError(
            f"mean obstruction: input mean {mean:.3e} exceeds {tol:.1e} x sup {scale:.3e}; "
            "no periodic inverse exists"
        )


def _drop_nyquist(grid, f_hat, what):
    mask = grid.nyquist_only
    if not mask.any():
        return
    lost = np.max(np.abs(f_hat[mask])) / grid.size
    if lost > NYQUIST_WARN:
        logger.warning("%s: dropping pure-Nyquist content of size %.3e", what, lost)


def inv_laplacian(grid, f, check_mean=True, mean_tol=MEAN_TOL):
    """
    Zero-mean u with laplacian(u) = f. With check_mean=False the mean of f
    is discarded instead of rejected (for inputs that are exact derivatives).
    """
    rank_of(grid, f)
    if check_mean:
        _check_mean(grid, f, mean_tol)
    f_hat = _fft(grid, f)
    extra = (1,) * (np.ndim(f) - grid.d)
    k2 = grid.k_squared.reshape(grid.shape + extra)
    _drop_nyquist(grid, f_hat, "inv_laplacian")
    with np.errstate(divide="ignore", invalid="ignore"):
        u_hat = np.where(k2 > 0, -f_hat / np.where(k2 > 0, k2, 1.0), 0.0)
    return _ifft(grid, u_hat)


def leray_correct(grid, v):
    """v'' = -∇Δ⁻¹∇·v', so that v' + v'' is divergence-free and v'' has zero mean."""
    if rank_of(grid, v) != 1:
        raise PreconditionError("leray_correct takes a vector field")
    k = grid.wavenumbers
    k2 = grid.k_squared
    v_hat = _fft(grid, v)
    kv = np.sum(k * v_hat, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(k2 > 0, kv / np.where(k2 > 0, k2, 1.0), 0.0)
    return _ifft(grid, -k * coef[..., None])


def leray_project(grid, v):
    return v + leray_correct(grid, v)


def anti_divergence(grid, f, check_mean=True, mean_tol=MEAN_TOL):
    """
    Symmetric trace-free R[f] with div R[f] = f.

    Each mode k != 0 solves Û k = -i f̂ over trace-free symmetric matrices
    by its minimal Frobenius-norm solution

        s = d (g·k) / ((d-1)|k|^2),   μ = (2/|k|^2)(g - k s (d-2)/(2d)),
        Û = sym(μ kᵀ) - (s/d) I,      g = -i f̂.
    """
    if rank_of(grid, f) != 1:
        raise PreconditionError("anti_divergence takes a vector field")
    if check_mean:
        _check_mean(grid, f, mean_tol)
    d = grid.d
    k = grid.wavenumbers
    k2 = grid.k_squared
    g = -1j * _fft(grid, f)
    _drop_nyquist(grid, g, "anti_divergence")
    safe = np.where(k2 > 0, k2, 1.0)
    gk = np.sum(g * k, axis=-1)
    s = np.where(k2 > 0, d * gk / ((d - 1) * safe), 0.0)
    mu = np.where((k2 > 0)[..., None], (2.0 / safe)[..., None] * (g - k * (s * (d - 2) / (2 * d))[..., None]), 0.0)
    outer = mu[..., :, None] * k[..., None, :]
    U_hat = 0.5 * (outer + np.swapaxes(outer, -1, -2)) - (s / d)[..., None, None] * np.eye(d)
    U = _ifft(grid, U_hat)
    # exact symmetry and trace removal against rounding
    U = 0.5 * (U + np.swapaxes(U, -1, -2))
    return U - (np.trace(U, axis1=-2, axis2=-1) / d)[..., None, None] * np.eye(d)


def l2_norm(grid, f):
    """Root-mean-square over the torus (all components)."""
    rank_of(grid, f)
    f = np.asarray(f, dtype=float)
    return float(np.sqrt(np.sum(f * f) / grid.size))


def integrate(grid, f):
    rank_of(grid, f)
    return np.sum(f, axis=grid.axes) * grid.cell_volume


def pair(grid, f, g):
    """∫ f·g over the torus (full contraction of components)."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise PreconditionError(f"pairing needs equal shapes, got {f.shape} and {g.shape}")
    rank_of(grid, f)
    return float(np.sum(f * g) * grid.cell_volume)


def hminus1_distance(grid, v, v0):
    """sqrt(Σ_k |ĉ(k)|^2 / (1 + |k|^2)) with ĉ the normalised Fourier coefficients of v - v0."""
    diff = np.asarray(v, dtype=float) - np.asarray(v0, dtype=float)
    rank = rank_of(grid, diff)
    c_hat = _fft(grid, diff) / grid.size
    k2 = np.sum(grid.full_wavenumbers ** 2, axis=-1).reshape(grid.shape + (1,) * rank)
    return float(np.sqrt(np.sum(np.abs(c_hat) ** 2 / (1.0 + k2))))


def pressure_from_state(grid, v, U, B):
    """Zero-mean q with Δq = div(Bv) - div div U."""
    rhs = div(grid, B.apply(v)) - div_div(grid, U)
    return inv_laplacian(grid, rhs, check_mean=False)


def random_band_limited(grid, rng, kmax=4, components=()):
    """
    Seeded random real field with Fourier support in |k_i| <= kmax, zero
    mean and unit RMS. `components` is the trailing shape, e.g. (d,).
    """
    components = tuple(components)
    band = np.all(np.abs(grid.full_wavenumbers) <= kmax, axis=-1)
    band &= ~grid.nyquist_only
    shape = grid.shape + components
    coef = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    coef *= band.reshape(grid.shape + (1,) * len(components))
    f = _ifft(grid, coef)
    f -= np.mean(f, axis=grid.axes)
    norm = l2_norm(grid, f)
    return f / norm if norm > 0 else f


if __name__ == "__main__":
    grid = TorusGrid(2, 32)
    x1, x2 = grid.coordinates()
    f = np.stack([np.cos(x1), np.zeros_like(x1)], axis=-1)
    R = anti_divergence(grid, f)
    print("R11 vs sin x1:", np.max(np.abs(R[..., 0, 0] - np.sin(x1))))
    print("div R - f:", np.max(np.abs(div(grid, R) - f)))
