# wave_builder.py
"""
Localized plane-wave subsolutions.

For a wave-cone direction w̄ = w_2 - w_1 with wave vector ξ and scalar q̄,
frequency λ and a cutoff φ supported in the box O, the wave is

    s(x)  = λ ξ·(x - x_O) / 2π
    P(x)  = h_6(s(x)) φ(x)
    v'    = (2π/λ)^6 v̄ Δ³P,   U' = (2π/λ)^6 Ū Δ³P,   q' = (2π/λ)^6 q̄ Δ³P
    v''   = -∇Δ⁻¹∇·v'
    U''   = R[B(v' + v'') - ∇q' - div U']

and (v' + v'', U' + U'', q') solves div v = 0, div U + ∇q = Bv. Its
leading term is w̄ h_0(s) φ, so w + w̃ stays close to the segment [w_1, w_2].

The remainder is of order |ξ|/(λρ) for a ramp of width ρ, and Δ³ amplifies
anything the grid cannot resolve. check_resolution therefore asks for
POINTS_PER_OSCILLATION nodes per period, MIN_RAMP_CELLS nodes across the
ramp and, when a ramp budget is given, RAMP_OSCILLATIONS periods inside it.
Axes listed in periodic_axes are not ramped at all: the box spans the torus
there and λξ_i is an integer. A slab ramped only across ξ has no odd
terms in its expansion, so its remainder is exactly first order in 1/λ.
"""
import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import spectral
from .errors import MeanObstructionError, NumericalInvariantError, PreconditionError, ResolutionError
from .profiles import DEFAULT_TABLE_SIZE, build_profiles, check_box, cutoff_block, cutoff_ramp
from .segment_search import lift_segment
from .state_algebra import CONE_TOL, SourceMatrix, StatePoint, cone_residuals, in_wave_cone

logger = logging.getLogger(__name__)

POINTS_PER_OSCILLATION = 8
RAMP_OSCILLATIONS = 2.5
# floor on the ramp load when ξ has no component along the ramped axes
TRANSVERSE_RAMP_LOAD = 0.4
MIN_RAMP_CELLS = 12
WAVE_ERROR_LIMIT = 1.0
FORCING_MEAN_TOL = 1e-8
PERIOD_TOL = 1e-9


@lru_cache(maxsize=32)
def ladder_for(mu1, mu2, delta, m=DEFAULT_TABLE_SIZE):
    return build_profiles(mu1, mu2, delta, m)


@dataclass(frozen=True, eq=False)
class WaveSpec:
    """
    One localized wave: endpoints w_1, w_2 with weights μ_1, μ_2, wave vector
    ξ and q̄ for w̄ = w_2 - w_1, frequency lam, box [lo, hi], profile
    mollification delta and cutoff measure cutoff_delta. The box spans
    [0, 2π] along periodic_axes, which carry no ramp.
    """
    w1: StatePoint
    w2: StatePoint
    mu1: float
    mu2: float
    xi: np.ndarray
    q_bar: float
    lam: float
    lo: np.ndarray
    hi: np.ndarray
    delta: float = 0.05
    cutoff_delta: float = None
    B: SourceMatrix = None
    origin: np.ndarray = None
    periodic_axes: tuple = ()

    def __post_init__(self):
        d = self.w1.d
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        xi = np.asarray(self.xi, dtype=float)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "xi", xi)
        if self.mu1 <= 0 or self.mu2 <= 0 or abs(self.mu1 + self.mu2 - 1.0) > 1e-12:
            raise PreconditionError("wave weights need mu1, mu2 > 0 and mu1 + mu2 = 1")
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise PreconditionError(f"frequency must be positive, got {self.lam}")
        w_bar = self.w_bar
        if np.linalg.norm(w_bar.v) <= CONE_TOL:
            raise PreconditionError("degenerate wave direction: v̄ = 0")
        scale = max(1.0, w_bar.norm())
        res_u, res_v = cone_residuals(w_bar, xi, self.q_bar)
        if abs(np.linalg.norm(xi) - 1.0) > 1e-12 or max(res_u, res_v) > CONE_TOL * scale:
            raise PreconditionError(f"direction is not in the wave cone ({res_u:.2e}, {res_v:.2e})")
        if self.cutoff_delta is None:
            object.__setattr__(self, "cutoff_delta", 0.5 * self.box_volume)
        if self.B is None:
            object.__setattr__(self, "B", SourceMatrix.zero(d))
        if self.origin is None:
            object.__setattr__(self, "origin", lo.copy())
        periodic = tuple(sorted(set(int(i) for i in self.periodic_axes)))
        for i in periodic:
            if not 0 <= i < d:
                raise PreconditionError(f"periodic axis {i} out of range for d = {d}")
            if abs(lo[i]) > 1e-12 or abs(hi[i] - 2 * np.pi) > 1e-12:
                raise PreconditionError(f"periodic axis {i} needs the box to span [0, 2π]")
            turns = self.lam * xi[i]
            if abs(turns - np.round(turns)) > PERIOD_TOL * max(1.0, abs(turns)):
                raise PreconditionError(f"lambda*xi_{i} = {turns:.6g} is not an integer on periodic axis {i}")
        object.__setattr__(self, "periodic_axes", periodic)

    @classmethod
    def from_segment(cls, segment, lam, lo, hi, delta=0.05, cutoff_delta=None, B=None):
        w1, w2, mu1, mu2 = lift_segment(segment)
        # w̄ = w_2 - w_1 is twice the half-direction
        return cls(w1, w2, mu1, mu2, segment.wave_vector, 2.0 * segment.q_bar, lam,
                   lo, hi, delta, cutoff_delta, B)

    @property
    def d(self):
        return self.w1.d

    @property
    def w_bar(self):
        return self.w2 - self.w1

    @property
    def center(self):
        return self.w1 * self.mu1 + self.w2 * self.mu2

    @property
    def box_volume(self):
        return float(np.prod(self.hi - self.lo))

    def flipped(self):
        """Same segment traversed in the opposite orientation."""
        return replace(self, w1=self.w2, w2=self.w1, mu1=self.mu2, mu2=self.mu1, q_bar=-self.q_bar)

    def scaled(self, factor):
        """Amplitude scaled about the center."""
        c = self.center
        return replace(self, w1=c + (self.w1 - c) * factor, w2=c + (self.w2 - c) * factor,
                       q_bar=self.q_bar * factor)

    def phase(self, coords):
        shift = sum(self.xi[i] * (coords[i] - self.origin[i]) for i in range(self.d))
        return self.lam * shift / (2 * np.pi)

    @property
    def ramped_axes(self):
        return tuple(i for i in range(self.d) if i not in self.periodic_axes)

    def ramp(self):
        if not self.ramped_axes:
            return 0.0
        return cutoff_ramp(self.lo, self.hi, self.cutoff_delta, self.ramped_axes)

    def block(self, grid):
        """cutoff_block of this wave's box: (slices, coords, φ)."""
        return cutoff_block(grid, self.lo, self.hi, self.ramp(), self.ramped_axes)


@dataclass(eq=False)
class LocalizedWave:
    v: np.ndarray
    U: np.ndarray
    q: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def state_at(self, index):
        return StatePoint(self.v[index], self.U[index])


def frequency_window(xi, rho, grid, ramp_oscillations=RAMP_OSCILLATIONS, axes=None):
    """
    (lam_min, lam_max) for a wave vector xi and a ramp of width rho along
    `axes` (all by default): lam_min puts ramp_oscillations periods of the
    ramp load max(Σ_axes |ξ_i|, TRANSVERSE_RAMP_LOAD) inside the ramp,
    lam_max keeps POINTS_PER_OSCILLATION nodes per period on every axis.
    """
    xi = np.abs(np.asarray(xi, dtype=float))
    axes = tuple(range(grid.d)) if axes is None else tuple(axes)
    moving = xi > 1e-12
    lam_max = np.inf
    if moving.any():
        lam_max = float(np.min(np.asarray(grid.n)[moving] / (POINTS_PER_OSCILLATION * xi[moving])))
    if ramp_oscillations <= 0 or not axes:
        return 0.0, lam_max
    if rho <= 0:
        return np.inf, lam_max
    load = max(float(sum(xi[i] for i in axes)), TRANSVERSE_RAMP_LOAD)
    return 2 * np.pi * ramp_oscillations * load / rho, lam_max


def check_resolution(spec, grid, min_ramp_cells=MIN_RAMP_CELLS, ramp_oscillations=0.0):
    """
    Raise ResolutionError unless n_i >= 8 λ|ξ_i|, the ramp spans
    min_ramp_cells nodes on every ramped axis and, for ramp_oscillations > 0,
    λ reaches the lower end of frequency_window. Returns the ramp width.
    """
    need = POINTS_PER_OSCILLATION * spec.lam * np.abs(spec.xi)
    short = [i for i in range(grid.d) if grid.n[i] < need[i] - 1e-9]
    if short:
        i = short[0]
        raise ResolutionError(
            f"under-resolved: axis {i} has {grid.n[i]} points but lambda={spec.lam:g} needs "
            f"n >= {POINTS_PER_OSCILLATION} lambda |xi_i| = {need[i]:.1f}"
        )
    check_box(grid, spec.lo, spec.hi)
    rho = spec.ramp()
    axes = spec.ramped_axes
    if not axes:
        return rho
    dx = max(grid.dx[i] for i in axes)
    if rho < min_ramp_cells * dx - 1e-12:
        raise ResolutionError(
            f"under-resolved cutoff: ramp {rho:.4g} spans fewer than {min_ramp_cells} cells of {dx:.4g}"
        )
    lam_min, _ = frequency_window(spec.xi, rho, grid, ramp_oscillations, axes)
    if spec.lam < lam_min * (1 - 1e-12):
        raise ResolutionError(
            f"under-resolved cutoff: ramp {rho:.4g} holds fewer than {ramp_oscillations:g} oscillations "
            f"at lambda={spec.lam:g}; needs lambda >= {lam_min:.4g}"
        )
    return rho


def _potentials(specs, grid, m):
    """Σ (2π/λ)^6 (v̄, Ū, q̄) h_6(s) φ accumulated in spec order."""
    d = grid.d
    pv = np.zeros(grid.shape + (d,))
    pU = np.zeros(grid.shape + (d, d))
    pq = np.zeros(grid.shape)
    for spec in specs:
        ladder = ladder_for(spec.mu1, spec.mu2, spec.delta, m)
        slices, coords, phi = spec.block(grid)
        P = ladder.evaluate(6, spec.phase(coords)) * phi * (2 * np.pi / spec.lam) ** 6
        w_bar = spec.w_bar
        pv[slices] += P[..., None] * w_bar.v
        pU[slices] += P[..., None, None] * w_bar.U
        pq[slices] += P * spec.q_bar
    return pv, pU, pq


def _tri_laplacian(grid, f):
    extra = (1,) * (np.ndim(f) - grid.d)
    mult = -(grid.k_squared.reshape(grid.shape + extra) ** 3)
    return np.real(np.fft.ifftn(mult * np.fft.fftn(f, axes=grid.axes), axes=grid.axes))


def _dist_to_segment(v, U, w1, w2):
    """Euclidean distance of node states to [w_1, w_2] in (v, U) coordinates."""
    n_nodes = v.shape[0]
    p = np.concatenate([v.reshape(n_nodes, -1), U.reshape(n_nodes, -1)], axis=1)
    a = w1.as_vector()
    seg = w2.as_vector() - a
    t = np.clip((p - a) @ seg / (seg @ seg), 0.0, 1.0)
    return np.linalg.norm(p - a - t[:, None] * seg[None, :], axis=1)


def _box_nodes(wave, spec, grid):
    slices, coords = spec.block(grid)[:2]
    v = wave.v[slices].reshape(-1, grid.d)
    U = wave.U[slices].reshape(-1, grid.d, grid.d)
    return slices, coords, v, U


def leading_term_error(wave, spec, grid, m=DEFAULT_TABLE_SIZE):
    """sup over the box of |w̃ - w̄ h_0(s) φ|; outside the box the leading term vanishes."""
    ladder = ladder_for(spec.mu1, spec.mu2, spec.delta, m)
    slices, coords, phi = spec.block(grid)
    lead = (ladder.evaluate(0, spec.phase(coords)) * phi).reshape(-1)
    _, _, v, U = _box_nodes(wave, spec, grid)
    w_bar = spec.w_bar
    dv = v - lead[:, None] * w_bar.v
    dU = U - lead[:, None, None] * w_bar.U
    err = np.sqrt(np.sum(dv ** 2, axis=1) + np.sum(dU ** 2, axis=(1, 2)))
    return float(err.max())


def sup_segment_dist(wave, spec, grid):
    """sup over the box of dist(w + w̃(x), [w_1, w_2])."""
    _, _, v, U = _box_nodes(wave, spec, grid)
    c = spec.center
    return float(_dist_to_segment(v + c.v, U + c.U, spec.w1, spec.w2).max())


def region_stats(wave, spec, eps, grid):
    """
    Volumes of O_i = {x in O : |w + w̃(x) - w_i| < threshold} for the
    threshold min(ε/2, |w_2 - w_1|/4) and for ε itself, plus the sup distance
    to the segment.
    """
    _, _, v, U = _box_nodes(wave, spec, grid)
    c = spec.center
    p = np.concatenate([(v + c.v), (U + c.U).reshape(v.shape[0], -1)], axis=1)
    dist1 = np.linalg.norm(p - spec.w1.as_vector(), axis=1)
    dist2 = np.linalg.norm(p - spec.w2.as_vector(), axis=1)
    strict = min(eps / 2, spec.w_bar.norm() / 4)
    cell = grid.cell_volume
    return {
        "vol1": float(np.count_nonzero(dist1 < strict) * cell),
        "vol2": float(np.count_nonzero(dist2 < strict) * cell),
        "vol1_eps": float(np.count_nonzero(dist1 < eps) * cell),
        "vol2_eps": float(np.count_nonzero(dist2 < eps) * cell),
        "threshold": strict,
        "box_volume": spec.box_volume,
        "sup_dist": float(_dist_to_segment(v + c.v, U + c.U, spec.w1, spec.w2).max()),
    }


def _outside_mask(specs, grid):
    inside = np.zeros(grid.shape, dtype=bool)
    for spec in specs:
        slices = spec.block(grid)[0]
        inside[slices] = True
    return ~inside


def superpose_waves(specs, grid, min_ramp_cells=MIN_RAMP_CELLS, m=DEFAULT_TABLE_SIZE, ramp_oscillations=0.0):
    """
    The localized-wave construction for a list of specs at once. Δ³, the
    Leray correction and R are linear, so the potentials of all specs are
    summed (in list order) and transformed once.
    """
    specs = list(specs)
    if not specs:
        raise PreconditionError("superpose_waves needs at least one spec")
    B = specs[0].B
    for spec in specs:
        if spec.d != grid.d:
            raise PreconditionError(f"spec dimension {spec.d} does not match grid dimension {grid.d}")
        if not np.array_equal(spec.B.B, B.B):
            raise PreconditionError("all superposed waves must share the source matrix")
        check_resolution(spec, grid, min_ramp_cells, ramp_oscillations)
    pv, pU, pq = _potentials(specs, grid, m)
    v1 = _tri_laplacian(grid, pv)
    U1 = _tri_laplacian(grid, pU)
    q1 = _tri_laplacian(grid, pq)
    v2 = spectral.leray_correct(grid, v1)
    v = v1 + v2
    forcing = B.apply(v) - spectral.grad(grid, q1) - spectral.div(grid, U1)
    try:
        U2 = spectral.anti_divergence(grid, forcing, mean_tol=FORCING_MEAN_TOL)
    except MeanObstructionError as exc:
        raise NumericalInvariantError(f"wave forcing has a mean beyond {FORCING_MEAN_TOL:.0e}: {exc}") from exc
    U = U1 + U2
    U = 0.5 * (U + np.swapaxes(U, -1, -2))
    U = U - (np.trace(U, axis1=-2, axis2=-1) / grid.d)[..., None, None] * np.eye(grid.d)

    outside = _outside_mask(specs, grid)
    primary2 = np.sum(v1 ** 2, axis=-1) + np.sum(U1 ** 2, axis=(-2, -1))
    corr_sup = np.sqrt(np.sum(v2 ** 2, axis=-1) + np.sum(U2 ** 2, axis=(-2, -1)))
    total = float(primary2.sum())
    scale = spectral.l2_norm(grid, U) + spectral.l2_norm(grid, q1) + spectral.l2_norm(grid, v)
    relaxed = spectral.div(grid, U) + spectral.grad(grid, q1) - B.apply(v)
    diagnostics = {
        "residual_div_v": spectral.l2_norm(grid, spectral.div(grid, v)) / max(spectral.l2_norm(grid, v), 1e-300),
        "residual_relaxed": spectral.l2_norm(grid, relaxed) / max(scale, 1e-300),
        "mean_v": float(np.max(np.abs(spectral.mean_field(grid, v)))),
        "mean_U": float(np.max(np.abs(spectral.mean_field(grid, U)))),
        "primary_mass_outside": float(primary2[outside].sum() / total) if total > 0 else 0.0,
        "correction_tail_sup": float(corr_sup[outside].max()) if outside.any() else 0.0,
        "n_waves": len(specs),
    }
    return LocalizedWave(v, U, q1, diagnostics)


def build_localized_wave(spec, grid, min_ramp_cells=MIN_RAMP_CELLS, m=DEFAULT_TABLE_SIZE, eps=None,
                         ramp_oscillations=RAMP_OSCILLATIONS, error_limit=WAVE_ERROR_LIMIT):
    """
    One localized wave with its region and leading-term diagnostics filled in.
    Raises NumericalInvariantError when w + w̃ strays more than
    error_limit·|w̄| from the segment.
    """
    wave = superpose_waves([spec], grid, min_ramp_cells, m, ramp_oscillations)
    ladder_for(spec.mu1, spec.mu2, spec.delta, m).check()
    eps = spec.w_bar.norm() if eps is None else eps
    stats = region_stats(wave, spec, eps, grid)
    wave.diagnostics.update({
        "sup_segment_dist": stats["sup_dist"],
        "region_volumes": (stats["vol1"], stats["vol2"]),
        "region_volumes_eps": (stats["vol1_eps"], stats["vol2_eps"]),
        "leading_term_error": leading_term_error(wave, spec, grid, m),
        "lambda": spec.lam,
    })
    logger.debug("built wave lambda=%g: %s", spec.lam, wave.diagnostics)
    limit = error_limit * spec.w_bar.norm()
    if stats["sup_dist"] > limit:
        raise NumericalInvariantError(
            f"wave strays {stats['sup_dist']:.3e} from its segment, above {error_limit:g} |w_bar| = {limit:.3e}"
        )
    return wave


@dataclass(frozen=True)
class TileTemplate:
    lam: float = 1.0
    delta: float = 0.05
    cutoff_fraction: float = 0.5
    B: SourceMatrix = None
    min_ramp_cells: int = 2
    ramp_oscillations: float = 0.0


def tile_unit_cube(w_bar, k, grid, template=None):
    """
    2^{kd} copies of one localized wave with w_1 = -w̄, w_2 = w̄, μ = ½ (so w = 0)
    on the cells of side 2π/2^k, at frequency λ_template·2^k.

    Returns (wave, stats) with the torus mean, the mass ∫_{Q_1}|w_k|^2 (Q_1 the
    torus rescaled to unit volume), the sup distance to [-w̄, w̄] and the
    target ε = 2^{-kd}/k.
    """
    template = template or TileTemplate()
    if k < 1:
        raise PreconditionError("tiling level k must be >= 1")
    d = grid.d
    cone = in_wave_cone(w_bar)
    if cone is None:
        raise PreconditionError("tiling direction is not in the wave cone")
    xi, q_unit = cone
    side = 2 * np.pi / 2 ** k
    cells = 2 ** k
    lam = template.lam * 2 ** k
    B = template.B or SourceMatrix.zero(d)
    specs = []
    for idx in np.ndindex(*(cells,) * d):
        lo = np.array(idx, dtype=float) * side
        hi = lo + side
        vol = side ** d
        specs.append(WaveSpec(-w_bar, w_bar, 0.5, 0.5, xi, 2.0 * q_unit, lam, lo, hi,
                              template.delta, template.cutoff_fraction * vol, B))
    wave = superpose_waves(specs, grid, template.min_ramp_cells, ramp_oscillations=template.ramp_oscillations)
    mass = (np.mean(np.sum(wave.v ** 2, axis=-1)) + np.mean(np.sum(wave.U ** 2, axis=(-2, -1))))
    n_nodes = grid.size
    dist = _dist_to_segment(wave.v.reshape(n_nodes, d), wave.U.reshape(n_nodes, d, d), -w_bar, w_bar)
    stats = {
        "mean": max(wave.diagnostics["mean_v"], wave.diagnostics["mean_U"]),
        "mass": float(mass),
        "w_bar_norm2": w_bar.norm() ** 2,
        "sup_dist": float(dist.max()),
        "eps": 2.0 ** (-k * d) / k,
        "cells": cells ** d,
        "lambda": lam,
    }
    return wave, stats


if __name__ == "__main__":
    from .spectral import TorusGrid
    grid = TorusGrid(2, 128)
    w_bar = StatePoint([1.0, 0.0], [[0.5, 0.0], [0.0, -0.5]])
    xi, q_bar = in_wave_cone(w_bar)
    # slab: periodic along ξ = ±e_2, ramped along x_1
    spec = WaveSpec(w_bar * -0.5, w_bar * 0.5, 0.5, 0.5, xi, q_bar, 16.0,
                    [0.5, 0.0], [5.5, 2 * np.pi], delta=0.1, periodic_axes=(1,))
    wave = build_localized_wave(spec, grid)
    for key, value in wave.diagnostics.items():
        print(f"{key}: {value}")
