# driver.py
"""
The convex-integration iteration.

A run starts from a subsolution (the lifted base flow in periodic mode, the
zero state in compact mode) and applies a schedule of sweeps. Each sweep
covers the active region with 2^{k·d} cells, places one localized wave per
cell along an admissible segment at the cell statistic, verifies the
relaxed-set membership of every node a posteriori and recomputes the
pressure globally. Diagnostics are recorded after every sweep.

The schedule's level and frequency are targets. A sweep uses the finest
level whose cells the grid can resolve, and each cell moves the scheduled λ
into its frequency_window; cells whose window is empty are skipped.
"""
import logging
import os
import time
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional

import numpy as np
import pandas as pd

from . import spectral
from .errors import (HullTooThinError, InfeasibleDecompositionError, NumericalInvariantError,
                     PreconditionError, ResolutionError)
from .fieldio import append_jsonl, write_field
from .segment_search import SearchConfig, find_segment
from .spectral import TorusGrid
from .state_algebra import (SourceMatrix, StatePoint, Tolerances, hull_margin_field, linf_bounds_ok,
                            relaxed_mask)
from .profiles import cutoff_ramp
from .wave_builder import (POINTS_PER_OSCILLATION, WaveSpec, check_resolution, frequency_window, ladder_for,
                           superpose_waves)

logger = logging.getLogger(__name__)

AMPLITUDE_ITERS = 32
MONOTONE_TOL = 1e-9


@dataclass
class DiagnosticsRecord:
    sweep: int
    total_deficit: float
    sup_deficit: float
    residual_div_v: float
    residual_relaxed: float
    weak_residual: float
    hminus1_to_v0: float
    l2_to_v0: float
    min_hull_margin: float
    constraint_violation_l1: float
    linf_ok: bool
    relaxed_violations: int
    cells_active: int = 0
    cells_skipped: int = 0
    sigma_met: Optional[bool] = None
    tail_outside_omega: Optional[float] = None
    lam: Optional[float] = None
    k_cells: Optional[int] = None
    wall_time: float = 0.0

    def validate(self, tol):
        values = [self.total_deficit, self.sup_deficit, self.residual_div_v, self.residual_relaxed,
                  self.weak_residual, self.hminus1_to_v0, self.l2_to_v0, self.constraint_violation_l1]
        if not np.all(np.isfinite(values)):
            raise NumericalInvariantError(f"non-finite diagnostics after sweep {self.sweep}")
        if self.total_deficit < -tol:
            raise NumericalInvariantError(f"total deficit {self.total_deficit:.3e} is negative")

    def to_dict(self):
        return {k: (bool(v) if isinstance(v, np.bool_) else v) for k, v in asdict(self).items()}


@dataclass
class IterationState:
    grid: TorusGrid
    v: np.ndarray
    U: np.ndarray
    q: np.ndarray
    e: np.ndarray
    B: SourceMatrix
    v0: np.ndarray
    sweep_index: int = 0
    initial: Optional[DiagnosticsRecord] = None
    history: List[DiagnosticsRecord] = field(default_factory=list)
    omega: Optional[tuple] = None

    @property
    def d(self):
        return self.grid.d

    def deficit(self):
        return self.e - np.sum(self.v * self.v, axis=-1)


@dataclass(frozen=True)
class DriverSettings:
    """Run parameters the sweeps need, split off the configuration document."""
    gamma: float = 0.9
    keep_margin_fraction: float = 0.5
    segment_stretch: float = 1.0
    max_backoff: int = 5
    cutoff_fraction: float = 0.9
    min_ramp_cells: int = 12
    ramp_oscillations: float = 2.5
    table_size: int = 8192
    weak_tests: int = 8
    sigma: Optional[float] = None
    rng_seed: int = 0
    tol: Tolerances = field(default_factory=Tolerances)
    search: SearchConfig = field(default_factory=SearchConfig)

    @property
    def hull(self):
        return self.search.hull

    @classmethod
    def from_config(cls, config):
        search = config.search_config()
        hull = search.hull
        if not (config.hull or {}).get("rotation") and config.rng_seed:
            # seeded rotation of the 2-D direction set
            rotation = float(np.random.default_rng(config.rng_seed).uniform(0, np.pi))
            search = replace(search, hull=replace(hull, rotation=rotation))
        return cls(gamma=config.gamma, keep_margin_fraction=config.keep_margin_fraction,
                   segment_stretch=config.segment_stretch, max_backoff=config.max_backoff,
                   cutoff_fraction=config.cutoff_fraction, min_ramp_cells=config.min_ramp_cells,
                   ramp_oscillations=config.ramp_oscillations, table_size=config.table_size,
                   weak_tests=config.weak_tests, sigma=config.sigma, rng_seed=config.rng_seed,
                   tol=config.tolerance_config(), search=search)


# --- residuals and diagnostics ---------------------------------------------

def subsolution_residuals(grid, v, U, q, B):
    """Relative residuals of div v = 0 and div U + ∇q = Bv."""
    div_v = spectral.l2_norm(grid, spectral.div(grid, v)) / max(spectral.l2_norm(grid, v), 1.0)
    relaxed = spectral.div(grid, U) + spectral.grad(grid, q) - B.apply(v)
    scale = max(spectral.l2_norm(grid, U) + spectral.l2_norm(grid, q) + spectral.l2_norm(grid, v), 1.0)
    return div_v, spectral.l2_norm(grid, relaxed) / scale


def _c1_norm(grid, f):
    return float(np.max(np.abs(f)) + np.max(np.abs(spectral.grad(grid, f))))


def weak_residual(grid, v, B, n_tests=8, seed=0, kmax=4):
    """
    Max over seeded band-limited tests of the normalized weak-form residuals
    |∫ v⊗v : ∇φ + φ·Bv| and |∫ v·∇ψ| with φ divergence-free.
    """
    v = np.asarray(v, dtype=float)
    speed = spectral.l2_norm(grid, v)
    if speed == 0.0:
        return 0.0
    B = B if isinstance(B, SourceMatrix) else SourceMatrix(np.asarray(B, dtype=float))
    rng = np.random.default_rng(seed)
    vv = v[..., :, None] * v[..., None, :]
    Bv = B.apply(v)
    worst = 0.0
    for _ in range(n_tests):
        phi = spectral.leray_project(grid, spectral.random_band_limited(grid, rng, kmax, (grid.d,)))
        psi = spectral.random_band_limited(grid, rng, kmax)
        momentum = spectral.pair(grid, vv, spectral.grad(grid, phi)) + spectral.pair(grid, phi, Bv)
        mass = spectral.pair(grid, v, spectral.grad(grid, psi))
        scale1 = _c1_norm(grid, phi) * (speed ** 2 + B.norm() * speed) * grid.volume
        scale2 = _c1_norm(grid, psi) * speed * grid.volume
        worst = max(worst, abs(momentum) / scale1 + abs(mass) / scale2)
    return float(worst)


def constraint_violation(grid, v, U, e):
    """Node-wise ‖U - (v⊗v - (e/d)I)‖."""
    d = grid.d
    target = v[..., :, None] * v[..., None, :] - (np.asarray(e) / d)[..., None, None] * np.eye(d)
    return np.sqrt(np.sum((U - target) ** 2, axis=(-2, -1)))


def assemble_solution(state):
    """(v, p = q - e/d, constraint-violation field)."""
    p = state.q - state.e / state.d
    return state.v.copy(), p, constraint_violation(state.grid, state.v, state.U, state.e)


def _active_nodes(state, floor):
    return (state.e > floor) & (state.deficit() > floor)


def _violations(state, settings):
    floor = settings.tol.deficit_floor
    deficit = state.deficit()
    need = _active_nodes(state, floor)
    bad = (state.e > floor) & (deficit < -floor)
    if need.any():
        inside = relaxed_mask(state.v[need], state.U[need], state.e[need], settings.hull)
        bad[need] = ~inside
    return bad


def _omega_mask(grid, omega):
    inside = np.ones(grid.shape, dtype=bool)
    for i, x in enumerate(grid.coordinates()):
        inside &= (x >= omega[0][i]) & (x <= omega[1][i])
    return inside


def record_diagnostics(state, settings, sweep, wall_time=0.0, cells_active=0, cells_skipped=0,
                       lam=None, k_cells=None, violations=None):
    grid = state.grid
    floor = settings.tol.deficit_floor
    deficit = state.deficit()
    div_v, relaxed = subsolution_residuals(grid, state.v, state.U, state.q, state.B)
    active = _active_nodes(state, floor)
    margins = hull_margin_field(state.v[active], state.U[active], state.e[active])
    if violations is None:
        violations = _violations(state, settings)
    h1 = spectral.hminus1_distance(grid, state.v, state.v0)
    tail = None
    if state.omega is not None:
        outside = ~_omega_mask(grid, state.omega)
        amp = np.sqrt(np.sum(state.v ** 2, axis=-1) + np.sum(state.U ** 2, axis=(-2, -1)))
        tail = float(amp[outside].max()) if outside.any() else 0.0
    record = DiagnosticsRecord(
        sweep=sweep,
        total_deficit=float(spectral.integrate(grid, deficit)),
        sup_deficit=float(deficit.max()),
        residual_div_v=div_v,
        residual_relaxed=relaxed,
        weak_residual=weak_residual(grid, state.v, state.B, settings.weak_tests, settings.rng_seed),
        hminus1_to_v0=h1,
        l2_to_v0=spectral.l2_norm(grid, state.v - state.v0),
        min_hull_margin=float(margins.min()) if margins.size else 0.0,
        constraint_violation_l1=float(spectral.integrate(grid, constraint_violation(grid, state.v, state.U, state.e))),
        linf_ok=linf_bounds_ok(state.v, state.U, float(state.e.max()), settings.tol.membership),
        relaxed_violations=int(np.count_nonzero(violations)),
        cells_active=cells_active,
        cells_skipped=cells_skipped,
        sigma_met=None if settings.sigma is None else bool(h1 <= settings.sigma),
        tail_outside_omega=tail,
        lam=lam,
        k_cells=k_cells,
        wall_time=wall_time,
    )
    record.validate(settings.tol.membership)
    return record


# --- initial states --------------------------------------------------------

def init_from_flow(grid, v0, p0, e, B, settings=None):
    """
    Lift a solution (v0, p0) to the subsolution w0 = (v0, v0⊗v0 - |v0|²/d I),
    q0 = p0 + |v0|²/d, after checking it solves the equations and e > |v0|².
    """
    settings = settings or DriverSettings()
    d = grid.d
    v0 = np.asarray(v0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    e = np.broadcast_to(np.asarray(e, dtype=float), grid.shape).copy()
    vv = v0[..., :, None] * v0[..., None, :]
    momentum = spectral.div(grid, vv) + spectral.grad(grid, p0) - B.apply(v0)
    scale = max(spectral.l2_norm(grid, vv) + spectral.l2_norm(grid, p0) + spectral.l2_norm(grid, v0), 1.0)
    residual = max(spectral.l2_norm(grid, momentum) / scale,
                   spectral.l2_norm(grid, spectral.div(grid, v0)) / max(spectral.l2_norm(grid, v0), 1.0))
    if residual > settings.tol.residual_gate:
        raise PreconditionError(f"base flow is not a solution: residual {residual:.3e} > {settings.tol.residual_gate:.0e}")
    speed2 = np.sum(v0 * v0, axis=-1)
    short = e <= speed2
    if short.any():
        node = tuple(int(i) for i in np.argwhere(short)[0])
        raise PreconditionError(f"energy must exceed |v0|^2 everywhere; fails at node {node}")
    U0 = vv - (speed2 / d)[..., None, None] * np.eye(d)
    q0 = p0 + speed2 / d
    state = IterationState(grid, v0.copy(), U0, q0, e, B, v0.copy())
    inside = relaxed_mask(state.v, state.U, state.e, settings.hull)
    if not inside.all():
        node = tuple(int(i) for i in np.argwhere(~inside)[0])
        raise NumericalInvariantError(f"lifted base flow is not in the relaxed set at node {node}")
    state.initial = record_diagnostics(state, settings, 0)
    logger.info("initial state from base flow: total deficit %.6g", state.initial.total_deficit)
    return state


def init_zero(grid, e, B, omega=None, settings=None):
    """Zero subsolution; for d = 2 the origin is certified in the hull at every energized node."""
    settings = settings or DriverSettings()
    d = grid.d
    floor = settings.tol.deficit_floor
    e = np.broadcast_to(np.asarray(e, dtype=float), grid.shape).copy()
    if omega is not None:
        outside = ~_omega_mask(grid, omega)
        if np.any(e[outside] > floor):
            raise PreconditionError("energy support is not contained in omega")
    v = np.zeros(grid.shape + (d,))
    U = np.zeros(grid.shape + (d, d))
    energized = e > floor
    if energized.any():
        inside = relaxed_mask(v[energized], U[energized], e[energized], settings.hull)
        if not inside.all():
            node = tuple(int(i) for i in np.argwhere(energized)[np.argmin(inside)])
            raise NumericalInvariantError(
                f"hull certification of the zero state failed at node {node} "
                f"(e = {e[node]:.6g}, depth {settings.hull.node_depth})")
    state = IterationState(grid, v, U, np.zeros(grid.shape), e, B, np.zeros(grid.shape + (d,)), omega=omega)
    state.initial = record_diagnostics(state, settings, 0)
    logger.info("zero initial state: total deficit %.6g, %d frozen nodes",
                state.initial.total_deficit, int(np.count_nonzero(~energized)))
    return state


# --- sweeps ----------------------------------------------------------------

def cell_boxes(state, k_cells):
    """Cell corners (lo, hi) over the active region in fixed row-major order."""
    if state.omega is None:
        lo0, hi0 = np.zeros(state.d), np.full(state.d, 2 * np.pi)
    else:
        lo0, hi0 = state.omega
    cells = 2 ** k_cells
    side = (hi0 - lo0) / cells
    boxes = []
    for idx in np.ndindex(*(cells,) * state.d):
        lo = lo0 + np.array(idx) * side
        boxes.append((lo, lo + side))
    return boxes


def _cell_slices(grid, lo, hi):
    """Half-open node ranges [lo, hi) so neighbouring cells do not share nodes."""
    out = []
    for i in range(grid.d):
        start = int(np.ceil(lo[i] / grid.dx[i] - 1e-9))
        stop = int(np.ceil(hi[i] / grid.dx[i] - 1e-9))
        out.append(slice(start, min(stop, grid.n[i])))
    return tuple(out)


def safe_amplitude(v, U, e, direction, floor_margin, cap, iters=AMPLITUDE_ITERS):
    """
    Largest a in [0, cap] with every node margin of w(x) ± a·D̂ at least
    floor_margin. Margins are concave along the line, so the feasible set
    is an interval and bisection applies.
    """
    unit = direction * (1.0 / direction.norm())

    def ok(a):
        for sign in (1.0, -1.0):
            m = hull_margin_field(v + sign * a * unit.v, U + sign * a * unit.U, e)
            if m.min() < floor_margin:
                return False
        return True

    if ok(cap):
        return cap
    lo, hi = 0.0, cap
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _cell_spec(state, step, lo, hi, settings):
    """The wave for one cell, or (None, reason) when the cell is skipped."""
    grid = state.grid
    tol = settings.tol
    slices = _cell_slices(grid, lo, hi)
    v = state.v[slices].reshape(-1, state.d)
    U = state.U[slices].reshape(-1, state.d, state.d)
    e = state.e[slices].reshape(-1)
    if v.shape[0] == 0:
        return None, "empty"
    r = float(e.min())
    if r <= tol.deficit_floor:
        return None, "frozen"
    w_mean = StatePoint(v.mean(axis=0), U.mean(axis=0))
    if r - w_mean.v @ w_mean.v <= tol.deficit_floor:
        return None, "on K"
    margins = hull_margin_field(v, U, e)
    if margins.min() <= 0 or hull_margin_field(w_mean.v, w_mean.U, r) <= 0:
        return None, "margin too thin"
    if state.d == 2 and not relaxed_mask(w_mean.v[None], w_mean.U[None], r, settings.hull)[0]:
        return None, "cell mean outside the relaxed set"
    try:
        segment = find_segment(w_mean, r, settings.search, assume_relaxed=True)
    except (InfeasibleDecompositionError, HullTooThinError, PreconditionError) as exc:
        return None, f"no segment ({exc})"
    cap = settings.segment_stretch * segment.half_length
    amp = safe_amplitude(v, U, e, segment.direction, settings.keep_margin_fraction * margins.min(), cap)
    amp *= settings.gamma
    if amp <= 1e-12 * max(cap, 1.0):
        return None, "zero safe amplitude"
    segment = segment.scaled(amp / segment.half_length)
    cutoff = settings.cutoff_fraction * float(np.prod(hi - lo))
    rho = cutoff_ramp(lo, hi, cutoff)
    lam_min, lam_max = frequency_window(segment.wave_vector, rho, grid, settings.ramp_oscillations)
    if lam_min > lam_max:
        return None, f"frequency window empty ({lam_min:.3g} > {lam_max:.3g})"
    lam = float(np.clip(step.lam, lam_min, lam_max))
    spec = WaveSpec.from_segment(segment, lam, lo, hi, step.delta, cutoff, state.B)
    try:
        check_resolution(spec, grid, settings.min_ramp_cells, settings.ramp_oscillations)
    except ResolutionError as exc:
        return None, f"under-resolved ({exc})"
    # orient so the leading velocity term correlates non-negatively with v
    block, coords, phi = spec.block(grid)
    h0 = ladder_for(spec.mu1, spec.mu2, spec.delta, settings.table_size).evaluate(0, spec.phase(coords))
    lead = (h0 * phi)[..., None] * spec.w_bar.v
    if np.sum(state.v[block] * lead) < 0:
        spec = spec.flipped()
        logger.debug("cell %s: orientation flipped", np.round(lo, 4))
    return spec, None


def finest_level(state, k_max, settings=None):
    """
    Largest k <= k_max whose cells leave a ramp of min_ramp_cells nodes and a
    non-empty frequency window for any unit wave vector; 0 when none does.
    """
    settings = settings or DriverSettings()
    grid = state.grid
    if state.omega is None:
        extent = np.full(state.d, 2 * np.pi)
    else:
        extent = np.asarray(state.omega[1], dtype=float) - np.asarray(state.omega[0], dtype=float)
    dx = max(grid.dx)
    lam_ceiling = min(grid.n) / POINTS_PER_OSCILLATION
    for k in range(k_max, 0, -1):
        side = extent / 2 ** k
        rho = cutoff_ramp(np.zeros(state.d), side, settings.cutoff_fraction * float(np.prod(side)))
        if rho < settings.min_ramp_cells * dx:
            continue
        if 2 * np.pi * settings.ramp_oscillations * np.sqrt(state.d) / rho <= lam_ceiling:
            return k
    return 0


def _owner_map(grid, boxes):
    owner = np.full(grid.shape, -1, dtype=np.int64)
    for i, (lo, hi) in enumerate(boxes):
        owner[_cell_slices(grid, lo, hi)] = i
    return owner


def sweep(state, step, settings=None):
    """
    One pass over the 2^{k·d} cells of `step`. Returns the new state with its
    diagnostics record appended; the input state is left untouched.
    """
    settings = settings or DriverSettings()
    start = time.perf_counter()
    grid = state.grid
    k_cells = min(step.k_cells, finest_level(state, step.k_cells, settings))
    if k_cells < step.k_cells:
        logger.info("sweep %d: level %d clamped to %d by the grid resolution", step.index, step.k_cells, k_cells)
    boxes = cell_boxes(state, k_cells)
    specs = {}
    skipped = 0
    for i, (lo, hi) in enumerate(boxes):
        spec, reason = _cell_spec(state, step, lo, hi, settings)
        if spec is None:
            skipped += 1
            logger.debug("sweep %d cell %d skipped: %s", step.index, i, reason)
        else:
            specs[i] = spec

    owner = _owner_map(grid, boxes)
    old_total = float(spectral.integrate(grid, state.deficit()))
    rounds = {i: 0 for i in specs}
    flipped = set()
    v, U, q = state.v, state.U, state.q
    violations = None
    while specs:
        order = sorted(specs)
        wave = superpose_waves([specs[i] for i in order], grid, settings.min_ramp_cells, settings.table_size,
                               settings.ramp_oscillations)
        trial = replace(state, v=state.v + wave.v, U=state.U + wave.U)
        violations = _violations(trial, settings)
        new_total = float(spectral.integrate(grid, trial.deficit()))
        failing = set()
        if violations.any():
            owners = set(np.unique(owner[violations]).tolist())
            failing = set(order) if owners - set(order) else owners
            logger.debug("sweep %d: %d violating nodes in cells %s", step.index,
                         int(np.count_nonzero(violations)), sorted(owners))
        if new_total > old_total + MONOTONE_TOL:
            unflipped = set(order) - flipped
            if unflipped and not violations.any():
                # the other orientation of the same wave
                for i in unflipped:
                    specs[i] = specs[i].flipped()
                flipped |= unflipped
                logger.debug("sweep %d: deficit rose, %d cells flipped", step.index, len(unflipped))
                violations = None
                continue
            failing = set(order)
        if not failing:
            v, U = trial.v, trial.U
            break
        for i in sorted(failing):
            if rounds[i] >= settings.max_backoff:
                logger.warning("sweep %d cell %d dropped after %d amplitude halvings",
                               step.index, i, rounds[i])
                del specs[i]
                skipped += 1
            else:
                specs[i] = specs[i].scaled(0.5)
                rounds[i] += 1
        violations = None

    if specs:
        q = spectral.pressure_from_state(grid, v, U, state.B)
        div_v, relaxed = subsolution_residuals(grid, v, U, q, state.B)
        if max(div_v, relaxed) > settings.tol.residual_abort:
            raise NumericalInvariantError(
                f"sweep {step.index}: subsolution residuals blew up (div v {div_v:.3e}, relaxed {relaxed:.3e})")
    new_state = IterationState(grid, v, U, q, state.e, state.B, state.v0, state.sweep_index + 1,
                               state.initial, list(state.history), state.omega)
    lam = max((s.lam for s in specs.values()), default=step.lam)
    record = record_diagnostics(new_state, settings, new_state.sweep_index, time.perf_counter() - start,
                                len(specs), skipped, lam, k_cells, violations)
    if record.relaxed_violations:
        logger.warning("sweep %d: %d nodes outside the relaxed set", step.index, record.relaxed_violations)
    new_state.history.append(record)
    logger.info("sweep %d: lambda=%g cells=%d active=%d skipped=%d deficit=%.6g",
                step.index, lam, len(boxes), len(specs), skipped, record.total_deficit)
    return new_state


# --- runs ------------------------------------------------------------------

def initial_state(config, settings=None):
    from .config import make_base_flow
    settings = settings or DriverSettings.from_config(config)
    grid = TorusGrid(config.d, tuple(config.n))
    e = config.energy_profile().sample(grid)
    B = config.source_matrix()
    if config.mode == "periodic":
        v0, p0 = make_base_flow(config.base_flow, grid)
        return init_from_flow(grid, v0, p0, e, B, settings)
    return init_zero(grid, e, B, config.omega_box(), settings)


def write_state(state, output_dir):
    """Final fields v, U, q, p and the constraint-violation field as PWFG files."""
    d = state.d
    v, p, violation = assemble_solution(state)
    paths = {}
    for name, values in (("v", v), ("U", state.U), ("q", state.q), ("p", p), ("e", state.e),
                         ("violation", violation)):
        paths[name] = write_field(os.path.join(output_dir, f"{name}.pwfg"), values, d)
    return paths


def run(config, on_record=None):
    """
    Execute the sweep schedule of `config`. Per-sweep records go to
    <output_dir>/diagnostics.jsonl and the final fields next to it when an
    output directory is configured.
    """
    settings = DriverSettings.from_config(config)
    logger.info("run: d=%d n=%s mode=%s seed=%d", config.d, config.n, config.mode, config.rng_seed)
    state = initial_state(config, settings)
    diag_path = None
    if config.output_dir:
        diag_path = os.path.join(config.output_dir, "diagnostics.jsonl")
        if os.path.exists(diag_path):
            os.remove(diag_path)
    for step in config.sweep_schedule():
        state = sweep(state, step, settings)
        record = state.history[-1]
        if diag_path:
            append_jsonl(diag_path, record.to_dict())
        if on_record is not None:
            on_record(record)
    if config.output_dir:
        write_state(state, config.output_dir)
    final = state.history[-1] if state.history else state.initial
    logger.info("run finished: total deficit %.6g (initial %.6g), weak residual %.3e",
                final.total_deficit, state.initial.total_deficit, final.weak_residual)
    return state


def history_frame(state):
    """Diagnostics history as a DataFrame, one row per sweep (initial record first)."""
    records = ([state.initial] if state.initial is not None else []) + state.history
    return pd.DataFrame([r.to_dict() for r in records])


if __name__ == "__main__":
    from .config import RunConfig
    logging.basicConfig(level=logging.INFO)
    cfg = RunConfig(d=2, n=128, schedule={"n_sweeps": 2})
    result = run(cfg)
    print(history_frame(result)[["sweep", "total_deficit", "min_hull_margin", "residual_relaxed"]])
