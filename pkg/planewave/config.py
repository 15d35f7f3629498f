# config.py
"""
Run and wave configurations.

Documents are JSON objects parsed into validated dataclasses. Unknown keys
are rejected; missing keys take the defaults below. Closed-form energy
profiles and base flows are looked up by name in ENERGY_PROFILES and
BASE_FLOWS.
"""
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .errors import ConfigError, PlanewaveError
from .lamination_hull import HullConfig
from .profiles import smoothstep
from .schedule import SweepSchedule
from .segment_search import SearchConfig
from .state_algebra import EnergyProfile, SourceMatrix, StatePoint, Tolerances

logger = logging.getLogger(__name__)


def constant_energy(level=1.0):
    if level <= 0:
        raise ConfigError(f"constant energy needs level > 0, got {level}")
    return EnergyProfile("constant", func=lambda x: np.full(x[0].shape, float(level)))


def cosine_energy(level=1.0, amplitude=0.25, mode=1, axis=0):
    """level + amplitude·cos(mode·x_axis); positive when amplitude < level."""
    if not 0 <= amplitude < level:
        raise ConfigError("cosine energy needs 0 <= amplitude < level")
    return EnergyProfile("cosine", func=lambda x: level + amplitude * np.cos(mode * x[axis]))


def bump_energy(level=1.0, lo=None, hi=None, ramp_fraction=0.25):
    """level on the inner part of the box [lo, hi], smoothstep ramps, 0 outside."""
    if lo is None or hi is None:
        raise ConfigError("bump energy needs a box 'lo'/'hi'")
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(hi <= lo) or not 0 < ramp_fraction <= 0.5 or level <= 0:
        raise ConfigError("bump energy needs hi > lo, 0 < ramp_fraction <= 1/2 and level > 0")
    rho = ramp_fraction * (hi - lo)

    def func(x):
        out = np.full(x[0].shape, float(level))
        for i in range(len(x)):
            out = out * smoothstep((x[i] - lo[i]) / rho[i]) * smoothstep((hi[i] - x[i]) / rho[i])
        return out
    return EnergyProfile("bump", func=func, support=(lo, hi))


def grid_energy(path=None):
    from .fieldio import read_field
    if path is None:
        raise ConfigError("grid energy needs a 'path' to a scalar field file")
    values, kind = read_field(path)
    if kind != "scalar":
        raise ConfigError(f"energy file must hold a scalar field, got {kind}")
    return EnergyProfile("grid", values=values)


ENERGY_PROFILES = {
    "constant": constant_energy,
    "cosine": cosine_energy,
    "bump": bump_energy,
    "grid": grid_energy,
}


def zero_flow(grid):
    return np.zeros(grid.shape + (grid.d,)), np.zeros(grid.shape)


def shear_flow(grid, amplitude=0.5, mode=1):
    """v0 = (a sin(m x_2), 0, ...), p0 = 0: a stationary solution when B = 0."""
    x = grid.coordinates()
    v0 = np.zeros(grid.shape + (grid.d,))
    v0[..., 0] = amplitude * np.sin(mode * x[1])
    return v0, np.zeros(grid.shape)


def grid_flow(grid, velocity=None, pressure=None):
    from .fieldio import read_field
    if velocity is None:
        raise ConfigError("grid base flow needs a 'velocity' field path")
    v0, kind = read_field(velocity)
    if kind != "vector" or v0.shape != grid.shape + (grid.d,):
        raise ConfigError("base-flow velocity file does not match the grid")
    p0 = np.zeros(grid.shape)
    if pressure is not None:
        p0, kind = read_field(pressure)
        if kind != "scalar" or p0.shape != grid.shape:
            raise ConfigError("base-flow pressure file does not match the grid")
    return v0, p0


BASE_FLOWS = {
    "zero": zero_flow,
    "shear": shear_flow,
    "grid": grid_flow,
}


def _build(factory, params, what):
    params = dict(params)
    name = params.pop("kind", None)
    if name not in factory:
        raise ConfigError(f"{what} '{name}' is not defined; available: {sorted(factory)}")
    return name, params


def make_energy(spec):
    name, params = _build(ENERGY_PROFILES, spec, "energy profile")
    try:
        return ENERGY_PROFILES[name](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for energy '{name}': {exc}") from exc


def make_base_flow(spec, grid):
    name, params = _build(BASE_FLOWS, spec, "base flow")
    try:
        return BASE_FLOWS[name](grid, **params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for base flow '{name}': {exc}") from exc


def _sub_config(cls, doc, what):
    if doc is None:
        return cls()
    if isinstance(doc, cls):
        return doc
    allowed = {f.name for f in fields(cls)}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}")
    try:
        return cls(**doc)
    except PlanewaveError as exc:
        raise ConfigError(f"invalid {what}: {exc}") from exc


def _check_keys(cls, doc):
    allowed = {f.name for f in fields(cls)}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")


def _grid_sizes(d, n):
    sizes = [int(n)] * d if np.isscalar(n) else [int(x) for x in n]
    if len(sizes) != d:
        raise ConfigError(f"grid needs {d} sizes, got {sizes}")
    return sizes


@dataclass
class RunConfig:
    """Configuration of one convex-integration run."""
    d: int = 2
    n: object = 128
    mode: str = "periodic"
    energy: dict = field(default_factory=lambda: {"kind": "constant", "level": 1.0})
    B: Optional[list] = None
    base_flow: dict = field(default_factory=lambda: {"kind": "zero"})
    omega: Optional[dict] = None
    schedule: dict = field(default_factory=lambda: {"n_sweeps": 3})
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
    output_dir: Optional[str] = None
    tolerances: Optional[dict] = None
    hull: Optional[dict] = None
    search: Optional[dict] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.d < 2:
            raise ConfigError(f"d must be >= 2, got {self.d}")
        self.n = _grid_sizes(self.d, self.n)
        if any(x < 8 or x % 2 for x in self.n):
            raise ConfigError(f"grid sizes must be even and >= 8, got {self.n}")
        if self.mode not in ("periodic", "compact"):
            raise ConfigError(f"mode must be 'periodic' or 'compact', got '{self.mode}'")
        if not 0 <= self.gamma < 1:
            raise ConfigError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0 < self.keep_margin_fraction < 1:
            raise ConfigError("keep_margin_fraction must lie in (0, 1)")
        if self.segment_stretch <= 0 or self.max_backoff < 0:
            raise ConfigError("segment_stretch must be positive and max_backoff non-negative")
        if not 0 < self.cutoff_fraction < 1:
            raise ConfigError("cutoff_fraction must lie in (0, 1)")
        if self.min_ramp_cells < 0 or self.table_size < 256 or self.weak_tests < 1:
            raise ConfigError("min_ramp_cells >= 0, table_size >= 256 and weak_tests >= 1 are required")
        if self.ramp_oscillations < 0:
            raise ConfigError(f"ramp_oscillations must be >= 0, got {self.ramp_oscillations}")
        if self.B is not None and len(np.asarray(self.B).reshape(-1)) != self.d * self.d:
            raise ConfigError(f"B needs {self.d * self.d} row-major entries")
        if self.mode == "compact":
            if self.omega is None or set(self.omega) != {"lo", "hi"}:
                raise ConfigError("compact mode needs omega = {'lo': [...], 'hi': [...]}")
            lo = np.asarray(self.omega["lo"], dtype=float)
            hi = np.asarray(self.omega["hi"], dtype=float)
            if lo.shape != (self.d,) or hi.shape != (self.d,) or np.any(hi <= lo):
                raise ConfigError("omega corners must be d-vectors with hi > lo")
            clearance = 2 * 2 * np.pi / np.asarray(self.n)
            if np.any(lo < clearance) or np.any(hi > 2 * np.pi - clearance):
                raise ConfigError("omega must keep a clearance of two cells from the torus boundary")
        elif self.omega is not None:
            raise ConfigError("omega is only allowed in compact mode")
        # parse nested parts eagerly so errors surface at load time
        self.tolerance_config()
        self.hull_config()
        self.search_config()
        self.sweep_schedule()
        self.source_matrix()
        make_energy(self.energy)

    def source_matrix(self):
        if self.B is None:
            return SourceMatrix.zero(self.d)
        try:
            return SourceMatrix.from_row_major(self.B, self.d)
        except PlanewaveError as exc:
            raise ConfigError(str(exc)) from exc

    def tolerance_config(self):
        return _sub_config(Tolerances, self.tolerances, "tolerance")

    def hull_config(self):
        return _sub_config(HullConfig, self.hull, "hull")

    def search_config(self):
        doc = dict(self.search or {})
        doc.setdefault("rng_seed", self.rng_seed)
        doc["hull"] = self.hull_config()
        return _sub_config(SearchConfig, doc, "search")

    def sweep_schedule(self):
        try:
            return SweepSchedule.from_dict(self.schedule)
        except TypeError as exc:
            raise ConfigError(f"bad schedule: {exc}") from exc

    def energy_profile(self):
        return make_energy(self.energy)

    def omega_box(self):
        if self.omega is None:
            return None
        return np.asarray(self.omega["lo"], dtype=float), np.asarray(self.omega["hi"], dtype=float)

    @classmethod
    def from_dict(cls, doc):
        _check_keys(cls, doc)
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self):
        return asdict(self)

    def with_overrides(self, **overrides):
        doc = self.to_dict()
        doc.update(overrides)
        return RunConfig.from_dict(doc)


def _state_from_doc(doc, d, what):
    if doc is None:
        return StatePoint.zero(d)
    if set(doc) - {"v", "U"}:
        raise ConfigError(f"{what} accepts only 'v' and 'U'")
    try:
        return StatePoint(doc.get("v", np.zeros(d)), doc.get("U", np.zeros((d, d))))
    except PlanewaveError as exc:
        raise ConfigError(f"invalid {what}: {exc}") from exc


@dataclass
class WaveConfig:
    """
    Configuration of a single localized wave. Either `w_bar` (a wave-cone
    direction w_2 - w_1) is given, or the segment is searched at `center`
    for the energy `r`.
    """
    d: int = 2
    n: object = 128
    lam: float = 16.0
    lo: Optional[list] = None
    hi: Optional[list] = None
    delta: float = 0.05
    cutoff_delta: Optional[float] = None
    cutoff_fraction: float = 0.9
    min_ramp_cells: int = 12
    ramp_oscillations: float = 2.5
    table_size: int = 8192
    B: Optional[list] = None
    center: Optional[dict] = None
    w_bar: Optional[dict] = None
    r: float = 1.0
    eps: Optional[float] = None
    rng_seed: int = 0
    output_dir: Optional[str] = None
    hull: Optional[dict] = None

    def __post_init__(self):
        if self.d < 2:
            raise ConfigError(f"d must be >= 2, got {self.d}")
        self.n = _grid_sizes(self.d, self.n)
        if self.lo is None:
            self.lo = [0.0] * self.d
        if self.hi is None:
            self.hi = [2 * np.pi] * self.d
        if len(self.lo) != self.d or len(self.hi) != self.d:
            raise ConfigError("wave box corners must be d-vectors")
        if self.lam <= 0 or self.r <= 0:
            raise ConfigError("lam and r must be positive")
        if not 0 < self.cutoff_fraction < 1:
            raise ConfigError("cutoff_fraction must lie in (0, 1)")
        if self.ramp_oscillations < 0 or self.min_ramp_cells < 0:
            raise ConfigError("ramp_oscillations and min_ramp_cells must be >= 0")
        if self.B is not None and len(np.asarray(self.B).reshape(-1)) != self.d * self.d:
            raise ConfigError(f"B needs {self.d * self.d} row-major entries")
        _state_from_doc(self.center, self.d, "center")
        if self.w_bar is not None:
            _state_from_doc(self.w_bar, self.d, "w_bar")

    def source_matrix(self):
        return SourceMatrix.zero(self.d) if self.B is None else SourceMatrix.from_row_major(self.B, self.d)

    def cutoff_measure(self):
        if self.cutoff_delta is not None:
            return float(self.cutoff_delta)
        return self.cutoff_fraction * float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))

    def build_spec(self):
        """WaveSpec for this configuration (runs the segment search when w_bar is absent)."""
        from .segment_search import find_segment
        from .state_algebra import in_wave_cone
        from .wave_builder import WaveSpec
        center = _state_from_doc(self.center, self.d, "center")
        B = self.source_matrix()
        if self.w_bar is not None:
            w_bar = _state_from_doc(self.w_bar, self.d, "w_bar")
            cone = in_wave_cone(w_bar)
            if cone is None:
                raise ConfigError("w_bar is not in the wave cone")
            xi, q_bar = cone
            return WaveSpec(center - w_bar * 0.5, center + w_bar * 0.5, 0.5, 0.5, xi, q_bar, self.lam,
                            self.lo, self.hi, self.delta, self.cutoff_measure(), B)
        search = _sub_config(SearchConfig, {"rng_seed": self.rng_seed,
                                            "hull": _sub_config(HullConfig, self.hull, "hull")}, "search")
        segment = find_segment(center, self.r, search)
        return WaveSpec.from_segment(segment, self.lam, self.lo, self.hi, self.delta, self.cutoff_measure(), B)

    @classmethod
    def from_dict(cls, doc):
        _check_keys(cls, doc)
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: the configuration must be a JSON object")
    return doc
