"""
Public API for planewave-bundle
"""

from .config import RunConfig, WaveConfig
from .driver import (DiagnosticsRecord, IterationState, assemble_solution, history_frame, init_from_flow,
                     init_zero, run, sweep, weak_residual)
from .ensemble import RunEnsemble, generate_config_list
from .errors import PlanewaveError
from .metrics import METRICS
from .segment_search import find_segment
from .spectral import TorusGrid, anti_divergence
from .state_algebra import SourceMatrix, StatePoint
from .wave_builder import WaveSpec, build_localized_wave, superpose_waves, tile_unit_cube

__all__ = [
    "RunConfig",
    "WaveConfig",
    "DiagnosticsRecord",
    "IterationState",
    "assemble_solution",
    "history_frame",
    "init_from_flow",
    "init_zero",
    "run",
    "sweep",
    "weak_residual",
    "RunEnsemble",
    "generate_config_list",
    "PlanewaveError",
    "METRICS",
    "find_segment",
    "TorusGrid",
    "anti_divergence",
    "SourceMatrix",
    "StatePoint",
    "WaveSpec",
    "build_localized_wave",
    "superpose_waves",
    "tile_unit_cube",
]
