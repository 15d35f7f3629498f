# metrics.py
"""Named diagnostics of an iteration state, each tagged with lower_is_better."""
import numpy as np

from . import spectral
from .driver import constraint_violation, subsolution_residuals
from .state_algebra import hull_margin_field


def compute_total_deficit(state):
    """∫ (e - |v|^2) dx, the distance-to-K surrogate."""
    return float(spectral.integrate(state.grid, state.deficit()))
compute_total_deficit.lower_is_better = True  # closer to K

def compute_sup_deficit(state):
    return float(state.deficit().max())
compute_sup_deficit.lower_is_better = True

def compute_residual_div_v(state):
    return subsolution_residuals(state.grid, state.v, state.U, state.q, state.B)[0]
compute_residual_div_v.lower_is_better = True

def compute_residual_relaxed(state):
    return subsolution_residuals(state.grid, state.v, state.U, state.q, state.B)[1]
compute_residual_relaxed.lower_is_better = True

def compute_min_hull_margin(state, floor=1e-6):
    """Smallest hull margin over nodes that still carry a deficit above `floor`."""
    active = (state.e > floor) & (state.deficit() > floor)
    if not active.any():
        return 0.0
    return float(hull_margin_field(state.v[active], state.U[active], state.e[active]).min())
compute_min_hull_margin.lower_is_better = False  # larger margin is safer

def compute_hminus1_to_v0(state):
    return spectral.hminus1_distance(state.grid, state.v, state.v0)
compute_hminus1_to_v0.lower_is_better = True

def compute_l2_to_v0(state):
    return spectral.l2_norm(state.grid, state.v - state.v0)
compute_l2_to_v0.lower_is_better = False  # oscillation away from v0 is the goal

def compute_constraint_violation_l1(state):
    """∫ ‖U - (v⊗v - (e/d)I)‖ dx."""
    return float(spectral.integrate(state.grid, constraint_violation(state.grid, state.v, state.U, state.e)))
compute_constraint_violation_l1.lower_is_better = True

METRICS = {
    "total_deficit": compute_total_deficit,
    "sup_deficit": compute_sup_deficit,
    "residual_div_v": compute_residual_div_v,
    "residual_relaxed": compute_residual_relaxed,
    "min_hull_margin": compute_min_hull_margin,
    "hminus1_to_v0": compute_hminus1_to_v0,
    "l2_to_v0": compute_l2_to_v0,
    "constraint_violation_l1": compute_constraint_violation_l1,
}


def evaluate_metrics(state, names=None):
    names = list(METRICS) if names is None else names
    unknown = [n for n in names if n not in METRICS]
    if unknown:
        raise ValueError(f"Metric(s) {unknown} not defined in METRICS.")
    return {name: METRICS[name](state) for name in names}


def rank_states(values, metric_name):
    """Indices of `values` best-first according to the metric's direction."""
    order = np.argsort(np.asarray(values, dtype=float), kind="stable")
    return order if METRICS[metric_name].lower_is_better else order[::-1]
