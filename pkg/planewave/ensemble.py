# ensemble.py
import itertools
import logging

import numpy as np
import pandas as pd

from . import spectral
from .config import RunConfig
from .driver import run
from .metrics import METRICS, evaluate_metrics

logger = logging.getLogger(__name__)


class RunEnsemble:
    def __init__(self, config_list, metric_names=None):
        """
        Parameters:
          - config_list: A list of run configurations, either RunConfig objects or
                         dictionaries accepted by RunConfig.from_dict. All runs must
                         share d and the grid so their final fields can be compared.
          - metric_names: Names from METRICS reported per run (default: all).
        """
        self.configs = [c if isinstance(c, RunConfig) else RunConfig.from_dict(c) for c in config_list]
        if not self.configs:
            raise ValueError("RunEnsemble needs at least one configuration.")
        shapes = {(c.d, tuple(c.n)) for c in self.configs}
        if len(shapes) > 1:
            raise ValueError(f"ensemble runs must share the grid, got {sorted(shapes)}")
        self.metric_names = list(METRICS) if metric_names is None else list(metric_names)
        self.states = {}
        self.results = {}

    @staticmethod
    def config_key(config):
        sched = config.schedule
        return f"{config.mode}_d{config.d}_seed{config.rng_seed}_S{sched.get('n_sweeps')}_g{config.gamma:g}"

    def run(self):
        """Returns (summary DataFrame indexed by run key, pairwise L² distance DataFrame)."""
        for config in self.configs:
            key = self.config_key(config)
            if key in self.states:
                raise ValueError(f"duplicate ensemble member '{key}'")
            logger.info("running ensemble member %s", key)
            state = run(config)
            self.states[key] = state
            row = evaluate_metrics(state, self.metric_names)
            row["sweeps"] = len(state.history)
            row["weak_residual"] = (state.history[-1] if state.history else state.initial).weak_residual
            self.results[key] = row
        summary = pd.DataFrame.from_dict(self.results, orient="index")
        return summary, self.pairwise_distances()

    def pairwise_distances(self):
        """L² (RMS) distance between the final velocity fields of every pair of members."""
        keys = list(self.states)
        dist = np.zeros((len(keys), len(keys)))
        for (i, a), (j, b) in itertools.combinations(enumerate(keys), 2):
            grid = self.states[a].grid
            dist[i, j] = dist[j, i] = spectral.l2_norm(grid, self.states[a].v - self.states[b].v)
        return pd.DataFrame(dist, index=keys, columns=keys)


def generate_config_list(config_grid, base=None):
    """
    Given a dictionary where each key maps to a list of candidate values,
    generate a list of configuration dictionaries using the Cartesian product,
    each layered over the `base` document.
    """
    base = dict(base or {})
    return [{**base, **dict(zip(config_grid.keys(), values))}
            for values in itertools.product(*config_grid.values())]


def print_available_metrics():
    print("Available metrics:")
    for key, func in METRICS.items():
        print(f" - {key} ({'lower' if func.lower_is_better else 'higher'} is better)")


if __name__ == "__main__":
    print_available_metrics()
