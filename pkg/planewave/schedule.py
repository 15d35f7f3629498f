# schedule.py
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class Sweep:
    index: int
    k_cells: int
    lam: float
    delta: float


class SweepSchedule:
    def __init__(self, n_sweeps, k0=1, lam0=8.0, delta0=0.1, delta_min=0.01,
                 k_cells=None, lams=None, deltas=None):
        """
        Parameters:
          - n_sweeps: Number of sweeps (0 gives an empty schedule).
          - k0, lam0, delta0: Starting values of the default law
                              k_cells(s) = k0 + s, λ(s) = λ0·2^s, δ(s) = max(δ0·2^{-s}, δ_min).
          - delta_min: Floor for the profile mollification parameter.
          - k_cells, lams, deltas: Optional explicit per-sweep arrays; any array given
                                   overrides the default law for that quantity and must
                                   have length n_sweeps.
        """
        if n_sweeps < 0:
            raise ConfigError(f"n_sweeps must be non-negative, got {n_sweeps}")
        if k0 < 1 or lam0 <= 0 or not 0 < delta_min <= delta0:
            raise ConfigError("schedule needs k0 >= 1, lam0 > 0 and 0 < delta_min <= delta0")
        self.n_sweeps = n_sweeps
        self.k0 = k0
        self.lam0 = lam0
        self.delta0 = delta0
        self.delta_min = delta_min
        self.explicit = {"k_cells": k_cells, "lams": lams, "deltas": deltas}
        for name, values in self.explicit.items():
            if values is not None and len(values) != n_sweeps:
                raise ConfigError(f"schedule array '{name}' has length {len(values)}, expected {n_sweeps}")
        self.sweeps = self._generate_sweeps()

    def _generate_sweeps(self):
        sweeps = []
        for s in range(self.n_sweeps):
            k = self.explicit["k_cells"][s] if self.explicit["k_cells"] is not None else self.k0 + s
            lam = self.explicit["lams"][s] if self.explicit["lams"] is not None else self.lam0 * 2 ** s
            delta = (self.explicit["deltas"][s] if self.explicit["deltas"] is not None
                     else max(self.delta0 * 2.0 ** (-s), self.delta_min))
            if int(k) < 1 or lam <= 0 or delta <= 0:
                raise ConfigError(f"invalid sweep {s}: k_cells={k}, lambda={lam}, delta={delta}")
            sweeps.append(Sweep(s, int(k), float(lam), float(delta)))
        return sweeps

    def get_sweeps(self):
        return self.sweeps

    def __len__(self):
        return len(self.sweeps)

    def __iter__(self):
        return iter(self.sweeps)

    def to_dict(self):
        return {
            "n_sweeps": self.n_sweeps,
            "k0": self.k0,
            "lam0": self.lam0,
            "delta0": self.delta0,
            "delta_min": self.delta_min,
            **{k: (list(v) if v is not None else None) for k, v in self.explicit.items()},
        }

    @classmethod
    def from_dict(cls, doc):
        allowed = {"n_sweeps", "k0", "lam0", "delta0", "delta_min", "k_cells", "lams", "deltas"}
        unknown = set(doc) - allowed
        if unknown:
            raise ConfigError(f"unknown schedule keys: {sorted(unknown)}")
        return cls(**doc)
