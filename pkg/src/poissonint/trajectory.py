"""Trajectory container shared by the integrators and the diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TrajectoryRecord:
    times: np.ndarray          # (N,)
    states: np.ndarray         # (N, m)
    energies: np.ndarray       # (N,)
    method_name: str
    stepsize: float
    wall_clock_seconds: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.times)
        if self.states.shape[0] != n or len(self.energies) != n:
            raise ValueError("times, states and energies must have equal length")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]
