"""Gamma-distributed failure/recovery injection.

One global event stream: each toggle flips a uniformly chosen node's
advertised state and schedules the next toggle after a gamma-distributed
gap whose mean gives the configured percentage of nodes changing state per
minute. Only the mean is pinned by the configuration; the shape parameter
controls burstiness and defaults to 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FailureModel:
    rate_pct_per_min: float
    gamma_shape: float = 2.0

    def __post_init__(self) -> None:
        if self.rate_pct_per_min < 0:
            raise ValueError(f"failure rate must be >= 0, got {self.rate_pct_per_min}")
        if self.gamma_shape <= 0:
            raise ValueError(f"gamma shape must be > 0, got {self.gamma_shape}")

    def mean_gap_s(self, n: int) -> float:
        """Mean seconds between toggles: 60*100 / (rate * n)."""
        if self.rate_pct_per_min == 0:
            return math.inf
        return 6000.0 / (self.rate_pct_per_min * n)


def sample_failure_gap(model: FailureModel, n: int, rng: np.random.Generator) -> float:
    """One inter-toggle gap in seconds; gamma with the model's shape and
    scale solved so the mean equals model.mean_gap_s(n). Infinite at rate 0.
    """
    mean = model.mean_gap_s(n)
    if math.isinf(mean):
        return math.inf
    return float(rng.gamma(model.gamma_shape, mean / model.gamma_shape))
