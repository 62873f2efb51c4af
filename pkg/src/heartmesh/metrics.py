"""Per-run time series and cross-run summary statistics.

Runs record one inconsistency count and one load sample per probe second.
Summaries over independent runs report mean, sample standard deviation,
min, max and the 95% confidence half-width from the Student t
distribution; "significant difference" is non-overlap of the 95% CIs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _sps


@dataclass
class RunMetrics:
    """Per-second series from one run plus its configuration fingerprint.

    monitor_load_series tracks the busiest infrastructure entity per second
    and is empty for the P2P protocols.
    """

    n: int
    protocol: str
    topology: str
    k: int
    rate_pct_per_min: float
    seed: int
    inconsistency_series: np.ndarray
    load_series: np.ndarray
    monitor_load_series: np.ndarray = field(
        default_factory=lambda: np.empty(0, dtype=np.float64))


def inconsistency_fraction(run: RunMetrics, warmup: int = 0) -> float:
    """Time-average of (inconsistent count / n) over the run."""
    series = run.inconsistency_series[warmup:]
    if len(series) == 0:
        raise ValueError("empty inconsistency series: misconfigured horizon/warmup")
    return float(series.mean()) / run.n


def mean_load(run: RunMetrics, warmup: int = 0) -> float:
    """Time-average of the per-node load series."""
    series = run.load_series[warmup:]
    if len(series) == 0:
        raise ValueError("empty load series: misconfigured horizon/warmup")
    return float(series.mean())


def mean_infra_load(run: RunMetrics, warmup: int = 0) -> float:
    """Time-average of the busiest-infrastructure-entity series (0 if none)."""
    series = run.monitor_load_series[warmup:]
    if len(series) == 0:
        return 0.0
    return float(series.mean())


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    sd: float
    min: float
    max: float
    ci95_halfwidth: float
    sample_count: int


def t_multiplier(sample_count: int) -> float:
    """Two-sided 95% Student-t quantile for sample_count-1 degrees of freedom."""
    if sample_count < 2:
        raise ValueError("t multiplier needs at least 2 samples")
    return float(_sps.t.ppf(0.975, sample_count - 1))


def summarize(values) -> SummaryStats:
    """Mean, sample sd (n-1 denominator), min, max and 95% CI half-width."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size < 2:
        raise ValueError(f"summarize needs >= 2 values, got {arr.size}")
    sd = float(arr.std(ddof=1))
    return SummaryStats(
        mean=float(arr.mean()),
        sd=sd,
        min=float(arr.min()),
        max=float(arr.max()),
        ci95_halfwidth=t_multiplier(arr.size) * sd / math.sqrt(arr.size),
        sample_count=int(arr.size),
    )


def significant_difference(a: SummaryStats, b: SummaryStats) -> bool:
    """True iff the 95% CIs [mean +/- halfwidth] do not overlap."""
    if a.sample_count != b.sample_count:
        raise ValueError("significance comparison needs equal-sized samples")
    return abs(a.mean - b.mean) > a.ci95_halfwidth + b.ci95_halfwidth
