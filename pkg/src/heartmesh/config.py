"""Experiment configuration: defaults, validation, and key=value parsing.

A config describes either a single run set (ExperimentConfig) or a sweep
(SweepSpec, cross-product over the n / rate / topology / protocol axes).
Config files are flat key=value text, one per line, with '#' comments; the
CLI flags mirror the same keys. Unset values reproduce the reference grid:
k = round(sqrt(n)), 10 runs of 3600 s, poll interval 1 s, rewiring
probability 0.1, inversion probability 0.15.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from .failures import FailureModel
from .protocols import PROTOCOLS, ProtocolConfig
from .topology import KINDS, GenParams


class ConfigError(ValueError):
    """Invalid or unknown configuration input (CLI exit code 1)."""


def default_k(n: int) -> int:
    """Subscriptions per node default: round(n^0.5)."""
    return round(math.sqrt(n))


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    k: int | None = None
    topology: str = "random"
    protocol: str = "simple_p2p"
    rate: float = 1.0
    horizon: float = 3600.0
    runs: int = 10
    seed: int = 1
    p_rewire: float = 0.1
    p_invert: float = 0.15
    t_poll: float = 1.0
    t_fresh: float | None = None
    max_age: float = math.inf
    branching: int | None = None
    monitors: int = 1
    gamma_shape: float = 2.0
    warmup: int = 0

    @property
    def resolved_k(self) -> int:
        return default_k(self.n) if self.k is None else self.k

    def validate(self) -> "ExperimentConfig":
        if self.n < 2:
            raise ConfigError(f"n must be >= 2, got {self.n}")
        k = self.resolved_k
        if not 1 <= k < self.n:
            raise ConfigError(f"k must satisfy 1 <= k < n, got k={k}, n={self.n}")
        if self.topology not in KINDS:
            raise ConfigError(f"unknown topology {self.topology!r}; expected one of {KINDS}")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}; expected one of {PROTOCOLS}")
        if self.rate < 0:
            raise ConfigError(f"rate must be >= 0 %/min, got {self.rate}")
        if self.horizon < 0:
            raise ConfigError(f"horizon must be >= 0 s, got {self.horizon}")
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if self.warmup < 0 or (self.horizon and self.warmup >= self.horizon):
            raise ConfigError(f"warmup must be in [0, horizon), got {self.warmup}")
        try:
            self.protocol_config()
            self.gen_params()
            self.failure_model()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def gen_params(self) -> GenParams:
        return GenParams(k=self.resolved_k, p_rewire=self.p_rewire,
                         p_invert=self.p_invert)

    def protocol_config(self) -> ProtocolConfig:
        return ProtocolConfig(kind=self.protocol, t_poll=self.t_poll,
                              monitor_count=self.monitors, branching=self.branching,
                              t_fresh=self.t_fresh, max_age=self.max_age)

    def failure_model(self) -> FailureModel:
        return FailureModel(rate_pct_per_min=self.rate, gamma_shape=self.gamma_shape)


@dataclass(frozen=True)
class SweepSpec:
    """Cross-product sweep over the four experiment axes."""

    n: tuple[int, ...]
    rate: tuple[float, ...]
    topology: tuple[str, ...] = ("random",)
    protocol: tuple[str, ...] = ("simple_p2p",)
    base: ExperimentConfig = field(default_factory=lambda: ExperimentConfig(n=2))

    def validate(self) -> "SweepSpec":
        for name in ("n", "rate", "topology", "protocol"):
            if not getattr(self, name):
                raise ConfigError(f"sweep axis {name!r} is empty")
        for cfg in self.cells():
            cfg.validate()
        return self

    def cells(self) -> list[ExperimentConfig]:
        """One ExperimentConfig per cross-product cell, in axis order."""
        out = []
        for proto in self.protocol:
            for topo in self.topology:
                for n in self.n:
                    for rate in self.rate:
                        out.append(
                            dataclasses.replace(self.base, n=n, rate=rate,
                                                topology=topo, protocol=proto))
        return out


# ---------------------------------------------------------------------------
# key=value parsing

_AXIS_KEYS = ("n", "rate", "topology", "protocol")

_PARSERS = {
    "n": int,
    "k": int,
    "topology": str,
    "protocol": str,
    "rate": float,
    "horizon": float,
    "runs": int,
    "seed": int,
    "p_rewire": float,
    "p_invert": float,
    "t_poll": float,
    "t_fresh": float,
    "max_age": float,
    "branching": int,
    "monitors": int,
    "gamma_shape": float,
    "warmup": int,
}


def parse_config_text(text: str) -> dict:
    """Parse flat key=value lines ('#' comments) into typed values.

    The four axis keys accept comma-separated lists; everything else is a
    scalar. Unknown keys are rejected.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        val = val.strip()
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        parser = _PARSERS[key]
        try:
            if key in _AXIS_KEYS and "," in val:
                values[key] = tuple(parser(v.strip()) for v in val.split(","))
            else:
                values[key] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {val!r}") from exc
    return values


def experiment_from_values(values: dict) -> ExperimentConfig:
    """Build a single-cell config; axis lists are rejected here."""
    for key in _AXIS_KEYS:
        if isinstance(values.get(key), tuple):
            raise ConfigError(f"{key} must be a single value for a run (got a list); "
                              "use the sweep command for multiple values")
    if "n" not in values:
        raise ConfigError("n is required")
    return ExperimentConfig(**values).validate()


def sweep_from_values(values: dict) -> SweepSpec:
    """Build a sweep; scalar axis values become one-element axes."""
    if "n" not in values:
        raise ConfigError("n is required")
    axes = {}
    base_vals = dict(values)
    for key, default in (("n", None), ("rate", (1.0,)),
                         ("topology", ("random",)), ("protocol", ("simple_p2p",))):
        if key in base_vals:
            v = base_vals.pop(key)
            axes[key] = v if isinstance(v, tuple) else (v,)
        elif default is not None:
            axes[key] = default
        else:
            raise ConfigError(f"{key} is required")
    base = ExperimentConfig(n=axes["n"][0], **base_vals)
    return SweepSpec(base=base, **axes).validate()
