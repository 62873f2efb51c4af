"""heartmesh: discrete-event simulation of heartbeat/status propagation in
large data centres, over random, lattice, small-world and scale-free
subscription networks, under four monitoring protocols.
"""

from .config import ConfigError, ExperimentConfig, SweepSpec, default_k
from .engine import World, simulate
from .events import Event, EventKind, EventQueue
from .failures import FailureModel, sample_failure_gap
from .metrics import (RunMetrics, SummaryStats, inconsistency_fraction,
                      mean_infra_load, mean_load, significant_difference,
                      summarize, t_multiplier)
from .protocols import (PROTOCOLS, BeliefRecord, HierarchyTree, ProtocolConfig,
                        build_hierarchy)
from .sweep import emit_plot_data, execute_run, run_sweep
from .topology import (KINDS, GenParams, GraphMetrics, SubscriptionGraph,
                       clustering_coefficient, degree_stats, from_edgelist,
                       gen_lattice, gen_random, gen_scale_free,
                       gen_small_world, generate, to_edgelist, validate_graph)

__version__ = "0.1.0"

__all__ = [
    "BeliefRecord", "ConfigError", "Event", "EventKind", "EventQueue",
    "ExperimentConfig", "FailureModel", "GenParams", "GraphMetrics",
    "HierarchyTree", "KINDS", "PROTOCOLS", "ProtocolConfig", "RunMetrics",
    "SubscriptionGraph", "SummaryStats", "SweepSpec", "World",
    "build_hierarchy", "clustering_coefficient", "default_k", "degree_stats",
    "emit_plot_data", "execute_run", "from_edgelist", "gen_lattice",
    "gen_random", "gen_scale_free", "gen_small_world", "generate",
    "inconsistency_fraction", "mean_infra_load", "mean_load", "run_sweep",
    "sample_failure_gap", "significant_difference", "simulate", "summarize",
    "t_multiplier", "to_edgelist", "validate_graph",
]
