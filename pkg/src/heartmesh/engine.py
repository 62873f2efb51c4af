"""Single-run discrete-event simulation engine.

A World wires a subscription graph, a protocol, and a failure model into
one deterministic event loop. Each node's polling agent ticks once per
poll interval at an independent uniform phase; a global gamma-paced stream
of failure toggles flips node states; a probe at every whole second counts
inconsistent nodes and snapshots per-interval network accesses.

Model notes:
  * A toggle flips only the node's advertised state. While the state is
    "dead" the node is skipped by the inconsistency probe and direct polls
    of it observe "dead", but its polling agent keeps its schedule and its
    reply cache stays available, so network load is independent of the
    failure rate. On revival the node's own belief store is marked fully
    stale (it must re-learn all its subscriptions).
  * Inconsistency is tracked incrementally: the engine maintains, per
    node, the count of belief records that currently disagree with the
    truth, and a running count of alive nodes with at least one wrong
    record, so the per-second probe is O(1).
"""

from __future__ import annotations

import math

import numpy as np

from .events import EventKind, EventQueue
from .failures import FailureModel, sample_failure_gap
from .metrics import RunMetrics
from .protocols import PROTOCOL_STATES, BeliefRecord, ProtocolConfig
from .seeding import stream
from .topology import SubscriptionGraph


class World:
    """State and event loop of one simulation run.

    node_phases / infra_phases override the random poll phases (used by
    deterministic trace tests); pair_layout forces the transitive
    piggyback-index layout ("lists" | "arrays" | "auto").
    """

    def __init__(
        self,
        graph: SubscriptionGraph,
        protocol: ProtocolConfig,
        failure: FailureModel,
        seed: int,
        horizon: float = 3600.0,
        node_phases=None,
        infra_phases=None,
        pair_layout: str = "auto",
        on_probe=None,
    ) -> None:
        if horizon < 0:
            raise ValueError(f"horizon must be >= 0, got {horizon}")
        self.graph = graph
        self.config = protocol
        self.failure = failure
        self.seed = seed
        self.horizon = float(horizon)
        self.pair_layout = pair_layout
        self.on_probe = on_probe  # callable(world), invoked after each probe
        n = graph.n
        self.n = n

        indptr_np, targets_np = graph.csr()
        self.indptr: list[int] = indptr_np.tolist()
        self.targets: list[int] = targets_np.tolist()
        self.targets_np = targets_np.astype(np.int64)
        self.edge_count = len(self.targets)

        # reverse adjacency: for target x, the (subscriber, flat position) list
        self.subs_of: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for i in range(n):
            for p in range(self.indptr[i], self.indptr[i + 1]):
                self.subs_of[self.targets[p]].append((i, p))

        self.alive: list[int] = [1] * n
        self.alive_np = np.ones(n, dtype=np.int8)
        self.alive_count = n
        self.wrong_cnt: list[int] = [0] * n
        self.incon = 0
        self.toggle_count = 0

        self.acc_node: list[int] = [0] * n
        self.interval_ordinary = 0
        self.total_exchanges = 0

        self.queue = EventQueue()
        t_poll = protocol.t_poll
        rng_phase = stream(seed, "phases")
        if node_phases is None:
            node_phases = rng_phase.uniform(0.0, t_poll, size=n)
        self.node_phases = [float(p) for p in node_phases]

        state_cls = PROTOCOL_STATES[protocol.kind]
        # infra phases must be drawable before the state schedules its events
        self._rng_phase = rng_phase
        self._pending_infra_phases = infra_phases
        self.infra_phases: list[float] = []
        self.protocol_state = state_cls(self, protocol)
        n_infra = self.protocol_state.n_infra
        if self._pending_infra_phases is not None:
            self.infra_phases = [float(p) for p in self._pending_infra_phases]
        else:
            self.infra_phases = [float(p) for p in
                                 rng_phase.uniform(0.0, t_poll, size=n_infra)]
        if len(self.infra_phases) != n_infra:
            raise ValueError(f"expected {n_infra} infra phases, got {len(self.infra_phases)}")
        self.acc_infra: list[int] = [0] * n_infra
        self.interval_infra: list[int] = [0] * n_infra

        for i in range(n):
            self.queue.push(self.node_phases[i], EventKind.POLL_TICK, i)
        self.protocol_state.initial_events(self)
        if self.horizon >= 1.0:
            self.queue.push(1.0, EventKind.PROBE, 0)

        self.rng_fail = stream(seed, "failures")
        if failure.rate_pct_per_min > 0:
            self._schedule_next_toggle(0.0)

        self.incon_series: list[int] = []
        self.load_series: list[float] = []
        self.infra_series: list[float] = []
        self._ran = False

    # ------------------------------------------------------------------
    # event handlers

    def _schedule_next_toggle(self, now: float) -> None:
        gap = sample_failure_gap(self.failure, self.n, self.rng_fail)
        target = int(self.rng_fail.integers(self.n))
        if math.isfinite(gap):
            self.queue.push(now + gap, EventKind.FAILURE_TOGGLE, target)

    def _on_toggle(self, x: int, now: float) -> None:
        if self.alive[x]:  # dying
            if self.wrong_cnt[x] > 0:
                self.incon -= 1
            self.alive[x] = 0
            self.alive_np[x] = 0
            self.alive_count -= 1
        else:  # reviving: state returns, belief store is fully stale
            self.alive[x] = 1
            self.alive_np[x] = 1
            self.alive_count += 1
            self.protocol_state.on_revive(self, x)
            if self.wrong_cnt[x] > 0:
                self.incon += 1
        self.protocol_state.on_truth_flip(self, x, now)
        self.toggle_count += 1
        self._schedule_next_toggle(now)

    def _on_probe(self) -> None:
        self.incon_series.append(self.incon)
        self.load_series.append(self.interval_ordinary / self.n)
        self.interval_ordinary = 0
        if self.acc_infra:
            self.infra_series.append(float(max(self.interval_infra)))
            for i in range(len(self.interval_infra)):
                self.interval_infra[i] = 0
        if self.on_probe is not None:
            self.on_probe(self)

    # ------------------------------------------------------------------

    def run(self) -> RunMetrics:
        """Process events up to and including the horizon; return the series."""
        if self._ran:
            raise RuntimeError("a World can only run once")
        self._ran = True
        queue = self.queue
        horizon = self.horizon
        t_poll = self.config.t_poll
        state = self.protocol_state
        on_tick = state.on_node_tick
        on_event = state.on_event
        push = queue.push
        while queue and queue.peek_time() <= horizon:
            t, kind, entity = queue.pop()
            if kind == EventKind.POLL_TICK:
                on_tick(self, entity, t)
                push(t + t_poll, kind, entity)
            elif kind == EventKind.FAILURE_TOGGLE:
                self._on_toggle(entity, t)
            elif kind == EventKind.PROBE:
                self._on_probe()
                push(t + 1.0, kind, 0)
            else:
                on_event(self, kind, entity, t)
                push(t + t_poll, kind, entity)
        return RunMetrics(
            n=self.n,
            protocol=self.config.kind,
            topology=self.graph.kind,
            k=self.graph.k,
            rate_pct_per_min=self.failure.rate_pct_per_min,
            seed=self.seed,
            inconsistency_series=np.asarray(self.incon_series, dtype=np.int64),
            load_series=np.asarray(self.load_series, dtype=np.float64),
            monitor_load_series=np.asarray(self.infra_series, dtype=np.float64),
        )

    # ------------------------------------------------------------------
    # inspection (tests, demos)

    def pos_of(self, node: int, target: int) -> int:
        """Flat position of (node -> target), or raise if not subscribed."""
        if not hasattr(self, "_posmaps"):
            self._posmaps: list[dict[int, int] | None] = [None] * self.n
        pm = self._posmaps[node]
        if pm is None:
            pm = {self.targets[p]: p
                  for p in range(self.indptr[node], self.indptr[node + 1])}
            self._posmaps[node] = pm
        if target not in pm:
            raise KeyError(f"node {node} does not subscribe to {target}")
        return pm[target]

    def belief_of(self, node: int, target: int) -> BeliefRecord:
        return self.protocol_state.belief_of(self, node, target)

    def beliefs_of(self, node: int) -> dict[int, BeliefRecord]:
        """All of a node's records, keyed by target (= its subscription list)."""
        return {t: self.belief_of(node, t)
                for t in self.graph.out_edges[node]}

    def accesses_total(self, node: int) -> int:
        return self.acc_node[node]

    def infra_accesses_total(self, entity: int) -> int:
        return self.acc_infra[entity]

    def recount_inconsistent(self) -> int:
        """Brute-force recount of inconsistent nodes (oracle for the
        incremental counter)."""
        count = 0
        for i in range(self.n):
            if not self.alive[i]:
                continue
            for t in self.graph.out_edges[i]:
                if self.belief_of(i, t).believed_alive != bool(self.alive[t]):
                    count += 1
                    break
        return count


def simulate(
    graph: SubscriptionGraph,
    protocol: ProtocolConfig,
    failure: FailureModel,
    seed: int,
    horizon: float = 3600.0,
    **kwargs,
) -> RunMetrics:
    """Build a world, run it, return its metrics."""
    return World(graph, protocol, failure, seed, horizon, **kwargs).run()
