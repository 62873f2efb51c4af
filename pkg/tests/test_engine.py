"""Engine-level behaviour: toggles, probes, accounting, determinism."""

import math

import numpy as np
import pytest

from heartmesh import (EventKind, FailureModel, GenParams, ProtocolConfig,
                       SubscriptionGraph, World, gen_random,
                       sample_failure_gap)
from heartmesh.seeding import stream

ALL_PROTOCOLS = ("centralised", "hierarchical", "simple_p2p", "transitive_p2p")


def small_world_for(proto, n=60, k=8, seed=5, rate=60.0, horizon=60.0, **kw):
    g = gen_random(n, k, seed=seed)
    return World(g, ProtocolConfig(proto), FailureModel(rate), seed=seed + 1,
                 horizon=horizon, **kw)


@pytest.mark.parametrize("proto", ALL_PROTOCOLS)
def test_bit_identical_for_identical_seeds(proto):
    a = small_world_for(proto).run()
    b = small_world_for(proto).run()
    assert np.array_equal(a.inconsistency_series, b.inconsistency_series)
    assert np.array_equal(a.load_series, b.load_series)
    assert np.array_equal(a.monitor_load_series, b.monitor_load_series)


@pytest.mark.parametrize("proto", ALL_PROTOCOLS)
def test_zero_failure_rate_zero_inconsistency(proto):
    m = small_world_for(proto, rate=0.0, horizon=30.0).run()
    assert not m.inconsistency_series.any()
    assert m.load_series.shape == (30,)


def test_zero_horizon_empty_series():
    m = small_world_for("simple_p2p", horizon=0.0).run()
    assert len(m.inconsistency_series) == 0
    assert len(m.load_series) == 0


def test_sub_second_horizon_has_no_probe():
    m = small_world_for("simple_p2p", horizon=0.9).run()
    assert len(m.inconsistency_series) == 0


@pytest.mark.parametrize("proto", ALL_PROTOCOLS)
def test_incremental_counter_matches_recount(proto):
    w = small_world_for(proto, rate=120.0, horizon=45.0)
    seen = []
    w.on_probe = lambda world: seen.append(
        (world.incon, world.recount_inconsistent()))
    w.run()
    assert seen and all(inc == rec for inc, rec in seen)


@pytest.mark.parametrize("proto", ALL_PROTOCOLS)
def test_conservation_of_accesses(proto):
    w = small_world_for(proto, rate=30.0, horizon=20.0)
    w.run()
    assert sum(w.acc_node) + sum(w.acc_infra) == 2 * w.total_exchanges


def test_toggle_flips_and_revival_marks_stale():
    g = SubscriptionGraph(3, "random", [[1], [2], [0]], GenParams(k=1), 0)
    w = World(g, ProtocolConfig("simple_p2p"), FailureModel(0.0), seed=1,
              horizon=0.8, node_phases=[0.9, 0.9, 0.9])
    w.queue.push(0.3, EventKind.FAILURE_TOGGLE, 0)  # dies
    w.queue.push(0.5, EventKind.FAILURE_TOGGLE, 0)  # revives fully stale
    w.run()
    assert w.alive[0] == 1
    rec = w.belief_of(0, 1)
    assert rec.believed_alive is True  # value kept, staleness marked
    assert rec.observed_at == float("-inf")
    assert w.toggle_count == 2


@pytest.mark.parametrize("proto", ALL_PROTOCOLS)
def test_probe_counts_subscribers_of_fresh_failure(proto):
    # one node with five subscribers dies just before the probe and after
    # everyone's poll: the probe must count exactly those five
    out = [[1], [0], [0], [0], [0], [0]]
    g = SubscriptionGraph(6, "random", out, GenParams(k=1), 0)
    # n=6 with branching ceil(sqrt(6))=3 gives 2 leaf aggregators + 1 root
    n_infra = {"centralised": 1, "hierarchical": 3}.get(proto, 0)
    w = World(g, ProtocolConfig(proto), FailureModel(0.0), seed=1, horizon=2.5,
              node_phases=[0.9] * 6,
              infra_phases=[0.8] * n_infra if n_infra else None)
    w.queue.push(0.95, EventKind.FAILURE_TOGGLE, 0)
    m = w.run()
    assert m.inconsistency_series[0] == 5


def test_dead_node_not_counted_even_with_wrong_beliefs():
    # 0 and 2 subscribe to 1; 1 dies, then 0 dies too; only 2 is counted
    out = [[1], [0], [1], [2]]
    g = SubscriptionGraph(4, "random", out, GenParams(k=1), 0)
    w = World(g, ProtocolConfig("simple_p2p"), FailureModel(0.0), seed=1,
              horizon=1.0, node_phases=[0.2] * 4)
    w.queue.push(0.5, EventKind.FAILURE_TOGGLE, 1)
    w.queue.push(0.6, EventKind.FAILURE_TOGGLE, 0)
    m = w.run()
    assert m.inconsistency_series[0] == 1
    assert w.belief_of(0, 1).believed_alive is True  # wrong, but 0 is dead


def test_belief_store_keys_are_exactly_subscriptions():
    for proto in ALL_PROTOCOLS:
        w = small_world_for(proto, rate=60.0, horizon=10.0)
        w.run()
        for node in (0, 7, 33):
            assert set(w.beliefs_of(node)) == set(w.graph.out_edges[node])
        with pytest.raises(KeyError):
            target = next(t for t in range(w.n) if t not in w.graph.out_edges[0]
                          and t != 0)
            w.belief_of(0, target)


def test_toggle_count_tracks_configured_rate():
    # 1%/min of 10^3 nodes and 10%/min of 10^2 both mean 10 toggles/min;
    # renewal count over 3600 s should land within +/-10% of 600
    counts = []
    for seed in range(10):
        rng = stream(seed, "failures")
        model = FailureModel(1.0)
        t, count = 0.0, 0
        while True:
            t += sample_failure_gap(model, 1000, rng)
            rng.integers(1000)  # target draw, interleaved as in the engine
            if t > 3600:
                break
            count += 1
        counts.append(count)
    mean = sum(counts) / len(counts)
    assert abs(mean - 600) <= 60
    assert all(abs(c - 600) <= 0.15 * 600 for c in counts)


def test_engine_toggle_fidelity_full_run():
    g = gen_random(100, 10, seed=0)
    w = World(g, ProtocolConfig("simple_p2p"), FailureModel(10.0), seed=3,
              horizon=3600.0)
    w.run()
    assert 0.85 * 600 <= w.toggle_count <= 1.15 * 600


def test_received_at_never_decreases_without_revival():
    # with no failures at all, every protocol's records only move forward
    for proto in ALL_PROTOCOLS:
        w = small_world_for(proto, n=30, k=4, rate=0.0, horizon=15.0)
        last: dict[tuple[int, int], float] = {}
        violations = []

        def check(world):
            for node in range(world.n):
                for t, rec in world.beliefs_of(node).items():
                    key = (node, t)
                    if key in last and rec.received_at < last[key]:
                        violations.append((proto, key))
                    last[key] = rec.received_at

        w.on_probe = check
        w.run()
        assert not violations


def test_observed_at_monotone_for_tree_protocols():
    # centralised and hierarchical adjudicate by observation time, so the
    # observed_at stamp itself never goes backwards at a holder
    for proto in ("centralised", "hierarchical", "simple_p2p"):
        w = small_world_for(proto, n=30, k=4, rate=0.0, horizon=15.0)
        last: dict[tuple[int, int], float] = {}
        bad = []

        def check(world):
            for node in range(world.n):
                for t, rec in world.beliefs_of(node).items():
                    key = (node, t)
                    if key in last and rec.observed_at < last[key]:
                        bad.append(key)
                    last[key] = rec.observed_at

        w.on_probe = check
        w.run()
        assert not bad


def test_world_runs_only_once():
    w = small_world_for("simple_p2p", horizon=5.0)
    w.run()
    with pytest.raises(RuntimeError):
        w.run()


def test_negative_horizon_rejected():
    g = gen_random(10, 2, seed=0)
    with pytest.raises(ValueError):
        World(g, ProtocolConfig("simple_p2p"), FailureModel(1.0), seed=0,
              horizon=-1.0)
