"""Per-protocol behaviour: traces with pinned phases, load accounting,
hierarchy construction, piggyback mechanics, and the max-age knob."""

import math

import numpy as np
import pytest

from heartmesh import (EventKind, FailureModel, GenParams, ProtocolConfig,
                       SubscriptionGraph, World, build_hierarchy, gen_lattice,
                       gen_random)

INF = float("inf")


def graph_of(out_edges, k):
    return SubscriptionGraph(len(out_edges), "random",
                             [list(t) for t in out_edges], GenParams(k=k), 0)


# ---------------------------------------------------------------------------
# hierarchy construction


def test_build_hierarchy_two_groups():
    tree = build_hierarchy(4, 2)
    assert len(tree.levels) == 2
    assert len(tree.levels[0]) == 2 and len(tree.levels[1]) == 1
    leaves = [tree.aggregators[i] for i in tree.levels[0]]
    assert [a.members for a in leaves] == [[0, 1], [2, 3]]
    assert all(a.parent == tree.root for a in leaves)


def test_build_hierarchy_hundred_nodes():
    tree = build_hierarchy(100, 10)
    assert tree.count == 11  # 10 leaf groups + 1 root
    assert len(tree.levels) == 2


def test_build_hierarchy_ten_thousand():
    tree = build_hierarchy(10_000, 100)
    assert tree.count == 101
    assert len(tree.levels) == 2


def test_build_hierarchy_every_node_in_one_leaf():
    tree = build_hierarchy(37, 4)
    seen = []
    for idx in tree.levels[0]:
        agg = tree.aggregators[idx]
        assert len(agg.members) <= 4
        seen.extend(agg.members)
    assert sorted(seen) == list(range(37))


def test_build_hierarchy_single_group_is_root():
    tree = build_hierarchy(3, 4)
    assert tree.count == 1
    assert tree.aggregators[0].parent is None


# ---------------------------------------------------------------------------
# hierarchical protocol


def test_hierarchical_cross_group_propagation_takes_four_ticks():
    # groups {0,1} and {2,3}; only node 2 watches across groups (node 0);
    # all phases pinned to zero; a failure at t=0.5 must reach node 2's
    # belief exactly at t=4: leaf-A poll, push to root, leaf-B pull, query
    g = graph_of([[1], [3], [0], [2]], k=1)
    w = World(g, ProtocolConfig("hierarchical", branching=2), FailureModel(0.0),
              seed=1, horizon=4.0, node_phases=[0.0] * 4,
              infra_phases=[0.0] * 3)
    w.queue.push(0.5, EventKind.FAILURE_TOGGLE, 0)
    m = w.run()
    assert list(m.inconsistency_series) == [1, 1, 1, 0]
    rec = w.belief_of(2, 0)
    assert rec.believed_alive is False
    assert rec.observed_at == 1.0  # leaf-A's direct poll, stamp preserved
    assert rec.received_at == 4.0  # delivered by the t=4 query


def test_hierarchical_same_group_routes_through_root_too():
    # member 1 watches its group-mate 0, yet the record still travels
    # gather-up / distribute-down: same four ticks as the cross-group path,
    # so timeliness never depends on how subscriptions align with groups
    g = graph_of([[1], [0], [3], [2]], k=1)
    w = World(g, ProtocolConfig("hierarchical", branching=2), FailureModel(0.0),
              seed=1, horizon=4.0, node_phases=[0.0] * 4,
              infra_phases=[0.0] * 3)
    w.queue.push(0.5, EventKind.FAILURE_TOGGLE, 0)
    m = w.run()
    assert list(m.inconsistency_series) == [1, 1, 1, 0]


def test_hierarchical_load_split():
    g = gen_random(100, 10, seed=2)
    w = World(g, ProtocolConfig("hierarchical"), FailureModel(0.0), seed=3,
              horizon=10.0)
    m = w.run()
    # every node is polled once and queries once per second
    assert np.allclose(m.load_series, 2.0)
    assert len(m.monitor_load_series) == 10
    assert (m.monitor_load_series > 0).all()


# ---------------------------------------------------------------------------
# centralised protocol


def centralised_world(horizon, failure_at):
    g = graph_of([[1], [0], [0], [2]], k=1)
    w = World(g, ProtocolConfig("centralised"), FailureModel(0.0), seed=1,
              horizon=horizon, node_phases=[0.8] * 4, infra_phases=[0.5])
    w.queue.push(failure_at, EventKind.FAILURE_TOGGLE, 0)
    return w


def test_centralised_query_after_sweep_is_correct():
    # failure 4.2 -> sweep 4.5 observes it -> query 4.8 learns it
    w = centralised_world(horizon=4.9, failure_at=4.2)
    w.run()
    rec = w.belief_of(2, 0)
    assert rec.believed_alive is False
    assert rec.observed_at == 4.5


def test_centralised_failure_after_sweep_waits_a_cycle():
    # failure 4.6 misses the 4.5 sweep; the 4.8 query stays wrong; only the
    # 5.5 sweep + 5.8 query fix it (two-hop staleness)
    w = centralised_world(horizon=6.0, failure_at=4.6)
    m = w.run()
    assert m.inconsistency_series[4] >= 1  # probe at t=5
    assert m.inconsistency_series[5] == 0  # probe at t=6
    assert w.belief_of(2, 0).believed_alive is False


def test_centralised_load_two_per_node_and_2n_per_monitor():
    g = gen_random(100, 10, seed=4)
    w = World(g, ProtocolConfig("centralised"), FailureModel(0.0), seed=5,
              horizon=10.0)
    m = w.run()
    assert np.allclose(m.load_series, 2.0)  # one sweep touch + one query
    assert np.allclose(m.monitor_load_series, 200.0)  # n polls + n queries


def test_centralised_two_monitors_split_the_sweep():
    g = gen_random(100, 10, seed=4)
    w = World(g, ProtocolConfig("centralised", monitor_count=2),
              FailureModel(0.0), seed=5, horizon=10.0)
    m = w.run()
    # each monitor sweeps its 50 nodes and answers their 50 queries
    assert w.infra_accesses_total(0) == 1000
    assert w.infra_accesses_total(1) == 1000
    assert np.allclose(m.load_series, 2.0)
    assert np.allclose(m.monitor_load_series, 100.0)


def test_monitor_record_inspection():
    w = centralised_world(horizon=4.9, failure_at=4.2)
    w.run()
    rec = w.protocol_state.monitor_record(0)
    assert rec.believed_alive is False and rec.observed_at == 4.5


# ---------------------------------------------------------------------------
# simple P2P


def test_simple_tick_accesses():
    # complete 3-node digraph: after each node's first tick everyone has
    # initiated k=2 and served 2 incoming polls
    g = graph_of([[1, 2], [0, 2], [0, 1]], k=2)
    w = World(g, ProtocolConfig("simple_p2p"), FailureModel(0.0), seed=1,
              horizon=1.0, node_phases=[0.1, 0.5, 0.9])
    w.run()
    assert [w.accesses_total(i) for i in range(3)] == [4, 4, 4]
    assert w.total_exchanges == 6


def test_simple_direct_observation_of_dead_target():
    g = graph_of([[1], [0]], k=1)
    w = World(g, ProtocolConfig("simple_p2p"), FailureModel(0.0), seed=1,
              horizon=5.0, node_phases=[0.9, 0.9])
    w.queue.push(4.2, EventKind.FAILURE_TOGGLE, 1)
    w.run()
    rec = w.belief_of(0, 1)
    assert rec.believed_alive is False
    assert rec.observed_at == 4.9


def test_simple_steady_state_wrongness_window_half_second():
    # at a low failure rate, windows are disjoint: the measured fraction
    # over a long run inverts to the mean believed-wrong window, which for
    # uniform phases is U(0,1) with mean 0.5
    n, k, rate, horizon = 200, 10, 5.0, 900
    fracs = []
    alive_avg = []
    for seed in (1, 2):
        g = gen_random(n, k, seed=seed)
        w = World(g, ProtocolConfig("simple_p2p"), FailureModel(rate),
                  seed=seed, horizon=horizon)
        alive = []
        w.on_probe = lambda world: alive.append(world.alive_count)
        m = w.run()
        fracs.append(m.inconsistency_series.mean() / n)
        alive_avg.append(np.mean(alive) / n)
    lam = rate / 100 / 60  # per-target toggles per second
    window = np.mean(fracs) / (k * lam * np.mean(alive_avg))
    assert 0.42 <= window <= 0.58  # ~300 toggles x k windows: +/-3 sigma


# ---------------------------------------------------------------------------
# transitive P2P


def test_transitive_fresh_records_mean_zero_polls():
    # every record starts observed-at-0, so each node's first tick (phase
    # < t_fresh) finds everything fresh and polls nothing
    g = gen_random(30, 5, seed=7)
    w = World(g, ProtocolConfig("transitive_p2p"), FailureModel(0.0), seed=8,
              horizon=0.99)
    w.run()
    assert w.total_exchanges == 0


def test_transitive_piggyback_suppresses_direct_poll():
    # A subscribes to [B, X]; B's record of X was refreshed recently, so
    # polling B piggybacks X and A never contacts X this tick
    g = graph_of([[1, 2], [2, 0], [0, 1]], k=2)
    w = World(g, ProtocolConfig("transitive_p2p"), FailureModel(0.0), seed=1,
              horizon=1.6, node_phases=[0.5, 0.9, 0.95])
    st = w.protocol_state
    b_x = w.pos_of(1, 2)
    st.val[b_x] = 0  # B believes X is dead
    st.obs[b_x] = 1.4
    st.rec[b_x] = 1.4
    w.run()
    rec = w.belief_of(0, 2)
    assert rec.believed_alive is False  # adopted B's record
    assert rec.observed_at == 1.4  # original observation time preserved
    assert rec.received_at == 1.5  # restamped on receipt
    assert w.accesses_total(2) == 0  # X itself was never polled
    assert w.accesses_total(1) == 1  # one poll, from A


def test_transitive_max_age_blocks_old_forwards():
    g = graph_of([[1, 2], [2, 0], [0, 1]], k=2)
    w = World(g, ProtocolConfig("transitive_p2p", max_age=0.05),
              FailureModel(0.0), seed=1, horizon=1.6,
              node_phases=[0.5, 0.9, 0.95])
    st = w.protocol_state
    b_x = w.pos_of(1, 2)
    st.val[b_x] = 0
    st.obs[b_x] = 1.4  # 0.1 old at A's tick: over the 0.05 limit
    st.rec[b_x] = 1.4
    w.run()
    assert w.belief_of(0, 2).believed_alive is True  # forward rejected
    assert w.accesses_total(2) == 1  # so X was polled directly


def zero_overlap_graph():
    # front nodes watch only back nodes and vice versa: no two connected
    # nodes share any subscription target
    out = [[j for j in range(10, 20)] for _ in range(10)] + \
          [[j for j in range(10)] for _ in range(10)]
    return SubscriptionGraph(20, "random", out, GenParams(k=10), 0)


def test_transitive_degenerates_to_simple_without_overlap():
    g = zero_overlap_graph()
    runs = {}
    for proto in ("simple_p2p", "transitive_p2p"):
        w = World(g, ProtocolConfig(proto), FailureModel(50.0), seed=4,
                  horizon=60.0)
        runs[proto] = w.run()
    ms, mt = runs["simple_p2p"], runs["transitive_p2p"]
    # identical belief dynamics and load once past the initial freshness
    # window; the only saving the gate provides is the very first tick
    assert np.array_equal(ms.inconsistency_series[2:], mt.inconsistency_series[2:])
    assert np.array_equal(ms.load_series[2:], mt.load_series[2:])
    assert mt.load_series[0] == 0.0 and ms.load_series[0] == 20.0
    assert mt.load_series[2] == 2 * 10  # k polls per tick, both endpoints


def test_transitive_initiated_accesses_capped_by_k():
    g = zero_overlap_graph()
    w = World(g, ProtocolConfig("transitive_p2p"), FailureModel(50.0), seed=4,
              horizon=60.0)
    m = w.run()
    assert (m.load_series <= 2 * 10 + 1e-9).all()


def test_transitive_pair_layouts_equivalent():
    g = gen_lattice(64, 8)
    metrics = {}
    for layout in ("lists", "arrays"):
        w = World(g, ProtocolConfig("transitive_p2p"), FailureModel(120.0),
                  seed=6, horizon=90.0, pair_layout=layout)
        metrics[layout] = w.run()
    a, b = metrics["lists"], metrics["arrays"]
    assert np.array_equal(a.inconsistency_series, b.inconsistency_series)
    assert np.array_equal(a.load_series, b.load_series)


def test_transitive_max_age_trades_load_for_consistency():
    # with unbounded forwarding, stale data recirculates dense overlapping
    # neighbourhoods and inconsistency climbs; capping the forwardable age
    # forces direct polls: fewer inconsistencies, more accesses
    g = gen_lattice(100, 10)
    results = {}
    for max_age in (INF, 0.2):
        w = World(g, ProtocolConfig("transitive_p2p", max_age=max_age),
                  FailureModel(30.0), seed=2, horizon=300.0)
        m = w.run()
        results[max_age] = (m.inconsistency_series.mean() / 100,
                            m.load_series.mean())
    frac_inf, load_inf = results[INF]
    frac_cap, load_cap = results[0.2]
    assert frac_inf > 5 * frac_cap
    assert load_cap > 1.5 * load_inf


def test_transitive_revival_relearns_everything():
    def run_until(horizon):
        g = gen_lattice(36, 6)
        w = World(g, ProtocolConfig("transitive_p2p"), FailureModel(0.0),
                  seed=3, horizon=horizon, node_phases=[0.5] * 36)
        w.queue.push(2.6, EventKind.FAILURE_TOGGLE, 0)
        w.queue.push(2.7, EventKind.FAILURE_TOGGLE, 0)  # revive, fully stale
        w.run()
        return w

    before = run_until(3.4).beliefs_of(0)  # revived, not yet re-polled
    assert all(r.observed_at == float("-inf") for r in before.values())
    assert all(r.believed_alive for r in before.values())  # values kept
    after = run_until(3.6).beliefs_of(0)  # first tick after revival
    assert all(r.received_at == 3.5 for r in after.values())
    assert all(r.observed_at > float("-inf") for r in after.values())


def test_infra_series_presence():
    g = gen_random(40, 5, seed=1)
    for proto, has_infra in [("simple_p2p", False), ("transitive_p2p", False),
                             ("centralised", True), ("hierarchical", True)]:
        m = World(g, ProtocolConfig(proto), FailureModel(1.0), seed=2,
                  horizon=5.0).run()
        assert (len(m.monitor_load_series) > 0) == has_infra


def test_hierarchical_single_aggregator_tree():
    # n <= branching: the lone leaf is the root, no transfers ever fire
    g = graph_of([[1], [2], [0]], k=1)
    w = World(g, ProtocolConfig("hierarchical", branching=4),
              FailureModel(60.0), seed=1, horizon=20.0)
    m = w.run()
    assert len(m.monitor_load_series) == 20
    assert w.incon == w.recount_inconsistent()


def test_simulate_convenience_wrapper():
    from heartmesh import simulate
    g = gen_random(20, 3, seed=1)
    m = simulate(g, ProtocolConfig("simple_p2p"), FailureModel(10.0),
                 seed=2, horizon=10.0)
    assert m.inconsistency_series.shape == (10,)
    assert m.protocol == "simple_p2p" and m.topology == "random"


def test_load_invariant_to_failure_rate_small():
    # quick version of the load-invariance acceptance check
    g = gen_random(50, 7, seed=9)
    for proto in ("centralised", "hierarchical", "simple_p2p", "transitive_p2p"):
        loads = []
        for rate in (0.01, 0.1, 1.0, 10.0):
            m = World(g, ProtocolConfig(proto), FailureModel(rate), seed=11,
                      horizon=60.0).run()
            loads.append(m.load_series.mean())
        spread = (max(loads) - min(loads)) / np.mean(loads)
        assert spread < 0.05, proto
