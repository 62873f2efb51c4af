"""The four heartbeat protocols as pluggable poll-event handlers.

Each protocol owns the belief-store representation for the n simulated
nodes (and any infrastructure entities) and exposes the same small surface
to the engine: node ticks, infrastructure events, truth-flip bookkeeping,
revival staling, and record inspection.

Record semantics: a record carries the believed aliveness, observed_at
(the time of the underlying direct observation, preserved across
forwarding) and received_at (when the current holder acquired it).
Centralised and hierarchical stores adjudicate merges by strictly newer
observed_at, so along their tree-shaped flows a fresh direct observation
always wins. The transitive protocol adjudicates by received_at (how
recently the responder refreshed its copy) and its freshness gate also
works on received_at: piggybacked data counts as fresh on receipt even
though its underlying observation may be old. That is the mechanism that
lets forwarding delays accumulate around subscription cycles. observed_at
still travels unchanged and is what the max_age forwarding gate inspects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .events import EventKind

PROTOCOLS = ("centralised", "hierarchical", "simple_p2p", "transitive_p2p")

NEG_INF = float("-inf")
_STALE_EPS = 1e-9


@dataclass(frozen=True)
class BeliefRecord:
    target: int
    believed_alive: bool
    observed_at: float
    received_at: float


@dataclass(frozen=True)
class ProtocolConfig:
    """Protocol kind plus its knobs.

    t_poll is identical across protocols by default; t_fresh defaults to
    t_poll and max_age to unbounded. branching defaults to ceil(sqrt(n))
    (two hierarchy levels) and is resolved when a world is built.
    """

    kind: str
    t_poll: float = 1.0
    monitor_count: int = 1
    branching: int | None = None
    t_fresh: float | None = None
    max_age: float = math.inf

    def __post_init__(self) -> None:
        if self.kind not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.kind!r}; expected one of {PROTOCOLS}")
        if self.t_poll <= 0:
            raise ValueError(f"t_poll must be > 0, got {self.t_poll}")
        if self.monitor_count < 1:
            raise ValueError(f"monitor_count must be >= 1, got {self.monitor_count}")
        if self.branching is not None and self.branching < 2:
            raise ValueError(f"branching must be >= 2, got {self.branching}")
        if self.t_fresh is not None and self.t_fresh < 0:
            raise ValueError(f"t_fresh must be >= 0, got {self.t_fresh}")
        if self.max_age < 0:
            raise ValueError(f"max_age must be >= 0, got {self.max_age}")

    def resolved_t_fresh(self) -> float:
        return self.t_poll if self.t_fresh is None else self.t_fresh

    def resolved_branching(self, n: int) -> int:
        return max(2, math.ceil(math.sqrt(n))) if self.branching is None else self.branching


# ---------------------------------------------------------------------------
# hierarchy structure


@dataclass
class Aggregator:
    index: int
    level: int
    members: list[int]  # node ids at level 0, child aggregator ids above
    parent: int | None = None


@dataclass
class HierarchyTree:
    branching: int
    aggregators: list[Aggregator]
    levels: list[list[int]]  # aggregator indices per level, level 0 = leaves

    @property
    def root(self) -> int:
        return self.levels[-1][0]

    @property
    def count(self) -> int:
        return len(self.aggregators)


def build_hierarchy(n: int, branching: int) -> HierarchyTree:
    """Group nodes 0..n-1 into leaf aggregators of `branching` members in id
    order, then stack aggregator layers with the same fan-out until a single
    root remains.
    """
    if branching < 2:
        raise ValueError(f"branching must be >= 2, got {branching}")
    aggs: list[Aggregator] = []
    leaves = []
    for lo in range(0, n, branching):
        a = Aggregator(index=len(aggs), level=0,
                       members=list(range(lo, min(lo + branching, n))))
        aggs.append(a)
        leaves.append(a.index)
    levels = [leaves]
    current = leaves
    while len(current) > 1:
        nxt = []
        for lo in range(0, len(current), branching):
            children = current[lo:lo + branching]
            a = Aggregator(index=len(aggs), level=len(levels), members=list(children))
            aggs.append(a)
            for c in children:
                aggs[c].parent = a.index
            nxt.append(a.index)
        levels.append(nxt)
        current = nxt
    return HierarchyTree(branching=branching, aggregators=aggs, levels=levels)


# ---------------------------------------------------------------------------
# Simple P2P
#
# Every tick refreshes all k records with direct observations, so beliefs
# are represented implicitly: a record is truth-at-last-tick, tracked as a
# set of currently-wrong positions per node. This keeps ticks O(wrong set)
# for bookkeeping plus the unavoidable access accounting.


class SimpleP2PState:
    name = "simple_p2p"
    n_infra = 0

    def __init__(self, world, config: ProtocolConfig) -> None:
        n = world.n
        self.last_tick = [0.0] * n
        self.stale_flag = bytearray(n)  # revived but not yet re-polled
        self.wrong_pos: list[set[int]] = [set() for _ in range(n)]

    def initial_events(self, world) -> None:
        pass

    def on_node_tick(self, world, node: int, now: float) -> None:
        indptr = world.indptr
        i0, i1 = indptr[node], indptr[node + 1]
        k = i1 - i0
        acc = world.acc_node
        acc[node] += k
        targets = world.targets
        for p in range(i0, i1):
            acc[targets[p]] += 1
        world.interval_ordinary += 2 * k
        world.total_exchanges += k
        wp = self.wrong_pos[node]
        if wp:
            if world.alive[node]:
                world.incon -= 1
            wp.clear()
            world.wrong_cnt[node] = 0
        self.last_tick[node] = now
        self.stale_flag[node] = 0

    def on_event(self, world, kind: int, entity: int, now: float) -> None:
        raise AssertionError("simple P2P has no infrastructure events")

    def on_truth_flip(self, world, x: int, now: float) -> None:
        wc = world.wrong_cnt
        alive = world.alive
        incon_delta = 0
        for s, pos in world.subs_of[x]:
            wp = self.wrong_pos[s]
            if pos in wp:
                wp.remove(pos)
                wc[s] -= 1
                if wc[s] == 0 and alive[s]:
                    incon_delta -= 1
            else:
                if wc[s] == 0 and alive[s]:
                    incon_delta += 1
                wp.add(pos)
                wc[s] += 1
        world.incon += incon_delta

    def on_revive(self, world, x: int) -> None:
        self.stale_flag[x] = 1

    def belief_of(self, world, node: int, target: int) -> BeliefRecord:
        pos = world.pos_of(node, target)
        wrong = pos in self.wrong_pos[node]
        believed = bool(world.alive[target]) ^ wrong
        stamp = NEG_INF if self.stale_flag[node] else self.last_tick[node]
        return BeliefRecord(target, believed, stamp, stamp)


# ---------------------------------------------------------------------------
# Transitive P2P


def _build_shared_pairs(world):
    """Per directed edge (i -> j): aligned flat positions of the targets both
    i and j subscribe to, plus the target ids. Returned as per-edge python
    tuple lists (fast scalar path) or one packed CSR of numpy arrays.
    """
    indptr, targets = world.indptr, world.targets
    n = world.n
    posmap = [
        {targets[p]: p for p in range(indptr[i], indptr[i + 1])}
        for i in range(n)
    ]
    pairs: list[list[tuple[int, int, int]]] = []
    total = 0
    for i in range(n):
        own = posmap[i]
        for p in range(indptr[i], indptr[i + 1]):
            j = targets[p]
            shared = []
            jmap = posmap[j]
            if len(own) <= len(jmap):
                items = ((t, pi, jmap.get(t)) for t, pi in own.items())
                shared = [(pi, pj, t) for t, pi, pj in items if pj is not None]
            else:
                shared = [(own[t], pj, t) for t, pj in jmap.items() if t in own]
            shared.sort(key=lambda x: x[0])
            pairs.append(shared)
            total += len(shared)
    return pairs, total


class TransitiveP2PState:
    name = "transitive_p2p"
    n_infra = 0

    # above this many (edge, shared-target) pairs the packed numpy layout
    # is used instead of per-edge tuple lists (memory, vector merges)
    ARRAY_LAYOUT_THRESHOLD = 4_000_000

    def __init__(self, world, config: ProtocolConfig) -> None:
        e = world.edge_count
        self.t_fresh = config.resolved_t_fresh()
        self.max_age = config.max_age
        pairs, total = _build_shared_pairs(world)
        layout = world.pair_layout
        if layout == "auto":
            layout = "arrays" if total > self.ARRAY_LAYOUT_THRESHOLD else "lists"
        self.layout = layout
        if layout == "lists":
            self.pairs = pairs
            self.val = [1] * e
            self.obs = [0.0] * e
            self.rec = [0.0] * e
        else:
            offsets = np.zeros(e + 1, dtype=np.int64)
            np.cumsum([len(p) for p in pairs], out=offsets[1:])
            flat = [t for p in pairs for t in p]
            self.pair_pi = np.fromiter((t[0] for t in flat), dtype=np.int32, count=total)
            self.pair_pj = np.fromiter((t[1] for t in flat), dtype=np.int32, count=total)
            self.pair_tgt = np.fromiter((t[2] for t in flat), dtype=np.int32, count=total)
            self.pair_offsets = offsets
            self.val = np.ones(e, dtype=np.int8)
            self.obs = np.zeros(e, dtype=np.float64)
            self.rec = np.zeros(e, dtype=np.float64)

    def initial_events(self, world) -> None:
        pass

    def on_node_tick(self, world, node: int, now: float) -> None:
        if self.layout == "lists":
            self._tick_lists(world, node, now)
        else:
            self._tick_arrays(world, node, now)

    def _tick_lists(self, world, node: int, now: float) -> None:
        indptr = world.indptr
        targets = world.targets
        val, obs, rec = self.val, self.obs, self.rec
        alive = world.alive
        wc = world.wrong_cnt
        acc = world.acc_node
        pairs = self.pairs
        incon = world.incon
        node_alive = alive[node]
        wn = wc[node]
        thresh = now - self.t_fresh + _STALE_EPS  # stale iff rec <= thresh
        age_limit = now - self.max_age  # forwardable iff obs >= age_limit
        polls = 0
        for p in range(indptr[node], indptr[node + 1]):
            if rec[p] > thresh:
                continue
            j = targets[p]
            polls += 1
            acc[j] += 1
            aj = alive[j]
            if val[p] != aj:  # direct observation corrects the record
                val[p] = aj
                wn -= 1
                if wn == 0 and node_alive:
                    incon -= 1
            obs[p] = now
            rec[p] = now
            for pi, pj, tgt in pairs[p]:
                if rec[pj] > rec[pi] and obs[pj] >= age_limit:
                    v = val[pj]
                    if v != val[pi]:
                        if val[pi] == alive[tgt]:  # right record displaced
                            if wn == 0 and node_alive:
                                incon += 1
                            wn += 1
                        else:
                            wn -= 1
                            if wn == 0 and node_alive:
                                incon -= 1
                        val[pi] = v
                    obs[pi] = obs[pj]
                    rec[pi] = now
        if polls:
            acc[node] += polls
            world.interval_ordinary += 2 * polls
            world.total_exchanges += polls
        world.wrong_cnt[node] = wn
        world.incon = incon

    def _tick_arrays(self, world, node: int, now: float) -> None:
        indptr = world.indptr
        i0, i1 = indptr[node], indptr[node + 1]
        val, obs, rec = self.val, self.obs, self.rec
        alive_np = world.alive_np
        thresh = now - self.t_fresh + _STALE_EPS
        age_limit = now - self.max_age
        stale = np.nonzero(rec[i0:i1] <= thresh)[0]
        if len(stale) == 0:
            return
        acc = world.acc_node
        targets = world.targets
        offsets = self.pair_offsets
        wn = world.wrong_cnt[node]
        node_alive = world.alive[node]
        was_incon = wn > 0
        for rel in stale:
            p = i0 + int(rel)
            if rec[p] > thresh:  # refreshed by an earlier poll's piggyback
                continue
            j = targets[p]
            acc[j] += 1
            aj = alive_np[j]
            if val[p] != aj:
                val[p] = aj
                wn -= 1
            obs[p] = now
            rec[p] = now
            s0, s1 = offsets[p], offsets[p + 1]
            if s0 == s1:
                acc[node] += 1
                world.interval_ordinary += 2
                world.total_exchanges += 1
                continue
            pi = self.pair_pi[s0:s1]
            pj = self.pair_pj[s0:s1]
            mask = (rec[pj] > rec[pi]) & (obs[pj] >= age_limit)
            if mask.any():
                pi_m = pi[mask]
                pj_m = pj[mask]
                new_v = val[pj_m]
                old_v = val[pi_m]
                changed = new_v != old_v
                if changed.any():
                    tg = self.pair_tgt[s0:s1][mask][changed]
                    truth = alive_np[tg]
                    became_wrong = int(np.count_nonzero(old_v[changed] == truth))
                    became_right = int(np.count_nonzero(changed)) - became_wrong
                    wn += became_wrong - became_right
                    val[pi_m] = new_v
                obs[pi_m] = obs[pj_m]
                rec[pi_m] = now
            acc[node] += 1
            world.interval_ordinary += 2
            world.total_exchanges += 1
        world.wrong_cnt[node] = wn
        if node_alive:
            if was_incon and wn == 0:
                world.incon -= 1
            elif not was_incon and wn > 0:
                world.incon += 1

    def on_event(self, world, kind: int, entity: int, now: float) -> None:
        raise AssertionError("transitive P2P has no infrastructure events")

    def on_truth_flip(self, world, x: int, now: float) -> None:
        val = self.val
        wc = world.wrong_cnt
        alive = world.alive
        ax = alive[x]
        incon_delta = 0
        for s, pos in world.subs_of[x]:
            if val[pos] != ax:  # became wrong
                if wc[s] == 0 and alive[s]:
                    incon_delta += 1
                wc[s] += 1
            else:
                wc[s] -= 1
                if wc[s] == 0 and alive[s]:
                    incon_delta -= 1
        world.incon += incon_delta

    def on_revive(self, world, x: int) -> None:
        indptr = world.indptr
        i0, i1 = indptr[x], indptr[x + 1]
        if self.layout == "lists":
            for p in range(i0, i1):
                self.obs[p] = NEG_INF
                self.rec[p] = NEG_INF
        else:
            self.obs[i0:i1] = NEG_INF
            self.rec[i0:i1] = NEG_INF

    def belief_of(self, world, node: int, target: int) -> BeliefRecord:
        pos = world.pos_of(node, target)
        return BeliefRecord(target, bool(self.val[pos]),
                            float(self.obs[pos]), float(self.rec[pos]))


# ---------------------------------------------------------------------------
# Centralised


class CentralisedState:
    name = "centralised"

    def __init__(self, world, config: ProtocolConfig) -> None:
        n = world.n
        m = config.monitor_count
        self.n_infra = m
        self.bounds = [(n * i) // m for i in range(m + 1)]
        self.owner = np.empty(n, dtype=np.int32)
        for mi in range(m):
            self.owner[self.bounds[mi]:self.bounds[mi + 1]] = mi
        # monitors partition sweep duty over one shared observation store
        self.store_val = np.ones(n, dtype=np.int8)
        self.store_obs = np.zeros(n, dtype=np.float64)
        e = world.edge_count
        self.val = np.ones(e, dtype=np.int8)
        self.obs = np.zeros(e, dtype=np.float64)
        self.rec = np.zeros(e, dtype=np.float64)

    def initial_events(self, world) -> None:
        for mi in range(self.n_infra):
            world.queue.push(world.infra_phases[mi], EventKind.MONITOR_SWEEP, mi)

    def on_event(self, world, kind: int, mi: int, now: float) -> None:
        lo, hi = self.bounds[mi], self.bounds[mi + 1]
        cnt = hi - lo
        self.store_val[lo:hi] = world.alive_np[lo:hi]
        self.store_obs[lo:hi] = now
        world.acc_infra[mi] += cnt
        world.interval_infra[mi] += cnt
        acc = world.acc_node
        for i in range(lo, hi):
            acc[i] += 1
        world.interval_ordinary += cnt
        world.total_exchanges += cnt

    def on_node_tick(self, world, node: int, now: float) -> None:
        indptr = world.indptr
        i0, i1 = indptr[node], indptr[node + 1]
        idx = world.targets_np[i0:i1]
        # a node's records only ever come from the store and the store only
        # moves forward, so merge-by-strictly-newer-observation reduces to
        # copying the store's current records
        self.val[i0:i1] = self.store_val[idx]
        self.obs[i0:i1] = self.store_obs[idx]
        self.rec[i0:i1] = now
        new_wrong = int(np.count_nonzero(self.val[i0:i1] != world.alive_np[idx]))
        old = world.wrong_cnt[node]
        if new_wrong != old:
            world.wrong_cnt[node] = new_wrong
            if world.alive[node]:
                if old == 0 and new_wrong > 0:
                    world.incon += 1
                elif old > 0 and new_wrong == 0:
                    world.incon -= 1
        mi = int(self.owner[node])
        world.acc_node[node] += 1
        world.acc_infra[mi] += 1
        world.interval_infra[mi] += 1
        world.interval_ordinary += 1
        world.total_exchanges += 1

    def on_truth_flip(self, world, x: int, now: float) -> None:
        val = self.val
        wc = world.wrong_cnt
        alive = world.alive
        ax = alive[x]
        incon_delta = 0
        for s, pos in world.subs_of[x]:
            if int(val[pos]) != ax:
                if wc[s] == 0 and alive[s]:
                    incon_delta += 1
                wc[s] += 1
            else:
                wc[s] -= 1
                if wc[s] == 0 and alive[s]:
                    incon_delta -= 1
        world.incon += incon_delta

    def on_revive(self, world, x: int) -> None:
        indptr = world.indptr
        self.obs[indptr[x]:indptr[x + 1]] = NEG_INF
        self.rec[indptr[x]:indptr[x + 1]] = NEG_INF

    def belief_of(self, world, node: int, target: int) -> BeliefRecord:
        pos = world.pos_of(node, target)
        return BeliefRecord(target, bool(self.val[pos]),
                            float(self.obs[pos]), float(self.rec[pos]))

    def monitor_record(self, target: int) -> BeliefRecord:
        obs = float(self.store_obs[target])
        return BeliefRecord(target, bool(self.store_val[target]), obs, obs)


# ---------------------------------------------------------------------------
# Hierarchical


class HierarchicalState:
    """Aggregator tree with a gather plane and a distribution plane.

    Member polls land in the leaf's gather view, pushes move gather views
    up, pulls move distribution views down, and member queries are served
    from the leaf's distribution view. The two planes meet at the root
    (whose views are one and the same), so every record travels
    leaf -> root -> leaf and a member's staleness for a target does not
    depend on whether the target happens to share its group: the tree, not
    the subscription topology, sets the timeliness.
    """

    name = "hierarchical"

    def __init__(self, world, config: ProtocolConfig) -> None:
        n = world.n
        self.tree = build_hierarchy(n, config.resolved_branching(n))
        a = self.tree.count
        self.n_infra = a
        self.parent = [agg.parent for agg in self.tree.aggregators]
        root = self.tree.root
        self.up_val = [np.ones(n, dtype=np.int8) for _ in range(a)]
        self.up_obs = [np.zeros(n, dtype=np.float64) for _ in range(a)]
        # the root's distribution view aliases its gather view
        self.down_val = [self.up_val[root] if i == root else
                         np.ones(n, dtype=np.int8) for i in range(a)]
        self.down_obs = [self.up_obs[root] if i == root else
                         np.zeros(n, dtype=np.float64) for i in range(a)]
        self.member_leaf = np.empty(n, dtype=np.int32)
        self.leaf_members: dict[int, np.ndarray] = {}
        self.leaf_members_list: dict[int, list[int]] = {}
        for agg in self.tree.aggregators:
            if agg.level == 0:
                members = np.asarray(agg.members, dtype=np.int64)
                self.leaf_members[agg.index] = members
                self.leaf_members_list[agg.index] = agg.members
                self.member_leaf[members] = agg.index
        e = world.edge_count
        self.val = np.ones(e, dtype=np.int8)
        self.obs = np.zeros(e, dtype=np.float64)
        self.rec = np.zeros(e, dtype=np.float64)

    def initial_events(self, world) -> None:
        q = world.queue
        for agg in self.tree.aggregators:
            phase = world.infra_phases[agg.index]
            if agg.parent is not None:
                q.push(phase, EventKind.HIER_PULL, agg.index)
                q.push(phase, EventKind.HIER_PUSH, agg.index)
            if agg.level == 0:
                q.push(phase, EventKind.HIER_POLL, agg.index)

    @staticmethod
    def _merge(dst_val, dst_obs, src_val, src_obs) -> None:
        # strictly newer observations move one hop; nothing is restamped,
        # so data pulled down can never echo back up past fresher polls
        mask = src_obs > dst_obs
        if mask.any():
            dst_val[mask] = src_val[mask]
            dst_obs[mask] = src_obs[mask]

    def on_event(self, world, kind: int, a: int, now: float) -> None:
        if kind == EventKind.HIER_POLL:
            members = self.leaf_members[a]
            self.up_val[a][members] = world.alive_np[members]
            self.up_obs[a][members] = now
            cnt = len(members)
            world.acc_infra[a] += cnt
            world.interval_infra[a] += cnt
            acc = world.acc_node
            for i in self.leaf_members_list[a]:
                acc[i] += 1
            world.interval_ordinary += cnt
            world.total_exchanges += cnt
            return
        p = self.parent[a]
        if kind == EventKind.HIER_PULL:
            self._merge(self.down_val[a], self.down_obs[a],
                        self.down_val[p], self.down_obs[p])
        else:  # HIER_PUSH
            self._merge(self.up_val[p], self.up_obs[p],
                        self.up_val[a], self.up_obs[a])
        world.acc_infra[a] += 1
        world.acc_infra[p] += 1
        world.interval_infra[a] += 1
        world.interval_infra[p] += 1
        world.total_exchanges += 1

    def on_node_tick(self, world, node: int, now: float) -> None:
        indptr = world.indptr
        i0, i1 = indptr[node], indptr[node + 1]
        idx = world.targets_np[i0:i1]
        a = int(self.member_leaf[node])
        # as in the centralised query: the distribution view only moves
        # forward and is the node's sole source, so the strictly-newer
        # merge is a copy
        self.val[i0:i1] = self.down_val[a][idx]
        self.obs[i0:i1] = self.down_obs[a][idx]
        self.rec[i0:i1] = now
        new_wrong = int(np.count_nonzero(self.val[i0:i1] != world.alive_np[idx]))
        old = world.wrong_cnt[node]
        if new_wrong != old:
            world.wrong_cnt[node] = new_wrong
            if world.alive[node]:
                if old == 0 and new_wrong > 0:
                    world.incon += 1
                elif old > 0 and new_wrong == 0:
                    world.incon -= 1
        world.acc_node[node] += 1
        world.acc_infra[a] += 1
        world.interval_infra[a] += 1
        world.interval_ordinary += 1
        world.total_exchanges += 1

    on_truth_flip = CentralisedState.on_truth_flip
    on_revive = CentralisedState.on_revive
    belief_of = CentralisedState.belief_of

    def aggregator_record(self, a: int, target: int,
                          view: str = "down") -> BeliefRecord:
        val = self.down_val[a] if view == "down" else self.up_val[a]
        obs = self.down_obs[a] if view == "down" else self.up_obs[a]
        return BeliefRecord(target, bool(val[target]), float(obs[target]),
                            float(obs[target]))


PROTOCOL_STATES = {
    "simple_p2p": SimpleP2PState,
    "transitive_p2p": TransitiveP2PState,
    "centralised": CentralisedState,
    "hierarchical": HierarchicalState,
}
