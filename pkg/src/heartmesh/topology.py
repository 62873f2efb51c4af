"""Directed subscription-network generators and graph metrics.

Four families: uniform random, 2D grid lattice, rewired ring (small-world)
and preferential-attachment growth with edge inversion (scale-free). Node
i's out-edges are the nodes whose aliveness i polls. Clustering and path
lengths are computed on the undirected projection (edge {i,j} exists iff
i->j or j->i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .seeding import stream

KINDS = ("random", "lattice", "smallworld", "scalefree")


@dataclass(frozen=True)
class GenParams:
    """Generator knobs: out-degree k plus the two structure probabilities."""

    k: int
    p_rewire: float = 0.0
    p_invert: float = 0.0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        for name in ("p_rewire", "p_invert"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {p}")


@dataclass
class SubscriptionGraph:
    """A directed subscription network.

    out_edges[i] is the ordered list of distinct targets node i polls.
    Generators guarantee: no self-edges, no duplicates, ids in [0, n).
    """

    n: int
    kind: str
    out_edges: list[list[int]]
    gen_params: GenParams
    seed: int
    _indptr: np.ndarray | None = field(default=None, repr=False, compare=False)
    _targets: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def k(self) -> int:
        return self.gen_params.k

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened (indptr, targets) view of out_edges, cached."""
        if self._indptr is None:
            counts = np.fromiter((len(t) for t in self.out_edges), dtype=np.int64,
                                 count=self.n)
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            targets = np.fromiter(
                (t for ts in self.out_edges for t in ts),
                dtype=np.int32, count=int(indptr[-1]))
            self._indptr, self._targets = indptr, targets
        return self._indptr, self._targets

    @property
    def edge_count(self) -> int:
        return sum(len(t) for t in self.out_edges)


@dataclass
class GraphMetrics:
    """Summary metrics of a subscription graph.

    mean_path_length averages BFS distances on the undirected projection
    over reachable ordered pairs; unreachable_pairs counts the rest (the
    "disconnected" marker: the graph is connected iff it is zero). It is
    NaN when path lengths were not requested or no pair is reachable.
    """

    clustering: float
    mean_out_degree: float
    in_degree_histogram: dict[int, int]
    out_degree_histogram: dict[int, int]
    mean_path_length: float
    unreachable_pairs: int

    @property
    def connected(self) -> bool:
        return self.unreachable_pairs == 0


def validate_graph(g: SubscriptionGraph) -> None:
    """Raise ValueError if g breaks a structural invariant."""
    if len(g.out_edges) != g.n:
        raise ValueError("out_edges length != n")
    for i, targets in enumerate(g.out_edges):
        if i in targets:
            raise ValueError(f"self-edge at node {i}")
        if len(set(targets)) != len(targets):
            raise ValueError(f"duplicate targets at node {i}")
        for t in targets:
            if not 0 <= t < g.n:
                raise ValueError(f"target {t} out of range at node {i}")
    if g.kind in ("random", "lattice", "smallworld"):
        bad = [i for i, t in enumerate(g.out_edges) if len(t) != g.k]
        if bad:
            raise ValueError(f"fixed-degree graph has wrong out-degree at {bad[:5]}")
    elif g.kind == "scalefree":
        if abs(g.edge_count / g.n - g.k) > 1.0:
            raise ValueError("scale-free mean degree off by more than 1")


# ---------------------------------------------------------------------------
# generators


def gen_random(n: int, k: int, seed: int) -> SubscriptionGraph:
    """Each node polls k targets drawn uniformly without replacement."""
    if not 1 <= k <= n - 1:
        raise ValueError(f"random graph needs 1 <= k <= n-1, got k={k}, n={n}")
    rng = stream(seed, "random")
    out = []
    for i in range(n):
        t = rng.choice(n - 1, size=k, replace=False)
        t[t >= i] += 1  # skip self
        out.append([int(x) for x in t])
    return SubscriptionGraph(n, "random", out, GenParams(k=k), seed)


def _lattice_offsets(max_r: int) -> list[tuple[int, int]]:
    """Grid offsets in clockwise spiral order: ring by ring outward, within
    each ring the four orthogonal cells clockwise from directly above, then
    the remaining ring cells clockwise from north."""
    offs = []
    for r in range(1, max_r + 1):
        ring = []
        for dr in range(-r, r + 1):
            for dc in range(-r, r + 1):
                if max(abs(dr), abs(dc)) != r:
                    continue
                on_axis = 0 if (dr == 0 or dc == 0) else 1
                ang = math.atan2(dc, -dr) % (2.0 * math.pi)
                ring.append((on_axis, ang, dr, dc))
        ring.sort()
        offs.extend((dr, dc) for _, _, dr, dc in ring)
    return offs


def gen_lattice(n: int, k: int, seed: int = 0) -> SubscriptionGraph:
    """Grid of width floor(sqrt(n)) filled row-major; node i polls ~its k
    nearest grid cells, collected by spiralling clockwise outward ring by
    ring starting from the cell directly above (each ring: up, right, down,
    left, then the off-axis cells clockwise), with periodic wrapping.
    Wrapped coordinates that land on a missing cell of a partial last row
    are skipped, so every node still gets exactly k targets. The clockwise
    spiral gives every node the same rotational bias in its outermost
    partial ring, which threads long directed cycles through the grid.
    Deterministic; seed is recorded only.
    """
    if n < 4:
        raise ValueError(f"lattice needs n >= 4, got {n}")
    if not 1 <= k <= n - 1:
        raise ValueError(f"lattice needs 1 <= k <= n-1, got k={k}, n={n}")
    width = math.isqrt(n)
    rows = (n + width - 1) // width
    max_r = math.isqrt(k) + 2
    offsets = _lattice_offsets(max_r)
    out = []
    for i in range(n):
        r, c = divmod(i, width)
        targets: list[int] = []
        seen = {i}
        oi = 0
        while len(targets) < k:
            if oi >= len(offsets):
                max_r += 2
                offsets = _lattice_offsets(max_r)
                oi = 0
                seen = {i}
                targets = []
                continue
            dr, dc = offsets[oi]
            oi += 1
            j = ((r + dr) % rows) * width + (c + dc) % width
            if j >= n or j in seen:  # partial last row or wrap collision
                continue
            seen.add(j)
            targets.append(j)
        out.append(targets)
    return SubscriptionGraph(n, "lattice", out, GenParams(k=k), seed)


def gen_small_world(n: int, k: int, p_rewire: float, seed: int) -> SubscriptionGraph:
    """Directed ring lattice (k/2 neighbours per side) with each edge
    independently rewired with probability p_rewire to a uniformly chosen
    node the origin has no edge to. Out-degree stays exactly k.
    """
    if k % 2 != 0:
        raise ValueError(f"small-world k must be even, got {k}")
    if not 2 <= k <= n - 2:
        raise ValueError(f"small-world needs 2 <= k <= n-2, got k={k}, n={n}")
    params = GenParams(k=k, p_rewire=p_rewire)
    out = []
    for i in range(n):
        targets = [(i + d) % n for d in range(1, k // 2 + 1)]
        targets += [(i - d) % n for d in range(1, k // 2 + 1)]
        out.append(targets)
    rng = stream(seed, "smallworld.rewire")
    # origin-major, offset order as constructed above (+1..+k/2, -1..-k/2)
    for i in range(n):
        have = set(out[i])
        for pos in range(k):
            if rng.random() >= p_rewire:
                continue
            while True:
                cand = int(rng.integers(n))
                if cand != i and cand not in have:
                    break
            have.discard(out[i][pos])
            out[i][pos] = cand
            have.add(cand)
    return SubscriptionGraph(n, "smallworld", out, params, seed)


def gen_scale_free(n: int, k: int, p_invert: float, seed: int) -> SubscriptionGraph:
    """Growth with preferential attachment from a fully connected seed of k
    vertices. Each new vertex adds k edges toward existing vertices chosen
    with probability proportional to total degree (without replacement);
    each edge's direction is inverted with probability p_invert.
    """
    if k < 2:
        raise ValueError(f"scale-free needs k >= 2 (seed clique), got {k}")
    if k > n:
        # k == n is the degenerate no-growth case (the seed clique alone)
        raise ValueError(f"scale-free needs k <= n, got k={k}, n={n}")
    params = GenParams(k=k, p_invert=p_invert)
    out: list[list[int]] = [[] for _ in range(n)]
    for i in range(k):
        out[i] = [j for j in range(k) if j != i]
    # repeated-id list: one entry per unit of total (in+out) degree
    repeated = [i for i in range(k) for _ in range(2 * (k - 1))]
    rng = stream(seed, "scalefree.attach")
    for v in range(k, n):
        chosen: list[int] = []
        taken = set()
        while len(chosen) < k:
            t = repeated[int(rng.integers(len(repeated)))]
            if t not in taken:
                taken.add(t)
                chosen.append(t)
        for t in chosen:
            if rng.random() < p_invert:
                out[t].append(v)
            else:
                out[v].append(t)
        repeated.extend(chosen)
        repeated.extend([v] * k)
    return SubscriptionGraph(n, "scalefree", out, params, seed)


_GENERATORS = {
    "random": lambda n, k, params, seed: gen_random(n, k, seed),
    "lattice": lambda n, k, params, seed: gen_lattice(n, k, seed),
    "smallworld": lambda n, k, params, seed: gen_small_world(n, k, params.p_rewire, seed),
    "scalefree": lambda n, k, params, seed: gen_scale_free(n, k, params.p_invert, seed),
}


def generate(kind: str, n: int, params: GenParams, seed: int) -> SubscriptionGraph:
    """Dispatch to the named generator."""
    if kind not in _GENERATORS:
        raise ValueError(f"unknown topology kind {kind!r}; expected one of {KINDS}")
    return _GENERATORS[kind](n, params.k, params, seed)


# ---------------------------------------------------------------------------
# metrics


def _undirected_edges(g: SubscriptionGraph) -> np.ndarray:
    """(m, 2) array of the undirected projection's edges, a < b, sorted."""
    indptr, targets = g.csr()
    src = np.repeat(np.arange(g.n, dtype=np.int64), np.diff(indptr))
    dst = targets.astype(np.int64)
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    codes = np.unique(lo * g.n + hi)
    return np.stack([codes // g.n, codes % g.n], axis=1)


def clustering_coefficient(g: SubscriptionGraph) -> float:
    """Global transitivity (3 x triangles / connected triples) of the
    undirected projection. Returns 0 for graphs with no connected triples.
    """
    n = g.n
    edges = _undirected_edges(g)
    words = (n + 63) // 64
    adj = np.zeros((n, words), dtype=np.uint64)
    a, b = edges[:, 0], edges[:, 1]
    ones = np.uint64(1)
    np.bitwise_or.at(adj, (a, b >> 6), ones << (b & 63).astype(np.uint64))
    np.bitwise_or.at(adj, (b, a >> 6), ones << (a & 63).astype(np.uint64))
    deg = np.bincount(a, minlength=n) + np.bincount(b, minlength=n)
    triples = int((deg.astype(np.int64) * (deg - 1) // 2).sum())
    if triples == 0:
        return 0.0
    common = 0
    chunk = max(1, 8_000_000 // max(words, 1))
    for s in range(0, len(edges), chunk):
        e = edges[s:s + chunk]
        common += int(np.bitwise_count(adj[e[:, 0]] & adj[e[:, 1]]).sum())
    return common / triples  # sum of common neighbours over edges = 3*triangles


def degree_stats(g: SubscriptionGraph, include_paths: bool = True) -> GraphMetrics:
    """In/out degree statistics plus mean BFS path length on the undirected
    projection (full BFS from every node via compiled sparse routines).
    Disconnected graphs report unreachable pair counts, not a failure.
    Set include_paths=False to skip the O(n*E) path computation.
    """
    indptr, targets = g.csr()
    out_deg = np.diff(indptr)
    in_deg = np.bincount(targets, minlength=g.n)
    out_hist = {int(d): int(c) for d, c in
                zip(*np.unique(out_deg, return_counts=True))}
    in_hist = {int(d): int(c) for d, c in
               zip(*np.unique(in_deg, return_counts=True))}
    mean_path = float("nan")
    unreachable = 0
    if include_paths:
        edges = _undirected_edges(g)
        row = np.concatenate([edges[:, 0], edges[:, 1]])
        col = np.concatenate([edges[:, 1], edges[:, 0]])
        adj = csr_matrix((np.ones(len(row), dtype=np.int8), (row, col)),
                         shape=(g.n, g.n))
        dist = shortest_path(adj, method="D", unweighted=True, directed=False)
        off_diag = ~np.eye(g.n, dtype=bool)
        finite = np.isfinite(dist) & off_diag
        unreachable = int(np.count_nonzero(off_diag) - np.count_nonzero(finite))
        if finite.any():
            mean_path = float(dist[finite].mean())
    return GraphMetrics(
        clustering=clustering_coefficient(g),
        mean_out_degree=float(out_deg.mean()),
        in_degree_histogram=in_hist,
        out_degree_histogram=out_hist,
        mean_path_length=mean_path,
        unreachable_pairs=unreachable,
    )


# ---------------------------------------------------------------------------
# edge-list export


def to_edgelist(g: SubscriptionGraph) -> str:
    """Plain-text edge list: a header line then one source<TAB>target per line."""
    lines = [f"# n={g.n} kind={g.kind} k={g.k} seed={g.seed}"]
    for i, targets in enumerate(g.out_edges):
        for t in targets:
            lines.append(f"{i}\t{t}")
    return "\n".join(lines) + "\n"


def from_edgelist(text: str) -> SubscriptionGraph:
    """Parse the to_edgelist format back into a graph."""
    lines = text.strip().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError("edge list must start with a '# n=... kind=...' header")
    header = dict(part.split("=", 1) for part in lines[0][1:].split())
    n = int(header["n"])
    out: list[list[int]] = [[] for _ in range(n)]
    for line in lines[1:]:
        s, t = line.split("\t")
        out[int(s)].append(int(t))
    return SubscriptionGraph(n, header["kind"], out,
                             GenParams(k=int(header["k"])), int(header["seed"]))
