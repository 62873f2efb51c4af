"""Generate the four subscription-network families and compare their shape.

The simulator's headline effect hinges on how much structure the
subscription network has: this script builds all four families at the same
size and degree and prints the metrics that set them apart (clustering,
degree spread, path lengths).

Run:  python demos/01_topologies.py
"""

from heartmesh import GenParams, degree_stats, generate

N, K, SEED = 1000, 32, 7

params = GenParams(k=K, p_rewire=0.1, p_invert=0.15)

print(f"n={N}, k={K} (the reference scale: k = round(sqrt(n)))\n")
header = f"{'topology':<12} {'clustering':>10} {'mean path':>10} {'max in-deg':>11}"
print(header)
print("-" * len(header))
for kind in ("random", "lattice", "smallworld", "scalefree"):
    g = generate(kind, N, params, SEED)
    stats = degree_stats(g)
    max_in = max(stats.in_degree_histogram)
    print(f"{kind:<12} {stats.clustering:>10.4f} "
          f"{stats.mean_path_length:>10.2f} {max_in:>11d}")

print("""
Reading the table:
  * the lattice and the rewired ring (small world) keep most neighbour
    pairs connected to each other: high clustering;
  * rewiring 10% of ring edges collapses the mean path length to
    random-graph levels while keeping clustering high: the small-world mix;
  * preferential attachment concentrates subscriptions on a few hubs: the
    max in-degree dwarfs the mean (k), the power-law tail;
  * the uniform random graph has neither clustering nor hubs.
""")
