"""Watch one simulation run up close.

Builds a small world (100 nodes, transitive P2P polling, 10%/min state
churn), runs it for ten simulated minutes, and prints the per-second probe
series: how many nodes hold a stale belief about someone they watch, and
how many network accesses each node handled.

Run:  python demos/02_single_run.py
"""

from heartmesh import (FailureModel, GenParams, ProtocolConfig, World,
                       gen_lattice)

N, K = 100, 10

graph = gen_lattice(N, K)
world = World(
    graph,
    ProtocolConfig("transitive_p2p"),
    FailureModel(rate_pct_per_min=10.0),
    seed=2024,
    horizon=600.0,
)
metrics = world.run()

print(f"lattice n={N}, k={K}, transitive P2P, 10%/min failure rate, 600 s\n")
print(f"{'t':>4} {'inconsistent':>13} {'load/node':>10}")
for t in range(0, 600, 60):
    window = metrics.inconsistency_series[t:t + 60]
    load = metrics.load_series[t:t + 60].mean()
    print(f"{t + 60:>4} {window.mean():>13.1f} {load:>10.2f}")

frac = metrics.inconsistency_series.mean() / N
print(f"\ntime-averaged inconsistency fraction: {frac:.3f}")
print(f"state toggles injected: {world.toggle_count}")
print(f"final belief of node 0 about node 1: {world.belief_of(0, 1)}")
print("""
The load sits far below the simple-P2P value of 2k because one poll of a
neighbour piggybacks records for most of the shared neighbourhood; the
price is the climbing inconsistency curve, fed by stale records that keep
circulating inside the heavily overlapping subscription lists.
""")
