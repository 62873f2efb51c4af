"""Protocol x topology comparison at demo scale.

Sweeps the four monitoring protocols over two topology extremes (random
vs lattice) at a high failure rate and prints the summary table with 95%
confidence half-widths. Shorter horizons and fewer runs than the real
experiments, so it finishes in about a minute.

Run:  python demos/03_protocol_comparison.py
"""

from heartmesh import ExperimentConfig, SweepSpec, run_sweep

spec = SweepSpec(
    n=(100,),
    rate=(10.0,),
    topology=("random", "lattice"),
    protocol=("centralised", "hierarchical", "simple_p2p", "transitive_p2p"),
    base=ExperimentConfig(n=100, runs=5, horizon=300.0, seed=11),
).validate()

result = run_sweep(spec)

print("n=100, k=10, rate=10%/min, 5 runs x 300 s\n")
header = (f"{'protocol':<15} {'topology':<9} {'inconsistency':>16} "
          f"{'load/node':>14} {'infra load':>11}")
print(header)
print("-" * len(header))
for row in result.summary_rows:
    inc = f"{row['inconsistency_mean']:.4f} ±{row['inconsistency_ci95']:.4f}"
    load = f"{row['load_mean']:.2f} ±{row['load_ci95']:.2f}"
    infra = (f"{row['infra_load_mean']:.0f}"
             if row["infra_load_mean"] else "-")
    print(f"{row['protocol']:<15} {row['topology']:<9} {inc:>16} "
          f"{load:>14} {infra:>11}")

print("""
What to look for:
  * simple P2P load is exactly 2k on both topologies: it polls every
    subscription every second no matter what;
  * transitive P2P load collapses on the lattice (shared neighbourhoods
    answer for each other), but its inconsistency rises there: forwarded
    records hide their age, so staleness recirculates where subscriptions
    overlap;
  * the centralised monitor and the hierarchy see no topology effect at
    all: their staleness is set by the tree of sweeps, not by who watches
    whom; the monitor pays ~2n accesses a second instead.
""")
