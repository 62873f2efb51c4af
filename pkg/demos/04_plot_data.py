"""From sweep to plot-ready tables.

Runs a small sweep over failure rates, writes the detail/summary CSVs, and
reshapes the summary into figure-style tables: one series per
(protocol, topology, n) with the failure rate on the x axis, in linear and
log-scale variants.

Run:  python demos/04_plot_data.py  [out_dir]
"""

import sys
from pathlib import Path

from heartmesh import (ExperimentConfig, SweepSpec, emit_plot_data, run_sweep)

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo-results")

spec = SweepSpec(
    n=(64, 100),
    rate=(0.1, 1.0, 10.0),
    topology=("random",),
    protocol=("simple_p2p", "transitive_p2p"),
    base=ExperimentConfig(n=64, runs=4, horizon=240.0, seed=5),
).validate()

result = run_sweep(spec, out_dir=out)
print(f"sweep written: {result.detail_path}, {result.summary_path}")

for value, scale in (("inconsistency", "linear"), ("inconsistency", "log"),
                     ("load", "linear")):
    path = emit_plot_data(result.summary_path, out, group_by="rate",
                          value=value, scale=scale)
    print(f"plot table:    {path}")

print(f"""
Each plot table has one row per (series, x) point with y_mean and y_ci95
columns; the log variant adds y_log10 plus a zero_flag so all-zero cells
survive the log axis. Feed them to any plotting tool, e.g.:

    import pandas as pd
    df = pd.read_csv("{out}/plot_inconsistency_by_rate_linear.csv")
    df.pivot_table(index="rate", columns=["protocol", "n"],
                   values="y_mean").plot(logx=True, marker="o")
""")
