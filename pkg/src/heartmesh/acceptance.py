"""Acceptance suite: the qualitative-ordering and property checks that the
simulator must satisfy, each printable as one pass/fail line.

The heavy criteria share one pool of simulation runs (10 runs x 3600 s per
cell at n=10^3, k=32) gathered once and cached on disk, so re-evaluation
and the pytest wrapper do not repeat finished work. Criterion 2's n=10^4
part is long-running and only executes when explicitly enabled.
"""

from __future__ import annotations

import math
import os
import statistics
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, SweepSpec
from .metrics import SummaryStats, significant_difference, summarize, t_multiplier
from .sweep import (DETAIL_COLUMNS, _run_task, cell_fingerprint, run_sweep,
                    write_csv)
from .topology import (clustering_coefficient, degree_stats, gen_lattice,
                       gen_random, gen_scale_free, gen_small_world, generate,
                       validate_graph)

ROOT_SEED = 20260810
RATES = (0.01, 0.1, 1.0, 10.0)


def cell(protocol: str, topology: str, n: int, rate: float,
         runs: int = 10, horizon: float = 3600.0) -> ExperimentConfig:
    return ExperimentConfig(n=n, topology=topology, protocol=protocol,
                            rate=rate, runs=runs, horizon=horizon,
                            seed=ROOT_SEED).validate()


def _heavy_cells(include_large: bool) -> list[ExperimentConfig]:
    cells = []
    for topo in ("random", "lattice", "smallworld", "scalefree"):
        cells.append(cell("transitive_p2p", topo, 1000, 10.0))        # C1, C2, C7
        for rate in (1.0, 10.0):
            cells.append(cell("hierarchical", topo, 1000, rate))      # C3
    for rate in RATES:                                                # C4, C5, C6
        cells.append(cell("simple_p2p", "random", 1000, rate))
        cells.append(cell("centralised", "random", 1000, rate))
    for rate in (0.01, 0.1, 1.0):
        cells.append(cell("transitive_p2p", "random", 1000, rate))    # C5
    for rate in (0.01, 0.1):
        cells.append(cell("hierarchical", "random", 1000, rate))      # C5
    cells.append(cell("simple_p2p", "lattice", 1000, 10.0))           # C7
    cells.append(cell("centralised", "random", 100, 1.0))             # C6
    cells.append(cell("simple_p2p", "random", 100, 1.0))              # C6
    if include_large:
        for topo in ("lattice", "smallworld"):
            cells.append(cell("transitive_p2p", topo, 10000, 10.0))   # C2 gated
    # drop duplicates, preserve order
    seen = set()
    unique = []
    for c in cells:
        fp = cell_fingerprint(c)
        if fp not in seen:
            seen.add(fp)
            unique.append(c)
    return unique


class RunStore:
    """Detail rows for every gathered (cell, run), cached as CSV."""

    def __init__(self, cache_path: Path | None) -> None:
        self.cache_path = cache_path
        self.rows: dict[tuple[str, int], dict] = {}
        if cache_path is not None and cache_path.exists():
            import csv as _csv
            with open(cache_path, newline="") as fh:
                for row in _csv.DictReader(fh):
                    parsed = {
                        "protocol": row["protocol"], "topology": row["topology"],
                        "n": int(row["n"]), "k": int(row["k"]),
                        "rate": float(row["rate"]), "run": int(row["run"]),
                        "seed": int(row["seed"]),
                        "inconsistency_fraction": float(row["inconsistency_fraction"]),
                        "load_per_node": float(row["load_per_node"]),
                        "infra_load": float(row["infra_load"]),
                    }
                    self.rows[self._key(parsed)] = parsed

    @staticmethod
    def _key(row: dict) -> tuple[str, int]:
        fp = (f"{row['protocol']}|{row['topology']}|n={row['n']}|k={row['k']}"
              f"|rate={row['rate']!r}")
        return fp, row["run"]

    def has(self, cfg: ExperimentConfig, run_index: int) -> bool:
        return (cell_fingerprint(cfg), run_index) in self.rows

    def add(self, row: dict) -> None:
        self.rows[self._key(row)] = row

    def save(self) -> None:
        if self.cache_path is None:
            return
        self.cache_path.parent.mkdir(parents=True, exist_ok=True)
        write_csv(self.cache_path, DETAIL_COLUMNS,
                  sorted(self.rows.values(),
                         key=lambda r: (r["protocol"], r["topology"], r["n"],
                                        r["rate"], r["run"])))

    def cell_rows(self, cfg: ExperimentConfig) -> list[dict]:
        fp = cell_fingerprint(cfg)
        rows = [r for (f, _), r in sorted(self.rows.items()) if f == fp]
        if len(rows) < cfg.runs:
            raise RuntimeError(f"missing runs for {fp}: {len(rows)}/{cfg.runs}")
        return rows[:cfg.runs]

    def values(self, cfg: ExperimentConfig, column: str) -> list[float]:
        return [r[column] for r in self.cell_rows(cfg)]

    def mean(self, cfg: ExperimentConfig, column: str) -> float:
        return statistics.fmean(self.values(cfg, column))

    def stats(self, cfg: ExperimentConfig, column: str) -> SummaryStats:
        return summarize(self.values(cfg, column))


def gather_runs(cells: list[ExperimentConfig], store: RunStore,
                workers: int, log=None) -> float:
    """Execute all missing (cell, run) tasks; returns elapsed seconds."""
    tasks = [(cfg, r) for cfg in cells for r in range(cfg.runs)
             if not store.has(cfg, r)]
    t0 = time.time()
    if not tasks:
        return 0.0
    if log:
        log(f"acceptance: running {len(tasks)} simulations "
            f"({workers} worker(s)); cached: {len(store.rows)}")
    done = 0

    def record(outcome):
        nonlocal done
        _, row, err = outcome
        if row is None:
            raise RuntimeError(f"acceptance run failed: {err}")
        store.add(row)
        done += 1
        if log and (done % 10 == 0 or done == len(tasks)):
            log(f"acceptance: {done}/{len(tasks)} runs "
                f"({time.time() - t0:.0f}s elapsed)")
            store.save()

    if workers <= 1:
        for task in tasks:
            record(_run_task(task))
    else:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for outcome in pool.map(_run_task, tasks, chunksize=1):
                record(outcome)
    store.save()
    return time.time() - t0


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool | None  # None = skipped
    detail: str

    @property
    def line(self) -> str:
        status = "SKIP" if self.passed is None else ("PASS" if self.passed else "FAIL")
        return f"[{status}] C{self.number} {self.title}: {self.detail}"


# ---------------------------------------------------------------------------
# criteria


def _c1_topology_ordering(store: RunStore, elapsed: float) -> CriterionResult:
    frac = {t: store.mean(cell("transitive_p2p", t, 1000, 10.0),
                          "inconsistency_fraction")
            for t in ("random", "scalefree", "smallworld", "lattice")}
    ordered = (frac["random"] < frac["scalefree"] < frac["smallworld"]
               <= frac["lattice"])
    sig = significant_difference(
        store.stats(cell("transitive_p2p", "lattice", 1000, 10.0),
                    "inconsistency_fraction"),
        store.stats(cell("transitive_p2p", "random", 1000, 10.0),
                    "inconsistency_fraction"))
    detail = ("mean fractions " +
              " ".join(f"{t}={frac[t]:.4f}" for t in
                       ("random", "scalefree", "smallworld", "lattice")) +
              f"; ordering {'holds' if ordered else 'VIOLATED'}; "
              f"lattice vs random CI-{'disjoint' if sig else 'OVERLAP'}; "
              f"total gather wall time {elapsed / 60:.1f} min (C1 target < 30)")
    return CriterionResult(1, "topology ordering under transitive P2P",
                           ordered and sig, detail)


def _c2_saturation(store: RunStore, include_large: bool) -> CriterionResult:
    rnd = store.mean(cell("transitive_p2p", "random", 1000, 10.0),
                     "inconsistency_fraction")
    lat = store.mean(cell("transitive_p2p", "lattice", 1000, 10.0),
                     "inconsistency_fraction")
    sw = store.mean(cell("transitive_p2p", "smallworld", 1000, 10.0),
                    "inconsistency_fraction")
    ok = lat >= 3 * rnd and sw >= 3 * rnd
    detail = (f"n=10^3 lattice/random={lat / rnd:.1f}x, "
              f"smallworld/random={sw / rnd:.1f}x (need >= 3x)")
    if include_large:
        lat4 = store.mean(cell("transitive_p2p", "lattice", 10000, 10.0),
                          "inconsistency_fraction")
        sw4 = store.mean(cell("transitive_p2p", "smallworld", 10000, 10.0),
                         "inconsistency_fraction")
        large_ok = lat4 >= 0.5 and sw4 >= 0.5
        ok = ok and large_ok
        detail += (f"; n=10^4 lattice={lat4:.3f}, smallworld={sw4:.3f} "
                   f"(need >= 0.5)")
    else:
        detail += "; n=10^4 part skipped (enable with --large)"
    return CriterionResult(2, "saturation under clustering", ok, detail)


def _c3_hierarchical_insensitivity(store: RunStore) -> CriterionResult:
    topos = ("random", "lattice", "smallworld", "scalefree")
    overlaps = []
    for rate in (1.0, 10.0):
        stats = {t: store.stats(cell("hierarchical", t, 1000, rate),
                                "inconsistency_fraction") for t in topos}
        for i, a in enumerate(topos):
            for b in topos[i + 1:]:
                if significant_difference(stats[a], stats[b]):
                    overlaps.append(f"rate {rate}: {a} vs {b} significant")
    ok = not overlaps
    detail = ("all pairwise topology CIs overlap at rates 1 and 10"
              if ok else "; ".join(overlaps))
    return CriterionResult(3, "hierarchical insensitivity to topology", ok, detail)


def _c4_rate_linearity(store: RunStore) -> CriterionResult:
    frac = {r: store.mean(cell("simple_p2p", "random", 1000, r),
                          "inconsistency_fraction") for r in (0.1, 1.0, 10.0)}
    ratios = {"1.0/0.1": frac[1.0] / frac[0.1], "10.0/1.0": frac[10.0] / frac[1.0]}
    ok = all(5.0 <= v <= 20.0 for v in ratios.values())
    detail = ", ".join(f"x{r}={v:.1f}" for r, v in ratios.items()) + " (need in [5, 20])"
    return CriterionResult(4, "failure-rate linearity (simple P2P)", ok, detail)


def _c5_load_invariance(store: RunStore) -> CriterionResult:
    spreads = {}
    for proto in ("centralised", "hierarchical", "simple_p2p", "transitive_p2p"):
        loads = [store.mean(cell(proto, "random", 1000, r), "load_per_node")
                 for r in RATES]
        spreads[proto] = (max(loads) - min(loads)) / statistics.fmean(loads)
    ok = all(v < 0.05 for v in spreads.values())
    detail = ", ".join(f"{p}={v * 100:.2f}%" for p, v in spreads.items()) + \
        " relative spread across rates (need < 5%)"
    return CriterionResult(5, "load invariant to failure rate", ok, detail)


def _c6_centralised_scaling(store: RunStore) -> CriterionResult:
    mon = (store.mean(cell("centralised", "random", 1000, 1.0), "infra_load") /
           store.mean(cell("centralised", "random", 100, 1.0), "infra_load"))
    p2p = (store.mean(cell("simple_p2p", "random", 1000, 1.0), "load_per_node") /
           store.mean(cell("simple_p2p", "random", 100, 1.0), "load_per_node"))
    ok = mon >= 8.0 and p2p <= 4.0
    detail = (f"monitor load x{mon:.1f} for n 10^2->10^3 (need >= 8), "
              f"simple P2P per-node load x{p2p:.2f} (need <= 4)")
    return CriterionResult(6, "centralised load scales with n", ok, detail)


def _c7_transitive_load_reduction(store: RunStore) -> CriterionResult:
    t_lat = store.mean(cell("transitive_p2p", "lattice", 1000, 10.0), "load_per_node")
    t_rnd = store.mean(cell("transitive_p2p", "random", 1000, 10.0), "load_per_node")
    s_lat = store.mean(cell("simple_p2p", "lattice", 1000, 10.0), "load_per_node")
    s_rnd = store.mean(cell("simple_p2p", "random", 1000, 10.0), "load_per_node")
    simple_diff = abs(s_lat - s_rnd) / s_rnd
    ok = t_lat <= 0.7 * t_rnd and simple_diff < 0.05
    detail = (f"transitive lattice/random load ratio {t_lat / t_rnd:.2f} "
              f"(need <= 0.7); simple P2P lattice vs random diff "
              f"{simple_diff * 100:.2f}% (need < 5%)")
    return CriterionResult(7, "clustering cuts transitive load", ok, detail)


def _c8_generator_properties() -> CriterionResult:
    problems = []
    t0 = time.time()
    for seed in range(20):
        for kind in ("random", "lattice", "smallworld", "scalefree"):
            g = generate(kind, 1000,
                         ExperimentConfig(n=1000).gen_params(), seed)
            try:
                validate_graph(g)
            except ValueError as exc:
                problems.append(f"{kind} seed {seed}: {exc}")
    heavy = 0
    for seed in range(20):
        g = gen_scale_free(1000, 30, 0.15, seed)
        stats = degree_stats(g, include_paths=False)
        in_degs = [d for d, c in stats.in_degree_histogram.items() for _ in range(c)]
        if max(in_degs) >= 3 * statistics.fmean(in_degs):
            heavy += 1
    if heavy < 20:
        problems.append(f"heavy tail only in {heavy}/20 seeds")
    clus = {
        "lattice": clustering_coefficient(gen_lattice(1000, 32, 0)),
        "smallworld": clustering_coefficient(gen_small_world(1000, 32, 0.1, 0)),
        "scalefree": clustering_coefficient(gen_scale_free(1000, 32, 0.15, 0)),
        "random": clustering_coefficient(gen_random(1000, 32, 0)),
    }
    if not (clus["lattice"] >= clus["smallworld"] > clus["scalefree"]
            > clus["random"]):
        problems.append(f"clustering ordering violated: {clus}")
    elapsed = time.time() - t0
    ok = not problems and elapsed < 60
    if problems:
        detail = "; ".join(problems)
    else:
        order = " >= ".join(f"{t}={clus[t]:.3f}" for t in
                            ("lattice", "smallworld", "scalefree", "random"))
        detail = (f"20 seeds x 4 kinds valid; heavy tail 20/20; "
                  f"clustering {order}; {elapsed:.1f}s (need < 60)")
    return CriterionResult(8, "generator properties", ok, detail)


def _c9_statistics_oracle() -> CriterionResult:
    mult = t_multiplier(10)
    ok = abs(mult - 2.262) <= 0.001
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        vals = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 3),
                          size=int(rng.integers(2, 40))).tolist()
        s = summarize(vals)
        ref_mean = statistics.fmean(vals)
        ref_sd = statistics.stdev(vals)
        ref_ci = t_multiplier(len(vals)) * ref_sd / math.sqrt(len(vals))
        for got, ref in ((s.mean, ref_mean), (s.sd, ref_sd),
                         (s.min, min(vals)), (s.max, max(vals)),
                         (s.ci95_halfwidth, ref_ci)):
            scale = max(abs(ref), 1e-300)
            worst = max(worst, abs(got - ref) / scale)
    ok = ok and worst < 1e-12
    detail = (f"t(0.975, df=9) = {mult:.4f} (table 2.262 +/- 0.001); "
              f"summarize vs reference worst relative error {worst:.2e}")
    return CriterionResult(9, "statistics oracle", ok, detail)


def _c10_determinism(tmp_dir: Path, workers: int) -> CriterionResult:
    spec = SweepSpec(
        n=(100,), rate=(10.0,),
        topology=("random", "lattice"),
        protocol=("simple_p2p", "transitive_p2p"),
        base=ExperimentConfig(n=100, runs=3, horizon=60.0, seed=ROOT_SEED),
    ).validate()
    outputs = []
    for i, w in enumerate((1, max(2, workers))):
        out = tmp_dir / f"det{i}"
        res = run_sweep(spec, out_dir=out, workers=w)
        outputs.append((res.detail_path.read_bytes(),
                        res.summary_path.read_bytes()))
    ok = outputs[0] == outputs[1]
    detail = ("details.csv and summary.csv byte-identical across worker counts"
              if ok else "outputs differ between worker counts")
    return CriterionResult(10, "sweep determinism", ok, detail)


def _c11_zero_failure(workers: int) -> CriterionResult:
    from .sweep import execute_run
    t0 = time.time()
    bad = []
    for proto in ("centralised", "hierarchical", "simple_p2p", "transitive_p2p"):
        for topo in ("random", "lattice", "smallworld", "scalefree"):
            cfg = cell(proto, topo, 100, 0.0, runs=1, horizon=60.0)
            run = execute_run(cfg, 0)
            if run.inconsistency_series.any():
                bad.append(f"{proto}/{topo}")
    elapsed = time.time() - t0
    ok = not bad and elapsed < 5.0
    detail = (f"all 16 protocol x topology series identically zero; "
              f"{elapsed:.2f}s (need < 5)" if not bad else
              f"nonzero inconsistencies in: {', '.join(bad)}")
    return CriterionResult(11, "zero failure rate, zero inconsistency", ok, detail)


def run_acceptance(out_dir: str | Path = "acceptance-results",
                   workers: int | None = None,
                   include_large: bool = False,
                   log=print) -> list[CriterionResult]:
    """Gather all required simulation runs and evaluate every criterion."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if workers is None:
        workers = os.cpu_count() or 1
    store = RunStore(out / "acceptance_runs.csv")
    elapsed = gather_runs(_heavy_cells(include_large), store, workers, log=log)
    results = [
        _c1_topology_ordering(store, elapsed),
        _c2_saturation(store, include_large),
        _c3_hierarchical_insensitivity(store),
        _c4_rate_linearity(store),
        _c5_load_invariance(store),
        _c6_centralised_scaling(store),
        _c7_transitive_load_reduction(store),
        _c8_generator_properties(),
        _c9_statistics_oracle(),
        _c10_determinism(out, workers),
        _c11_zero_failure(workers),
    ]
    for r in results:
        if log:
            log(r.line)
    return results
