"""Experiment execution: single runs, sweeps, CSV output, plot-data reshaping.

Per-run seeds are derived from the root seed, the cell fingerprint
(protocol|topology|n|k|rate) and the run index, so results are independent
of scheduling: rerunning a spec reproduces byte-identical CSVs under any
worker count, and growing `runs` leaves earlier runs' rows unchanged.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import ConfigError, ExperimentConfig, SweepSpec
from .engine import World
from .metrics import (RunMetrics, inconsistency_fraction, mean_infra_load,
                      mean_load, summarize)
from .seeding import derive_seed
from .topology import generate

DETAIL_COLUMNS = ("protocol", "topology", "n", "k", "rate", "run", "seed",
                  "inconsistency_fraction", "load_per_node", "infra_load")

SUMMARY_COLUMNS = ("protocol", "topology", "n", "k", "rate", "runs",
                   "inconsistency_mean", "inconsistency_sd", "inconsistency_min",
                   "inconsistency_max", "inconsistency_ci95",
                   "load_mean", "load_sd", "load_min", "load_max", "load_ci95",
                   "infra_load_mean", "infra_load_ci95", "error")


def cell_fingerprint(cfg: ExperimentConfig) -> str:
    return (f"{cfg.protocol}|{cfg.topology}|n={cfg.n}|k={cfg.resolved_k}"
            f"|rate={cfg.rate!r}")


def run_seed_for(cfg: ExperimentConfig, run_index: int) -> int:
    return derive_seed(cfg.seed, cell_fingerprint(cfg), run_index)


def execute_run(cfg: ExperimentConfig, run_index: int) -> RunMetrics:
    """One independent simulation of one sweep cell."""
    seed = run_seed_for(cfg, run_index)
    graph = generate(cfg.topology, cfg.n, cfg.gen_params(),
                     derive_seed(seed, "topology"))
    world = World(graph, cfg.protocol_config(), cfg.failure_model(),
                  seed=seed, horizon=cfg.horizon)
    return world.run()


def _detail_row(cfg: ExperimentConfig, run_index: int, run: RunMetrics) -> dict:
    return {
        "protocol": cfg.protocol,
        "topology": cfg.topology,
        "n": cfg.n,
        "k": cfg.resolved_k,
        "rate": cfg.rate,
        "run": run_index,
        "seed": run.seed,
        "inconsistency_fraction": inconsistency_fraction(run, cfg.warmup),
        "load_per_node": mean_load(run, cfg.warmup),
        "infra_load": mean_infra_load(run, cfg.warmup),
    }


def _run_task(args: tuple[ExperimentConfig, int]) -> tuple[int, dict | None, str]:
    cfg, run_index = args
    try:
        return run_index, _detail_row(cfg, run_index, execute_run(cfg, run_index)), ""
    except Exception as exc:  # recorded per cell, sweep continues
        return run_index, None, f"run {run_index}: {type(exc).__name__}: {exc}"


@dataclass
class SweepResult:
    detail_rows: list[dict]
    summary_rows: list[dict]
    detail_path: Path | None = None
    summary_path: Path | None = None


def _summary_row(cfg: ExperimentConfig, rows: list[dict], errors: list[str]) -> dict:
    out = {
        "protocol": cfg.protocol,
        "topology": cfg.topology,
        "n": cfg.n,
        "k": cfg.resolved_k,
        "rate": cfg.rate,
        "runs": len(rows),
        "error": "; ".join(errors),
    }
    for prefix, column in (("inconsistency", "inconsistency_fraction"),
                           ("load", "load_per_node")):
        values = [r[column] for r in rows]
        if len(values) >= 2:
            s = summarize(values)
            out.update({f"{prefix}_mean": s.mean, f"{prefix}_sd": s.sd,
                        f"{prefix}_min": s.min, f"{prefix}_max": s.max,
                        f"{prefix}_ci95": s.ci95_halfwidth})
        elif len(values) == 1:
            out.update({f"{prefix}_mean": values[0], f"{prefix}_sd": "",
                        f"{prefix}_min": values[0], f"{prefix}_max": values[0],
                        f"{prefix}_ci95": ""})
        else:
            out.update({f"{prefix}_mean": "", f"{prefix}_sd": "", f"{prefix}_min": "",
                        f"{prefix}_max": "", f"{prefix}_ci95": ""})
    infra = [r["infra_load"] for r in rows]
    if len(infra) >= 2:
        s = summarize(infra)
        out["infra_load_mean"] = s.mean
        out["infra_load_ci95"] = s.ci95_halfwidth
    elif len(infra) == 1:
        out["infra_load_mean"] = infra[0]
        out["infra_load_ci95"] = ""
    else:
        out["infra_load_mean"] = ""
        out["infra_load_ci95"] = ""
    return out


def _sort_key(row: dict):
    return (row["protocol"], row["topology"], row["n"], row["rate"],
            row.get("run", 0))


def run_sweep(spec: SweepSpec, out_dir: str | Path | None = None,
              workers: int = 1, progress=None) -> SweepResult:
    """Run every cell x run of the sweep; optionally write sorted CSVs.

    progress: optional callable(done, total, row_or_none) invoked per run.
    """
    cells = spec.cells()
    tasks = [(cfg, r) for cfg in cells for r in range(cfg.runs)]
    results: dict[str, list] = {cell_fingerprint(cfg): [] for cfg in cells}
    total = len(tasks)
    done = 0
    if workers <= 1:
        for cfg, r in tasks:
            outcome = _run_task((cfg, r))
            results[cell_fingerprint(cfg)].append(outcome)
            done += 1
            if progress:
                progress(done, total, outcome[1])
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for (cfg, r), outcome in zip(tasks, pool.map(_run_task, tasks,
                                                         chunksize=1)):
                results[cell_fingerprint(cfg)].append(outcome)
                done += 1
                if progress:
                    progress(done, total, outcome[1])
    detail_rows: list[dict] = []
    summary_rows: list[dict] = []
    for cfg in cells:
        outcomes = results[cell_fingerprint(cfg)]
        rows = [row for _, row, _ in outcomes if row is not None]
        errors = [err for _, _, err in outcomes if err]
        detail_rows.extend(rows)
        summary_rows.append(_summary_row(cfg, rows, errors))
    detail_rows.sort(key=_sort_key)
    summary_rows.sort(key=_sort_key)
    result = SweepResult(detail_rows, summary_rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result.detail_path = out / "details.csv"
        result.summary_path = out / "summary.csv"
        write_csv(result.detail_path, DETAIL_COLUMNS, detail_rows)
        write_csv(result.summary_path, SUMMARY_COLUMNS, summary_rows)
    return result


def _format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: str | Path, columns, rows: list[dict]) -> None:
    """Stable CSV: fixed column order, '.' decimals via repr, '\\n' endings."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_value(row.get(c, "")) for c in columns])


# ---------------------------------------------------------------------------
# plot-data reshaping


_PLOT_VALUES = {
    "inconsistency": ("inconsistency_mean", "inconsistency_ci95"),
    "load": ("load_mean", "load_ci95"),
    "infra_load": ("infra_load_mean", "infra_load_ci95"),
}


def emit_plot_data(summary_path: str | Path, out_dir: str | Path,
                   group_by: str = "rate", value: str = "inconsistency",
                   scale: str = "linear") -> Path:
    """Reshape a summary CSV into one plot-ready table.

    group_by picks the x axis ("rate" or "n"); every distinct combination
    of the remaining axes (protocol, topology and the other of n/rate)
    forms a series. With scale="log" a log10 column is added; all-zero
    means are emitted as flagged zero rows rather than -inf.
    """
    if group_by not in ("rate", "n"):
        raise ConfigError(f"group_by must be 'rate' or 'n', got {group_by!r}")
    if value not in _PLOT_VALUES:
        raise ConfigError(f"value must be one of {tuple(_PLOT_VALUES)}, got {value!r}")
    if scale not in ("linear", "log"):
        raise ConfigError(f"scale must be 'linear' or 'log', got {scale!r}")
    mean_col, ci_col = _PLOT_VALUES[value]
    with open(summary_path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        have = set(reader.fieldnames or ())
    needed = {"protocol", "topology", "n", "rate", mean_col, ci_col}
    missing = sorted(needed - have)
    if missing:
        raise ConfigError(f"summary CSV is missing columns: {', '.join(missing)}")
    other_axis = "n" if group_by == "rate" else "rate"
    columns = ["protocol", "topology", other_axis, group_by, "y_mean", "y_ci95"]
    if scale == "log":
        columns += ["y_log10", "zero_flag"]
    out_rows = []
    for row in rows:
        if row[mean_col] == "":
            continue
        mean = float(row[mean_col])
        ci = float(row[ci_col]) if row[ci_col] != "" else ""
        rec = {
            "protocol": row["protocol"],
            "topology": row["topology"],
            other_axis: _num(row[other_axis]),
            group_by: _num(row[group_by]),
            "y_mean": mean,
            "y_ci95": ci,
        }
        if scale == "log":
            if mean > 0:
                rec["y_log10"] = math.log10(mean)
                rec["zero_flag"] = 0
            else:
                rec["y_log10"] = ""
                rec["zero_flag"] = 1
        out_rows.append(rec)
    out_rows.sort(key=lambda r: (r["protocol"], r["topology"],
                                 r[other_axis], r[group_by]))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"plot_{value}_by_{group_by}_{scale}.csv"
    write_csv(path, columns, out_rows)
    return path


def _num(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)
