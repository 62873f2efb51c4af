"""Command-line entry points.

Verbs:
  run         one configuration, `runs` independent simulations, CSVs out
  sweep       cross-product sweep from a config file and/or flags
  plot-data   reshape a summary CSV into plot-ready tables
  graph       emit a generated topology as a tab-separated edge list
  acceptance  run the acceptance suite, one pass/fail line per criterion

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import (ConfigError, SweepSpec, experiment_from_values,
                     parse_config_text, sweep_from_values)
from .sweep import emit_plot_data, run_sweep
from .topology import generate, to_edgelist


def _add_experiment_flags(p: argparse.ArgumentParser, multi: bool) -> None:
    axis = dict(type=str) if multi else {}
    p.add_argument("--config", help="key=value config file ('#' comments)")
    p.add_argument("--n", **(axis or {"type": int}),
                   help="node count" + (", comma list allowed" if multi else ""))
    p.add_argument("--k", type=int, help="subscriptions per node (default round(sqrt(n)))")
    p.add_argument("--topology", **(axis or {"type": str}),
                   help="random|lattice|smallworld|scalefree")
    p.add_argument("--protocol", **(axis or {"type": str}),
                   help="centralised|hierarchical|simple_p2p|transitive_p2p")
    p.add_argument("--rate", **(axis or {"type": float}),
                   help="failure %% per minute")
    p.add_argument("--runs", type=int, help="independent runs per cell (default 10)")
    p.add_argument("--horizon", type=float, help="run length in seconds (default 3600)")
    p.add_argument("--seed", type=int, help="root seed (default 1)")
    p.add_argument("--warmup", type=int, help="probe seconds to discard (default 0)")
    p.add_argument("--t-poll", type=float, dest="t_poll", help="poll interval s")
    p.add_argument("--t-fresh", type=float, dest="t_fresh",
                   help="transitive freshness threshold s (default t_poll)")
    p.add_argument("--max-age", type=float, dest="max_age",
                   help="max forwardable record age s (default unbounded)")
    p.add_argument("--branching", type=int, help="hierarchy fan-out (default ceil(sqrt(n)))")
    p.add_argument("--monitors", type=int, help="centralised monitor count (default 1)")
    p.add_argument("--p-rewire", type=float, dest="p_rewire",
                   help="small-world rewiring probability (default 0.1)")
    p.add_argument("--p-invert", type=float, dest="p_invert",
                   help="scale-free inversion probability (default 0.15)")
    p.add_argument("--gamma-shape", type=float, dest="gamma_shape",
                   help="failure gap gamma shape (default 2)")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--workers", type=int, default=1, help="parallel run workers")
    p.add_argument("--allow-large", action="store_true", dest="allow_large",
                   help="permit n >= 10^4 cells (long-running)")


_VALUE_KEYS = ("n", "k", "topology", "protocol", "rate", "runs", "horizon",
               "seed", "warmup", "t_poll", "t_fresh", "max_age", "branching",
               "monitors", "p_rewire", "p_invert", "gamma_shape")


def _collect_values(args: argparse.Namespace, multi: bool) -> dict:
    values: dict = {}
    if args.config:
        values.update(parse_config_text(Path(args.config).read_text()))
    for key in _VALUE_KEYS:
        v = getattr(args, key, None)
        if v is None:
            continue
        if multi and key in ("n", "rate", "topology", "protocol") and isinstance(v, str):
            parts = [s.strip() for s in v.split(",")]
            caster = {"n": int, "rate": float}.get(key, str)
            parsed = tuple(caster(s) for s in parts)
            values[key] = parsed if len(parsed) > 1 else parsed[0]
        else:
            values[key] = v
    return values


LARGE_N = 10_000


def _check_scale(ns, allow_large: bool) -> None:
    big = [n for n in ns if n >= LARGE_N]
    if big and not allow_large:
        raise ConfigError(
            f"n >= {LARGE_N} is long-running (got {big}); pass --allow-large "
            "to confirm")


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = experiment_from_values(_collect_values(args, multi=False))
    _check_scale([cfg.n], args.allow_large)
    spec = SweepSpec(n=(cfg.n,), rate=(cfg.rate,), topology=(cfg.topology,),
                     protocol=(cfg.protocol,), base=cfg)
    result = run_sweep(spec, out_dir=args.out, workers=args.workers,
                       progress=_progress if not args.quiet else None)
    print(f"wrote {result.detail_path} and {result.summary_path}")
    for row in result.summary_rows:
        if row["error"]:
            print(f"errors: {row['error']}", file=sys.stderr)
            return 2
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = sweep_from_values(_collect_values(args, multi=True))
    _check_scale(spec.n, args.allow_large)
    result = run_sweep(spec, out_dir=args.out, workers=args.workers,
                       progress=_progress if not args.quiet else None)
    print(f"wrote {result.detail_path} and {result.summary_path} "
          f"({len(result.summary_rows)} cells, {len(result.detail_rows)} runs)")
    failed = [row["error"] for row in result.summary_rows if row["error"]]
    if failed:
        for err in failed:
            print(f"cell error: {err}", file=sys.stderr)
    return 0


def _progress(done: int, total: int, row) -> None:
    if done % 5 == 0 or done == total:
        print(f"\r{done}/{total} runs", end="" if done < total else "\n",
              file=sys.stderr, flush=True)


def _cmd_plot_data(args: argparse.Namespace) -> int:
    path = emit_plot_data(args.summary, args.out, group_by=args.group_by,
                          value=args.value, scale=args.scale)
    print(f"wrote {path}")
    return 0


def _cmd_graph(args: argparse.Namespace) -> int:
    values = _collect_values(args, multi=False)
    cfg = experiment_from_values(values)
    seed = values.get("seed", cfg.seed)
    graph = generate(cfg.topology, cfg.n, cfg.gen_params(), seed)
    text = to_edgelist(graph)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        out = Path(args.out)
        if out.is_dir() or args.out.endswith(("/", os.sep)):
            out = out / f"{cfg.topology}_n{cfg.n}_k{cfg.resolved_k}_s{seed}.edges"
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        print(f"wrote {out}")
    return 0


def _cmd_acceptance(args: argparse.Namespace) -> int:
    from .acceptance import run_acceptance
    results = run_acceptance(out_dir=args.out, workers=args.workers,
                             include_large=args.large)
    failed = [r for r in results if r.passed is False]
    return 0 if not failed else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heartmesh",
        description="Heartbeat middleware simulator over structured subscription networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configuration")
    _add_experiment_flags(p_run, multi=False)
    p_run.add_argument("--quiet", action="store_true")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a cross-product sweep")
    _add_experiment_flags(p_sweep, multi=True)
    p_sweep.add_argument("--quiet", action="store_true")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_plot = sub.add_parser("plot-data", help="reshape a summary CSV for plotting")
    p_plot.add_argument("--summary", required=True, help="summary.csv path")
    p_plot.add_argument("--group-by", choices=("rate", "n"), default="rate")
    p_plot.add_argument("--value", choices=("inconsistency", "load", "infra_load"),
                        default="inconsistency")
    p_plot.add_argument("--scale", choices=("linear", "log"), default="linear")
    p_plot.add_argument("--out", default="results")
    p_plot.set_defaults(func=_cmd_plot_data)

    p_graph = sub.add_parser("graph", help="emit a generated topology edge list")
    _add_experiment_flags(p_graph, multi=False)
    p_graph.set_defaults(func=_cmd_graph)

    p_acc = sub.add_parser("acceptance", help="run the acceptance suite")
    p_acc.add_argument("--out", default="acceptance-results",
                       help="cache/result directory")
    p_acc.add_argument("--workers", type=int, default=None)
    p_acc.add_argument("--large", action="store_true",
                       help="include the long n=10^4 saturation runs")
    p_acc.set_defaults(func=_cmd_acceptance)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
