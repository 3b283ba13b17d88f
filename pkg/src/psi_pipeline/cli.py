"""Command-line entry point.

Subcommands mirror the pipeline stages; every run is driven by one config
file, with a few flags overriding it. Exit codes: 0 success, 1 when any
per-item failure was recorded in an errors sidecar, 2 for configuration
or IO problems.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, pipeline
from .config import load_config
from .errors import PipelineError

STAGES = ("filter", "classify", "integrate", "index", "evaluate", "run-all")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psi-pipeline",
        description="Build and evaluate price sentiment indices from survey comments",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="pipeline config YAML")
        p.add_argument("--cache", help="override the reply cache path")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--strict-industry", action="store_true", help="unknown industries are errors")
        p.add_argument("--force", action="store_true", help="rerun even when the manifest says skippable")

    for stage in ("filter", "classify", "integrate"):
        add_common(sub.add_parser(stage, help=f"run the {stage} stage"))

    p_index = sub.add_parser("index", help="aggregate decisions into monthly indices")
    add_common(p_index)
    p_index.add_argument("--emit-plot-data", action="store_true", help="also write series,month,value CSV")

    p_eval = sub.add_parser("evaluate", help="correlation and causality against a reference series")
    add_common(p_eval)
    p_eval.add_argument("--psi", help="index CSV (defaults to configured evaluations)")
    p_eval.add_argument("--reference", help="reference series CSV (month,value)")
    p_eval.add_argument("--name", help="label for ad-hoc evaluation outputs")
    p_eval.add_argument("--transform", choices=("level", "yoy_pct", "mom_pct"))
    p_eval.add_argument("--lag-min", type=int, dest="lag_min")
    p_eval.add_argument("--lag-max", type=int, dest="lag_max")
    p_eval.add_argument("--min-overlap", type=int, dest="min_overlap")
    p_eval.add_argument("--max-lag", type=int, dest="max_lag")

    p_all = sub.add_parser("run-all", help="run every stage in order")
    add_common(p_all)
    p_all.add_argument("--emit-plot-data", action="store_true")

    return parser


def _apply_overrides(cfg, args) -> None:
    if args.cache is not None:
        cfg.cache = Path(args.cache)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.strict_industry:
        cfg.strict_industry = True


def _report(results) -> int:
    n_errors = 0
    for r in results:
        status = "skipped (up to date)" if r.skipped else "done"
        print(f"[{r.stage}] {status}" + (f", {r.n_errors} item error(s)" if r.n_errors else ""))
        for note in r.notes:
            print(f"  {note}")
        for out in r.outputs:
            print(f"  -> {out}")
        n_errors += r.n_errors
    return 1 if n_errors else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        _apply_overrides(cfg, args)
        cfg.output_dir.mkdir(parents=True, exist_ok=True)

        if args.command == "filter":
            results = [pipeline.cmd_filter(cfg, args.force)]
        elif args.command == "classify":
            results = [pipeline.cmd_classify(cfg, args.force)]
        elif args.command == "integrate":
            results = [pipeline.cmd_integrate(cfg, args.force)]
        elif args.command == "index":
            results = [pipeline.cmd_index(cfg, args.force, args.emit_plot_data)]
        elif args.command == "evaluate":
            overrides = {
                key: getattr(args, key)
                for key in ("transform", "lag_min", "lag_max", "min_overlap", "max_lag")
                if getattr(args, key) is not None
            }
            results = [
                pipeline.cmd_evaluate(
                    cfg,
                    args.force,
                    psi_path=args.psi,
                    reference_path=args.reference,
                    name=args.name,
                    overrides=overrides or None,
                )
            ]
        else:  # run-all
            results = pipeline.run_all(cfg, args.force, args.emit_plot_data)
    except (PipelineError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return _report(results)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
