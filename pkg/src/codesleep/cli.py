"""Command-line experiment runner: repetitions, sweeps, CSV output."""

from __future__ import annotations

import argparse
import logging
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .baselines import CANONICAL_NAMES, canonical_scenario
from .config import ScenarioConfig
from .engine import run
from .metrics import (
    AGGREGATE_COLUMNS,
    PER_RUN_COLUMNS,
    aggregate_row,
    per_run_row,
    write_csv,
)

log = logging.getLogger("codesleep.cli")


def derive_seeds(master: int, count: int) -> list[int]:
    rng = random.Random(master)
    return [rng.getrandbits(32) for _ in range(count)]


def run_experiment(
    config: ScenarioConfig,
    out_dir,
    *,
    flow_sweep: list[int] | None = None,
    trace: bool = False,
    dump_qtable: bool = False,
    workers: int = 1,
) -> int:
    """Run all repetitions (optionally swept over flow counts), emit CSVs.

    Every repetition runs with its own seed derived from the master seed, so
    the whole experiment is reproducible byte for byte. Returns a process
    exit code.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sweep = flow_sweep or [None]
    per_run_rows = []
    aggregate_rows = []
    for flows in sweep:
        cfg = config if flows is None else config.replace(
            flows=None, flow_count=flows, name=f"{config.name}-f{flows}"
        )
        seeds = derive_seeds(cfg.seed, cfg.repetitions)
        rep_cfgs = [
            cfg.replace(seed=s, collect_qtables=dump_qtable) for s in seeds
        ]
        if workers > 1 and len(rep_cfgs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                reports = list(pool.map(run, rep_cfgs))
        else:
            reports = []
            for i, rep_cfg in enumerate(rep_cfgs):
                sink = None
                closer = None
                if trace:
                    fh = open(out / f"trace_{cfg.name}_rep{i}.txt", "w", newline="\n")
                    sink, closer = fh.write, fh.close
                reports.append(run(rep_cfg, trace_sink=sink))
                if closer:
                    closer()
        for i, report in enumerate(reports):
            per_run_rows.append(per_run_row(report, i))
            if dump_qtable and report.qtable_rows is not None:
                qpath = out / f"qtable_{cfg.name}_rep{i}.txt"
                with open(qpath, "w", newline="\n") as fh:
                    fh.write("node,state,action,delay,value\n")
                    for row in report.qtable_rows:
                        fh.write(",".join(repr(v) if isinstance(v, float) else str(v)
                                          for v in row) + "\n")
        aggregate_rows.append(aggregate_row(reports))
    write_csv(out / "per_run.csv", PER_RUN_COLUMNS, per_run_rows)
    write_csv(out / "aggregate.csv", AGGREGATE_COLUMNS, aggregate_rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codesleep",
        description="Slotted wireless network-coding simulator with learned "
                    "sleep/overhear scheduling.",
    )
    parser.add_argument("--config", type=Path, help="scenario config file")
    parser.add_argument("--scenario", choices=CANONICAL_NAMES,
                        help="named built-in scenario")
    parser.add_argument("--policy",
                        help="learned | always-overhear | always-sleep | random:P")
    parser.add_argument("--flows", help="flow count sweep, e.g. 2,4,8,16")
    parser.add_argument("--reps", type=int, help="repetitions per configuration")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--duration", type=int, help="slots per run")
    parser.add_argument("--out", type=Path, default=Path("results"),
                        help="output directory (default: results)")
    parser.add_argument("--trace", action="store_true",
                        help="write per-slot event traces")
    parser.add_argument("--dump-qtable", action="store_true",
                        help="dump learned Q tables as text")
    parser.add_argument("--workers", type=int, default=1,
                        help="parallel repetition workers")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("CODESLEEP_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            config = ScenarioConfig.from_file(args.config)
        elif args.scenario:
            config = canonical_scenario(args.scenario)
        else:
            print("error: one of --config or --scenario is required", file=sys.stderr)
            return 2
        overrides = {}
        if args.policy:
            overrides["policy"] = args.policy
        if args.reps:
            overrides["repetitions"] = args.reps
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.duration:
            overrides["duration_slots"] = args.duration
        if overrides:
            config = config.replace(**overrides)
        sweep = [int(x) for x in args.flows.split(",")] if args.flows else None
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return run_experiment(
            config, args.out, flow_sweep=sweep, trace=args.trace,
            dump_qtable=args.dump_qtable, workers=args.workers,
        )
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
