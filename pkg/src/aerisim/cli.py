"""Command-line entry point for the experiment families.

Subcommands: ``converge`` (per-iteration traces at a fixed placement),
``grid`` (position grid per altitude), ``sweep`` (altitude/orientation
sweep) and ``single`` (one record for debugging). Flag overrides win over
config values and the manifest records the resolved configuration. Exit
codes: 0 success, 2 config error, 3 I/O error, 4 solver failure in all
trials.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_experiment_config
from .experiments import (persist_results, persist_trace, run_convergence,
                          run_position_grid, run_altitude_orientation_sweep,
                          run_single)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SOLVER = 4

logger = logging.getLogger("aerisim.cli")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aerisim",
        description="Aerial surface downlink experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
            ("converge", "per-iteration objective and sum-rate traces"),
            ("grid", "position grid sweep per altitude"),
            ("sweep", "altitude and orientation sweep"),
            ("single", "one record, echoed to stdout")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="YAML config path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override master_seed")
        p.add_argument("--architecture", choices=("ris", "star"), default=None,
                       help="restrict to one architecture")
        p.add_argument("--eta", type=float, default=None,
                       help="override orientation angle (radians)")
        p.add_argument("--trials", type=int, default=None,
                       help="override trial count")
        p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _apply_overrides(config, args):
    fields = {}
    if args.seed is not None:
        fields["master_seed"] = args.seed
    if args.architecture is not None:
        fields["architectures"] = (args.architecture,)
    if args.eta is not None:
        fields["etas"] = (args.eta,)
    if args.trials is not None:
        fields["trials"] = args.trials
    return dataclasses.replace(config, **fields) if fields else config


def _record_to_dict(record) -> dict:
    d = dataclasses.asdict(record)
    d["per_user_rates"] = list(d["per_user_rates"])
    return d


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else (
        logging.INFO if args.verbose == 1 else logging.DEBUG)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")

    try:
        config = _apply_overrides(load_experiment_config(args.config), args)
    except ConfigError as exc:
        print(f"aerisim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(args.out)
    overrides = {
        k: v for k, v in (
            ("seed", args.seed), ("architecture", args.architecture),
            ("eta", args.eta), ("trials", args.trials)) if v is not None}
    extra = {"cli_overrides": overrides}

    try:
        if args.command == "converge":
            records, rows = run_convergence(config)
            persist_trace(rows, out_dir, "converge")
            persist_results(records, out_dir, "converge", config, extra)
        elif args.command == "grid":
            records = run_position_grid(config)
            persist_results(records, out_dir, "grid", config, extra)
        elif args.command == "sweep":
            records = run_altitude_orientation_sweep(config)
            persist_results(records, out_dir, "sweep", config, extra)
        else:  # single
            placement = config.placements[0]
            architecture = config.architectures[0]
            eta = config.etas[0] if architecture == "star" else 0.0
            record = run_single(config, placement, architecture, eta, trial=0)
            records = [record]
            persist_results(records, out_dir, "single", config, extra)
            print(json.dumps(_record_to_dict(record), indent=2, sort_keys=True))
    except OSError as exc:
        print(f"aerisim: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    solved = [r for r in records if r.status != "failed"]
    if not solved:
        print("aerisim: solver failed in all trials", file=sys.stderr)
        return EXIT_SOLVER
    if len(solved) < len(records):
        logger.warning("%d of %d records flagged as failed",
                       len(records) - len(solved), len(records))
    logger.info("wrote %d records to %s", len(records), out_dir)
    return EXIT_OK


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
