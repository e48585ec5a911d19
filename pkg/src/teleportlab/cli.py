"""Command-line entry point: ``teleportlab run <config>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .scenarios import SCENARIOS, ConfigError, ExperimentConfig, print_schema, run_scenario
from .state import MemoryLimitError, StateError

log = logging.getLogger("teleportlab")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="teleportlab", description="Imperfect teleportation of Ising-critical chains.")
    p.add_argument("--print-schema", action="store_true", help="print the config schema and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command")
    r = sub.add_parser("run", help="run a scenario from a config file")
    r.add_argument("config", nargs="?", help="INI config with an [experiment] section")
    r.add_argument("--scenario", choices=sorted(SCENARIOS), help="override (or supply) the scenario")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--threads", type=int)
    r.add_argument("--max-memory-gb", type=float, dest="max_memory_gb")
    sub.add_parser("list", help="list scenario names")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.print_schema:
        print(print_schema())
        return 0
    if args.command == "list":
        print("\n".join(sorted(SCENARIOS)))
        return 0
    if args.command != "run":
        build_parser().print_help()
        return 2
    overrides = {k: getattr(args, k) for k in ("scenario", "seed", "out", "threads", "max_memory_gb")}
    try:
        if args.config:
            cfg = ExperimentConfig.from_file(args.config, overrides)
        elif args.scenario:
            cfg = ExperimentConfig.from_strings({k: str(v) for k, v in overrides.items() if v is not None})
        else:
            raise ConfigError("give a config file or --scenario")
        log.info("running %s with seed %d", cfg.scenario, cfg.seed)
        bundle = run_scenario(cfg)
    except (ConfigError, StateError, MemoryLimitError, OSError) as exc:
        print(f"teleportlab: error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(bundle.paths, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
