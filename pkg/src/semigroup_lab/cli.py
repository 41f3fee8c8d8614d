"""``semigroup-lab`` command line: run tabulations and verification suites, write CSV."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import suites
from .config import ConfigError, RunConfig, load_config

log = logging.getLogger("semigroup_lab")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semigroup-lab", description=__doc__)
    p.add_argument("command", choices=["evolve", "resolvent", "verify", "oracle"])
    p.add_argument("suite", nargs="?", help="suite for 'verify' (default: every suite listed in the config)")
    p.add_argument("--config", help="JSON run config (default: packaged config)")
    p.add_argument("--out", default=".", help="directory for the CSV report")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--trials", type=int, help="override the config trial count")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def write_csv(path: Path, rows: list[suites.Row]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(suites.CSV_FIELDS)
        for r in rows:
            w.writerow(r.as_csv())


def _jobs(command: str, suite: str | None, cfg: RunConfig) -> list[tuple[str, object]]:
    if command == "evolve":
        return [("evolve", suites.evolve)]
    if command == "resolvent":
        return [("resolvent", suites.resolvent_table)]
    if command == "oracle":
        return [("oracle", suites.suite_oracle)]
    names = [suite] if suite else (cfg.suites or list(suites.SUITES))
    unknown = [n for n in names if n not in suites.SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s): {', '.join(unknown)}")
    return [(n, suites.SUITES[n]) for n in names]


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.suite and args.command != "verify":
        print(f"error: a suite name is only accepted by 'verify'", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be a nonnegative integer")
            cfg.seed = args.seed
        if args.trials is not None:
            if args.trials < 1:
                raise ConfigError("trials must be >= 1")
            cfg.trials = args.trials
        jobs = _jobs(args.command, args.suite, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    stem = args.command if args.command != "verify" else f"verify_{args.suite or 'all'}"
    out = Path(args.out) / f"{stem}.csv"
    rows: list[suites.Row] = []
    status = EXIT_OK
    for name, fn in jobs:
        log.info("running %s", name)
        try:
            rows.extend(fn(cfg))
        except ConfigError as exc:
            write_csv(out, rows)
            print(f"config error in {name}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except Exception as exc:  # a crashing suite is a failed assertion, keep the partial report
            log.error("%s aborted: %s", name, exc)
            status = EXIT_FAIL
    if any(not r.passed for r in rows):
        status = EXIT_FAIL
    write_csv(out, rows)
    failed = sum(not r.passed for r in rows)
    print(f"{len(rows)} rows, {failed} failed -> {out}")
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
