"""``rfveil-lab <experiment> [--config PATH] [--seed S] [--out DIR]``

Exit status: 0 on success, 2 for configuration errors, 3 for runtime failures.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .experiments import EXPERIMENTS, ConfigError, make_config, parse_config_text, run_experiment, write_csv

log = logging.getLogger("rfveil")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rfveil-lab", description="Run a fingerprint obfuscation experiment and write CSV.")
    p.add_argument("experiment", help=f"one of: {', '.join(sorted(EXPERIMENTS))}")
    p.add_argument("--config", type=Path, help="flat key=value configuration file")
    p.add_argument("--seed", type=int, help="root seed (overrides the config file)")
    p.add_argument("--out", type=Path, help="output directory (overrides the config file)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        overrides = {}
        if args.config is not None:
            try:
                overrides = parse_config_text(args.config.read_text())
            except OSError as exc:
                raise ConfigError("config", str(exc)) from None
        overrides.pop("experiment", None)
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out"] = str(args.out)
        cfg = make_config(args.experiment, overrides)
    except (ConfigError, TypeError) as exc:
        print(f"rfveil-lab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        t0 = time.perf_counter()
        header, rows = run_experiment(cfg)
        path = write_csv(Path(cfg.out) / f"{cfg.experiment}.csv", header, rows)
    except Exception as exc:  # noqa: BLE001 - any failure maps to the runtime exit code
        log.exception("experiment failed")
        print(f"rfveil-lab: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    log.info("%s: %d rows in %.1fs", cfg.experiment, len(rows), time.perf_counter() - t0)
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
