"""Run every experiment with its config from configs/ and write CSVs to results/.

    python scripts/run_experiments.py [--only crb,tracking] [--workers 4] [--out results]
"""
import argparse
import logging
import time
from pathlib import Path

from rfveil.experiments import EXPERIMENTS, make_config, parse_config_text, run_experiment, write_csv

ROOT = Path(__file__).resolve().parents[1]

log = logging.getLogger("run_experiments")


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--only", help="comma separated experiment names")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=ROOT / "results")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    names = args.only.split(",") if args.only else sorted(EXPERIMENTS)
    for name in names:
        cfg_path = ROOT / "configs" / f"{name}.cfg"
        overrides = parse_config_text(cfg_path.read_text()) if cfg_path.exists() else {}
        overrides.update(workers=args.workers, out=str(args.out))
        cfg = make_config(name, overrides)
        t0 = time.perf_counter()
        header, rows = run_experiment(cfg)
        path = write_csv(args.out / f"{name}.csv", header, rows)
        log.info("%-15s %5d rows  %6.1f s  -> %s", name, len(rows), time.perf_counter() - t0, path)


if __name__ == "__main__":
    main()
