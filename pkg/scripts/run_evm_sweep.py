#!/usr/bin/env python3
"""EVM versus SNR for full resolution, uniform and allocated ADC bits.

Writes one CSV per user count into --outdir, e.g.

    python3 scripts/run_evm_sweep.py --users 8 16 --trials 500 --workers 4
"""

import argparse
import logging
import os
import time
from pathlib import Path

from bitalloc.harness import ExperimentConfig, emit_csv, run_sweep

log = logging.getLogger("run_evm_sweep")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--users", type=int, nargs="+", default=[8, 16])
    ap.add_argument("--antennas", type=int, default=256)
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mode", choices=("codebook", "aqnm"), default="codebook")
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--outdir", type=Path, default=Path("results"))
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    args.outdir.mkdir(parents=True, exist_ok=True)
    for m in args.users:
        cfg = ExperimentConfig(
            n_antennas=args.antennas, n_users=m, trials=args.trials, seed=args.seed, quantizer_mode=args.mode
        )
        t0 = time.perf_counter()
        table = run_sweep(cfg, workers=args.workers)
        path = emit_csv(table, args.outdir / f"evm_N{args.antennas}_M{m}_{args.mode}.csv")
        log.info("M=%d: %d rows in %.1fs -> %s", m, len(table.rows), time.perf_counter() - t0, path)


if __name__ == "__main__":
    main()
