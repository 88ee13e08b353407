#!/usr/bin/env python3
"""Compare relaxed, brute-force and greedy allocations on small random instances.

Reports how often the relaxed MSQE fails to lower-bound the integer optimum
when switched-off branches cost their full power sigma^2.
"""

import argparse

import numpy as np

from bitalloc.allocation import (
    PowerModel,
    allocate_bits,
    brute_force_allocation,
    relaxed_msqe,
    solve_relaxed,
    total_msqe,
)
from bitalloc.beamspace import RfSnrProfile


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--b-max", type=int, default=5)
    ap.add_argument("--seed", type=int, default=2002)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    model = PowerModel()
    lower_viol, upper_viol, ratios = 0, 0, []
    for _ in range(args.instances):
        n = int(rng.integers(2, 7))
        b_bar = int(rng.integers(1, 4))
        prof = RfSnrProfile.from_snr(10 ** (rng.uniform(-10, 30, n) / 10))
        relaxed = solve_relaxed(prof, b_bar)
        r = relaxed_msqe(relaxed, prof)
        bf = total_msqe(brute_force_allocation(prof, model, b_bar, b_max=args.b_max), prof)
        alg = total_msqe(allocate_bits(prof, model, b_bar, relaxed=relaxed), prof)
        lower_viol += r > bf * (1 + 1e-12)
        upper_viol += bf > alg * (1 + 1e-12)
        ratios.append(alg / bf)
    ratios = np.array(ratios)
    print(f"relaxed > brute force: {lower_viol}/{args.instances}")
    print(f"brute force > greedy:  {upper_viol}/{args.instances}")
    print(f"greedy / brute force MSQE: mean {ratios.mean():.4f}, max {ratios.max():.4f}")


if __name__ == "__main__":
    main()
