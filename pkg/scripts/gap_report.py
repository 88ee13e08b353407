#!/usr/bin/env python3
"""Summarise a sweep CSV: BA vs Uniform EVM gaps, BA1/Uniform2 crossover, inactive ADCs.

    python3 scripts/gap_report.py results/evm_N256_M8_codebook.csv
"""

import argparse

import numpy as np

from bitalloc.harness import read_csv


def report(path):
    table = read_csv(path)
    b_bars = sorted({r.b_bar for r in table.rows if r.scheme == "BA"})
    print(f"# {path}")
    for b in b_bars:
        snr, ba = table.evm_curve("BA", b)
        _, uni = table.evm_curve("Uniform", b)
        gap = uni - ba
        print(f"b_bar={b}: gap (Uniform - BA, EVM %) " + " ".join(f"{s:+.0f}:{g:.2f}" for s, g in zip(snr, gap)))
    if {1, 2} <= set(b_bars):
        snr, ba1 = table.evm_curve("BA", 1)
        _, uni2 = table.evm_curve("Uniform", 2)
        below = ba1 < uni2
        cross = next((s for k, s in enumerate(snr) if below[k:].all()), None)
        print(f"BA1 below Uniform2 from: {cross} dB")
        print(f"BA1 mean inactive ADC pairs at {snr[-1]:+.0f} dB: {table.get('BA', 1, snr[-1]).inactive_mean:.1f}")
    full = [r.evm_mean_pct for r in table.rows if r.scheme == "FullResolution"]
    if full:
        print(f"full resolution EVM range: {np.min(full):.2f} .. {np.max(full):.2f} %")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", nargs="+")
    for path in ap.parse_args(argv).csv:
        report(path)


if __name__ == "__main__":
    main()
