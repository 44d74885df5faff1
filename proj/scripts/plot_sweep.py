#!/usr/bin/env python3
"""Plot mean test error per method against the axis value of a sweep CSV.

Usage: plot_sweep.py sweep.csv out.png [--log-x]
Infeasible points are skipped.
"""

import argparse
import csv
from collections import defaultdict
from statistics import mean

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("csv")
    parser.add_argument("out")
    parser.add_argument("--log-x", action="store_true")
    args = parser.parse_args()

    errors = defaultdict(lambda: defaultdict(list))
    with open(args.csv, newline="") as f:
        for row in csv.DictReader(f):
            if row["test_error"] == "infeasible":
                continue
            errors[row["method"]][float(row["axis_value"])].append(float(row["test_error"]))

    fig, ax = plt.subplots(figsize=(6, 4))
    for method, by_value in sorted(errors.items()):
        xs = sorted(by_value)
        ax.plot(xs, [100 * mean(by_value[x]) for x in xs], marker="o", label=method)
    if args.log_x:
        ax.set_xscale("log", base=2)
    ax.set_xlabel("axis value")
    ax.set_ylabel("test error (%)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)


if __name__ == "__main__":
    main()
