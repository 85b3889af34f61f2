#!/usr/bin/env python3
"""Plot yield against measurement rate from one or more sweep CSV files.

    python3 docs/plot_sweep.py out/fig3_dense.csv [more.csv ...] -o yield.png

The gamma = 0 row cannot sit on a log axis; it is drawn as a horizontal
reference line instead.
"""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv", nargs="+")
    parser.add_argument("-o", "--output", default="yield.png")
    args = parser.parse_args()

    fig, ax = plt.subplots(figsize=(6, 4))
    for path in args.csv:
        rows = [r for r in read_rows(path) if r["yield"] != "nan"]
        rates = [float(r["gamma_fs_inv"]) for r in rows if float(r["gamma_fs_inv"]) > 0]
        yields = [float(r["yield"]) for r in rows if float(r["gamma_fs_inv"]) > 0]
        (line,) = ax.semilogx(rates, yields, marker="o", ms=3, label=path)
        for r in rows:
            if float(r["gamma_fs_inv"]) == 0:
                ax.axhline(float(r["yield"]), ls=":", color=line.get_color())

    ax.set_xlabel(r"measurement rate $\gamma$ (fs$^{-1}$)")
    ax.set_ylabel("trans yield")
    ax.set_ylim(0, 1)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
