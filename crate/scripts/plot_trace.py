#!/usr/bin/env python3
"""Plot columns of a trace CSV written by `landing --out`, one line per method."""

import argparse

import matplotlib.pyplot as plt
import pandas as pd


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv")
    parser.add_argument("--columns", default="dist_opt,ortho_err", help="comma-separated y columns")
    parser.add_argument("--x", default="iter", choices=["iter", "time_s"])
    parser.add_argument("--out", help="image path; shows a window when omitted")
    args = parser.parse_args()

    df = pd.read_csv(args.csv)
    columns = args.columns.split(",")
    fig, axes = plt.subplots(len(columns), 1, sharex=True, figsize=(7, 3 * len(columns)), squeeze=False)
    for ax, col in zip(axes[:, 0], columns):
        for method, rows in df.groupby("method", sort=False):
            ax.semilogy(rows[args.x], rows[col].abs(), label=method)
        ax.set_ylabel(col)
    axes[-1, 0].set_xlabel(args.x)
    axes[0, 0].legend(fontsize="small")
    fig.tight_layout()
    if args.out:
        fig.savefig(args.out, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
