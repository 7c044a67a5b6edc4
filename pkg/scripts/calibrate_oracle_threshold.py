"""Brute-force sweep of the noise-free 2-layer oracle over every integer architecture in its hull.

Prints the landscape summary used to freeze the end-to-end search threshold.
"""

import argparse

import numpy as np

from asnn import tables
from asnn.search import TabularOracle


def sweep(lo=16, hi=256):
    oracle = TabularOracle(tables.TABLE_2LAYER, noise_scale=0.0)
    widths = np.arange(lo, hi + 1)
    grid = np.array([[oracle.mean_at((a, b)) for b in widths] for a in widths])
    return widths, grid


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--threshold", type=float, default=0.9825)
    args = p.parse_args()
    widths, grid = sweep()
    i, j = np.unravel_index(np.argmax(grid), grid.shape)
    above = grid >= args.threshold
    print(f"architectures swept: {grid.size}")
    print(f"max noise-free mean: {grid.max():.5f} at ({widths[i]}, {widths[j]})")
    for q in (50, 90, 99):
        print(f"p{q} of the landscape: {np.percentile(grid, q):.5f}")
    print(f"fraction >= {args.threshold}: {above.mean():.4f}")
    if above.any():
        print(f"smallest first width reaching it: {widths[np.where(above.any(axis=1))[0][0]]}")


if __name__ == "__main__":
    main()
