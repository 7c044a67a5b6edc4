"""ASNN search against random search on the simulated 2-layer oracle.

Writes the per-iteration CSV and prints the median best-so-far curve of each
strategy, scored both by observed (noisy) trial means and by the noise-free
oracle mean of each evaluated architecture.
"""

import argparse
import statistics
from dataclasses import replace
from pathlib import Path

from asnn import io, tables
from asnn.dataset import AugmentConfig, records_from_table
from asnn.model import AsnnConfig
from asnn.search import LoopConfig, Strategy, TabularOracle, compare_strategies
from asnn.target import Architecture


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--asnn-epochs", type=int, default=10)
    p.add_argument("--noise-scale", type=float, default=1.0)
    p.add_argument("--threshold", type=float, default=0.9825)
    p.add_argument("--log-uniform", action="store_true")
    p.add_argument("--out", default="runs/compare_strategies.csv")
    args = p.parse_args()

    loop = LoopConfig(max_iterations=args.iterations, augment=AugmentConfig(10_000),
                      asnn=AsnnConfig(epochs=args.asnn_epochs))
    strategies = [Strategy("asnn", "asnn", loop),
                  Strategy("random", "random", loop, (16, 256), args.log_uniform)]
    oracle = TabularOracle(tables.TABLE_2LAYER, noise_scale=args.noise_scale)
    still = TabularOracle(tables.TABLE_2LAYER, noise_scale=0.0)
    report = compare_strategies(strategies, args.seeds, records_from_table(tables.TABLE_2LAYER), oracle)

    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    io.write_compare_csv(report, args.out)

    # noise-free best-so-far per (strategy, seed)
    clean = {}
    for r in report.rows:
        curve = clean.setdefault(r.strategy, {}).setdefault(r.seed, [])
        value = still.mean_at(Architecture.parse(r.arch))
        curve.append(max(value, curve[-1]) if curve else value)

    observed = report.curves()
    print("iter " + "".join(f"{n + ' obs':>14}{n + ' clean':>14}" for n in observed))
    for k in range(args.iterations):
        cells = []
        for name in observed:
            obs = [c[k] for c in observed[name].values() if len(c) > k]
            cln = [c[k] for c in clean[name].values() if len(c) > k]
            cells.append(f"{statistics.median(obs):14.5f}{statistics.median(cln):14.5f}")
        print(f"{k + 1:4d} " + "".join(cells))
    for name, hits in report.evaluations_to_threshold(args.threshold).items():
        reached = [h for h in hits if h is not None]
        print(f"{name}: {len(reached)}/{len(hits)} seeds reach {args.threshold} (observed), "
              f"median evaluations {statistics.median(reached) if reached else 'n/a'}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
