"""Long-running MNIST check at the full budget (10 trials x 50 epochs per architecture).

Re-evaluates the published suggested architectures and compares each mean with
its printed value at a +/-0.005 tolerance. With --search, also runs the ASNN
loop on real training from the embedded grid. Needs ASNN_MNIST_DIR or --mnist-dir.
Expect hours on a single core.
"""

import argparse
import os
import sys

from asnn import tables
from asnn.dataset import records_from_table
from asnn.search import LoopConfig, RealTrainer, run_asnn_search
from asnn.target import BUDGETS, Architecture, load_mnist_dir, run_trials

TOLERANCE = 0.005


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--mnist-dir", default=os.environ.get("ASNN_MNIST_DIR"))
    p.add_argument("--depth", type=int, choices=(2, 3), default=2)
    p.add_argument("--limit", type=int, default=None, help="only the first N architectures")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--search", type=int, default=0, metavar="ITERS", help="also run N ASNN rounds")
    args = p.parse_args()
    if not args.mnist_dir:
        sys.exit("set ASNN_MNIST_DIR or pass --mnist-dir")

    data = load_mnist_dir(args.mnist_dir)
    budget = BUDGETS["full"]
    rows = tables.PREDICTIONS_2LAYER if args.depth == 2 else tables.PREDICTIONS_3LAYER
    failures = 0
    for row in rows[: args.limit]:
        res = run_trials(Architecture(row.widths), data, budget, args.seed)
        ok = abs(res.mean - row.mean) <= TOLERANCE
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'} {Architecture(row.widths)}: {res.mean:.5f} vs {row.mean:.5f}",
              flush=True)

    if args.search:
        cfg = LoopConfig(max_iterations=args.search, backend="real", seed=args.seed)
        logs = run_asnn_search(cfg, records_from_table(tables.grid_table(args.depth)),
                               RealTrainer(data, budget))
        for log in logs:
            print(f"iter {log.iteration}: {log.architecture} mean={log.trial.mean:.5f}", flush=True)
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
