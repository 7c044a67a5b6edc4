"""Command-line entry point.

Exit codes: 0 success, 1 config error, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import io, nn, tables
from .config import ConfigError, RunConfig, echo, parse_assignment, parse_config
from .dataset import records_from_table
from .search import (
    RealTrainer,
    TabularOracle,
    compare_strategies,
    run_asnn_search,
    run_random_search,
)
from .target import (
    BUDGETS,
    DataError,
    collect_grid,
    grid_architectures,
    load_mnist_dir,
    make_synthetic,
)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("asnn")


def verify_tables_report() -> tuple[list[str], bool]:
    lines = []
    ok = True
    for name, rows in (("table_2layer", tables.TABLE_2LAYER), ("table_3layer", tables.TABLE_3LAYER)):
        bad = tables.verify_rows(rows, name)
        ok &= not bad
        lines.append(f"{name}: {len(rows)} rows, {len(bad)} mismatches (tolerance {tables.MEAN_TOLERANCE:g})")
        for m in bad:
            lines.append(f"  {'x'.join(map(str, m.widths))}: stored {m.stored:.5f} recomputed {m.recomputed:.6f}")
    return lines, ok


def _backend(cfg: RunConfig):
    if cfg.backend == "oracle":
        return TabularOracle(tables.grid_table(cfg.depth), noise_scale=cfg.noise_scale)
    if cfg.mnist_dir is not None:
        data = load_mnist_dir(cfg.mnist_dir)
    else:
        syn = dict(cfg.synthetic)
        data = make_synthetic(syn.pop("seed", cfg.seed), **syn)
    return RealTrainer(data, BUDGETS[cfg.budget])


def _initial_records(cfg: RunConfig):
    if cfg.initial_grid is not None:
        recs = io.read_grid_records(cfg.initial_grid)
    else:
        recs = records_from_table(tables.grid_table(cfg.depth))
    if any(r.arch.depth != cfg.depth for r in recs):
        raise DataError(f"initial grid depth does not match depth={cfg.depth}")
    return recs


def _summary(cfg: RunConfig, logs) -> dict:
    out = {"backend": cfg.backend, "simulation": cfg.backend == "oracle", "iterations": len(logs)}
    if logs:
        best = max(logs, key=lambda l: l.trial.mean)
        out.update(final_architecture=list(logs[-1].architecture.widths),
                   best_architecture=list(best.architecture.widths),
                   best_mean=best.trial.mean)
    return out


def run(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    io.write_json(echo(cfg), out / "config.json")

    if cfg.mode == "verify-tables":
        lines, ok = verify_tables_report()
        (out / "verify_tables.txt").write_text("\n".join(lines) + "\n")
        print("\n".join(lines))
        return EXIT_OK if ok else EXIT_DATA

    backend = _backend(cfg)

    if cfg.mode == "collect-grid":
        if cfg.backend == "real":
            budget = replace(BUDGETS[cfg.budget], trials=cfg.trials)
            results = collect_grid(cfg.node_set, cfg.depth, backend.dataset, budget, cfg.seed)
        else:
            results = [backend.evaluate(a, cfg.trials, nn.mix_seed(cfg.seed, i))
                       for i, a in enumerate(grid_architectures(cfg.node_set, cfg.depth))]
        io.write_grid_csv(results, out / "grid.csv", depth=cfg.depth, trials=cfg.trials)
        io.write_json({"backend": cfg.backend, "simulation": cfg.backend == "oracle",
                       "cells": len(results)}, out / "summary.json")
        print(f"wrote {len(results)} grid rows to {out / 'grid.csv'}")
        return EXIT_OK

    if cfg.mode == "search-asnn":
        records = _initial_records(cfg)
        logs = run_asnn_search(cfg.loop_config(), records, backend)
        io.write_log_jsonl(logs, out / "log.jsonl")
        # the record set D as it stands after the last round
        io.write_grid_csv([*records, *(l.trial for l in logs)], out / "dataset.csv")
    elif cfg.mode == "search-random":
        logs = run_random_search(cfg.loop_config(), backend, tuple(cfg.width_range), cfg.depth,
                                 cfg.log_uniform)
        io.write_log_jsonl(logs, out / "log.jsonl")
    else:
        report = compare_strategies(cfg.strategies(), cfg.n_seeds, _initial_records(cfg), backend, cfg.depth)
        io.write_compare_csv(report, out / "compare.csv")
        summary = {"backend": cfg.backend, "simulation": cfg.backend == "oracle",
                   "median_final_best": report.median_final_best(),
                   "threshold": cfg.threshold,
                   "evaluations_to_threshold": report.evaluations_to_threshold(cfg.threshold)}
        io.write_json(summary, out / "summary.json")
        for name, med in summary["median_final_best"].items():
            print(f"{name}: median best-so-far after {cfg.max_iterations} evaluations = {med:.5f}")
        return EXIT_OK

    summary = _summary(cfg, logs)
    io.write_json(summary, out / "summary.json")
    for l in logs:
        print(f"iter {l.iteration}: {l.architecture} mean={l.trial.mean:.5f} best={l.best_so_far:.5f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asnn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="mode", required=True)
    for mode in ("collect-grid", "search-asnn", "search-random", "compare", "verify-tables"):
        sp = sub.add_parser(mode)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--backend", choices=["real", "oracle"])
        sp.add_argument("--budget", choices=["full", "desk"])
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key (value parsed as JSON)")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        overrides = dict(parse_assignment(s) for s in args.set)
        overrides.update(mode=args.mode, seed=args.seed, out=args.out,
                         backend=args.backend, budget=args.budget)
        cfg = parse_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(cfg)
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - mapped to the runtime exit code
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
