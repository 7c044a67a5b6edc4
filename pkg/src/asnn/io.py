"""CSV / JSON-lines persistence for grids, samples, search logs and comparison reports."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .dataset import ArchRecord, AsnnSamples
from .search import CompareReport, IterationLog
from .target import Architecture, DataError, TrialResult


def _open_for_write(path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def grid_header(depth: int, trials: int) -> list[str]:
    return ([f"L{i + 1}" for i in range(depth)] + [f"E{i + 1}" for i in range(trials)] + ["mean"])


def write_grid_csv(results, path, depth: int | None = None, trials: int = 10) -> None:
    """One row per architecture: widths, accuracies to 4 decimals, mean to 5.

    ``results`` may hold TrialResults or ArchRecords. ``depth`` is needed only
    to write a header for an empty list.
    """
    results = list(results)
    if results:
        depth = _arch(results[0]).depth
        trials = len(results[0].accuracies)
    elif depth is None:
        raise ValueError("depth is required to export an empty grid")
    with _open_for_write(path) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(grid_header(depth, trials))
        for r in results:
            w.writerow([*_arch(r).widths, *(f"{a:.4f}" for a in r.accuracies), f"{r.mean:.5f}"])


def _arch(r) -> Architecture:
    return r.architecture if isinstance(r, TrialResult) else r.arch


def read_grid_csv(path) -> list[TrialResult]:
    path = Path(path)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = rows[0]
    depth = sum(1 for h in header if h.startswith("L"))
    trials = sum(1 for h in header if h.startswith("E"))
    if header != grid_header(depth, trials) or depth not in (2, 3) or trials < 1:
        raise DataError(f"{path}: unexpected header {header}")
    out = []
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{n}: expected {len(header)} fields, got {len(row)}")
        try:
            arch = Architecture(tuple(int(v) for v in row[:depth]))
            out.append(TrialResult(arch, tuple(float(v) for v in row[depth:depth + trials])))
        except ValueError as exc:
            raise DataError(f"{path}:{n}: {exc}") from exc
    return out


def read_grid_records(path) -> list[ArchRecord]:
    try:
        return [ArchRecord(r.architecture, r.accuracies) for r in read_grid_csv(path)]
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_samples_csv(samples: AsnnSamples, path) -> None:
    with _open_for_write(path) as f:
        w = csv.writer(f, lineterminator="\n")
        n_in = samples.inputs.shape[1]
        w.writerow([f"in{i + 1}" for i in range(n_in)] + [f"t{i + 1}" for i in range(samples.depth)])
        for x, t in zip(samples.inputs, samples.targets):
            w.writerow([f"{v:.6f}" for v in x] + [f"{v:.6f}" for v in t])


def write_log_jsonl(logs, path) -> None:
    with _open_for_write(path) as f:
        for log in logs:
            f.write(json.dumps(log.to_dict(), sort_keys=True) + "\n")


def read_log_jsonl(path) -> list[IterationLog]:
    with open(path) as f:
        return [IterationLog.from_dict(json.loads(line)) for line in f if line.strip()]


COMPARE_HEADER = ["strategy", "seed", "iteration", "arch", "mean", "best_so_far"]


def write_compare_csv(report: CompareReport, path) -> None:
    with _open_for_write(path) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(COMPARE_HEADER)
        for r in report.rows:
            w.writerow([r.strategy, r.seed, r.iteration, r.arch, f"{r.mean:.6f}", f"{r.best_so_far:.6f}"])


def write_json(obj, path) -> None:
    with _open_for_write(path) as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")
