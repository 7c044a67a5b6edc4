"""Training set for the architecture regressor.

Each record pairs an architecture with the accuracies of its repeated
trainings. Samples are built by permuting a record's accuracy vector
(the order of repeated trials carries no information), scaling by 100,
and regressing onto the raw widths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .target import Architecture, TrialResult

N_TRIALS = 10
SCALE = 100.0


@dataclass(frozen=True)
class ArchRecord:
    arch: Architecture
    accuracies: tuple[float, ...]

    def __post_init__(self):
        if not isinstance(self.arch, Architecture):
            object.__setattr__(self, "arch", Architecture(tuple(self.arch)))
        object.__setattr__(self, "accuracies", tuple(float(a) for a in self.accuracies))
        if len(self.accuracies) != N_TRIALS:
            raise ValueError(f"a record holds exactly {N_TRIALS} accuracies, got {len(self.accuracies)}")
        if any(not 0.0 <= a <= 1.0 for a in self.accuracies):
            raise ValueError("accuracies must lie in [0, 1]")

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))


@dataclass(frozen=True)
class AsnnSample:
    input: tuple[float, ...]
    target: tuple[float, ...]


@dataclass
class AsnnSamples:
    """Samples stored column-wise; ``source[i]`` is the record row ``i`` came from."""

    inputs: np.ndarray
    targets: np.ndarray
    source: np.ndarray

    def __len__(self):
        return self.inputs.shape[0]

    def __iter__(self):
        for x, t in zip(self.inputs, self.targets):
            yield AsnnSample(tuple(x), tuple(t))

    @property
    def depth(self) -> int:
        return self.targets.shape[1]

    def take(self, order) -> AsnnSamples:
        return AsnnSamples(self.inputs[order], self.targets[order], self.source[order])


@dataclass(frozen=True)
class AugmentConfig:
    target_size: int = 10_000
    seed: int = 0
    strategy: str = "permute_within_record"

    def __post_init__(self):
        if self.target_size < 1:
            raise ValueError("target_size must be positive")
        if self.strategy != "permute_within_record":
            raise ValueError(f"unknown augmentation strategy {self.strategy!r}")


class AsnnDataset:
    """The growing record set D."""

    def __init__(self, records, strict: bool = True):
        records = list(records)
        if not records:
            raise ValueError("dataset needs at least one record")
        depths = {r.arch.depth for r in records}
        if len(depths) != 1:
            raise ValueError(f"records mix depths {sorted(depths)}")
        seen = set()
        for r in records:
            key = (r.arch.widths, r.accuracies)
            if key in seen:
                raise ValueError(f"duplicate record for {r.arch}")
            seen.add(key)
        self.records = records
        self.depth = depths.pop()
        # strict: appended trials must carry exactly N_TRIALS accuracies
        self.strict = strict

    def __len__(self):
        return len(self.records)

    def best_mean(self) -> float:
        return max(r.mean for r in self.records)

    def append_trial(self, result: TrialResult) -> AsnnDataset:
        if result.architecture.depth != self.depth:
            raise ValueError(f"trial depth {result.architecture.depth} != dataset depth {self.depth}")
        accs = result.accuracies
        if len(accs) != N_TRIALS:
            if self.strict:
                raise ValueError(f"expected {N_TRIALS} accuracies, got {len(accs)}")
            accs = fit_to_length(accs)
        self.records.append(ArchRecord(result.architecture, accs))
        return self


def fit_to_length(accs, n: int = N_TRIALS) -> tuple[float, ...]:
    """Repeat cyclically (or truncate) to ``n`` values."""
    return tuple(accs[i % len(accs)] for i in range(n))


def ingest_records(records, strict: bool = True) -> AsnnDataset:
    return AsnnDataset(records, strict=strict)


def augment(dataset: AsnnDataset, cfg: AugmentConfig) -> AsnnSamples:
    """Round-robin over records, permuting each copy's accuracies with a seeded shuffle."""
    recs = dataset.records
    if cfg.target_size < len(recs):
        raise ValueError(f"target_size {cfg.target_size} < {len(recs)} records")
    acc = np.array([r.accuracies for r in recs])
    widths = np.array([r.arch.widths for r in recs], dtype=np.float64)
    source = np.arange(cfg.target_size) % len(recs)
    rng = nn.make_rng(cfg.seed)
    inputs = rng.permuted(acc[source], axis=1) * SCALE
    return AsnnSamples(inputs, widths[source], source)


def shuffle_samples(samples: AsnnSamples, seed: int) -> AsnnSamples:
    return samples.take(nn.make_rng(seed).permutation(len(samples)))


def records_from_table(rows) -> list[ArchRecord]:
    return [ArchRecord(Architecture(r.widths), r.accuracies) for r in rows]
