"""The network being searched over: an MLP classifier trained K times per architecture."""

from __future__ import annotations

import gzip
import itertools
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn

MAX_WIDTH = 4096
IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
# seed stream index reserved for data subsetting; trials use 0..K-1
_SUBSET_STREAM = 1 << 32


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class Architecture:
    widths: tuple[int, ...]

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        object.__setattr__(self, "widths", widths)
        if len(widths) not in (2, 3):
            raise ValueError(f"depth must be 2 or 3, got {len(widths)}")
        if any(not 1 <= w <= MAX_WIDTH for w in widths):
            raise ValueError(f"widths must lie in [1, {MAX_WIDTH}], got {widths}")

    @property
    def depth(self) -> int:
        return len(self.widths)

    def __iter__(self):
        return iter(self.widths)

    def __len__(self):
        return len(self.widths)

    def __str__(self):
        return "x".join(map(str, self.widths))

    @classmethod
    def parse(cls, text: str) -> Architecture:
        return cls(tuple(int(t) for t in text.split("x")))


@dataclass(frozen=True)
class LabeledDataset:
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    num_classes: int
    name: str = ""

    def __post_init__(self):
        for x, y, part in ((self.train_x, self.train_y, "train"), (self.test_x, self.test_y, "test")):
            if x.ndim != 2 or x.shape[0] != y.shape[0]:
                raise DataError(f"{part}: {x.shape[0]} inputs vs {y.shape[0]} labels")
            if y.size and (y.min() < 0 or y.max() >= self.num_classes):
                raise DataError(f"{part}: labels outside [0, {self.num_classes})")
        if self.train_x.shape[1] != self.test_x.shape[1]:
            raise DataError("train and test inputs differ in dimension")

    @property
    def input_dim(self) -> int:
        return self.train_x.shape[1]


def _read_idx(path, expected_magic: int) -> np.ndarray:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as f:
        raw = f.read()
    if len(raw) < 8:
        raise DataError(f"{path}: truncated header")
    magic = int.from_bytes(raw[:4], "big")
    if magic != expected_magic:
        raise DataError(f"{path}: magic {magic:#010x}, expected {expected_magic:#010x}")
    ndim = raw[3]
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise DataError(f"{path}: truncated header")
    dims = [int.from_bytes(raw[4 + 4 * i: 8 + 4 * i], "big") for i in range(ndim)]
    count = int(np.prod(dims))
    if len(raw) - header != count:
        raise DataError(f"{path}: expected {count} data bytes, found {len(raw) - header}")
    return np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)


def load_idx_pair(images_path, labels_path) -> tuple[np.ndarray, np.ndarray]:
    images = _read_idx(images_path, IMAGE_MAGIC)
    labels = _read_idx(labels_path, LABEL_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise DataError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    x = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return x, labels.astype(np.int64)


def load_mnist_idx(train_images, train_labels, test_images, test_labels) -> LabeledDataset:
    tx, ty = load_idx_pair(train_images, train_labels)
    vx, vy = load_idx_pair(test_images, test_labels)
    return LabeledDataset(tx, ty, vx, vy, num_classes=10, name="mnist")


MNIST_FILES = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte",
               "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")


def load_mnist_dir(directory) -> LabeledDataset:
    """Load the four canonical MNIST files from ``directory`` (plain or ``.gz``)."""
    paths = []
    for stem in MNIST_FILES:
        for cand in (Path(directory) / stem, Path(directory) / f"{stem}.gz"):
            if cand.exists():
                paths.append(cand)
                break
        else:
            raise DataError(f"{stem}[.gz] not found in {directory}")
    return load_mnist_idx(*paths)


def make_synthetic(seed: int, classes: int = 10, dim: int = 20, n_train: int = 10_000,
                   n_test: int = 2_000, separation: float = 6.0) -> LabeledDataset:
    """Isotropic unit-variance Gaussian blobs whose means sit ``separation`` from the origin."""
    if classes < 2:
        raise ValueError("need at least 2 classes")
    if n_train < 1 or n_test < 1:
        raise ValueError("n_train and n_test must be positive")
    rng = nn.make_rng(seed)
    centers = rng.standard_normal((classes, dim))
    centers *= separation / np.linalg.norm(centers, axis=1, keepdims=True)

    def draw(n):
        y = rng.integers(0, classes, size=n)
        return centers[y] + rng.standard_normal((n, dim)), y.astype(np.int64)

    tx, ty = draw(n_train)
    vx, vy = draw(n_test)
    return LabeledDataset(tx, ty, vx, vy, num_classes=classes, name=f"synthetic-{seed}")


@dataclass(frozen=True)
class EvalBudget:
    trials: int = 10
    epochs: int = 50
    train_subset: int | None = None
    test_subset: int | None = None
    batch_size: int = 32
    dropout: float = 0.2
    adam: nn.AdamHParams = field(default_factory=nn.AdamHParams)

    def __post_init__(self):
        if self.trials < 1 or self.epochs < 1:
            raise ValueError("trials and epochs must be >= 1")


BUDGETS = {
    "full": EvalBudget(trials=10, epochs=50),
    "desk": EvalBudget(trials=3, epochs=3, train_subset=10_000),
}


def build_classifier_spec(arch: Architecture, input_dim: int, num_classes: int,
                          dropout: float = 0.2) -> nn.NetworkSpec:
    arch = arch if isinstance(arch, Architecture) else Architecture(tuple(arch))
    return nn.NetworkSpec(
        input_dim=input_dim,
        hidden_widths=arch.widths,
        output_dim=num_classes,
        dropout_rates=(dropout,) * arch.depth,
        output_head=nn.SOFTMAX_CE,
    )


@dataclass(frozen=True)
class TrialResult:
    architecture: Architecture
    accuracies: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "accuracies", tuple(float(a) for a in self.accuracies))
        if not self.accuracies:
            raise ValueError("need at least one accuracy")
        if any(not 0.0 <= a <= 1.0 for a in self.accuracies):
            raise ValueError(f"accuracies must lie in [0, 1]: {self.accuracies}")

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))


def _subset(x, y, n, seed):
    if n is None or n >= len(y):
        return x, y
    idx = nn.make_rng(seed).permutation(len(y))[:n]
    return x[idx], y[idx]


def run_trials(arch: Architecture, dataset: LabeledDataset, budget: EvalBudget,
               base_seed: int) -> TrialResult:
    """Train ``budget.trials`` fresh classifiers; trial i is seeded by ``mix_seed(base_seed, i)``."""
    spec = build_classifier_spec(arch, dataset.input_dim, dataset.num_classes, budget.dropout)
    subset_seed = nn.mix_seed(base_seed, _SUBSET_STREAM)
    tx, ty = _subset(dataset.train_x, dataset.train_y, budget.train_subset, subset_seed)
    vx, vy = _subset(dataset.test_x, dataset.test_y, budget.test_subset, subset_seed + 1)
    accs = []
    for i in range(budget.trials):
        settings = nn.TrainSettings(epochs=budget.epochs, batch_size=budget.batch_size,
                                    seed=nn.mix_seed(base_seed, i))
        params = nn.train(spec, tx, ty, settings, budget.adam)
        accs.append(nn.evaluate_accuracy(params, spec, vx, vy))
    return TrialResult(Architecture(tuple(arch)), tuple(accs))


def grid_architectures(node_set, depth: int) -> list[Architecture]:
    """Full Cartesian product, widest first, in the row order of the published grids."""
    nodes = sorted(set(int(n) for n in node_set), reverse=True)
    if not nodes:
        raise ValueError("node_set must be non-empty")
    return [Architecture(w) for w in itertools.product(nodes, repeat=depth)]


def collect_grid(node_set, depth: int, dataset: LabeledDataset, budget: EvalBudget,
                 base_seed: int) -> list[TrialResult]:
    return [run_trials(arch, dataset, budget, nn.mix_seed(base_seed, i))
            for i, arch in enumerate(grid_architectures(node_set, depth))]


def default_mnist_dir() -> str | None:
    return os.environ.get("ASNN_MNIST_DIR")
