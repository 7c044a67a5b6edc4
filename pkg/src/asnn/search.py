"""Iterative architecture search: ASNN suggestions, a random baseline, and the backends they query."""

from __future__ import annotations

import itertools
import math
import statistics
from dataclasses import dataclass, field, replace

import numpy as np

from . import nn
from .dataset import AsnnDataset, AugmentConfig, augment, shuffle_samples
from .model import AsnnConfig, predict, quantize, train_asnn
from .target import MAX_WIDTH, Architecture, EvalBudget, LabeledDataset, TrialResult, run_trials

LOG_SCHEMA_VERSION = 1

# per-iteration seed streams
_AUGMENT, _SHUFFLE, _ASNN, _EVAL, _DRAW = range(5)


class SearchError(RuntimeError):
    pass


class TabularOracle:
    """Answers evaluations from a stored accuracy grid instead of training.

    On-grid cells return ``mean + noise_scale * std * N(0, 1)`` per trial,
    clipped to [0, 1], with mean and sample std (ddof=1) of the stored
    trials. Off-grid widths are clamped to the grid hull and the cell means
    and stds are interpolated multilinearly in log2(width).
    """

    def __init__(self, rows, noise_scale: float = 1.0):
        rows = list(rows)
        if not rows:
            raise ValueError("oracle needs at least one grid row")
        self.depth = len(rows[0].widths)
        self.nodes = sorted({w for r in rows for w in r.widths})
        shape = (len(self.nodes),) * self.depth
        self.cell_mean = np.full(shape, np.nan)
        self.cell_std = np.full(shape, np.nan)
        pos = {w: i for i, w in enumerate(self.nodes)}
        for r in rows:
            if len(r.widths) != self.depth:
                raise ValueError("grid rows mix depths")
            idx = tuple(pos[w] for w in r.widths)
            acc = np.asarray(r.accuracies, dtype=np.float64)
            self.cell_mean[idx] = acc.mean()
            self.cell_std[idx] = acc.std(ddof=1)
        if np.isnan(self.cell_mean).any():
            raise ValueError("grid rows do not cover the full Cartesian product")
        self.log_nodes = np.log2(self.nodes)
        self.noise_scale = float(noise_scale)

    def _interp(self, table: np.ndarray, widths) -> float:
        if len(widths) != self.depth:
            raise ValueError(f"architecture depth {len(widths)} != oracle depth {self.depth}")
        if len(self.nodes) == 1:
            return float(table[(0,) * self.depth])
        lo_idx, frac = [], []
        for w in widths:
            lw = math.log2(min(max(float(w), self.nodes[0]), self.nodes[-1]))
            i = int(np.searchsorted(self.log_nodes, lw, side="right")) - 1
            i = min(max(i, 0), len(self.nodes) - 2)
            lo_idx.append(i)
            frac.append((lw - self.log_nodes[i]) / (self.log_nodes[i + 1] - self.log_nodes[i]))
        total = 0.0
        for corner in itertools.product((0, 1), repeat=self.depth):
            weight = 1.0
            idx = []
            for c, i, f in zip(corner, lo_idx, frac):
                weight *= f if c else 1.0 - f
                idx.append(i + c)
            if weight:
                total += weight * table[tuple(idx)]
        return float(total)

    def mean_at(self, widths) -> float:
        return self._interp(self.cell_mean, tuple(widths))

    def std_at(self, widths) -> float:
        return self._interp(self.cell_std, tuple(widths))

    def evaluate(self, arch: Architecture, trials: int, seed: int) -> TrialResult:
        mean, std = self.mean_at(arch), self.std_at(arch)
        noise = nn.make_rng(seed).standard_normal(trials)
        accs = np.clip(mean + self.noise_scale * std * noise, 0.0, 1.0)
        return TrialResult(Architecture(tuple(arch)), tuple(accs))


def evaluate_on_oracle(oracle: TabularOracle, arch: Architecture, trials: int, seed: int) -> TrialResult:
    return oracle.evaluate(arch, trials, seed)


@dataclass
class RealTrainer:
    dataset: LabeledDataset
    budget: EvalBudget

    def evaluate(self, arch: Architecture, trials: int, seed: int) -> TrialResult:
        return run_trials(arch, self.dataset, replace(self.budget, trials=trials), seed)


@dataclass(frozen=True)
class LoopConfig:
    max_iterations: int = 5
    target_mean_accuracy: float | None = None
    trials: int = 10
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    asnn: AsnnConfig = field(default_factory=AsnnConfig)
    backend: str = "oracle"
    seed: int = 0
    width_bounds: tuple[int, int] = (1, MAX_WIDTH)
    # strict: appended trials must carry exactly 10 accuracies
    strict_records: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.target_mean_accuracy is not None and not 0.0 < self.target_mean_accuracy <= 1.0:
            raise ValueError("target_mean_accuracy must lie in (0, 1]")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.backend not in ("oracle", "real"):
            raise ValueError(f"unknown backend {self.backend!r}")


@dataclass
class IterationLog:
    iteration: int
    strategy: str
    prediction: tuple[float, ...] | None
    architecture: Architecture
    trial: TrialResult
    record_count: int
    best_so_far: float
    seeds: dict[str, int]
    asnn_loss: float | None = None

    def to_dict(self) -> dict:
        return {
            "schema_version": LOG_SCHEMA_VERSION,
            "iteration": self.iteration,
            "strategy": self.strategy,
            "prediction": list(self.prediction) if self.prediction is not None else None,
            "architecture": list(self.architecture.widths),
            "accuracies": list(self.trial.accuracies),
            "mean": self.trial.mean,
            "record_count": self.record_count,
            "best_so_far": self.best_so_far,
            "seeds": dict(self.seeds),
            "asnn_loss": self.asnn_loss,
        }

    @classmethod
    def from_dict(cls, d: dict) -> IterationLog:
        if d.get("schema_version") != LOG_SCHEMA_VERSION:
            raise ValueError(f"unsupported log schema {d.get('schema_version')}")
        arch = Architecture(tuple(d["architecture"]))
        pred = d["prediction"]
        return cls(d["iteration"], d["strategy"], tuple(pred) if pred is not None else None, arch,
                   TrialResult(arch, tuple(d["accuracies"])), d["record_count"], d["best_so_far"],
                   dict(d["seeds"]), d["asnn_loss"])


def iteration_seeds(seed: int, iteration: int) -> dict[str, int]:
    base = nn.mix_seed(seed, iteration)
    return {name: nn.mix_seed(base, k) for name, k in
            (("augment", _AUGMENT), ("shuffle", _SHUFFLE), ("asnn", _ASNN), ("eval", _EVAL), ("draw", _DRAW))}


def asnn_suggest(dataset: AsnnDataset, cfg: LoopConfig, seeds: dict[str, int]):
    """Retrain the regressor from scratch on ``dataset`` and query it once."""
    samples = augment(dataset, replace(cfg.augment, seed=seeds["augment"]))
    samples = shuffle_samples(samples, seeds["shuffle"])
    model = train_asnn(samples, replace(cfg.asnn, seed=seeds["asnn"]))
    pred = predict(model)
    return pred, quantize(pred, cfg.width_bounds), model.final_loss


def _evaluate(backend, arch, trials, seed, iteration):
    try:
        return backend.evaluate(arch, trials, seed)
    except Exception as exc:
        raise SearchError(f"iteration {iteration}: evaluating {arch} failed: {exc}") from exc


def run_asnn_search(cfg: LoopConfig, initial_records, backend) -> list[IterationLog]:
    """Suggest, evaluate, append, repeat.

    The stopping test looks at the best record mean in the dataset before
    each round, so a target already met by the initial records yields no rounds.
    """
    dataset = AsnnDataset(list(initial_records), strict=cfg.strict_records)
    logs: list[IterationLog] = []
    best = -math.inf
    for i in range(cfg.max_iterations):
        if cfg.target_mean_accuracy is not None and dataset.best_mean() >= cfg.target_mean_accuracy:
            break
        seeds = iteration_seeds(cfg.seed, i)
        pred, arch, loss = asnn_suggest(dataset, cfg, seeds)
        result = _evaluate(backend, arch, cfg.trials, seeds["eval"], i)
        dataset.append_trial(result)
        best = max(best, result.mean)
        logs.append(IterationLog(i, "asnn", pred, arch, result, len(dataset), best, seeds, loss))
    return logs


def draw_architecture(rng: np.random.Generator, width_range, depth: int, log_uniform: bool) -> Architecture:
    lo, hi = width_range
    if log_uniform:
        widths = np.rint(np.exp2(rng.uniform(math.log2(lo), math.log2(hi), size=depth)))
    else:
        widths = rng.integers(lo, hi, size=depth, endpoint=True)
    return Architecture(tuple(int(w) for w in widths))


def run_random_search(cfg: LoopConfig, backend, width_range=(16, 256), depth: int = 2,
                      log_uniform: bool = False) -> list[IterationLog]:
    lo, hi = width_range
    if not 1 <= lo <= hi <= MAX_WIDTH:
        raise ValueError(f"invalid width range {width_range}")
    logs: list[IterationLog] = []
    best = -math.inf
    for i in range(cfg.max_iterations):
        if cfg.target_mean_accuracy is not None and best >= cfg.target_mean_accuracy:
            break
        seeds = iteration_seeds(cfg.seed, i)
        arch = draw_architecture(nn.make_rng(seeds["draw"]), width_range, depth, log_uniform)
        result = _evaluate(backend, arch, cfg.trials, seeds["eval"], i)
        best = max(best, result.mean)
        logs.append(IterationLog(i, "random", None, arch, result, i + 1, best, seeds))
    return logs


@dataclass(frozen=True)
class Strategy:
    name: str
    kind: str
    loop: LoopConfig
    width_range: tuple[int, int] = (16, 256)
    log_uniform: bool = False

    def __post_init__(self):
        if self.kind not in ("asnn", "random"):
            raise ValueError(f"unknown strategy kind {self.kind!r}")


@dataclass(frozen=True)
class CompareRow:
    strategy: str
    seed: int
    iteration: int
    arch: str
    mean: float
    best_so_far: float


@dataclass
class CompareReport:
    rows: list[CompareRow]

    def curves(self) -> dict[str, dict[int, list[float]]]:
        out: dict[str, dict[int, list[float]]] = {}
        for r in self.rows:
            out.setdefault(r.strategy, {}).setdefault(r.seed, []).append(r.best_so_far)
        return out

    def median_final_best(self) -> dict[str, float]:
        return {name: statistics.median(c[-1] for c in per_seed.values())
                for name, per_seed in self.curves().items()}

    def evaluations_to_threshold(self, threshold: float) -> dict[str, list[int | None]]:
        """Per seed, the 1-based evaluation count at which best-so-far first reaches ``threshold``."""
        out = {}
        for name, per_seed in self.curves().items():
            hits = []
            for seed in sorted(per_seed):
                curve = per_seed[seed]
                hits.append(next((k + 1 for k, b in enumerate(curve) if b >= threshold), None))
            out[name] = hits
        return out


def compare_strategies(strategies, n_seeds: int, initial_records, backend, depth: int = 2) -> CompareReport:
    strategies = list(strategies)
    budgets = {(s.loop.max_iterations, s.loop.trials) for s in strategies}
    if len(budgets) > 1:
        raise ValueError(f"strategies disagree on budget (iterations, trials): {sorted(budgets)}")
    rows = []
    for strat in strategies:
        for k in range(n_seeds):
            loop = replace(strat.loop, seed=nn.mix_seed(strat.loop.seed, k))
            if strat.kind == "asnn":
                logs = run_asnn_search(loop, initial_records, backend)
            else:
                logs = run_random_search(loop, backend, strat.width_range, depth, strat.log_uniform)
            rows.extend(CompareRow(strat.name, k, log.iteration, str(log.architecture),
                                   log.trial.mean, log.best_so_far) for log in logs)
    return CompareReport(rows)
