"""Run configuration: strict JSON file plus command-line overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import tables
from .dataset import AugmentConfig
from .model import AsnnConfig
from .search import LoopConfig, Strategy
from .target import BUDGETS

MODES = ("collect-grid", "search-asnn", "search-random", "compare", "verify-tables")
_MODE_ALIASES = {
    "CollectGrid": "collect-grid",
    "AsnnSearch": "search-asnn",
    "RandomSearch": "search-random",
    "Compare": "compare",
    "VerifyTables": "verify-tables",
}
SYNTHETIC_KEYS = {"classes", "dim", "n_train", "n_test", "separation", "seed"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str = "verify-tables"
    backend: str = "oracle"
    budget: str = "desk"
    depth: int = 2
    seed: int = 0
    out: str = "runs/latest"
    # data sources; at most one of mnist_dir / synthetic, and only for the real backend
    mnist_dir: str | None = None
    synthetic: dict | None = None
    initial_grid: str | None = None
    node_set: list[int] | None = None
    # search loop
    max_iterations: int = 5
    target_mean_accuracy: float | None = None
    trials: int | None = None
    augment_size: int = 10_000
    asnn_hidden: list[int] = field(default_factory=lambda: [64, 64])
    asnn_epochs: int = 200
    asnn_batch_size: int = 64
    asnn_lr: float = 0.001
    asnn_input_offset: float = 100.0
    asnn_hidden_bias_init: float = 0.01
    width_min: int = 1
    width_max: int = 4096
    # random search and comparison
    width_range: list[int] = field(default_factory=lambda: [16, 256])
    log_uniform: bool = False
    n_seeds: int = 5
    threshold: float = 0.9825
    noise_scale: float = 1.0

    def loop_config(self) -> LoopConfig:
        return LoopConfig(
            max_iterations=self.max_iterations,
            target_mean_accuracy=self.target_mean_accuracy,
            trials=self.trials,
            augment=AugmentConfig(self.augment_size),
            asnn=AsnnConfig(tuple(self.asnn_hidden), self.asnn_epochs, self.asnn_batch_size,
                            self.asnn_lr, 0, self.asnn_input_offset, self.asnn_hidden_bias_init),
            backend=self.backend,
            seed=self.seed,
            width_bounds=(self.width_min, self.width_max),
            strict_records=self.trials == 10,
        )

    def strategies(self) -> list[Strategy]:
        loop = self.loop_config()
        rng = tuple(self.width_range)
        return [Strategy("asnn", "asnn", loop, rng, self.log_uniform),
                Strategy("random", "random", loop, rng, self.log_uniform)]


_FIELDS = {f.name for f in fields(RunConfig)}


def _resolve(cfg: RunConfig) -> RunConfig:
    cfg.mode = _MODE_ALIASES.get(cfg.mode, cfg.mode)
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {cfg.mode!r}")
    if cfg.backend not in ("oracle", "real"):
        raise ConfigError(f"backend must be 'oracle' or 'real', got {cfg.backend!r}")
    if cfg.budget not in BUDGETS:
        raise ConfigError(f"budget must be one of {sorted(BUDGETS)}, got {cfg.budget!r}")
    if cfg.depth not in (2, 3):
        raise ConfigError(f"depth must be 2 or 3, got {cfg.depth}")
    if cfg.mnist_dir is not None and cfg.synthetic is not None:
        raise ConfigError("conflicting dataset sources: set only one of mnist_dir and synthetic")
    if cfg.backend == "real":
        if cfg.mode != "verify-tables" and cfg.mnist_dir is None and cfg.synthetic is None:
            raise ConfigError("backend 'real' needs a dataset: set mnist_dir or synthetic")
    elif cfg.mnist_dir is not None or cfg.synthetic is not None:
        raise ConfigError("the oracle backend reads the embedded tables; drop mnist_dir/synthetic")
    if cfg.synthetic is not None:
        unknown = set(cfg.synthetic) - SYNTHETIC_KEYS
        if unknown:
            raise ConfigError(f"unknown synthetic keys: {sorted(unknown)}")
    if cfg.trials is None:
        cfg.trials = BUDGETS[cfg.budget].trials if cfg.backend == "real" else 10
    if cfg.node_set is None:
        cfg.node_set = list(tables.node_set(cfg.depth))
    if len(cfg.width_range) != 2:
        raise ConfigError("width_range needs exactly two values")
    cfg.asnn_hidden = [int(w) for w in cfg.asnn_hidden]
    cfg.width_range = [int(w) for w in cfg.width_range]
    try:
        cfg.loop_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def from_dict(data: dict) -> RunConfig:
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    return _resolve(RunConfig(**data))


def parse_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Merge a JSON config file (optional) with ``overrides``; unknown keys are errors."""
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return from_dict(data)


def parse_assignment(text: str) -> tuple[str, object]:
    """``key=value`` with a JSON value, falling back to the raw string."""
    if "=" not in text:
        raise ConfigError(f"expected key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def echo(cfg: RunConfig) -> dict:
    return asdict(cfg)
