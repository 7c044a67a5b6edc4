"""The architecture regressor: scaled accuracy vector in, real-valued widths out."""

from __future__ import annotations

import base64
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .dataset import N_TRIALS, SCALE, AsnnSamples
from .target import MAX_WIDTH, Architecture

log = logging.getLogger(__name__)

CANONICAL_QUERY = (SCALE,) * N_TRIALS
CHECKPOINT_FORMAT = "asnn-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class AsnnConfig:
    hidden_widths: tuple[int, ...] = (64, 64)
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 0.001
    seed: int = 0
    # first-layer bias is expressed relative to this input point; 0 gives the raw layout
    input_offset: float = SCALE
    # hidden biases start here so units are live when inputs sit at the offset
    hidden_bias_init: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        nn.TrainSettings(self.epochs, self.batch_size, self.seed)


@dataclass
class AsnnModel:
    spec: nn.NetworkSpec
    params: nn.NetworkParams
    config: AsnnConfig
    loss_history: list[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1] if self.loss_history else float("nan")


def train_asnn(samples: AsnnSamples, cfg: AsnnConfig) -> AsnnModel:
    if len(samples) < 100:
        raise ValueError(f"need at least 100 samples, got {len(samples)}")
    if samples.targets.ndim != 2 or samples.inputs.shape[1] != N_TRIALS:
        raise ValueError("samples must map 10 inputs to a fixed number of widths")
    spec = nn.NetworkSpec(N_TRIALS, cfg.hidden_widths, samples.depth, output_head=nn.MSE)
    init = nn.init_params(spec, nn.mix_seed(cfg.seed, 0))
    for b in init.biases[:-1]:
        b[:] = cfg.hidden_bias_init
    history: list[float] = []
    params = nn.train(spec, samples.inputs - cfg.input_offset, samples.targets,
                      nn.TrainSettings(cfg.epochs, cfg.batch_size, cfg.seed),
                      nn.AdamHParams(learning_rate=cfg.learning_rate), init=init, history=history)
    return AsnnModel(spec, params, cfg, history)


def predict(model: AsnnModel, query=CANONICAL_QUERY) -> tuple[float, ...]:
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (N_TRIALS,):
        raise ValueError(f"query must hold {N_TRIALS} values, got shape {q.shape}")
    out, _ = nn.forward(model.params, model.spec, q[None, :] - model.config.input_offset)
    return tuple(float(v) for v in out[0])


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def quantize(pred, bounds: tuple[int, int] = (1, MAX_WIDTH)) -> Architecture:
    lo, hi = bounds
    if not 1 <= lo <= hi:
        raise ValueError(f"invalid bounds {bounds}")
    if not all(math.isfinite(v) for v in pred):
        raise ValueError(f"non-finite prediction {tuple(pred)}")
    widths = []
    for v in pred:
        r = round_half_away(v)
        c = min(max(r, lo), hi)
        if c != r:
            log.info("clamped predicted width %s to %d", v, c)
        widths.append(c)
    return Architecture(tuple(widths))


def save_checkpoint(model: AsnnModel, path) -> None:
    flat = model.params.flat().astype("<f8")
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "byteorder": "little",
        "dtype": "float64",
        "spec": {
            "input_dim": model.spec.input_dim,
            "hidden_widths": list(model.spec.hidden_widths),
            "output_dim": model.spec.output_dim,
            "dropout_rates": list(model.spec.dropout_rates),
            "output_head": model.spec.output_head,
        },
        "config": asdict(model.config),
        "loss_history": model.loss_history,
        "params": base64.b64encode(flat.tobytes()).decode("ascii"),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_checkpoint(path) -> AsnnModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not an ASNN checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: checkpoint version {doc.get('version')} != {CHECKPOINT_VERSION}")
    if doc.get("byteorder") != "little" or doc.get("dtype") != "float64":
        raise ValueError(f"{path}: unsupported encoding")
    s = doc["spec"]
    spec = nn.NetworkSpec(s["input_dim"], tuple(s["hidden_widths"]), s["output_dim"],
                          tuple(s["dropout_rates"]), s["output_head"])
    flat = np.frombuffer(base64.b64decode(doc["params"]), dtype="<f8").astype(np.float64)
    cfg = doc["config"]
    cfg["hidden_widths"] = tuple(cfg["hidden_widths"])
    return AsnnModel(spec, nn.NetworkParams.from_flat(spec, flat), AsnnConfig(**cfg),
                     list(doc["loss_history"]))
