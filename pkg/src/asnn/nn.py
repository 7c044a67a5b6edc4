"""Dense network engine: forward/backward, inverted dropout, Adam.

All arithmetic is float64. Randomness comes from ``numpy.random.Philox``
(a counter-based generator) so streams are reproducible across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SOFTMAX_CE = "softmax_ce"
MSE = "mse"
HEADS = (SOFTMAX_CE, MSE)

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(base: int, index: int) -> int:
    """Derive an independent child seed from ``(base, index)``."""
    return splitmix64(splitmix64(base & _MASK64) ^ (index & _MASK64))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed & _MASK64))


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int
    hidden_widths: tuple[int, ...]
    output_dim: int
    dropout_rates: tuple[float, ...] | None = None
    output_head: str = SOFTMAX_CE
    hidden_activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.dropout_rates is None:
            object.__setattr__(self, "dropout_rates", (0.0,) * len(self.hidden_widths))
        else:
            object.__setattr__(self, "dropout_rates", tuple(float(r) for r in self.dropout_rates))
        if not self.hidden_widths:
            raise ValueError("hidden_widths must be non-empty")
        if self.input_dim < 1 or self.output_dim < 1 or min(self.hidden_widths) < 1:
            raise ValueError(f"all layer sizes must be >= 1, got {self.layer_sizes}")
        if len(self.dropout_rates) != len(self.hidden_widths):
            raise ValueError("need one dropout rate per hidden layer")
        if any(not 0.0 <= r < 1.0 for r in self.dropout_rates):
            raise ValueError(f"dropout rates must lie in [0, 1): {self.dropout_rates}")
        if self.output_head not in HEADS:
            raise ValueError(f"unknown output head {self.output_head!r}")
        if self.hidden_activation != "relu":
            raise ValueError(f"unsupported activation {self.hidden_activation!r}")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_widths, self.output_dim)

    @property
    def n_params(self) -> int:
        s = self.layer_sizes
        return sum(a * b + b for a, b in zip(s[:-1], s[1:]))


@dataclass
class NetworkParams:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def arrays(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def copy(self) -> NetworkParams:
        return NetworkParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def zeros_like(self) -> NetworkParams:
        return NetworkParams([np.zeros_like(w) for w in self.weights],
                             [np.zeros_like(b) for b in self.biases])

    @classmethod
    def from_flat(cls, spec: NetworkSpec, flat: np.ndarray) -> NetworkParams:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != spec.n_params:
            raise ValueError(f"expected {spec.n_params} values, got {flat.size}")
        s = spec.layer_sizes
        weights, biases, pos = [], [], 0
        for a, b in zip(s[:-1], s[1:]):
            weights.append(flat[pos:pos + a * b].reshape(a, b).copy())
            pos += a * b
        for b in s[1:]:
            biases.append(flat[pos:pos + b].copy())
            pos += b
        return cls(weights, biases)


def init_params(spec: NetworkSpec, seed: int) -> NetworkParams:
    """He-normal weights (std = sqrt(2 / fan_in)), zero biases."""
    rng = make_rng(seed)
    s = spec.layer_sizes
    weights = [rng.standard_normal((a, b)) * math.sqrt(2.0 / a) for a, b in zip(s[:-1], s[1:])]
    biases = [np.zeros(b) for b in s[1:]]
    return NetworkParams(weights, biases)


def _as_batch(spec: NetworkSpec, batch) -> np.ndarray:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise ValueError(f"batch must have shape (n, {spec.input_dim}), got {x.shape}")
    return x


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(params: NetworkParams, spec: NetworkSpec, batch, rng: np.random.Generator | None = None):
    """Run the network; ``rng=None`` is eval mode, otherwise dropout is sampled from ``rng``.

    Returns ``(outputs, cache)``. Outputs are raw logits for the softmax head.
    """
    x = _as_batch(spec, batch)
    acts = [x]
    masks = []
    h = x
    for i, rate in enumerate(spec.dropout_rates):
        h = h @ params.weights[i] + params.biases[i]
        np.maximum(h, 0.0, out=h)
        mask = None
        if rng is not None and rate > 0.0:
            keep = 1.0 - rate
            mask = (rng.random(h.shape) < keep) / keep
            h = h * mask
        masks.append(mask)
        acts.append(h)
    out = h @ params.weights[-1] + params.biases[-1]
    return out, (acts, masks)


def _check_targets(spec: NetworkSpec, n: int, targets) -> np.ndarray:
    if spec.output_head == SOFTMAX_CE:
        y = np.asarray(targets)
        if y.shape != (n,) or not np.issubdtype(y.dtype, np.integer):
            raise ValueError(f"labels must be {n} integer class indices")
        if n and (y.min() < 0 or y.max() >= spec.output_dim):
            raise ValueError(f"labels outside [0, {spec.output_dim})")
        return y
    y = np.asarray(targets, dtype=np.float64)
    if y.shape != (n, spec.output_dim):
        raise ValueError(f"targets must have shape ({n}, {spec.output_dim}), got {y.shape}")
    return y


def loss_and_grads(params: NetworkParams, spec: NetworkSpec, batch, targets,
                   rng: np.random.Generator | None = None):
    """Mean loss over the batch and its exact gradient w.r.t. every parameter.

    MSE is averaged over batch rows and output columns.
    """
    out, (acts, masks) = forward(params, spec, batch, rng)
    n = out.shape[0]
    y = _check_targets(spec, n, targets)
    if spec.output_head == SOFTMAX_CE:
        z = out - out.max(axis=1, keepdims=True)
        logsum = np.log(np.exp(z).sum(axis=1))
        loss = float(np.mean(logsum - z[np.arange(n), y]))
        delta = softmax(out)
        delta[np.arange(n), y] -= 1.0
        delta /= n
    else:
        diff = out - y
        loss = float(np.mean(diff * diff))
        delta = 2.0 * diff / diff.size

    n_layers = len(params.weights)
    gw = [None] * n_layers
    gb = [None] * n_layers
    for i in range(n_layers - 1, -1, -1):
        gw[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i == 0:
            break
        delta = delta @ params.weights[i].T
        if masks[i - 1] is not None:
            delta = delta * masks[i - 1]
        # the stored activation is post-mask, so zero means the unit was off
        delta = delta * (acts[i] > 0.0)
    return loss, NetworkParams(gw, gb)


@dataclass(frozen=True)
class AdamHParams:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7


@dataclass
class AdamState:
    m: NetworkParams
    v: NetworkParams
    t: int = 0
    hparams: AdamHParams = field(default_factory=AdamHParams)

    @classmethod
    def zeros(cls, params: NetworkParams, hparams: AdamHParams | None = None) -> AdamState:
        return cls(params.zeros_like(), params.zeros_like(), 0, hparams or AdamHParams())


def adam_step(params: NetworkParams, grads: NetworkParams, state: AdamState):
    """One bias-corrected Adam update. Returns new ``(params, state)``; inputs are not modified."""
    hp = state.hparams
    t = state.t + 1
    bc1 = 1.0 - hp.beta1 ** t
    bc2 = 1.0 - hp.beta2 ** t
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params.arrays(), grads.arrays(), state.m.arrays(), state.v.arrays()):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError(f"shape mismatch: param {p.shape}, grad {g.shape}, moment {m.shape}")
        m = hp.beta1 * m + (1.0 - hp.beta1) * g
        v = hp.beta2 * v + (1.0 - hp.beta2) * (g * g)
        new_p.append(p - hp.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + hp.epsilon))
        new_m.append(m)
        new_v.append(v)
    k = len(params.weights)

    def split(arrs):
        return NetworkParams(arrs[:k], arrs[k:])

    return split(new_p), AdamState(split(new_m), split(new_v), t, hp)


@dataclass(frozen=True)
class TrainSettings:
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    shuffle_each_epoch: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def train(spec: NetworkSpec, inputs, targets, settings: TrainSettings,
          adam: AdamHParams | None = None, init: NetworkParams | None = None,
          history: list | None = None) -> NetworkParams:
    """Minibatch Adam for ``settings.epochs`` epochs.

    Init, shuffling and dropout all draw from streams derived from
    ``settings.seed``. Mean epoch losses are appended to ``history`` if given.
    """
    x = _as_batch(spec, inputs)
    n = x.shape[0]
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    y = _check_targets(spec, n, targets)
    params = init.copy() if init is not None else init_params(spec, mix_seed(settings.seed, 0))
    state = AdamState.zeros(params, adam)
    rng = make_rng(mix_seed(settings.seed, 1))
    bs = settings.batch_size
    order = np.arange(n)
    for _ in range(settings.epochs):
        if settings.shuffle_each_epoch:
            order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            loss, grads = loss_and_grads(params, spec, x[idx], y[idx], rng)
            params, state = adam_step(params, grads, state)
            total += loss * len(idx)
        if history is not None:
            history.append(total / n)
    return params


def predict_classes(params: NetworkParams, spec: NetworkSpec, inputs) -> np.ndarray:
    out, _ = forward(params, spec, inputs)
    # np.argmax returns the first maximum, i.e. ties go to the lowest index
    return np.argmax(out, axis=1)


def evaluate_accuracy(params: NetworkParams, spec: NetworkSpec, inputs, labels) -> float:
    if spec.output_head != SOFTMAX_CE:
        raise ValueError("accuracy needs a softmax classification head")
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty test set")
    pred = predict_classes(params, spec, inputs)
    if pred.shape != labels.shape:
        raise ValueError("inputs and labels disagree in length")
    return float(np.mean(pred == labels))
