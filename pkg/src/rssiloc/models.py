"""The three classifiers (FCN, CNN, LSTM) and their training loop."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from rssiloc import N_NODES
from rssiloc.nncore import (
    LSTM,
    AdamState,
    Conv2D,
    Dense,
    Dropout,
    Layer,
    MaxPool2D,
    ReLU,
    Reshape,
    adam_step,
    clip_elementwise,
    clip_global_norm,
    load_checkpoint,
    save_checkpoint,
    softmax,
    softmax_cross_entropy,
)
from rssiloc.nncore.ops import pool_output_shape
from rssiloc.pipeline import BinningSpec, WindowBatch, bin_center

log = logging.getLogger(__name__)

ARCHITECTURES = ("fcn", "cnn", "lstm")


@dataclass(frozen=True)
class Hyperparams:
    batch_size: int = 128
    window: int = 20
    max_grad_norm: float = 10.0
    lr: float = 1e-4
    lstm_sizes: tuple[int, ...] = (64, 128)
    keep_prob: float = 0.75
    iterations: int = 1500
    seed: int = 0
    eval_every: int = 50
    clip_mode: str = "global"

    def __post_init__(self):
        for name in ("batch_size", "window", "iterations", "eval_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.max_grad_norm > 0:
            raise ValueError(f"max_grad_norm must be > 0, got {self.max_grad_norm}")
        if self.lr < 0:
            raise ValueError(f"lr must be >= 0, got {self.lr}")
        if not self.lstm_sizes or min(self.lstm_sizes) < 1:
            raise ValueError(f"lstm_sizes must be positive, got {self.lstm_sizes}")
        if not 0 < self.keep_prob <= 1:
            raise ValueError(f"keep_prob must be in (0, 1], got {self.keep_prob}")
        if self.clip_mode not in ("global", "element"):
            raise ValueError(f"clip_mode must be 'global' or 'element', got {self.clip_mode!r}")

    @classmethod
    def published(cls, **overrides) -> Hyperparams:
        """The published batch size and iteration budget (GPU scale)."""
        return cls(**{"batch_size": 1024, "iterations": 3000, **overrides})


class Model:
    def __init__(self, kind: str, layers: list[Layer], config: dict):
        self.kind = kind
        self.layers = layers
        self.config = config

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, training)
        return x

    def backward(self, dy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.forward(x, training=False))

    def named_params(self) -> list[tuple[str, np.ndarray]]:
        return [(f"{i}.{k}", p) for i, layer in enumerate(self.layers) for k, p in layer.params.items()]

    def named_grads(self) -> list[tuple[str, np.ndarray]]:
        return [(f"{i}.{k}", layer.grads[k]) for i, layer in enumerate(self.layers) for k in layer.params]

    def n_params(self) -> int:
        return sum(p.size for _, p in self.named_params())


def build_fcn(n_bins: int = 30, window: int = 20, n_nodes: int = N_NODES, seed: int = 0,
              hidden: tuple[int, ...] = (64, 128)) -> Model:
    rng = np.random.default_rng(seed)
    layers: list[Layer] = [Reshape((-1,))]
    width = window * n_nodes
    for h in hidden:
        layers += [Dense(width, h, rng), ReLU()]
        width = h
    layers.append(Dense(width, n_bins, rng))
    cfg = dict(n_bins=n_bins, window=window, n_nodes=n_nodes, seed=seed, hidden=list(hidden))
    return Model("fcn", layers, cfg)


def build_cnn(n_bins: int = 30, window: int = 20, n_nodes: int = N_NODES, seed: int = 0,
              keep_prob: float = 0.75, filters: tuple[int, ...] = (8, 16, 32, 32, 64),
              pool: int = 3) -> Model:
    """Window as a one-channel image: two convs, pool + dropout, three convs, dense head."""
    rng = np.random.default_rng(seed)
    f1, f2, f3, f4, f5 = filters
    layers: list[Layer] = [
        Reshape((window, n_nodes, 1)),
        Conv2D(1, f1, rng), ReLU(),
        Conv2D(f1, f2, rng), ReLU(),
        MaxPool2D(pool),
        Dropout(keep_prob, np.random.default_rng([seed, 1])),
        Conv2D(f2, f3, rng), ReLU(),
        Conv2D(f3, f4, rng), ReLU(),
        Conv2D(f4, f5, rng), ReLU(),
        Reshape((-1,)),
    ]
    ph, pw = pool_output_shape(window, n_nodes, pool)
    layers.append(Dense(ph * pw * f5, n_bins, rng))
    cfg = dict(n_bins=n_bins, window=window, n_nodes=n_nodes, seed=seed, keep_prob=keep_prob,
               filters=list(filters), pool=pool)
    return Model("cnn", layers, cfg)


def build_lstm(n_bins: int = 30, window: int = 20, n_nodes: int = N_NODES, seed: int = 0,
               lstm_sizes: tuple[int, ...] = (64, 128), head: tuple[int, ...] = (64, 32)) -> Model:
    """Stacked LSTMs; the last layer's final-step output feeds a ReLU MLP head."""
    rng = np.random.default_rng(seed)
    layers: list[Layer] = []
    width = n_nodes
    for k, units in enumerate(lstm_sizes):
        layers.append(LSTM(width, units, rng, return_sequences=k < len(lstm_sizes) - 1))
        width = units
    for h in head:
        layers += [Dense(width, h, rng), ReLU()]
        width = h
    layers.append(Dense(width, n_bins, rng))
    cfg = dict(n_bins=n_bins, window=window, n_nodes=n_nodes, seed=seed,
               lstm_sizes=list(lstm_sizes), head=list(head))
    return Model("lstm", layers, cfg)


_BUILDERS = {"fcn": build_fcn, "cnn": build_cnn, "lstm": build_lstm}


def build_model(kind: str, **config) -> Model:
    if kind not in _BUILDERS:
        raise ValueError(f"unknown architecture {kind!r}; expected one of {ARCHITECTURES}")
    for key in ("hidden", "filters", "lstm_sizes", "head"):
        if key in config:
            config[key] = tuple(config[key])
    return _BUILDERS[kind](**config)


def build_for(kind: str, hp: Hyperparams, n_bins: int = 30, n_nodes: int = N_NODES) -> Model:
    if kind == "cnn":
        return build_cnn(n_bins, hp.window, n_nodes, hp.seed, keep_prob=hp.keep_prob)
    if kind == "lstm":
        return build_lstm(n_bins, hp.window, n_nodes, hp.seed, lstm_sizes=hp.lstm_sizes)
    return build_model(kind, n_bins=n_bins, window=hp.window, n_nodes=n_nodes, seed=hp.seed)


def save_model(model: Model, path: str | Path) -> None:
    save_checkpoint(path, model.named_params(), {"kind": model.kind, "config": model.config})


def load_model(path: str | Path) -> Model:
    meta, params = load_checkpoint(path)
    model = build_model(meta["kind"], **meta["config"])
    expected = dict(model.named_params())
    if set(expected) != set(params):
        raise ValueError(f"checkpoint parameters {sorted(params)} do not match {model.kind} model")
    for name, arr in expected.items():
        if arr.shape != params[name].shape:
            raise ValueError(f"{name}: checkpoint shape {params[name].shape} != model shape {arr.shape}")
        arr[...] = params[name]
    return model


def predict_logits(model: Model, inputs: np.ndarray, batch_size: int = 1024) -> np.ndarray:
    return np.concatenate([model.forward(inputs[s:s + batch_size], training=False)
                           for s in range(0, len(inputs), batch_size)])


def predict(model: Model, inputs: np.ndarray, spec: BinningSpec = BinningSpec(),
            batch_size: int = 1024) -> tuple[np.ndarray, np.ndarray]:
    """Argmax bin (lowest index wins ties) and the corresponding bin-center distance."""
    if len(inputs) == 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    idx = np.argmax(predict_logits(model, inputs, batch_size), axis=1)
    return idx, bin_center(idx, spec)


def accuracy(model: Model, batch: WindowBatch) -> float:
    idx = np.argmax(predict_logits(model, batch.inputs), axis=1)
    return float(np.mean(idx == batch.labels))


@dataclass
class TrainResult:
    losses: np.ndarray
    trace: list[tuple[int, float, float]] = field(default_factory=list)
    hyperparams: dict = field(default_factory=dict)


def train(model: Model, train_set: WindowBatch, val_set: WindowBatch | None, hp: Hyperparams,
          callback=None) -> TrainResult:
    """Mini-batch training: cross-entropy, backprop, gradient clipping, Adam.

    Batches walk through a fresh permutation of ``train_set`` each epoch.
    Every ``hp.eval_every`` iterations (and at the last one) a trace row
    ``(iteration, train_loss, val_accuracy)`` is recorded; ``val_accuracy`` is
    NaN without a validation set.
    """
    if len(train_set) == 0:
        raise ValueError("training split is empty")
    if val_set is not None and len(val_set) == 0:
        raise ValueError("validation split is empty")
    rng = np.random.default_rng([hp.seed, 2])
    state = AdamState(lr=hp.lr)
    names = [n for n, _ in model.named_params()]
    params = dict(model.named_params())
    bs = min(hp.batch_size, len(train_set))
    order = rng.permutation(len(train_set))
    cursor = 0
    losses = np.empty(hp.iterations)
    result = TrainResult(losses=losses, hyperparams=asdict(hp))
    for it in range(1, hp.iterations + 1):
        if cursor + bs > len(order):
            order = rng.permutation(len(train_set))
            cursor = 0
        idx = order[cursor:cursor + bs]
        cursor += bs
        logits = model.forward(train_set.inputs[idx], training=True)
        loss, dlogits = softmax_cross_entropy(logits, train_set.labels[idx])
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite loss at iteration {it}")
        model.backward(dlogits)
        grads = [g for _, g in model.named_grads()]
        if hp.clip_mode == "global":
            grads = clip_global_norm(grads, hp.max_grad_norm)
        else:
            grads = clip_elementwise(grads, hp.max_grad_norm)
        adam_step(params, dict(zip(names, grads)), state)
        losses[it - 1] = loss
        if it % hp.eval_every == 0 or it == hp.iterations:
            val_acc = accuracy(model, val_set) if val_set is not None else float("nan")
            result.trace.append((it, loss, val_acc))
            log.debug("%s it=%d loss=%.4f val_acc=%.4f", model.kind, it, loss, val_acc)
            if callback is not None:
                callback(it, loss, val_acc)
    return result


def write_trace(path: str | Path, trace: list[tuple[int, float, float]]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write("iteration,train_loss,val_accuracy\n")
        for it, loss, acc in trace:
            fh.write(f"{it},{loss:.10f},{acc:.6f}\n")
