"""Cross-entropy loss, momentum optimizer with stepped learning-rate decay
and the per-fold training loop."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .data import make_batch
from .errors import ParameterError, ShapeError, TrainingError
from .models import Model, ModelSpec, build_model
from .tensor import Tensor, _accum, _node


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    learning_rate: float = 0.01
    momentum: float = 0.9
    decay_rate: float = 0.95
    decay_every: int = 10
    batch_size: int = 32
    seed: int = 0
    precision: str = "f64"

    def __post_init__(self):
        if self.epochs < 1:
            raise ParameterError("epochs must be >= 1")
        if min(self.learning_rate, self.momentum + 1e-12, self.decay_rate) <= 0 \
                or self.decay_every < 1 or self.batch_size < 1:
            raise ParameterError("rates and intervals must be positive")


@dataclass
class TrainHistory:
    loss: list = field(default_factory=list)
    train_acc: list = field(default_factory=list)
    lr: list = field(default_factory=list)

    def rows(self):
        return [(e, l, a, r) for e, (l, a, r)
                in enumerate(zip(self.loss, self.train_acc, self.lr), start=1)]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "loss", "train_acc", "lr"])
            w.writerows(self.rows())


def cross_entropy(probs: Tensor, labels) -> Tensor:
    """Mean over the batch of -ln(probability of the true class).

    Probabilities are clamped at 1e-12 before the log.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if probs.data.ndim != 2 or labels.shape != (probs.shape[0],):
        raise ShapeError(f"probs {probs.shape} vs labels {labels.shape}")
    if labels.min() < 0 or labels.max() >= probs.shape[1]:
        raise ParameterError("label out of range")
    b = probs.shape[0]
    picked = np.clip(probs.data[np.arange(b), labels], 1e-12, None)
    loss = -np.log(picked).mean()

    def backward(g):
        grad = np.zeros_like(probs.data)
        grad[np.arange(b), labels] = -g / (b * picked)
        _accum(probs, grad)

    return _node(np.array(loss), (probs,), backward)


class MomentumOptimizer:
    """Classical momentum: v <- mu v + g; theta <- theta - lr v."""

    def __init__(self, params, config: TrainConfig):
        self.params = list(params)
        self.config = config
        self.velocity = [np.zeros_like(p.data) for p in self.params]
        self.learning_rate = config.learning_rate
        self.steps = 0

    def step(self):
        mu, lr = self.config.momentum, self.learning_rate
        for p, v in zip(self.params, self.velocity):
            if p.grad is None:
                continue
            if p.grad.shape != p.data.shape:
                raise ShapeError("gradient/parameter shape mismatch")
            v *= mu
            v += p.grad
            p.data = p.data - lr * v
        self.steps += 1

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def set_epoch(self, epoch):
        self.learning_rate = decayed_lr(epoch, self.config)


def decayed_lr(epoch, config: TrainConfig) -> float:
    """lr0 * rate^floor(epoch / decay_every); epoch counts from 0."""
    return config.learning_rate * config.decay_rate ** (epoch // config.decay_every)


def train_fold(train_graphs, spec: ModelSpec, config: TrainConfig):
    """Train one model on one fold's training graphs.

    Deterministic given (spec.seed, config.seed, data order) in f64.
    Returns the model in eval mode plus its TrainHistory.
    """
    train_graphs = list(train_graphs)
    if not train_graphs:
        raise ParameterError("empty training set")
    model = build_model(spec)
    opt = MomentumOptimizer(model.parameters(), config)
    rng = np.random.default_rng(config.seed)
    history = TrainHistory()
    n = len(train_graphs)
    for epoch in range(config.epochs):
        opt.set_epoch(epoch)
        order = rng.permutation(n)
        model.train()
        total_loss = 0.0
        correct = 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            batch = make_batch([train_graphs[i] for i in idx])
            opt.zero_grad()
            probs = model.forward(batch, rng=rng)
            loss = cross_entropy(probs, batch.labels)
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingError(f"NaN/Inf loss at epoch {epoch}", epoch=epoch)
            loss.backward()
            opt.step()
            total_loss += value * len(idx)
            correct += int((probs.data.argmax(axis=1) == batch.labels).sum())
        history.loss.append(total_loss / n)
        history.train_acc.append(correct / n)
        history.lr.append(opt.learning_rate)
    model.eval()
    return model, history


def evaluate(model: Model, graphs, batch_size=128) -> float:
    """Accuracy of argmax predictions; ties break toward the lowest class."""
    graphs = list(graphs)
    if not graphs:
        raise ParameterError("evaluate: empty graph list")
    was_train = model.mode
    model.eval()
    correct = 0
    for start in range(0, len(graphs), batch_size):
        batch = make_batch(graphs[start:start + batch_size])
        probs = model.forward(batch)
        correct += int((probs.data.argmax(axis=1) == batch.labels).sum())
    model.mode = was_train
    return correct / len(graphs)
