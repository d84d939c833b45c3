"""
Adapter Trainer Module
Trains a task-specific adapter with a throwaway softmax head using
mini-batch SGD, hand-derived gradients and a per-epoch learning-rate schedule
"""

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from backbone import backward_features, forward_with_cache
from errors import ConfigError, DataError, DivergenceError, NumericError
from numerics import seeded_rng
from .adapter_weights import AdapterWeights

SCHEDULES = ('cosine_annealing', 'constant')


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    weight_decay: float = 5e-4
    epochs: int = 20
    batch_size: int = 32
    schedule: str = 'cosine_annealing'
    dropout: float = 0.0
    seed: int = 1993

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigError(f"train.learning_rate must be non-negative, got {self.learning_rate!r}")
        if self.weight_decay < 0:
            raise ConfigError(f"train.weight_decay must be non-negative, got {self.weight_decay!r}")
        if not isinstance(self.epochs, int) or self.epochs < 1:
            raise ConfigError(f"train.epochs must be >= 1, got {self.epochs!r}")
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            raise ConfigError(f"train.batch_size must be >= 1, got {self.batch_size!r}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"train.schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"train.dropout must lie in [0, 1), got {self.dropout!r}")

    def to_dict(self):
        return asdict(self)


@dataclass
class TaskHead:
    """Linear softmax head for one task, discarded after training"""
    weight: np.ndarray
    bias: np.ndarray
    class_ids: np.ndarray

    @classmethod
    def fresh(cls, d, class_ids, rng=None, dtype=np.float64):
        class_ids = np.asarray(class_ids)
        if rng is None:
            weight = np.zeros((d, len(class_ids)), dtype=dtype)
        else:
            weight = (rng.standard_normal((d, len(class_ids))) / math.sqrt(d)).astype(dtype)
        return cls(weight=weight, bias=np.zeros(len(class_ids), dtype=dtype), class_ids=class_ids)

    def local_labels(self, y):
        y = np.asarray(y)
        idx = np.searchsorted(self.class_ids, y)
        idx = np.clip(idx, 0, len(self.class_ids) - 1)
        if not np.all(self.class_ids[idx] == y):
            bad = sorted(set(np.asarray(y)[self.class_ids[idx] != y].tolist()))
            raise DataError(f"labels {bad} are outside the task's class set {self.class_ids.tolist()}")
        return idx


@dataclass
class TrainingLog:
    epoch_loss: list = field(default_factory=list)
    epoch_accuracy: list = field(default_factory=list)
    learning_rates: list = field(default_factory=list)


def learning_rate_at(cfg, epoch):
    """Per-epoch learning rate; cosine annealing decays to 0 at epoch E"""
    if cfg.schedule == 'constant':
        return cfg.learning_rate
    return 0.5 * cfg.learning_rate * (1.0 + math.cos(math.pi * epoch / cfg.epochs))


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy and its gradient w.r.t. the logits"""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    n = logits.shape[0]
    log_probs = shifted - np.log(exp.sum(axis=1, keepdims=True))
    loss = -float(np.mean(log_probs[np.arange(n), labels]))
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n, probs


def loss_and_grads(backbone, adapter, head, x, labels, dropout_masks=None):
    """
    Cross-entropy of the head on adapter features, with analytic gradients

    Args:
        backbone: frozen Backbone
        adapter: AdapterWeights
        head: TaskHead
        x: (n, D) inputs
        labels: (n,) local label indices
        dropout_masks: optional per-block bottleneck masks

    Returns:
        (loss, grads, cache, probs) where grads holds 'down', 'up' lists and
        'head_weight', 'head_bias' arrays
    """
    features, cache = forward_with_cache(backbone, adapter, x, dropout_masks)
    logits = features @ head.weight + head.bias
    loss, grad_logits, probs = softmax_cross_entropy(logits, labels)
    grads = {
        'head_weight': features.T @ grad_logits,
        'head_bias': grad_logits.sum(axis=0),
    }
    grad_features = grad_logits @ head.weight.T
    grads['down'], grads['up'] = backward_features(backbone, adapter, cache, grad_features)
    return loss, grads, cache, probs


def _dropout_masks(rng, n, adapter, rate, dtype):
    if rate <= 0.0:
        return None
    keep = 1.0 - rate
    return [(rng.random((n, adapter.rank)) < keep).astype(dtype) / keep for _ in range(adapter.n_blocks)]


def train_task_adapter(backbone, init, dataset, cfg, log=None):
    """
    Train one task's adapter starting from ``init``

    Only adapter and head parameters move; the backbone is read-only.
    Shuffle order, head init and dropout draws come from (cfg.seed, task id),
    so identical inputs give bitwise-identical weights.

    Args:
        backbone: frozen Backbone
        init: AdapterWeights to start from (copied, never mutated)
        dataset: TaskDataset of the current task
        cfg: TrainConfig
        log: optional TrainingLog that receives per-epoch loss/accuracy

    Returns:
        Trained AdapterWeights
    """
    x, y = dataset.train_x, dataset.train_y
    if len(y) == 0:
        raise DataError(f"task {dataset.task_id} has an empty training split")
    dtype = backbone.dtype
    x = np.asarray(x, dtype=dtype)
    rng = seeded_rng(cfg.seed, dataset.task_id, 2)
    head = TaskHead.fresh(backbone.embed_dim, dataset.class_ids, rng=rng, dtype=dtype)
    labels = head.local_labels(y)
    adapter = init.copy()
    n = len(labels)

    for epoch in range(cfg.epochs):
        lr = learning_rate_at(cfg, epoch)
        order = rng.permutation(n)
        total_loss = 0.0
        correct = 0
        for batch_index, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            masks = _dropout_masks(rng, len(idx), adapter, cfg.dropout, dtype)
            try:
                loss, grads, _, probs = loss_and_grads(backbone, adapter, head, x[idx], labels[idx], masks)
            except NumericError:
                raise DivergenceError(epoch, batch_index, float('nan'))
            if not math.isfinite(loss):
                raise DivergenceError(epoch, batch_index, loss)
            total_loss += loss * len(idx)
            correct += int(np.sum(np.argmax(probs, axis=1) == labels[idx]))

            wd = cfg.weight_decay
            for b in range(adapter.n_blocks):
                adapter.down[b] = adapter.down[b] - lr * (grads['down'][b] + wd * adapter.down[b])
                adapter.up[b] = adapter.up[b] - lr * (grads['up'][b] + wd * adapter.up[b])
            head.weight = head.weight - lr * (grads['head_weight'] + wd * head.weight)
            head.bias = head.bias - lr * grads['head_bias']

        if log is not None:
            log.epoch_loss.append(total_loss / n)
            log.epoch_accuracy.append(correct / n)
            log.learning_rates.append(lr)

    for b in range(adapter.n_blocks):
        if not (np.all(np.isfinite(adapter.down[b])) and np.all(np.isfinite(adapter.up[b]))):
            raise DivergenceError(cfg.epochs - 1, -1, float('nan'))
    return AdapterWeights(down=adapter.down, up=adapter.up, scale=adapter.scale)
