"""
Adapter Gradient Check Module
Compares analytic adapter/head gradients with central finite differences
"""

from dataclasses import dataclass, field

import numpy as np

from backbone import forward_with_cache, relu_pattern
from numerics import finite_diff_grad, seeded_rng
from .adapter_trainer import TaskHead, loss_and_grads, softmax_cross_entropy

# below this magnitude both gradients count as zero for the relative error
RELATIVE_FLOOR = 1e-5


@dataclass
class GradCheckReport:
    max_relative_error: float = 0.0
    compared: int = 0
    excluded: list = field(default_factory=list)
    per_parameter: dict = field(default_factory=dict)

    @property
    def excluded_count(self):
        return len(self.excluded)


def _relative_error(analytic, numeric):
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), RELATIVE_FLOOR)
    return np.abs(analytic - numeric) / denom


def _parameter_slots(adapter, head):
    slots = []
    for b in range(adapter.n_blocks):
        slots.append((f"down[{b}]", ('down', b)))
        slots.append((f"up[{b}]", ('up', b)))
    slots.append(("head_weight", ('head_weight', None)))
    slots.append(("head_bias", ('head_bias', None)))
    return slots


def _get(adapter, head, key):
    kind, b = key
    if kind == 'down':
        return adapter.down[b]
    if kind == 'up':
        return adapter.up[b]
    return getattr(head, 'weight' if kind == 'head_weight' else 'bias')


def _set(adapter, head, key, value):
    kind, b = key
    if kind == 'down':
        adapter.down[b] = value
    elif kind == 'up':
        adapter.up[b] = value
    elif kind == 'head_weight':
        head.weight = value
    else:
        head.bias = value


def adapter_grad_check(backbone, adapter, batch, head=None, step=1e-5, seed=0):
    """
    Worst relative error between analytic and finite-difference gradients

    Entries whose perturbation flips the sign of any ReLU pre-activation sit
    on a subgradient kink; they are listed in ``excluded`` and not compared.

    Args:
        backbone: frozen Backbone
        adapter: AdapterWeights to check
        batch: (x, y) with x of shape (n, D) and global labels y
        head: optional TaskHead; a seeded one over the batch's classes otherwise
        step: finite-difference step
        seed: seed for the default head

    Returns:
        GradCheckReport
    """
    x, y = batch
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    adapter = adapter.copy()
    if head is None:
        head = TaskHead.fresh(adapter.embed_dim, np.unique(y), rng=seeded_rng(seed, 3))
    else:
        head = TaskHead(weight=head.weight.copy(), bias=head.bias.copy(), class_ids=head.class_ids)
    labels = head.local_labels(y)
    nonlinearity = backbone.config.nonlinearity

    _, grads, base_cache, _ = loss_and_grads(backbone, adapter, head, x, labels)
    base_pattern = relu_pattern(base_cache, nonlinearity)
    analytic = {
        'down': grads['down'], 'up': grads['up'],
        'head_weight': grads['head_weight'], 'head_bias': grads['head_bias'],
    }

    report = GradCheckReport()
    for name, key in _parameter_slots(adapter, head):
        original = _get(adapter, head, key)
        flips = []

        def loss_at(value, key=key, flips=flips):
            _set(adapter, head, key, value)
            features, cache = forward_with_cache(backbone, adapter, x)
            flips.append(not np.array_equal(relu_pattern(cache, nonlinearity), base_pattern))
            loss, _, _ = softmax_cross_entropy(features @ head.weight + head.bias, labels)
            return loss

        numeric = finite_diff_grad(loss_at, original, step)
        _set(adapter, head, key, original)

        kind, b = key
        exact = analytic[kind][b] if b is not None else analytic[kind]
        errors = _relative_error(np.asarray(exact).reshape(-1), numeric.reshape(-1))
        kinked = np.array(flips, dtype=bool).reshape(-1, 2).any(axis=1)
        for idx in np.flatnonzero(kinked):
            report.excluded.append((name, int(idx)))
        kept = errors[~kinked]
        worst = float(kept.max()) if kept.size else 0.0
        report.per_parameter[name] = worst
        report.compared += int(kept.size)
        report.max_relative_error = max(report.max_relative_error, worst)
    return report
