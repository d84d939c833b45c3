"""Small configurations and streams shared by the test modules"""
import os
import sys
import unittest

# Ensure project root is on sys.path so imports like `harness` resolve when running tests
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

import numpy as np

from adapters import AdapterConfig, AdapterWeights, TrainConfig
from backbone import BackboneConfig
from harness import StreamSpec, generate_synthetic_stream

SLOW_ENV = 'ACMAP_SLOW_TESTS'


def require_slow():
    """Skip unless ACMAP_SLOW_TESTS=1"""
    if os.getenv(SLOW_ENV) != '1':
        raise unittest.SkipTest(f"set {SLOW_ENV}=1 to run")


def tiny_spec(**overrides):
    values = dict(n_tasks=3, base_classes=0, inc_classes=3, train_per_class=24, eval_per_class=12,
                  input_dim=8, cluster_separation=5.0, drift_model='rotation', drift_amount=0.1,
                  noise_sigma=1.0, seed=7)
    values.update(overrides)
    return StreamSpec(**values)


def tiny_stream(**overrides):
    return generate_synthetic_stream(tiny_spec(**overrides))


def tiny_backbone_cfg(input_dim=8, **overrides):
    values = dict(input_dim=input_dim, embed_dim=8, n_blocks=2, hidden_dim=16, seed=0)
    values.update(overrides)
    return BackboneConfig(**values)


def tiny_adapter_cfg(**overrides):
    values = dict(rank=3, scale=0.5)
    values.update(overrides)
    return AdapterConfig(**values)


def tiny_train_cfg(**overrides):
    values = dict(learning_rate=0.05, weight_decay=5e-4, epochs=3, batch_size=16, seed=11)
    values.update(overrides)
    return TrainConfig(**values)


def random_adapter(seed, n_blocks=2, d=8, r=3, scale=0.5):
    """Adapter with nonzero random down and up projections"""
    rng = np.random.default_rng(seed)
    down = [rng.standard_normal((d, r)) / np.sqrt(d) for _ in range(n_blocks)]
    up = [rng.standard_normal((r, d)) / np.sqrt(r) for _ in range(n_blocks)]
    return AdapterWeights(down=down, up=up, scale=scale)


def small_cli_args(output_dir, n_tasks=2, seeds=('1',)):
    """CLI flags that keep a full run down to a fraction of a second"""
    return [
        '--output-dir', output_dir, '--seeds', *seeds,
        '--set', f'stream.n_tasks={n_tasks}', '--set', 'stream.inc_classes=2',
        '--set', 'stream.train_per_class=16', '--set', 'stream.eval_per_class=8',
        '--set', 'stream.input_dim=8', '--set', 'backbone.embed_dim=8',
        '--set', 'backbone.hidden_dim=16', '--set', 'adapter.rank=2',
        '--set', 'train.epochs=1', '--set', 'train.batch_size=16',
    ]


def assert_raises(exc, func, *args, **kwargs):
    """Call ``func`` and return the ``exc`` it raises; fail if it raises nothing"""
    try:
        func(*args, **kwargs)
    except exc as e:
        return e
    raise AssertionError(f"{getattr(func, '__name__', func)} did not raise {exc.__name__}")
