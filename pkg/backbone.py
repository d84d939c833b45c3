"""Frozen residual-MLP feature extractor with per-block adapter hooks.

Each block maps h -> h + MLP(h) + scale * ReLU(h W_down) W_up, the adapter
term present only when an adapter is attached. Weights are drawn once from
a seeded scaled Gaussian and then marked read-only.
"""
import math
from dataclasses import dataclass, asdict

import numpy as np

from errors import ConfigError, ShapeError
from numerics import checksum, matmul, resolve_dtype, seeded_rng

NONLINEARITIES = ('relu', 'gelu')

_GELU_C = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class BackboneConfig:
    input_dim: int = 32
    embed_dim: int = 32
    n_blocks: int = 2
    hidden_dim: int = 64
    nonlinearity: str = 'relu'
    seed: int = 0
    precision: str = 'float64'

    def __post_init__(self):
        for name in ('input_dim', 'embed_dim', 'n_blocks', 'hidden_dim'):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"backbone.{name} must be a positive integer, got {value!r}")
        if self.nonlinearity not in NONLINEARITIES:
            raise ConfigError(f"backbone.nonlinearity must be one of {NONLINEARITIES}, got {self.nonlinearity!r}")
        try:
            resolve_dtype(self.precision)
        except ShapeError as e:
            raise ConfigError(str(e))

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class FrozenBlock:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


@dataclass(frozen=True)
class Backbone:
    config: BackboneConfig
    input_proj: np.ndarray
    blocks: tuple

    @property
    def input_dim(self):
        return self.config.input_dim

    @property
    def embed_dim(self):
        return self.config.embed_dim

    @property
    def dtype(self):
        return self.input_proj.dtype

    def checksum(self):
        arrays = [self.input_proj]
        for block in self.blocks:
            arrays.extend([block.w1, block.b1, block.w2, block.b2])
        return checksum(*arrays)


def _frozen(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def build_backbone(config):
    """Build the frozen backbone fully determined by (config, seed)

    Args:
        config: BackboneConfig

    Returns:
        Backbone with read-only weights
    """
    if not isinstance(config, BackboneConfig):
        raise ConfigError("build_backbone expects a BackboneConfig")
    dtype = resolve_dtype(config.precision)
    rng = seeded_rng(config.seed, 0)
    d, hidden = config.embed_dim, config.hidden_dim

    input_proj = rng.standard_normal((config.input_dim, d)) / math.sqrt(config.input_dim)
    blocks = []
    for _ in range(config.n_blocks):
        w1 = rng.standard_normal((d, hidden)) / math.sqrt(d)
        w2 = rng.standard_normal((hidden, d)) / math.sqrt(hidden)
        blocks.append(FrozenBlock(
            w1=_frozen(w1.astype(dtype)),
            b1=_frozen(np.zeros(hidden, dtype=dtype)),
            w2=_frozen(w2.astype(dtype)),
            b2=_frozen(np.zeros(d, dtype=dtype)),
        ))
    return Backbone(config=config, input_proj=_frozen(input_proj.astype(dtype)), blocks=tuple(blocks))


def activate(z, nonlinearity):
    if nonlinearity == 'relu':
        return np.maximum(z, 0.0)
    inner = _GELU_C * (z + 0.044715 * z ** 3)
    return 0.5 * z * (1.0 + np.tanh(inner))


def activate_grad(z, nonlinearity):
    # ReLU subgradient at 0 is 0
    if nonlinearity == 'relu':
        return (z > 0.0).astype(z.dtype)
    inner = _GELU_C * (z + 0.044715 * z ** 3)
    t = np.tanh(inner)
    return 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t ** 2) * _GELU_C * (1.0 + 3 * 0.044715 * z ** 2)


def _check_adapter(backbone, adapter):
    if adapter is None:
        return
    if adapter.n_blocks != len(backbone.blocks):
        raise ShapeError(f"adapter has {adapter.n_blocks} blocks, backbone has {len(backbone.blocks)}")
    if adapter.embed_dim != backbone.embed_dim:
        raise ShapeError(f"adapter embed dim {adapter.embed_dim} != backbone embed dim {backbone.embed_dim}")


def _as_batch(backbone, x):
    x = np.asarray(x)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.ndim != 2 or batch.shape[1] != backbone.input_dim:
        raise ShapeError(f"input must have {backbone.input_dim} features, got shape {x.shape}")
    return batch.astype(backbone.dtype, copy=False), single


def forward_with_cache(backbone, adapter, x, dropout_masks=None):
    """Batched forward pass that keeps the activations backprop needs

    Args:
        backbone: Backbone
        adapter: AdapterWeights or None
        x: (n, D) inputs
        dropout_masks: optional per-block (n, r) multipliers applied after
            the bottleneck ReLU (already scaled by 1 / (1 - rate))

    Returns:
        (features (n, d), cache list with one dict per block)
    """
    _check_adapter(backbone, adapter)
    batch, _ = _as_batch(backbone, x)
    nonlinearity = backbone.config.nonlinearity
    h = matmul(batch, backbone.input_proj)
    cache = []
    for b, block in enumerate(backbone.blocks):
        z1 = matmul(h, block.w1) + block.b1
        a1 = activate(z1, nonlinearity)
        mlp = matmul(a1, block.w2) + block.b2
        entry = {'h': h, 'z1': z1}
        if adapter is None:
            h = h + mlp
        else:
            u = matmul(h, adapter.down[b])
            r = np.maximum(u, 0.0)
            mask = None if dropout_masks is None else dropout_masks[b]
            if mask is not None:
                r = r * mask
            h = h + mlp + adapter.scale * matmul(r, adapter.up[b])
            entry.update(u=u, r=r, mask=mask)
        cache.append(entry)
    return h, cache


def forward_features(backbone, adapter, x):
    """Feature embedding phi(x) with an optional adapter attached

    Args:
        backbone: Backbone
        adapter: AdapterWeights or None
        x: single (D,) vector or (n, D) batch

    Returns:
        (d,) vector or (n, d) batch matching the input rank
    """
    batch, single = _as_batch(backbone, x)
    features, _ = forward_with_cache(backbone, adapter, batch)
    return features[0] if single else features


def backward_features(backbone, adapter, cache, grad_features):
    """Backpropagate dL/dphi through the frozen blocks into the adapter

    Returns:
        (grad_down, grad_up) lists, one (d, r) / (r, d) array per block
    """
    nonlinearity = backbone.config.nonlinearity
    g = grad_features
    grad_down = [None] * len(backbone.blocks)
    grad_up = [None] * len(backbone.blocks)
    for b in reversed(range(len(backbone.blocks))):
        block = backbone.blocks[b]
        entry = cache[b]
        grad_up[b] = adapter.scale * (entry['r'].T @ g)
        grad_r = adapter.scale * (g @ adapter.up[b].T)
        if entry['mask'] is not None:
            grad_r = grad_r * entry['mask']
        grad_u = grad_r * (entry['u'] > 0.0)
        grad_down[b] = entry['h'].T @ grad_u
        through_mlp = ((g @ block.w2.T) * activate_grad(entry['z1'], nonlinearity)) @ block.w1.T
        g = g + through_mlp + grad_u @ adapter.down[b].T
    return grad_down, grad_up


def relu_pattern(cache, nonlinearity='relu'):
    """Sign pattern of every ReLU pre-activation in a cached forward pass"""
    parts = [np.zeros(0, dtype=bool)]
    for entry in cache:
        if 'u' in entry:
            parts.append((entry['u'] > 0.0).ravel())
        if nonlinearity == 'relu':
            parts.append((entry['z1'] > 0.0).ravel())
    return np.concatenate(parts)
