"""
Adapter Weights Module
Holds the bottleneck adapter parameter bundle, its initialization and the
ACMADPT1 binary snapshot format
"""

import math
import struct
from dataclasses import dataclass

import numpy as np

from errors import ConfigError, FormatError, ShapeError
from numerics import checksum, resolve_dtype, seeded_rng

ADAPTER_MAGIC = b"ACMADPT1"
_HEADER = struct.Struct("<8sIIId")


@dataclass
class AdapterWeights:
    """Per-block down/up projections plus the up-projection scale"""
    down: list
    up: list
    scale: float = 1.0

    def __post_init__(self):
        if not self.down or len(self.down) != len(self.up):
            raise ShapeError("adapter needs the same nonzero number of down and up projections")
        d, r = np.shape(self.down[0])
        if not 1 <= r < d:
            raise ShapeError(f"bottleneck dim must satisfy 1 <= r < d, got r={r}, d={d}")
        for b, (wd, wu) in enumerate(zip(self.down, self.up)):
            if np.shape(wd) != (d, r) or np.shape(wu) != (r, d):
                raise ShapeError(f"block {b} projections have shapes {np.shape(wd)}, {np.shape(wu)}; expected {(d, r)}, {(r, d)}")
            if not (np.all(np.isfinite(wd)) and np.all(np.isfinite(wu))):
                raise ShapeError(f"block {b} projections have non-finite entries")

    @property
    def n_blocks(self):
        return len(self.down)

    @property
    def embed_dim(self):
        return self.down[0].shape[0]

    @property
    def rank(self):
        return self.down[0].shape[1]

    def arrays(self):
        """All parameter arrays in canonical order (down_1, up_1, down_2, ...)"""
        out = []
        for wd, wu in zip(self.down, self.up):
            out.extend([wd, wu])
        return out

    def copy(self):
        return AdapterWeights(down=[w.copy() for w in self.down], up=[w.copy() for w in self.up], scale=self.scale)

    def checksum(self):
        return checksum(*self.arrays())

    def same_shape(self, other):
        return (self.n_blocks == other.n_blocks and self.embed_dim == other.embed_dim
                and self.rank == other.rank)

    def equals(self, other):
        """Exact entrywise equality of every projection and the scale"""
        if not self.same_shape(other) or self.scale != other.scale:
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))


def combine(adapters, coefficients):
    """Entrywise linear combination sum_k c_k * adapters[k]

    All adapters must share shapes and scale.
    """
    first = adapters[0]
    for other in adapters[1:]:
        if not first.same_shape(other):
            raise ShapeError("cannot combine adapters of different shapes")
        if other.scale != first.scale:
            raise ShapeError("cannot combine adapters with different scales")
    down = []
    up = []
    for b in range(first.n_blocks):
        down.append(sum(c * a.down[b] for c, a in zip(coefficients, adapters)))
        up.append(sum(c * a.up[b] for c, a in zip(coefficients, adapters)))
    return AdapterWeights(down=down, up=up, scale=first.scale)


def init_adapter(n_blocks, d, r, scale=1.0, init_from=None, seed=0, precision='float64'):
    """
    Create adapter weights, either fresh or copied from a shared initialization

    Args:
        n_blocks: number of backbone blocks
        d: embedding dimension
        r: bottleneck dimension (1 <= r < d)
        scale: up-projection scale
        init_from: optional AdapterWeights to deep-copy (initial weight replacement)
        seed: seed for the fresh down-projections
        precision: 'float64' or 'float32'

    Returns:
        AdapterWeights
    """
    if n_blocks < 1 or d < 1 or r < 1:
        raise ConfigError(f"adapter dimensions must be positive, got n_blocks={n_blocks}, d={d}, r={r}")
    if r >= d:
        raise ConfigError(f"bottleneck dim r={r} must be smaller than d={d}")
    if init_from is not None:
        if (init_from.n_blocks, init_from.embed_dim, init_from.rank) != (n_blocks, d, r):
            raise ConfigError(
                f"init_from has shape (blocks={init_from.n_blocks}, d={init_from.embed_dim}, r={init_from.rank}), "
                f"expected ({n_blocks}, {d}, {r})"
            )
        return init_from.copy()

    dtype = resolve_dtype(precision)
    rng = seeded_rng(seed, 1)
    down = [(rng.standard_normal((d, r)) / math.sqrt(d)).astype(dtype) for _ in range(n_blocks)]
    up = [np.zeros((r, d), dtype=dtype) for _ in range(n_blocks)]
    return AdapterWeights(down=down, up=up, scale=float(scale))


def adapter_to_bytes(adapter):
    """Serialize to the ACMADPT1 layout (little-endian, f64 payloads)"""
    parts = [_HEADER.pack(ADAPTER_MAGIC, adapter.n_blocks, adapter.embed_dim, adapter.rank, float(adapter.scale))]
    for wd, wu in zip(adapter.down, adapter.up):
        parts.append(np.ascontiguousarray(wd, dtype='<f8').tobytes())
        parts.append(np.ascontiguousarray(wu, dtype='<f8').tobytes())
    return b"".join(parts)


def adapter_from_bytes(payload, precision='float64'):
    """Parse an ACMADPT1 payload"""
    if len(payload) < _HEADER.size:
        raise FormatError("adapter file shorter than its header", offset=len(payload))
    magic, n_blocks, d, r, scale = _HEADER.unpack_from(payload, 0)
    if magic != ADAPTER_MAGIC:
        raise FormatError(f"bad adapter magic {magic!r}", offset=0)
    block_bytes = 2 * d * r * 8
    expected = _HEADER.size + n_blocks * block_bytes
    if len(payload) != expected:
        raise FormatError(f"adapter payload has {len(payload)} bytes, header implies {expected}",
                          offset=min(len(payload), expected))
    dtype = resolve_dtype(precision)
    down = []
    up = []
    offset = _HEADER.size
    for _ in range(n_blocks):
        wd = np.frombuffer(payload, dtype='<f8', count=d * r, offset=offset).reshape(d, r)
        offset += d * r * 8
        wu = np.frombuffer(payload, dtype='<f8', count=r * d, offset=offset).reshape(r, d)
        offset += r * d * 8
        down.append(wd.astype(dtype))
        up.append(wu.astype(dtype))
    return AdapterWeights(down=down, up=up, scale=scale)


def save_adapter(adapter, path):
    """Write an adapter snapshot to ``path`` atomically"""
    from state import atomic_write_bytes
    atomic_write_bytes(path, adapter_to_bytes(adapter))


def load_adapter(path, precision='float64'):
    with open(path, 'rb') as f:
        return adapter_from_bytes(f.read(), precision)


@dataclass(frozen=True)
class AdapterConfig:
    rank: int = 8
    scale: float = 1.0

    def __post_init__(self):
        if not isinstance(self.rank, int) or self.rank < 1:
            raise ConfigError(f"adapter.rank must be a positive integer, got {self.rank!r}")
        if not self.scale > 0:
            raise ConfigError(f"adapter.scale must be positive, got {self.scale!r}")

    def to_dict(self):
        return {'rank': self.rank, 'scale': self.scale}
