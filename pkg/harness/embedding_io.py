"""
Embedding IO Module
Reads and writes precomputed feature files (ACMEMB1 binary or CSV) and turns
them into task streams
"""

import csv
import os
import struct
from dataclasses import dataclass, asdict

import numpy as np

from errors import ConfigError, DataError, FormatError
from numerics import seeded_rng
from .task_stream import TaskDataset, TaskStream, class_partition

EMBEDDING_MAGIC = b"ACMEMB1\0"
_HEADER = struct.Struct("<8sII")


@dataclass(frozen=True)
class SplitSpec:
    base_classes: int = 0
    inc_classes: int = 5
    eval_fraction: float = 0.2
    val_fraction: float = 0.0
    seed: int = 1993

    def __post_init__(self):
        if not 0.0 < self.eval_fraction < 1.0:
            raise ConfigError(f"eval_fraction must lie in (0, 1), got {self.eval_fraction!r}")
        if not 0.0 <= self.val_fraction < 1.0 - self.eval_fraction:
            raise ConfigError(f"val_fraction must lie in [0, 1 - eval_fraction), got {self.val_fraction!r}")

    def to_dict(self):
        return asdict(self)


def _record_dtype(d):
    return np.dtype([('class_id', '<u4'), ('v', '<f4', (d,))])


def embeddings_to_bytes(x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim != 2 or len(x) != len(y):
        raise DataError(f"expected (n, d) embeddings with n labels, got {x.shape} and {y.shape}")
    if np.any(y < 0):
        raise DataError("class ids must be non-negative")
    records = np.empty(len(y), dtype=_record_dtype(x.shape[1]))
    records['class_id'] = y
    records['v'] = x
    return _HEADER.pack(EMBEDDING_MAGIC, len(y), x.shape[1]) + records.tobytes()


def write_embedding_file(path, x, y):
    """
    Write embeddings as ACMEMB1 (or CSV when the path ends in .csv)

    Args:
        path: output path
        x: (n, d) embeddings, stored as float32
        y: (n,) non-negative integer class ids
    """
    from state import atomic_write_bytes, atomic_write_text
    if str(path).lower().endswith('.csv'):
        x = np.asarray(x, dtype=np.float32)
        rows = [['class_id'] + [f"v{j}" for j in range(x.shape[1])]]
        for label, vec in zip(np.asarray(y).tolist(), x):
            rows.append([str(label)] + [repr(float(v)) for v in vec])
        atomic_write_text(path, "\n".join(",".join(r) for r in rows) + "\n")
        return
    atomic_write_bytes(path, embeddings_to_bytes(x, y))


def embeddings_from_bytes(payload):
    """Parse an ACMEMB1 payload into (x float64, y int64)"""
    if len(payload) < _HEADER.size:
        raise FormatError("file shorter than the ACMEMB1 header", offset=len(payload))
    magic, n, d = _HEADER.unpack_from(payload, 0)
    if magic != EMBEDDING_MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if d < 1:
        raise FormatError("embedding dimension is zero", offset=12)
    dtype = _record_dtype(d)
    expected = _HEADER.size + n * dtype.itemsize
    if len(payload) < expected:
        whole = (len(payload) - _HEADER.size) // dtype.itemsize
        raise FormatError(f"truncated: header declares {n} records, payload holds {whole}",
                          offset=_HEADER.size + whole * dtype.itemsize)
    if len(payload) > expected:
        raise FormatError(f"{len(payload) - expected} trailing bytes after {n} records", offset=expected)
    records = np.frombuffer(payload, dtype=dtype, count=n, offset=_HEADER.size)
    return records['v'].astype(np.float64), records['class_id'].astype(np.int64)


def _read_csv(path):
    with open(path, newline='') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header or header[0] != 'class_id':
            raise FormatError("CSV embeddings need a 'class_id,v0,...' header", offset=0)
        d = len(header) - 1
        labels, rows = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise FormatError(f"line {line_no} has {len(row)} fields, expected {d + 1}")
            try:
                labels.append(int(row[0]))
                rows.append([float(v) for v in row[1:]])
            except ValueError as e:
                raise FormatError(f"line {line_no}: {e}")
    return np.asarray(rows, dtype=np.float32).astype(np.float64).reshape(-1, d), np.asarray(labels, dtype=np.int64)


def read_embedding_file(path):
    """Load (x, y) from an ACMEMB1 or CSV embedding file"""
    if str(path).lower().endswith('.csv'):
        return _read_csv(path)
    with open(path, 'rb') as f:
        return embeddings_from_bytes(f.read())


def load_embedding_stream(path, split_spec):
    """
    Build a TaskStream from an embedding file

    Classes are sorted and grouped into tasks by B-m Inc-n; each class's
    samples are shuffled with the split seed and cut into eval, val and
    train parts.

    Args:
        path: ACMEMB1 or CSV file
        split_spec: SplitSpec

    Returns:
        TaskStream
    """
    x, y = read_embedding_file(path)
    class_ids, counts = np.unique(y, return_counts=True)
    small = class_ids[counts < 2]
    if small.size:
        raise DataError(f"classes {small.tolist()} have fewer than 2 samples")
    groups = class_partition(class_ids, split_spec.base_classes, split_spec.inc_classes)
    rng = seeded_rng(split_spec.seed, 5)

    tasks = []
    for t, group in enumerate(groups, start=1):
        members = np.flatnonzero(np.isin(y, group))
        task_x, task_y = x[members], y[members]
        train_idx, val_idx, eval_idx = [], [], []
        for c in group:
            local = rng.permutation(np.flatnonzero(task_y == c))
            n = len(local)
            n_eval = min(n - 1, max(1, int(round(split_spec.eval_fraction * n))))
            n_val = min(n - n_eval - 1, int(round(split_spec.val_fraction * n)))
            eval_idx.append(local[:n_eval])
            val_idx.append(local[n_eval:n_eval + n_val])
            train_idx.append(local[n_eval + n_val:])
        tasks.append(TaskDataset(
            task_id=t,
            class_ids=np.asarray(group, dtype=np.int64),
            x=task_x,
            y=task_y,
            train_idx=np.sort(np.concatenate(train_idx)),
            eval_idx=np.sort(np.concatenate(eval_idx)),
            val_idx=np.sort(np.concatenate(val_idx)).astype(np.int64),
        ))
    source = {'kind': 'embedding', 'path': os.path.abspath(str(path)), **split_spec.to_dict()}
    return TaskStream(tasks, source=source)


def validate_embedding_file(path):
    """Summary of a readable embedding file; raises FormatError otherwise"""
    x, y = read_embedding_file(path)
    class_ids, counts = np.unique(y, return_counts=True)
    return {
        'path': str(path),
        'samples': int(len(y)),
        'dim': int(x.shape[1]) if x.ndim == 2 else 0,
        'classes': int(len(class_ids)),
        'min_per_class': int(counts.min()) if counts.size else 0,
    }
