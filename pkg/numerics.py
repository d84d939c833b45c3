"""Dense linear-algebra kernels, similarities and a finite-difference oracle.

Matrices are 2-D numpy arrays, vectors 1-D numpy arrays, both row-major.
Every public kernel checks shapes and finiteness before computing.
"""
import hashlib
import math

import numpy as np

from errors import DegenerateVectorError, NumericError, ShapeError

PRECISIONS = {
    'float64': np.float64,
    'float32': np.float32,
}

DEFAULT_PRECISION = 'float64'


def resolve_dtype(precision=DEFAULT_PRECISION):
    """Map a precision name ('float64' or 'float32') to a numpy dtype"""
    try:
        return PRECISIONS[precision]
    except KeyError:
        raise ShapeError(f"unsupported precision '{precision}', expected one of {sorted(PRECISIONS)}")


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D array or raise"""
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} has non-finite entries")
    return arr


def as_vector(a, name="vector"):
    """Return ``a`` as a finite 1-D array or raise"""
    arr = np.asarray(a)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} has non-finite entries")
    return arr


def matmul(a, b):
    """Matrix product with an explicit conformity check

    Args:
        a: (n, k) matrix
        b: (k, m) matrix

    Returns:
        (n, m) product
    """
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    out = a @ b
    if not np.all(np.isfinite(out)):
        raise NumericError("matrix product overflowed")
    return out


def cosine_sim(a, b):
    """Cosine similarity of two nonzero vectors, clamped to [-1, 1]"""
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    if a.shape != b.shape:
        raise ShapeError(f"vector lengths differ: {a.shape[0]} vs {b.shape[0]}")
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0.0 or norm_b == 0.0:
        raise DegenerateVectorError("cosine similarity of a zero-norm vector")
    value = float(np.dot(a, b) / (norm_a * norm_b))
    return min(1.0, max(-1.0, value))


def cosine_rows(a, b):
    """Row-wise cosine similarity between two equally shaped matrices"""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise ShapeError(f"matrix shapes differ: {a.shape} vs {b.shape}")
    return np.array([cosine_sim(ra, rb) for ra, rb in zip(a, b)])


def row_l2_normalize(m):
    """Scale every row to unit L2 norm; zero rows are rejected"""
    m = as_matrix(m, "matrix")
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms[:, 0] == 0.0)[0])
        raise DegenerateVectorError(f"row {bad} has zero norm")
    return m / norms


def finite_diff_grad(loss, at, step=1e-5):
    """Central-difference gradient of a scalar function of a matrix

    Args:
        loss: callable taking an array shaped like ``at`` and returning a float
        at: point of evaluation (any shape, float64 recommended)
        step: perturbation size, must be > 0

    Returns:
        Array shaped like ``at`` holding (f(x+h) - f(x-h)) / 2h entrywise
    """
    if not step > 0:
        raise ShapeError(f"finite-difference step must be positive, got {step}")
    point = np.array(at, dtype=np.float64, copy=True)
    grad = np.zeros_like(point)
    flat = point.reshape(-1)
    grad_flat = grad.reshape(-1)
    for idx in range(flat.size):
        original = flat[idx]
        flat[idx] = original + step
        plus = float(loss(point))
        flat[idx] = original - step
        minus = float(loss(point))
        flat[idx] = original
        if not (math.isfinite(plus) and math.isfinite(minus)):
            raise NumericError(f"loss is not finite around entry {idx}")
        grad_flat[idx] = (plus - minus) / (2.0 * step)
    return grad


def compensated_mean(values):
    """Mean computed with exactly rounded summation"""
    values = list(values)
    if not values:
        raise ShapeError("mean of an empty sequence")
    return math.fsum(values) / len(values)


def checksum(*arrays):
    """SHA-256 over the raw bytes of the given arrays (shape included)"""
    digest = hashlib.sha256()
    for arr in arrays:
        arr = np.ascontiguousarray(arr)
        digest.update(str(arr.shape).encode())
        digest.update(str(arr.dtype).encode())
        digest.update(arr.tobytes())
    return digest.hexdigest()


def seeded_rng(*keys):
    """Deterministic generator keyed by one or more non-negative integers"""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))
