"""Tests for the dense kernels, cosine similarity and the finite-difference oracle"""
import math

import numpy as np

from helpers import assert_raises
from errors import DegenerateVectorError, NumericError, ShapeError
from numerics import (
    checksum, compensated_mean, cosine_rows, cosine_sim, finite_diff_grad, matmul,
    resolve_dtype, row_l2_normalize, seeded_rng,
)


def test_matmul_shapes():
    a = np.arange(6.0).reshape(2, 3)
    b = np.arange(12.0).reshape(3, 4)
    assert np.array_equal(matmul(a, b), a @ b)
    assert_raises(ShapeError, matmul, a, a)
    assert_raises(ShapeError, matmul, np.arange(3.0), b)


def test_matmul_rejects_non_finite():
    a = np.array([[1.0, np.nan]])
    assert_raises(NumericError, matmul, a, np.ones((2, 1)))


def test_cosine_similarity_bounds():
    v = np.array([1.0, 2.0, 3.0])
    assert abs(cosine_sim(v, 2.5 * v) - 1.0) <= 1e-15
    assert abs(cosine_sim(v, -v) + 1.0) <= 1e-15
    assert cosine_sim(np.array([1.0, 0.0]), np.array([0.0, 3.0])) == 0.0
    assert -1.0 <= cosine_sim(v, v * (1 + 1e-16)) <= 1.0


def test_cosine_of_zero_vector_is_rejected():
    assert_raises(DegenerateVectorError, cosine_sim, np.zeros(3), np.ones(3))
    assert_raises(ShapeError, cosine_sim, np.ones(3), np.ones(4))


def test_cosine_rows_and_normalize():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((5, 4))
    sims = cosine_rows(a, 3.0 * a)
    assert np.all(np.abs(sims - 1.0) <= 1e-12)
    unit = row_l2_normalize(a)
    assert np.allclose(np.linalg.norm(unit, axis=1), 1.0, atol=1e-14)
    a[2] = 0.0
    assert_raises(DegenerateVectorError, row_l2_normalize, a)


def test_finite_diff_matches_quadratic():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((3, 2))
    grad = finite_diff_grad(lambda m: float(np.sum(m ** 2)), x)
    assert np.max(np.abs(grad - 2.0 * x)) <= 1e-8


def test_finite_diff_errors():
    assert_raises(ShapeError, finite_diff_grad, lambda m: 0.0, np.zeros(2), 0.0)
    assert_raises(NumericError, finite_diff_grad, lambda m: float('nan'), np.zeros(2))


def test_finite_diff_leaves_point_untouched():
    x = np.array([[0.5, -1.5]])
    before = x.copy()
    finite_diff_grad(lambda m: float(m.sum()), x)
    assert np.array_equal(x, before)


def test_compensated_mean():
    assert compensated_mean([0.1] * 10) == 0.1
    values = [1e16, 1.0, -1e16, 1.0]
    assert compensated_mean(values) == 0.5
    assert_raises(ShapeError, compensated_mean, [])


def test_checksum_tracks_content_and_dtype():
    a = np.arange(4.0)
    assert checksum(a) == checksum(a.copy())
    assert checksum(a) != checksum(a.astype(np.float32))
    assert checksum(a) != checksum(a.reshape(2, 2))


def test_seeded_rng_is_deterministic():
    assert np.array_equal(seeded_rng(3, 1).standard_normal(5), seeded_rng(3, 1).standard_normal(5))
    assert not np.array_equal(seeded_rng(3, 1).standard_normal(5), seeded_rng(3, 2).standard_normal(5))


def test_resolve_dtype():
    assert resolve_dtype('float32') == np.float32
    assert resolve_dtype() == np.float64
    assert_raises(ShapeError, resolve_dtype, 'float16')
    assert math.isclose(float(np.finfo(resolve_dtype()).eps), 2.220446049250313e-16)
