import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cocyclelab import (Mat2, RowScaledProduct, ScaledProduct, diagonal, op_norm,
                        rotation, scaled_mul, scaled_product, shear_lower)
from conftest import random_sl2

finite = st.floats(-5, 5, allow_nan=False)


def sl2_from(a, b, c):
    a = a if abs(a) > 0.1 else 0.1 + abs(a)
    return Mat2(a, b, c, (1 + b * c) / a)


def test_golden_shear_norm():
    assert op_norm(Mat2(1, 1, 0, 1)) == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-12)


def test_op_norm_matches_svd(rng):
    for _ in range(200):
        m = Mat2(*rng.normal(size=4))
        assert op_norm(m) == pytest.approx(np.linalg.norm(m.as_array(), 2), rel=1e-12)


@given(finite, finite, finite)
def test_inverse_norm_symmetry(a, b, c):
    m = sl2_from(a, b, c)
    assert op_norm(m) == pytest.approx(op_norm(m.inv()), rel=1e-9)


@given(finite, finite, finite, finite, finite, finite)
def test_product_associative_and_sl2(a, b, c, d, e, f):
    x, y = sl2_from(a, b, c), sl2_from(d, e, f)
    z = rotation(a)
    lhs, rhs = (x @ y) @ z, x @ (y @ z)
    assert np.allclose(lhs.as_array(), rhs.as_array(), rtol=1e-9, atol=1e-9 * lhs.max_abs())
    assert (x @ y).det() == pytest.approx(1.0, rel=1e-6)


def test_helpers():
    assert rotation(math.pi / 2).as_array() == pytest.approx(np.array([[0, -1], [1, 0]]))
    assert shear_lower(0.3).entries() == (1, 0, 0.3, 1)
    assert diagonal(4.0).entries() == (4.0, 0, 0, 0.25)
    with pytest.raises(ValueError):
        diagonal(0.0)
    m = Mat2(2, 1, 1, 1)
    assert (m @ m.inv()).as_array() == pytest.approx(np.eye(2))
    assert Mat2.from_array(m.as_array()) == m
    assert m.is_sl2() and not Mat2(2, 0, 0, 2).is_sl2()


def test_scaled_product_matches_plain(rng):
    mats = [random_sl2(rng) for _ in range(30)]
    plain = Mat2.identity()
    acc = ScaledProduct.identity()
    for m in mats:
        plain = m @ plain
        acc = scaled_mul(acc, m)
    fast = scaled_product(np.array([m.entries() for m in mats]))
    for p in (acc, fast):
        assert np.allclose(p.to_mat2().as_array(), plain.as_array(), rtol=1e-8,
                           atol=1e-8 * plain.max_abs())
        assert p.log_norm() == pytest.approx(math.log(op_norm(plain)), abs=1e-9)


def test_scaled_product_composition(rng):
    a = [random_sl2(rng) for _ in range(20)]
    b = [random_sl2(rng) for _ in range(20)]
    pa = scaled_product(np.array([m.entries() for m in a]))
    pb = scaled_product(np.array([m.entries() for m in b]))
    both = scaled_product(np.array([m.entries() for m in a + b]))
    assert (pb @ pa).log_norm() == pytest.approx(both.log_norm(), abs=1e-9)


def test_det_drift_long_product():
    rng = np.random.default_rng(7)
    n = 10 ** 6
    raw = rng.normal(size=(n, 3))
    raw[:, 0] = np.where(np.abs(raw[:, 0]) < 0.1, 0.1, raw[:, 0])
    mats = np.column_stack([raw[:, 0], raw[:, 1], raw[:, 2],
                            (1 + raw[:, 1] * raw[:, 2]) / raw[:, 0]])
    p = scaled_product(mats)
    assert abs(p.det() - 1.0) <= 1e-6
    assert p.log_norm() > 100  # grows without overflow


def test_scaled_product_handles_huge_diagonal_spread():
    mats = np.tile([1e150, 0.0, 0.0, 1e-150], (50, 1))
    p = scaled_product(mats)
    assert p.log_norm() == pytest.approx(50 * 150 * math.log(10), rel=1e-12)
    assert p.log_abs_det() == pytest.approx(0.0, abs=1e-6)


def test_row_scaled_monomial_residuals():
    acc = RowScaledProduct.identity()
    for m in (diagonal(2.0), rotation(math.pi / 2), diagonal(3.0)):
        acc = acc.left_mul(m)
    assert acc.antidiagonal_residual() < 1e-15
    assert acc.diagonal_residual() > 1
    assert acc.to_mat2().as_array() == pytest.approx(
        (diagonal(3.0) @ rotation(math.pi / 2) @ diagonal(2.0)).as_array(), abs=1e-12)
