import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cocyclelab import (Cylinder, LazyPoint, LocallyConstantCocycle, Mat2, build_a_sigma_1,
                        build_a_sigma_eta, build_bk, build_lk, exchange_check,
                        fiber_bunching_margin, iterate, lk_params, make_wk, make_zk,
                        op_norm, rotation)
from cocyclelab.cocycles import compile_kernel, cylinder_difference, kernel_log_norm
from cocyclelab.errors import AmbiguousBranch
from conftest import random_sl2


def random_cocycle(seed, radius=1):
    rng = np.random.default_rng(seed)
    n = 2 * radius + 1
    branches = tuple(((Cylinder(-radius, "".join(w)),), random_sl2(rng, 0.8))
                     for w in itertools.product("01", repeat=n))
    return LocallyConstantCocycle((-radius, radius), branches, name=f"random{seed}")


COCYCLES = [build_a_sigma_1(2.0), build_a_sigma_eta(4.0, 2.0), build_bk(2.0, 3),
            random_cocycle(1), random_cocycle(2, 2)]


@pytest.mark.parametrize("F", COCYCLES, ids=lambda F: F.name)
@given(seed=st.integers(0, 10 ** 6), m=st.integers(0, 40), n=st.integers(0, 40))
def test_cocycle_law(F, seed, m, n):
    x = LazyPoint(seed, 0.5)
    lhs = iterate(F, x, m + n).to_mat2()
    rhs = iterate(F, x.shift(m), n).to_mat2() @ iterate(F, x, m).to_mat2()
    assert np.allclose(lhs.as_array(), rhs.as_array(), rtol=1e-7, atol=1e-7 * rhs.max_abs())


@pytest.mark.parametrize("F", COCYCLES, ids=lambda F: F.name)
def test_negative_iterate_inverts(F):
    x = LazyPoint(9, 0.5)
    for n in (1, 5, 17):
        fwd = iterate(F, x.shift(-n), n).to_mat2()
        back = iterate(F, x, -n).to_mat2()
        assert np.allclose((back @ fwd).as_array(), np.eye(2), atol=1e-8 * op_norm(fwd) ** 2)


@pytest.mark.parametrize("F", COCYCLES, ids=lambda F: F.name)
def test_kernel_matches_iterate(F):
    for s in range(5):
        x = LazyPoint(s, 0.4)
        ln, ld = kernel_log_norm(F, x, 300)
        assert ln == pytest.approx(iterate(F, x, 300).log_norm(), abs=1e-8)
        assert ld == pytest.approx(0.0, abs=1e-8)


def test_bounded_orbit():
    F = build_a_sigma_1(2.0)
    assert iterate(F, LazyPoint.constant(0), 1000).log_norm() == pytest.approx(0.0, abs=1e-12)
    assert iterate(F, LazyPoint.constant(1), 100).log_norm() == pytest.approx(100 * math.log(2))


def test_overlapping_branches_rejected():
    with pytest.raises(AmbiguousBranch):
        LocallyConstantCocycle((0, 1), (((Cylinder(0, "0"),), Mat2.identity()),
                                        ((Cylinder(0, "01"),), Mat2(2, 0, 0, 0.5))))
    with pytest.raises(ValueError):
        LocallyConstantCocycle((0, 0), (((Cylinder(0, "0"),), Mat2(2, 0, 0, 2)),))
    with pytest.raises(ValueError):
        LocallyConstantCocycle((0, 0), (((Cylinder(1, "0"),), Mat2.identity()),))


@pytest.mark.parametrize("k", range(2, 7))
def test_branch_tables_exhaustive(k):
    # vectorized classify agrees with the scalar lookup on window words
    for F in (build_bk(2.0, k), build_lk(2.0, k, 0.9)):
        if F.width <= 16:
            words = np.array(list(itertools.product((0, 1), repeat=F.width)), dtype=np.uint8)
        else:
            # points conditioned on the shifted supports hit every branch
            lo, hi = F.window
            words = np.stack([LazyPoint.conditioned(make_wk(k).image(i % (2 * k + 1)), i)
                              .coordinates(lo, hi + 1) for i in range(3000)])
        ids = F.classify(words)
        assert len(set(ids.tolist())) >= 2
        for w, b in zip(words[:3000], ids[:3000]):
            assert F.branch_of_word(w) == b


def test_cylinder_difference_partitions():
    d = Cylinder(0, "1")
    ex = [make_wk(3).image(4), make_wk(3).image(6)]
    pieces = cylinder_difference(d, ex)
    assert len(pieces) == 4 * 3 - 2
    for bits in itertools.product("01", repeat=13):
        w = "".join(bits)
        x = LazyPoint.from_word(w, base=-6)
        inside = [c.contains(x) for c in pieces]
        assert sum(inside) == (d.contains(x) and not any(c.contains(x) for c in ex))


def test_lk_parameters():
    assert lk_params(2.0, 2, 0.9).gamma_tilde == pytest.approx(0.1864, abs=5e-5)
    tans = [lk_params(2.0, k, 0.6).tan_theta for k in (16, 64, 256, 1024)]
    assert all(a > b for a, b in zip(tans, tans[1:])) and tans[-1] < 1e-6
    with pytest.raises(ValueError):
        build_lk(2.0, 1, 0.9)


@pytest.mark.parametrize("k", [1, 2, 5, 12])
def test_bk_quarter_turn(k):
    F, c = build_bk(2.0, k), make_zk(k)
    for s in range(10):
        x = LazyPoint.conditioned(c, s)
        P = iterate(F, x, k).to_mat2()
        assert op_norm(P - rotation(math.pi / 2)) <= 1e-12
        assert exchange_check(F, x, k).residual <= 1e-12


@pytest.mark.parametrize("k", [2, 3, 8])
def test_lk_exchange_high_precision(k):
    F, c = build_lk(2.0, k, 0.9, dps=50), make_wk(k)
    for s in range(5):
        assert exchange_check(F, LazyPoint.conditioned(c, s), 2 * k + 1).residual <= 1e-30


def test_lk_printed_order_leaves_residual():
    F = build_lk(2.0, 2, 0.9, shear_last=False, dps=50)
    r = exchange_check(F, LazyPoint.conditioned(make_wk(2), 0), 5).residual
    assert r > 0.1


def test_fiber_bunching():
    fb = fiber_bunching_margin(build_a_sigma_1(2.0), 3.0, 0.5)
    assert (fb.sup_product, fb.threshold, fb.holds) == (pytest.approx(4.0), 8.0, True)
    fb = fiber_bunching_margin(build_a_sigma_1(2.0), 2.0, 0.5)
    assert (fb.sup_product, fb.threshold, fb.holds) == (pytest.approx(4.0), 4.0, False)


def test_json_roundtrip():
    F = build_lk(2.0, 3, 0.9)
    G = type(F).from_json(F.to_json())
    assert G.window == F.window and len(G.branches) == len(F.branches)
    x = LazyPoint.conditioned(make_wk(3), 4)
    assert iterate(G, x, 50).log_norm() == pytest.approx(iterate(F, x, 50).log_norm())


def test_wide_cocycle_has_no_kernel():
    assert compile_kernel(build_lk(2.0, 20, 0.9)) is None
    assert compile_kernel(build_lk(2.0, 10, 0.9)) is not None


def test_kernel_survives_wide_diagonal_spread():
    # at the critical weight the diagonal entries drift apart by > 2^1074
    F = build_a_sigma_eta(4.0, 2.0)
    x = LazyPoint(16955226950129790646, 1 / 3)
    ln, _ = kernel_log_norm(F, x, 10 ** 5)
    assert np.isfinite(ln)
    assert ln == pytest.approx(iterate(F, x, 10 ** 5).log_norm(), abs=1e-8)
