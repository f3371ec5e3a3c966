import math

import numpy as np
import pytest

from cocyclelab import (Cylinder, LazyPoint, LocallyConstantCocycle, build_a_sigma_1,
                        build_bk, build_lk, cj_decay, even_return_diagonal, excursions,
                        induced_products, kac_birkhoff, make_wk, make_zk, return_times)
from cocyclelab.errors import CapExceeded, NonDiagonal
from cocyclelab.induction import (_excursions_py, cj_from_excursions, induced_log_norm,
                                  snap_monomial)
from cocyclelab.mat2 import Mat2, scaled_product


def test_kernel_excursions_match_python_walk():
    F, c = build_lk(2.0, 3, 0.9), make_wk(3)
    x = LazyPoint.conditioned(c, 2)
    a, b = excursions(F, x, c, 8), _excursions_py(F, x, c, 8, 10 ** 7)
    assert np.array_equal(a.taus, b.taus) and np.array_equal(a.svals, b.svals)
    for ra, rb in zip(a.records(), b.records()):
        assert np.allclose(ra.induced.as_array(), rb.induced.as_array(), rtol=1e-9,
                           atol=1e-9 * rb.induced.max_abs())


def test_excursion_products_are_full_products():
    F, c = build_bk(2.0, 2), make_zk(2)
    x = LazyPoint.conditioned(c, 3)
    recs = induced_products(F, x, c, 5)
    mats = F.float_matrices()
    start = 0
    for r in recs:
        ids = F.branch_sequence(x.shift(start), r.tau)
        P = scaled_product(mats[ids]).to_mat2()
        assert np.allclose(r.induced.as_array(), P.as_array(), rtol=1e-9, atol=1e-9 * P.max_abs())
        assert r.det() == pytest.approx(1.0)
        start = r.tau_j


@pytest.mark.parametrize("k", [2, 3, 6])
def test_bk_first_return_is_antidiagonal_power(k):
    F, c = build_bk(2.0, k), make_zk(k)
    for s in range(10):
        ex = excursions(F, LazyPoint.conditioned(c, s), c, 20)
        signs, logs, anti = snap_monomial(ex)
        assert anti.all()
        assert np.allclose(logs[:, 0] / math.log(2), ex.svals, rtol=1e-9)
        assert np.allclose(logs[:, 1] / math.log(2), -ex.svals, rtol=1e-9)


def test_even_and_odd_returns():
    F, c = build_lk(2.0, 2, 0.9), make_wk(2)
    x = LazyPoint.conditioned(c, 7)
    ex = excursions(F, x, c, 10)
    from cocyclelab import _kernels as K
    s, l, a = snap_monomial(ex)
    _, _, chain_anti = K.monomial_chain(s, l, a)
    assert chain_anti[0::2].all() and not chain_anti[1::2].any()


def test_cj_formula_on_many_points():
    F, c = build_bk(2.0, 2), make_zk(2)
    for s in range(1000):
        cs = even_return_diagonal(F, LazyPoint.conditioned(c, s), c, 5)
        assert cs.exchange
        assert np.max(np.abs(cs.c - cs.c_formula)) <= 1e-9


def test_identity_cocycle_has_zero_c():
    F = LocallyConstantCocycle((0, 0), (), name="identity", params={"sigma": 2.0})
    c = make_zk(2)
    cs = even_return_diagonal(F, LazyPoint.conditioned(c, 1), c, 20)
    assert not cs.exchange
    assert np.all(cs.c == 0)


def test_non_monomial_excursions_are_rejected():
    from cocyclelab import rotation
    F = LocallyConstantCocycle((0, 0), (((Cylinder(0, "1"),), rotation(0.3)),),
                               params={"sigma": 2.0})
    c = make_zk(1)
    with pytest.raises(NonDiagonal):
        even_return_diagonal(F, LazyPoint.conditioned(c, 1), c, 5)


def test_cap():
    c = make_wk(6)
    with pytest.raises(CapExceeded):
        excursions(build_lk(2.0, 6, 0.9), LazyPoint.conditioned(c, 0), c, 50, cap=100)


def test_kac_w2():
    est = kac_birkhoff(make_wk(2), 0.5, 20_000, 5, seed=3)
    assert est.expected_tau == 32.0
    assert abs(est.mean_tau - 32.0) <= 4 * est.mean_tau_stderr
    assert kac_birkhoff(None, 0.5, 10, 10).mean_tau == 1.0


def test_excursion_symbol_count_variability():
    # E[S_tau] is estimable with moderate relative error over batches
    c = make_zk(2)
    means = []
    for b in range(10):
        vals = [s for x in (LazyPoint.conditioned(c, 1000 * b + i) for i in range(300))
                for _, s in return_times(x, c, 1)]
        means.append(np.mean(vals))
    assert np.std(means) / np.mean(means) < 0.10


def test_induced_log_norm_matches_direct():
    F, c = build_a_sigma_1(2.0), make_zk(2)
    x = LazyPoint.conditioned(c, 5)
    ex = excursions(F, x, c, 50)
    mats = F.float_matrices()
    P = scaled_product(mats[F.branch_sequence(x, int(ex.taus.sum()))])
    assert induced_log_norm(ex) == pytest.approx(P.log_norm(), abs=1e-9)


def test_cj_decay_decreases():
    d = cj_decay(build_bk(2.0, 2), make_zk(2), 0.5, 30, 10_000, grid=(100, 1000, 10_000))
    assert d.grid_means[0] > d.grid_means[1] > d.grid_means[2]
