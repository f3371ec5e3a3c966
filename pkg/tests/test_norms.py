import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cocyclelab import (ModulusSpec, analytic_bk_bound, analytic_lk_cases, build_a_sigma_1,
                        build_a_sigma_eta, build_bk, build_lk, diff_map, norm_distance,
                        seminorm_bruteforce, seminorm_exact, seminorm_sampled, weight,
                        weight_chain_check)
from cocyclelab.errors import Unsupported
from cocyclelab.norms import integrand

A = build_a_sigma_1(2.0)


def test_weight_examples():
    assert weight(ModulusSpec.log(0.5), 3, 0.5) == pytest.approx(1.4421, abs=1e-4)
    assert weight(ModulusSpec.log(1.0), 3, 0.5) == pytest.approx(3 * math.log(2))
    assert weight(ModulusSpec.holder(1.0), 3, 0.5) == pytest.approx(8.0)
    assert weight(ModulusSpec.c0(), 7, 0.5) == 1.0
    assert weight(ModulusSpec.loglog(1, 1), 1, 0.5) == 1.0  # clamped below t = 1
    assert weight(ModulusSpec.weak(1.0, 1.0), 4, 0.5) == pytest.approx(16.0)


def test_spec_labels_roundtrip():
    for s in (ModulusSpec.c0(), ModulusSpec.holder(0.5), ModulusSpec.weak(1.0, 0.3),
              ModulusSpec.loglog(2.0, 1.0), ModulusSpec.log(0.5)):
        assert ModulusSpec.parse(s.label) == s
    for bad in (lambda: ModulusSpec.log(0.0), lambda: ModulusSpec.log(1.5),
                lambda: ModulusSpec.weak(1.0, 0.0), lambda: ModulusSpec.loglog(0.5, 1),
                lambda: ModulusSpec("Lip")):
        with pytest.raises(ValueError):
            bad()


@given(st.integers(4, 10 ** 6), st.floats(0.01, 0.99), st.floats(0.4, 1.0))
def test_weight_chain_on_safe_parameters(n, delta, theta):
    assert weight_chain_check(n, 0.5, delta, 1.0, theta, 1.0, 1.0)


def test_weight_chain_can_fail_for_small_theta():
    # (log t)^3 overtakes 0.01 t^0.01 at moderate t
    assert not weight_chain_check(10 ** 6, 0.5, 0.5, 0.01, 0.01, 3.0, 3.0)


def test_weight_chain_needs_t_at_least_e():
    with pytest.raises(Unsupported):
        weight_chain_check(3, 0.5, 0.5, 1, 1, 1, 1)


def test_diff_map_classes_cover_windows():
    for F in (build_bk(2.0, 3), build_lk(2.0, 2, 0.9)):
        H = diff_map(F, A)
        codes = np.arange(2 ** H.width, dtype=np.uint64)
        ids = H.classify_codes(codes)  # raises on gaps or overlaps
        assert set(ids.tolist()) == set(range(len(H.classes)))
        assert all(v.label for v in H.classes)


@pytest.mark.parametrize("F", [build_bk(2.0, k) for k in (2, 3, 4)]
                         + [build_lk(2.0, k, 0.9) for k in (2, 3)],
                         ids=lambda F: F.name)
@pytest.mark.parametrize("spec", [ModulusSpec.log(0.5), ModulusSpec.log(1.0),
                                  ModulusSpec.holder(1.0)], ids=lambda s: s.label)
def test_exact_equals_bruteforce(F, spec):
    H = diff_map(F, A)
    w = seminorm_exact(H, spec, 0.5)
    assert w.value == seminorm_bruteforce(H, spec, 0.5)
    u, v = w.words
    assert integrand(H, u, v, spec, 0.5) == pytest.approx(w.value, rel=1e-12)


@pytest.mark.parametrize("k", [2, 4, 8, 16])
def test_bk_seminorm_closed_form(k):
    H = diff_map(build_bk(2.0, k), A)
    w = seminorm_exact(H, ModulusSpec.log(0.5), 0.5)
    assert w.value == pytest.approx(2 * math.sin(math.pi / (4 * k)) * math.sqrt(k * math.log(2)),
                                    rel=1e-12)


@given(st.floats(-10, 10).filter(lambda c: abs(c) > 1e-3))
def test_scale_equivariance(c):
    H = diff_map(build_bk(2.0, 3), A)
    spec = ModulusSpec.log(0.5)
    assert seminorm_exact(H.scaled(c), spec, 0.5).value == pytest.approx(
        abs(c) * seminorm_exact(H, spec, 0.5).value, rel=1e-12)


def test_sampled_is_a_close_lower_bound():
    H = diff_map(build_bk(2.0, 4), A)
    spec = ModulusSpec.log(0.5)
    exact = seminorm_exact(H, spec, 0.5).value
    s = seminorm_sampled(H, spec, 0.5, 100_000, seed=1)
    assert s <= exact * (1 + 1e-12)
    assert s >= 0.95 * exact


def test_norm_distance_parts():
    d = norm_distance(build_bk(2.0, 4), A, ModulusSpec.log(0.5), 0.5)
    assert d.sup_term == pytest.approx(2 * math.sin(math.pi / 16) * 1.0, rel=1e-9) or \
        d.sup_term == pytest.approx(2 * 2 * math.sin(math.pi / 16), rel=1e-9)
    assert d.total == d.sup_term + d.seminorm_term and d.exact
    c0 = norm_distance(build_bk(2.0, 4), A, ModulusSpec.c0(), 0.5)
    assert c0.seminorm_term == 0.0 and c0.total == c0.sup_term
    assert norm_distance(A, A, ModulusSpec.log(0.5), 0.5).total == 0.0
    same = norm_distance(build_a_sigma_eta(2.0, 1.0), A, ModulusSpec.holder(1.0), 0.5)
    assert same.total == 0.0


def test_analytic_bounds():
    assert analytic_bk_bound(64, 2.0, 0.5, 0.5) == pytest.approx(0.2126, abs=1e-4)
    b = analytic_lk_cases(8, 2.0, 0.9, 0.5, 0.5)
    assert set(b.cases) == {"1.1", "1.2", "1.3", "2.1", "2.2", "2.3"}
    assert b.total == b.sup_bound + max(b.cases.values())
    with pytest.raises(ValueError):
        analytic_lk_cases(8, 2.0, 0.5, 0.5, 0.5)


def test_lk_case_bounds_decay_for_small_beta():
    ks = (64, 512, 4096)
    bounds = [analytic_lk_cases(k, 2.0, 0.6, 0.3, 0.5) for k in ks]
    for case in bounds[0].cases:
        vals = [b.cases[case] for b in bounds]
        assert vals[0] >= vals[1] >= vals[2]
    assert bounds[0].sup_bound > bounds[-1].sup_bound
