import json
import math

import pytest

from cocyclelab import (ExponentEstimate, build_a_sigma_1, build_a_sigma_eta, build_bk,
                        lyap_bottom_mc, lyap_diag_closed_form, lyap_induced, lyap_top_mc,
                        make_zk)
from cocyclelab.montecarlo import map_trials, mean_stderr, trial_seeds


def test_closed_form():
    assert lyap_diag_closed_form(2.0, 1.0, 0.5).value == pytest.approx(0.5 * math.log(2))
    assert lyap_diag_closed_form(4.0, 2.0, 1 / 3).value == pytest.approx(0.0, abs=1e-15)
    assert lyap_diag_closed_form(2.0, 1.0, 0.5, bottom=True).value < 0
    with pytest.raises(ValueError):
        lyap_diag_closed_form(2.0, 1.0, 1.0)


def test_top_and_bottom_are_symmetric():
    F = build_a_sigma_eta(3.0, 1.5)
    top = lyap_top_mc(F, 0.5, 5000, 10, seed=4)
    bot = lyap_bottom_mc(F, 0.5, 5000, 10, seed=4)
    assert bot.value == pytest.approx(-top.value, abs=1e-9)
    assert abs(top.value - lyap_diag_closed_form(3.0, 1.5, 0.5).value) < 4 * top.stderr + 1e-3


def test_estimate_validation_and_json():
    with pytest.raises(ValueError):
        ExponentEstimate(0.1, 1, 1, 0.0, "guess")
    with pytest.raises(ValueError):
        ExponentEstimate(0.1, 0, 0, 0.5, "closed_form")
    e = lyap_top_mc(build_a_sigma_1(2.0), 0.5, 1000, 4, seed=1)
    d = json.loads(e.to_json())
    assert set(d) >= {"cocycle", "params", "method", "value", "stderr", "n", "trials", "seed"}


def test_determinism_across_threads():
    F = build_bk(2.0, 3)
    a = lyap_top_mc(F, 0.5, 2000, 12, seed=9, threads=1)
    b = lyap_top_mc(F, 0.5, 2000, 12, seed=9, threads=4)
    assert a == b
    c, z = build_bk(2.0, 2), make_zk(2)
    assert lyap_induced(c, z, 0.5, 6, 200, seed=2, threads=1) == \
        lyap_induced(c, z, 0.5, 6, 200, seed=2, threads=3)


def test_seeds_are_prefix_stable():
    assert list(trial_seeds(5, 10)[:4]) == list(trial_seeds(5, 4))
    assert list(trial_seeds(5, 4)) != list(trial_seeds(5, 4, stream=1))
    assert map_trials(lambda s: s * 2, [1, 2, 3], threads=2) == [2, 4, 6]
    m, se = mean_stderr([1.0, 2.0, 3.0])
    assert m == 2.0 and se == pytest.approx(1 / math.sqrt(3))


def test_induced_recovers_positive_exponent():
    est = lyap_induced(build_a_sigma_1(2.0), make_zk(2), 0.5, 20, 2000, seed=1)
    assert abs(est.value - 0.5 * math.log(2)) < 4 * est.stderr + 1e-3
