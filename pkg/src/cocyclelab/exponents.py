"""Lyapunov exponents: closed forms, direct Monte Carlo, and the induced estimator."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .cocycles import LocallyConstantCocycle, compile_kernel, kernel_log_norm
from .induction import cj_from_excursions, excursions, _sigma_of
from .montecarlo import map_trials, mean_stderr, trial_seeds
from .shift_space import Cylinder, LazyPoint

METHODS = ("closed_form", "direct_mc", "induced")


@dataclass(frozen=True)
class ExponentEstimate:
    """An exponent in nats per ambient step with its standard error.

    For the induced method ``n`` is the number of returns per trial.
    """

    value: float
    n: int
    trials: int
    stderr: float
    method: str
    cocycle: str = ""
    params: dict = field(default_factory=dict, compare=False)
    seed: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.stderr < 0 or (self.method == "closed_form" and self.stderr != 0):
            raise ValueError("invalid stderr")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def lyap_diag_closed_form(sigma: float, eta: float, p: float,
                          bottom: bool = False) -> ExponentEstimate:
    """``|(1-p) log eta - p log sigma|`` (negated for the bottom exponent)."""
    if sigma <= 0 or eta <= 0:
        raise ValueError("sigma and eta must be positive")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    v = abs((1 - p) * math.log(eta) - p * math.log(sigma))
    return ExponentEstimate(-v if bottom else v, 0, 0, 0.0, "closed_form",
                            f"A(sigma={sigma},eta={eta})",
                            {"sigma": sigma, "eta": eta, "p": p})


def _direct(F, p, n, trials, seed, threads, stream):
    if n < 1:
        raise ValueError("n must be >= 1")
    tables = compile_kernel(F)

    def one(s):
        return kernel_log_norm(F, LazyPoint(int(s), p), n, tables)

    return np.array(map_trials(one, trial_seeds(seed, trials, stream), threads),
                    dtype=np.float64).reshape(-1, 2)


def lyap_top_mc(F: LocallyConstantCocycle, p: float, n: int, trials: int,
                seed: int = 0, threads: int = 1, stream: int = 0) -> ExponentEstimate:
    """Mean of ``log ||F^n(x)|| / n`` over independent trajectories."""
    r = _direct(F, p, n, trials, seed, threads, stream)
    m, se = mean_stderr(r[:, 0] / n)
    return ExponentEstimate(m, n, trials, se, "direct_mc", F.name,
                            {"p": p, **F.params}, seed)


def lyap_bottom_mc(F: LocallyConstantCocycle, p: float, n: int, trials: int,
                   seed: int = 0, threads: int = 1, stream: int = 0) -> ExponentEstimate:
    """Mean of ``log ||F^n(x)^{-1}||^{-1} / n``.

    For 2x2 matrices ``||P^{-1}|| = ||P|| / |det P|``, so this is
    ``(log |det| - log ||P||) / n`` with the determinant summed in logs.
    """
    r = _direct(F, p, n, trials, seed, threads, stream)
    m, se = mean_stderr((r[:, 1] - r[:, 0]) / n)
    return ExponentEstimate(m, n, trials, se, "direct_mc", F.name,
                            {"p": p, **F.params}, seed)


def lyap_induced(F: LocallyConstantCocycle, c: Cylinder, p: float, trials: int,
                 j_max: int, seed: int = 0, cap: int | None = None,
                 threads: int = 1, sigma=None) -> ExponentEstimate:
    """Top exponent from the diagonal products over ``2 j_max`` returns.

    Each trial gives the signed rate ``log|P_11| / m_J`` where ``P`` is the
    product over the first ``m_J`` steps (``2 J`` returns); the estimate is
    the absolute value of the trial mean.  For the exchange cocycles the
    signed rate is a centred random walk divided by time, so its mean is an
    unbiased test of a vanishing exponent.
    """
    sig = _sigma_of(F, sigma)
    tables = compile_kernel(F, [c])

    def one(s):
        x = LazyPoint.conditioned(c, int(s), p)
        cs = cj_from_excursions(excursions(F, x, c, 2 * j_max, cap, tables), sig)
        return cs.c[-1] * math.log(sig) / cs.m[-1]

    vals = map_trials(one, trial_seeds(seed, trials), threads)
    m, se = mean_stderr(vals)
    return ExponentEstimate(abs(m), 2 * j_max, trials, se, "induced", F.name,
                            {"p": p, "cylinder": str(c), **F.params}, seed)
