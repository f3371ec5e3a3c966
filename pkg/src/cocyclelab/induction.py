"""First-return (induced) cocycles over a cylinder and their statistics.

Excursion products come from the compiled walk in row-scaled form.  For the
exchange cocycles each excursion product is antidiagonal, so products over
many returns are composed exactly as monomial matrices in log form; plain
floating-point accumulation would lose the diagonal structure once the
entries spread over hundreds of orders of magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .cocycles import LocallyConstantCocycle, compile_kernel
from .errors import CapExceeded, NonDiagonal
from .mat2 import Mat2, RowScaledProduct, ScaledProduct
from .montecarlo import map_trials, mean_stderr, trial_seeds
from .shift_space import (DEFAULT_CAP, Cylinder, LazyPoint, cylinder_code,
                          return_times)

MONOMIAL_TOL = 1e-6
FORMULA_TOL = 1e-9


def default_cap(c: Cylinder | None, count: int, p: float = 0.5) -> int:
    """Step cap for ``count`` returns: ``10**7`` plus 50 mean excursions per return."""
    if c is None:
        return DEFAULT_CAP + count
    return DEFAULT_CAP + int(math.ceil(50 * count / c.measure(p)))


@dataclass(frozen=True)
class ReturnRecord:
    """Statistics of the ``j``-th excursion from the cylinder."""

    j: int
    tau_j: int
    tau: int
    s_exc: int
    scaled: RowScaledProduct

    @property
    def induced(self) -> Mat2:
        """The excursion product (may overflow for very long excursions)."""
        return self.scaled.to_mat2()

    def det(self) -> float:
        s = self.scaled
        return math.exp(s.l0 + s.l1) * (s.r00 * s.r11 - s.r01 * s.r10)


@dataclass
class Excursions:
    """Column arrays for a run of excursions (the kernel's native output)."""

    taus: np.ndarray
    svals: np.ndarray
    logs: np.ndarray
    rows: np.ndarray

    def records(self) -> list:
        cum = np.cumsum(self.taus)
        return [ReturnRecord(j + 1, int(cum[j]), int(self.taus[j]), int(self.svals[j]),
                             RowScaledProduct(float(self.logs[j, 0]), float(self.logs[j, 1]),
                                              *map(float, self.rows[j])))
                for j in range(self.taus.size)]


def excursions(F: LocallyConstantCocycle, x: LazyPoint, c: Cylinder, count: int,
               cap: int | None = None, tables=None) -> Excursions:
    """Excursion products of ``F`` along the first ``count`` returns of ``x`` to ``c``."""
    if not c.contains(x):
        raise ValueError(f"point does not lie in {c}")
    cap = default_cap(c, count, x.p) if cap is None else cap
    tables = tables or compile_kernel(F, [c])
    if tables is None:
        return _excursions_py(F, x, c, count, cap)
    mask, val = cylinder_code(c, tables.ulo, tables.width)
    taus, svals, logs, rows, status = K.walk_excursions(
        *x.kernel_args(), *tables.branch_args(), tables.mats, tables.isdiag,
        tables.logabs, -tables.ulo, np.uint64(mask), np.uint64(val), count, cap)
    if status != K.OK:
        raise CapExceeded(f"fewer than {count} returns to {c} within {cap} steps")
    return Excursions(taus, svals, logs, rows)


def _excursions_py(F, x, c, count, cap):
    rt = return_times(x, c, count, cap)
    total = rt[-1][0] if rt else 0
    mats = F.matrices()
    ids = F.branch_sequence(x, total)
    taus, svals, logs, rows = [], [], [], []
    start = 0
    for tj, s in rt:
        acc = RowScaledProduct.identity()
        for b in ids[start:tj]:
            acc = acc.left_mul(mats[b])
        taus.append(tj - start)
        svals.append(s)
        logs.append((acc.l0, acc.l1))
        rows.append((acc.r00, acc.r01, acc.r10, acc.r11))
        start = tj
    return Excursions(np.array(taus, dtype=np.int64), np.array(svals, dtype=np.int64),
                      np.array(logs).reshape(-1, 2), np.array(rows).reshape(-1, 4))


def induced_products(F: LocallyConstantCocycle, x: LazyPoint, c: Cylinder, count: int,
                     cap: int | None = None) -> list:
    """One ``ReturnRecord`` per excursion of ``x`` from ``c``."""
    return excursions(F, x, c, count, cap).records()


def snap_monomial(ex: Excursions, tol: float = MONOMIAL_TOL):
    """Each excursion product as a monomial matrix ``(signs, logs, anti)``.

    Raises ``NonDiagonal`` when a product is neither diagonal nor
    antidiagonal within the row-relative tolerance.
    """
    r = ex.rows
    with np.errstate(divide="ignore", invalid="ignore"):
        anti_res = np.maximum(np.abs(r[:, 0]) / np.abs(r[:, 1]),
                              np.abs(r[:, 3]) / np.abs(r[:, 2]))
        diag_res = np.maximum(np.abs(r[:, 1]) / np.abs(r[:, 0]),
                              np.abs(r[:, 2]) / np.abs(r[:, 3]))
    anti_res = np.nan_to_num(anti_res, nan=np.inf)
    diag_res = np.nan_to_num(diag_res, nan=np.inf)
    anti = anti_res <= tol
    diag = diag_res <= tol
    bad = ~(anti | diag)
    if np.any(bad):
        e = int(np.argmax(bad))
        raise NonDiagonal(f"excursion {e + 1} product is not monomial "
                          f"(residuals {anti_res[e]:.3g}, {diag_res[e]:.3g})")
    e0 = np.where(anti, r[:, 1], r[:, 0])
    e1 = np.where(anti, r[:, 2], r[:, 3])
    signs = np.stack([np.sign(e0), np.sign(e1)], axis=1)
    logs = ex.logs + np.log(np.abs(np.stack([e0, e1], axis=1)))
    return signs, logs, anti


@dataclass(frozen=True)
class CjSeries:
    """``c_j`` from the even-return products and from the symbol-count sums."""

    c: np.ndarray
    c_formula: np.ndarray
    m: np.ndarray
    sigma: float
    exchange: bool

    @property
    def ratio(self) -> np.ndarray:
        return np.abs(self.c) / self.m


def _sigma_of(F: LocallyConstantCocycle, sigma):
    if sigma is not None:
        return float(sigma)
    if "sigma" not in F.params:
        raise ValueError("sigma not recorded on the cocycle; pass it explicitly")
    return float(F.params["sigma"])


def cj_from_excursions(ex: Excursions, sigma: float) -> CjSeries:
    signs, logs, anti = snap_monomial(ex)
    _, chain_l, chain_a = K.monomial_chain(signs, logs, anti)
    n = ex.taus.size // 2
    if n == 0:
        empty = np.zeros(0)
        return CjSeries(empty, empty, np.zeros(0, dtype=np.int64), sigma, bool(np.all(anti)))
    even = np.arange(1, 2 * n, 2)
    if np.any(chain_a[even]):
        j = int(np.argmax(chain_a[even])) + 1
        raise NonDiagonal(f"product over {2 * j} returns is antidiagonal")
    c = chain_l[even, 0] / math.log(sigma)
    s = ex.svals[:2 * n]
    c_formula = np.cumsum(s[1::2] - s[0::2]).astype(np.float64)
    m = np.cumsum(ex.taus)[even]
    exchange = bool(np.all(anti))
    if exchange:
        # c_j cancels; rounding scales with the total log mass summed so far
        mass = np.cumsum(np.abs(logs).sum(axis=1))[even] / math.log(sigma)
        err = np.abs(c - c_formula)
        if np.any(err > FORMULA_TOL * np.maximum(1.0, mass)):
            j = int(np.argmax(err)) + 1
            raise NonDiagonal(f"c_{j} from the matrix ({c[j - 1]!r}) differs from "
                              f"the symbol-count sum ({c_formula[j - 1]!r})")
    return CjSeries(c, c_formula, m, sigma, exchange)


def even_return_diagonal(F: LocallyConstantCocycle, x: LazyPoint, c: Cylinder,
                         j_max: int, cap: int | None = None, sigma=None) -> CjSeries:
    """``c_j = log|P_11| / log(sigma)`` for the products over ``2j`` returns, ``j <= j_max``.

    When every excursion product is antidiagonal (the exchange structure) the
    values are also checked against the alternating symbol-count sums.
    """
    return cj_from_excursions(excursions(F, x, c, 2 * j_max, cap), _sigma_of(F, sigma))


@dataclass(frozen=True)
class KacEstimate:
    mean_tau: float
    mean_tau_stderr: float
    slope: float
    slope_stderr: float
    expected_tau: float
    expected_slope: float
    trials: int


def kac_birkhoff(c: Cylinder | None, p: float, trials: int, j_max: int, seed: int = 0,
                 cap: int | None = None, threads: int = 1) -> KacEstimate:
    """Mean first return time and the slope ``m_j / j`` at ``j = j_max``.

    ``c=None`` stands for the whole space, where every return time is 1.
    """
    if c is None:
        return KacEstimate(1.0, 0.0, 2.0, 0.0, 1.0, 2.0, trials)
    cap = default_cap(c, 2 * j_max, p) if cap is None else cap
    lo = min(0, c.base)
    width = max(0, c.end) - lo + 1
    mask, val = cylinder_code(c, lo, width)

    def one(s):
        x = LazyPoint.conditioned(c, int(s), p)
        taus, _, status = K.walk_returns(*x.kernel_args(), lo, width, -lo,
                                         np.uint64(mask), np.uint64(val), 2 * j_max, cap)
        if status != K.OK:
            raise CapExceeded(f"fewer than {2 * j_max} returns to {c} within {cap} steps")
        return taus[0], taus.sum() / j_max

    out = np.array(map_trials(one, trial_seeds(seed, trials), threads), dtype=np.float64)
    mt, mse = mean_stderr(out[:, 0])
    sl, sse = mean_stderr(out[:, 1])
    mu = c.measure(p)
    return KacEstimate(mt, mse, sl, sse, 1.0 / mu, 2.0 / mu, trials)


@dataclass(frozen=True)
class CjDecay:
    """Batch means of ``|c_j| / m_j`` at ``j = j_max`` and along a grid of ``j``."""

    value: float
    stderr: float
    grid: tuple
    grid_means: tuple
    grid_stderr: tuple
    trials: int


def cj_decay(F: LocallyConstantCocycle, c: Cylinder, p: float, trials: int, j_max: int,
             seed: int = 0, grid=None, cap: int | None = None, threads: int = 1,
             sigma=None) -> CjDecay:
    """Monte Carlo estimate of ``|c_J| / m_J`` with one trajectory per trial."""
    sig = _sigma_of(F, sigma)
    if grid is None:
        grid = [j for j in (10 ** e for e in range(1, 12)) if j < j_max] + [j_max]
    grid = tuple(int(j) for j in grid if 1 <= j <= j_max)
    tables = compile_kernel(F, [c])

    def one(s):
        x = LazyPoint.conditioned(c, int(s), p)
        cs = cj_from_excursions(excursions(F, x, c, 2 * j_max, cap, tables), sig)
        r = cs.ratio
        return [r[j - 1] for j in grid]

    vals = np.array(map_trials(one, trial_seeds(seed, trials), threads))
    stats = [mean_stderr(vals[:, i]) for i in range(len(grid))]
    return CjDecay(stats[-1][0], stats[-1][1], grid, tuple(s[0] for s in stats),
                   tuple(s[1] for s in stats), trials)


def induced_log_norm(ex: Excursions) -> float:
    """``log ||P||`` of the product over all excursions in ``ex``."""
    try:
        signs, logs, anti = snap_monomial(ex)
    except NonDiagonal:
        acc = ScaledProduct.identity()
        for j in range(ex.taus.size):
            r = ex.rows[j]
            unit = ScaledProduct.from_mat2(Mat2(*map(float, r)))
            acc = (ScaledProduct.from_log_diag(float(ex.logs[j, 0]),
                                               float(ex.logs[j, 1])) @ unit) @ acc
        return acc.log_norm()
    _, chain_l, _ = K.monomial_chain(signs, logs, anti)
    return float(max(chain_l[-1, 0], chain_l[-1, 1]))


@dataclass(frozen=True)
class AbramovResult:
    induced_times_mu: float
    induced_stderr: float
    ambient: float
    ambient_stderr: float

    @property
    def discrepancy(self) -> float:
        return self.induced_times_mu - self.ambient

    @property
    def combined_stderr(self) -> float:
        return math.hypot(self.induced_stderr, self.ambient_stderr)


def abramov_check(F: LocallyConstantCocycle, c: Cylinder, p: float, trials: int, n: int,
                  seed: int = 0, cap: int | None = None, threads: int = 1) -> AbramovResult:
    """Per-return exponent of the induced cocycle times ``mu(c)`` vs the ambient exponent.

    The induced side uses ``n`` returns per trial; the ambient side uses
    independent trajectories of ``round(n / mu(c))`` steps.
    """
    from .exponents import lyap_top_mc
    mu = c.measure(p)
    tables = compile_kernel(F, [c])

    def one(s):
        x = LazyPoint.conditioned(c, int(s), p)
        return induced_log_norm(excursions(F, x, c, n, cap, tables)) / n

    ind = [v * mu for v in map_trials(one, trial_seeds(seed, trials), threads)]
    im, ise = mean_stderr(ind)
    amb = lyap_top_mc(F, p, max(1, round(n / mu)), trials, seed, threads=threads,
                      stream=1)
    return AbramovResult(im, ise, amb.value, amb.stderr)
