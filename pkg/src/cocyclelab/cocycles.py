"""Locally constant SL(2, R) cocycles over the shift and their standard families.

A cocycle is a finite list of branches ``(union of cylinders, matrix)`` plus
a default matrix for points in no branch.  Branch membership depends only on
the coordinates in ``window = (lo, hi)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from .errors import AmbiguousBranch
from .mat2 import (Mat2, ScaledProduct, diagonal, rotation, scaled_product,
                   shear_lower)
from .patterns import pattern_of, word_exists
from .shift_space import Cylinder, LazyPoint, cylinder_code, make_wk, make_zk

SL2_TOL = 1e-9
_TABLE_MAX_BITS = 22


@dataclass(frozen=True)
class CylinderUnion:
    cylinders: tuple

    def __post_init__(self):
        object.__setattr__(self, "cylinders", tuple(self.cylinders))

    def __iter__(self):
        return iter(self.cylinders)

    def __len__(self):
        return len(self.cylinders)

    def contains(self, x: LazyPoint) -> bool:
        return any(c.contains(x) for c in self.cylinders)


@dataclass(frozen=True)
class LocallyConstantCocycle:
    """``F(x) = M_b`` when ``x`` lies in branch ``b``, else ``default``.

    ``dps`` marks a high-precision build: matrix entries are mpmath numbers
    computed at that many decimal digits.
    """

    window: tuple
    branches: tuple
    default: Mat2 = field(default_factory=Mat2.identity)
    name: str = ""
    params: dict = field(default_factory=dict, compare=False, hash=False)
    dps: int | None = None

    def __post_init__(self):
        lo, hi = self.window
        if not lo <= 0 <= hi:
            raise ValueError(f"window {self.window} must contain 0")
        branches = tuple((CylinderUnion(u), m) for u, m in self.branches)
        object.__setattr__(self, "branches", branches)
        object.__setattr__(self, "window", (int(lo), int(hi)))
        for u, m in branches:
            for c in u:
                if c.base < lo or c.end > hi:
                    raise ValueError(f"{c} lies outside window {self.window}")
        for m in self.matrices():
            if not m.is_sl2(SL2_TOL):
                raise ValueError(f"matrix {m} is not in SL(2, R)")
        _check_disjoint(branches)

    @property
    def width(self) -> int:
        return self.window[1] - self.window[0] + 1

    def matrices(self):
        """Branch matrices followed by the default."""
        return [m for _, m in self.branches] + [self.default]

    def float_matrices(self) -> np.ndarray:
        return np.array([[float(v) for v in m.entries()] for m in self.matrices()])

    def evaluate(self, x: LazyPoint) -> Mat2:
        lo, hi = self.window
        return self.matrices()[self.branch_of_word(x.coordinates(lo, hi + 1))]

    def branch_of_word(self, word) -> int:
        """Branch index of a window word (the default has index ``len(branches)``)."""
        w = bytes(np.asarray(word, dtype=np.uint8))
        lo = self.window[0]
        hit = None
        for b, (u, _) in enumerate(self.branches):
            for c in u:
                j = c.base - lo
                if w[j:j + len(c)] == _cyl_bytes(c):
                    if hit is not None and hit != b:
                        raise AmbiguousBranch(f"word matches branches {hit} and {b}")
                    hit = b
                    break
        return len(self.branches) if hit is None else hit

    def classify(self, words: np.ndarray) -> np.ndarray:
        """Vectorized branch indices for an ``(n, width)`` array of window words."""
        words = np.asarray(words, dtype=np.uint8)
        lo = self.window[0]
        out = np.full(words.shape[0], len(self.branches), dtype=np.int64)
        hits = np.zeros(words.shape[0], dtype=np.int64)
        for b, (u, _) in enumerate(self.branches):
            inb = np.zeros(words.shape[0], dtype=bool)
            for c in u:
                j = c.base - lo
                inb |= np.all(words[:, j:j + len(c)] == _cyl_array(c), axis=1)
            out[inb] = b
            hits += inb
        if np.any(hits > 1):
            raise AmbiguousBranch("a window word matches two branches")
        return out

    def branch_sequence(self, x: LazyPoint, n: int) -> np.ndarray:
        """Branch indices at ``x, f(x), ..., f^{n-1}(x)``."""
        lo, hi = self.window
        seq = x.coordinates(lo, n - 1 + hi + 1)
        win = np.lib.stride_tricks.sliding_window_view(seq, self.width)
        return self.classify(win[:n])

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "window": list(self.window),
            "branches": [{"cylinders": [[c.base, c.word] for c in u],
                          "matrix": [float(v) for v in m.entries()]}
                         for u, m in self.branches],
            "default": [float(v) for v in self.default.entries()],
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LocallyConstantCocycle":
        branches = [(CylinderUnion(Cylinder(b, w) for b, w in br["cylinders"]),
                     Mat2(*br["matrix"])) for br in d["branches"]]
        return cls(tuple(d["window"]), tuple(branches), Mat2(*d["default"]),
                   d.get("name", ""), d.get("params", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "LocallyConstantCocycle":
        return cls.from_dict(json.loads(s))


def _cyl_bytes(c: Cylinder) -> bytes:
    return bytes(int(ch) for ch in c.word)


def _cyl_array(c: Cylinder) -> np.ndarray:
    return np.frombuffer(_cyl_bytes(c), dtype=np.uint8)


def _check_disjoint(branches):
    cyls = [(b, c) for b, (u, _) in enumerate(branches) for c in u]
    for i, (bi, ci) in enumerate(cyls):
        for bj, cj in cyls[i + 1:]:
            if bi != bj and ci.compatible(cj):
                raise AmbiguousBranch(f"{ci} (branch {bi}) meets {cj} (branch {bj})")


def default_reachable(F: LocallyConstantCocycle) -> bool:
    """True when some window word lies in no branch."""
    forbidden = [pattern_of(c) for u, _ in F.branches for c in u]
    return word_exists({}, forbidden) is not None


def iterate(F: LocallyConstantCocycle, x: LazyPoint, n: int) -> ScaledProduct:
    """``F^n(x)``; for ``n < 0`` the product of inverses ``F(f^n x)^{-1} ... F(f^{-1} x)^{-1}``."""
    mats = F.float_matrices()
    if n >= 0:
        seq = mats[F.branch_sequence(x, n)] if n else np.zeros((0, 4))
    else:
        ids = F.branch_sequence(x.shift(n), -n)[::-1]
        m = mats[ids]
        seq = np.stack([m[:, 3], -m[:, 1], -m[:, 2], m[:, 0]], axis=1)
        seq /= (m[:, 0] * m[:, 3] - m[:, 1] * m[:, 2])[:, None]
    return scaled_product(seq)


def iterate_exact(F: LocallyConstantCocycle, x: LazyPoint, n: int) -> Mat2:
    """``F^n(x)`` for ``n >= 0`` as a plain product in the cocycle's own arithmetic."""
    ms = F.matrices()
    ids = F.branch_sequence(x, n)
    P = Mat2.identity() if F.dps is None else _mp_identity()
    with _precision(F.dps):
        for b in ids:
            P = ms[b] @ P
    return P


def _mp_identity():
    import mpmath
    return Mat2(mpmath.mpf(1), mpmath.mpf(0), mpmath.mpf(0), mpmath.mpf(1))


class _precision:
    def __init__(self, dps):
        self.dps = dps
        self.ctx = None

    def __enter__(self):
        if self.dps is not None:
            import mpmath
            self.ctx = mpmath.workdps(self.dps)
            self.ctx.__enter__()

    def __exit__(self, *exc):
        if self.ctx is not None:
            self.ctx.__exit__(*exc)


@dataclass(frozen=True)
class ExchangeResult:
    """Angles (radians) of ``P e1`` from the vertical and ``P e2`` from the horizontal."""

    e1_to_vertical: float
    e2_to_horizontal: float

    @property
    def residual(self) -> float:
        return max(self.e1_to_vertical, self.e2_to_horizontal)


def exchange_check(F: LocallyConstantCocycle, x: LazyPoint, n: int) -> ExchangeResult:
    """How far ``F^n(x)`` is from swapping the horizontal and vertical lines.

    High-precision builds multiply in their own arithmetic; float builds use
    the overflow-safe product.
    """
    if F.dps is not None:
        import mpmath
        with mpmath.workdps(F.dps):
            P = iterate_exact(F, x, n)
            a1 = mpmath.atan2(abs(P.a), abs(P.c))
            a2 = mpmath.atan2(abs(P.d), abs(P.b))
            return ExchangeResult(float(a1), float(a2))
    v1, v2 = iterate(F, x, n).image_directions()
    return ExchangeResult(math.atan2(abs(v1[0]), abs(v1[1])),
                          math.atan2(abs(v2[1]), abs(v2[0])))


@dataclass(frozen=True)
class FiberBunching:
    sup_product: float
    threshold: float
    holds: bool

    @property
    def margin(self) -> float:
        return self.threshold - self.sup_product


def fiber_bunching_margin(F: LocallyConstantCocycle, alpha: float,
                          rho: float) -> FiberBunching:
    """Compare ``sup ||F|| ||F^{-1}||`` with ``rho^{-alpha}`` (strict inequality)."""
    from .mat2 import op_norm
    ms = [m.as_float() for _, m in F.branches]
    if default_reachable(F):
        ms.append(F.default.as_float())
    sup = max(op_norm(m) * op_norm(m.inv()) for m in ms)
    thr = rho ** (-alpha)
    return FiberBunching(sup, thr, sup < thr)


# ---------------------------------------------------------------- geometry


def cylinder_difference(d: Cylinder, excluded: Sequence[Cylinder]) -> list:
    """Disjoint cylinders whose union is ``d`` minus the union of ``excluded``.

    ``d`` is refined one adjacent position at a time, preferring positions
    where the excluded cylinders disagree, so the pieces stay contiguous.
    """
    live = [c for c in excluded if c.compatible(d)]
    if not live:
        return [d]
    if any(c.contains_cylinder(d) for c in live):
        return []
    left, right = d.base - 1, d.end + 1

    def score(pos):
        syms = [c.symbol(pos) for c in live]
        syms = [s for s in syms if s is not None]
        return (len(set(syms)) == 2, len(syms))

    pos = left if score(left) >= score(right) else right
    if score(pos) == (False, 0):
        # no adjacent constraint: grow towards the nearest excluded cylinder
        pos = left if any(c.base < d.base for c in live) else right
    out = []
    for sym in "01":
        if pos == left:
            child = Cylinder(left, sym + d.word)
        else:
            child = Cylinder(d.base, d.word + sym)
        out += cylinder_difference(child, live)
    return out


def _ctx(dps):
    """Number constructor and math functions for float or mpmath builds."""
    if dps is None:
        return float, math
    import mpmath
    return mpmath.mpf, mpmath


def _diag_sigma(sigma):
    return diagonal(sigma)


def build_a_sigma_eta(sigma: float, eta: float, dps: int | None = None):
    """``diag(1/eta, eta)`` on ``[0; 0]`` and ``diag(sigma, 1/sigma)`` on ``[0; 1]``."""
    if sigma <= 0 or eta <= 0:
        raise ValueError("sigma and eta must be positive")
    num, _ = _ctx(dps)
    with _precision(dps):
        s, e = num(sigma), num(eta)
        branches = (((Cylinder(0, "0"),), diagonal(1 / e)),
                    ((Cylinder(0, "1"),), diagonal(s)))
        one = Mat2.identity() if dps is None else _mp_identity()
    return LocallyConstantCocycle((0, 0), branches, one, f"A(sigma={sigma},eta={eta})",
                                  {"family": "a_sigma_eta", "sigma": sigma, "eta": eta},
                                  dps)


def build_a_sigma_1(sigma: float, dps: int | None = None):
    """The base cocycle: identity on ``[0; 0]``, ``diag(sigma, 1/sigma)`` on ``[0; 1]``."""
    F = build_a_sigma_eta(sigma, 1.0, dps)
    return _renamed(F, f"A(sigma={sigma})", {"family": "a_sigma_1", "sigma": sigma})


def _renamed(F, name, params):
    return LocallyConstantCocycle(F.window, F.branches, F.default, name, params, F.dps)


def rotation_cylinders(k: int, rotate_on_entry: bool = True):
    start = 0 if rotate_on_entry else 1
    z = make_zk(k)
    return [z.image(i) for i in range(start, k)]


def build_bk(sigma: float, k: int, rotate_on_entry: bool = True,
             dps: int | None = None) -> LocallyConstantCocycle:
    """The base cocycle with a rotation by ``pi/(2k)`` on ``f^i(Z_k)``.

    By default the rotation acts for ``i = 0..k-1`` so that ``k`` rotations
    compose to a quarter turn; ``rotate_on_entry=False`` uses ``i = 1..k-1``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    num, fn = _ctx(dps)
    with _precision(dps):
        s = num(sigma)
        theta = fn.pi / (2 * num(k))
        rot = rotation(theta)
        a = diagonal(s)
        one = Mat2.identity() if dps is None else _mp_identity()
    branches = []
    rc = rotation_cylinders(k, rotate_on_entry)
    if rc:
        branches.append((tuple(rc), rot))
    branches.append(((Cylinder(0, "1"),), a))
    return LocallyConstantCocycle(
        (-(k - 1), k), tuple(branches), one, f"B_{k}(sigma={sigma})",
        {"family": "bk", "sigma": sigma, "k": k, "theta": float(theta),
         "rotate_on_entry": rotate_on_entry}, dps)


@dataclass(frozen=True)
class LkParams:
    k: int
    beta: float
    sigma: float
    h: float
    u: float
    tan_theta: float
    theta: float
    gamma_tilde: float


def lk_params(sigma: float, k: int, beta: float, dps: int | None = None):
    """Parameters of ``L_k`` (floats, or mpmath numbers when ``dps`` is set)."""
    num, fn = _ctx(dps)
    with _precision(dps):
        s, kk, b = num(sigma), num(k), num(beta)
        h = kk ** (-b)
        u = 1 + h
        # log form: u^(2k) overflows floats long before k is large
        lg = fn.log(h) + 2 * kk * fn.log(u)
        tan_theta = fn.exp(-lg)
        theta = fn.atan(tan_theta)
        gamma = fn.exp(lg - 2 * kk * fn.log(s))
    return LkParams(k, beta, sigma, h, u, tan_theta, theta, gamma)


def build_lk(sigma: float, k: int, beta: float, shear_last: bool = True,
             dps: int | None = None) -> LocallyConstantCocycle:
    """The perturbation ``L_k`` of the base cocycle supported near ``W_k``.

    Branches: shear ``S(k^-beta)`` on ``W_k``; ``diag(1/u, u)`` on
    ``f^i(W_k)``, ``1 <= i <= k``; ``A R_theta`` on ``f^{k+1}(W_k)``; a shear
    combined with ``A`` on ``f^{2k}(W_k)``; ``A`` on the rest of ``[0; 1]``.
    With ``shear_last`` the shear acts after ``A``, which makes the
    ``2k+1``-step product an exact exchange.
    """
    if k < 2:
        raise ValueError("L_k needs k >= 2")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if sigma <= 1:
        raise ValueError("sigma must exceed 1")
    P = lk_params(sigma, k, beta, dps)
    num, _ = _ctx(dps)
    with _precision(dps):
        a = diagonal(num(sigma))
        m_w = shear_lower(P.h)
        m_d = diagonal(1 / P.u)
        m_r = a @ rotation(P.theta)
        m_g = shear_lower(P.gamma_tilde) @ a if shear_last else a @ shear_lower(P.gamma_tilde)
        one = Mat2.identity() if dps is None else _mp_identity()
    w = make_wk(k)
    r_cyl = w.image(k + 1)
    g_cyl = w.image(2 * k)
    rest = cylinder_difference(Cylinder(0, "1"), [r_cyl, g_cyl])
    branches = (
        ((w,), m_w),
        (tuple(w.image(i) for i in range(1, k + 1)), m_d),
        ((r_cyl,), m_r),
        ((g_cyl,), m_g),
        (tuple(rest), a),
    )
    params = {"family": "lk", "sigma": sigma, "k": k, "beta": beta,
              "shear_last": shear_last,
              **{f: float(getattr(P, f)) for f in ("h", "u", "tan_theta", "theta",
                                                   "gamma_tilde")}}
    return LocallyConstantCocycle((-2 * k, 2 * k), branches, one,
                                  f"L_{k}(sigma={sigma},beta={beta})", params, dps)


# ---------------------------------------------------------------- kernels


@dataclass
class KernelTables:
    """Arrays the walk kernels need to evaluate a cocycle from a shift register."""

    ulo: int
    width: int
    tshift: int
    tmask: np.uint64
    table: np.ndarray
    masks: np.ndarray
    vals: np.ndarray
    ids: np.ndarray
    default_id: int
    mats: np.ndarray
    isdiag: np.ndarray
    logabs: np.ndarray
    logdets: np.ndarray

    def branch_args(self):
        return (self.ulo, self.width, self.tshift, self.tmask, self.table,
                self.masks, self.vals, self.ids, self.default_id)


def compile_kernel(F: LocallyConstantCocycle, extra: Iterable[Cylinder] = ()):
    """Kernel tables for ``F`` with a register also covering ``extra``; ``None`` if too wide."""
    lo, hi = F.window
    for c in extra:
        lo, hi = min(lo, c.base), max(hi, c.end)
    width = hi - lo + 1
    if width > 64:
        return None
    mats = F.float_matrices()
    isdiag = (mats[:, 1] == 0.0) & (mats[:, 2] == 0.0)
    with np.errstate(divide="ignore"):
        logabs = np.log(np.abs(mats[:, [0, 3]]))
        logdets = np.log(np.abs(mats[:, 0] * mats[:, 3] - mats[:, 1] * mats[:, 2]))
    nb = len(F.branches)
    tshift = F.window[0] - lo
    fw = F.width
    if fw <= _TABLE_MAX_BITS:
        codes = np.arange(1 << fw, dtype=np.uint32)
        table = np.full(1 << fw, nb, dtype=np.int8)
        for b, (u, _) in enumerate(F.branches):
            for c in u:
                m, v = cylinder_code(c, F.window[0], fw)
                table[(codes & np.uint32(m)) == np.uint32(v)] = b
        masks = np.zeros(0, dtype=np.uint64)
        vals = np.zeros(0, dtype=np.uint64)
        ids = np.zeros(0, dtype=np.int64)
    else:
        table = np.zeros(0, dtype=np.int8)
        ms, vs, bs = [], [], []
        for b, (u, _) in enumerate(F.branches):
            for c in u:
                m, v = cylinder_code(c, lo, width)
                ms.append(m)
                vs.append(v)
                bs.append(b)
        masks = np.array(ms, dtype=np.uint64)
        vals = np.array(vs, dtype=np.uint64)
        ids = np.array(bs, dtype=np.int64)
    tmask = np.uint64((1 << fw) - 1) if fw < 64 else np.uint64(2 ** 64 - 1)
    return KernelTables(lo, width, tshift, tmask, table, masks, vals, ids, nb,
                        np.ascontiguousarray(mats), isdiag, logabs, logdets)


def kernel_log_norm(F: LocallyConstantCocycle, x: LazyPoint, n: int, tables=None):
    """``(log ||F^n(x)||, log |det F^n(x)|)`` via the compiled walk."""
    tables = tables or compile_kernel(F)
    if tables is None:
        P = iterate(F, x, n)
        return P.log_norm(), P.log_abs_det()
    return K.walk_log_norm(*x.kernel_args(), *tables.branch_args(), tables.mats,
                           tables.logdets, n)
