"""2x2 real matrices, the operator norm, and overflow-safe long products.

Entries may be Python floats or ``mpmath.mpf`` values; arithmetic is generic
so that high-precision builds of a cocycle reuse the same code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class Mat2:
    """The matrix ``[[a, b], [c, d]]``."""

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_array(cls, m) -> "Mat2":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    def as_array(self) -> np.ndarray:
        return np.array([[float(self.a), float(self.b)],
                         [float(self.c), float(self.d)]])

    def as_float(self) -> "Mat2":
        return Mat2(float(self.a), float(self.b), float(self.c), float(self.d))

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def __matmul__(self, o: "Mat2") -> "Mat2":
        return Mat2(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
                    self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)

    def __add__(self, o: "Mat2") -> "Mat2":
        return Mat2(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)

    def __sub__(self, o: "Mat2") -> "Mat2":
        return Mat2(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)

    def __neg__(self) -> "Mat2":
        return Mat2(-self.a, -self.b, -self.c, -self.d)

    def __mul__(self, s) -> "Mat2":
        return Mat2(self.a * s, self.b * s, self.c * s, self.d * s)

    __rmul__ = __mul__

    def apply(self, v):
        x, y = v
        return (self.a * x + self.b * y, self.c * x + self.d * y)

    def det(self):
        return self.a * self.d - self.b * self.c

    def transpose(self) -> "Mat2":
        return Mat2(self.a, self.c, self.b, self.d)

    def inv(self) -> "Mat2":
        """Inverse via the adjugate."""
        det = self.det()
        if det == 0:
            raise ZeroDivisionError("singular matrix")
        return Mat2(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def is_sl2(self, tol: float = 1e-9) -> bool:
        return abs(self.det() - 1) <= tol

    def max_abs(self):
        return max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))

    def __str__(self):
        return f"[[{self.a!r}, {self.b!r}], [{self.c!r}, {self.d!r}]]"


def op_norm(m: Mat2):
    """Largest singular value: half the sum of the two conformal-part moduli.

    ``(|a+d, b-c| + |a-d, b+c|) / 2`` has no cancellation, unlike the
    eigenvalue formula for ``M^T M``.
    """
    return (_hypot(m.a + m.d, m.b - m.c) + _hypot(m.a - m.d, m.b + m.c)) / 2


def _hypot(x, y):
    if isinstance(x, float) and isinstance(y, float):
        return math.hypot(x, y)
    return (x * x + y * y) ** 0.5


def rotation(theta) -> Mat2:
    """Counterclockwise rotation by ``theta``."""
    c = _cos(theta)
    s = _sin(theta)
    return Mat2(c, -s, s, c)


def shear_lower(s) -> Mat2:
    """``[[1, 0], [s, 1]]``."""
    return Mat2(1 + 0 * s, 0 * s, s, 1 + 0 * s)


def diagonal(u) -> Mat2:
    """``diag(u, 1/u)``."""
    if u == 0:
        raise ValueError("diagonal entry must be nonzero")
    return Mat2(u, 0 * u, 0 * u, 1 / u)


def _cos(x):
    if isinstance(x, float):
        return math.cos(x)
    import mpmath
    return mpmath.cos(x)


def _sin(x):
    if isinstance(x, float):
        return math.sin(x)
    import mpmath
    return mpmath.sin(x)


def _lsum(terms):
    """``(sign, log|v|)`` of ``v = sum(sign_i * exp(log_i))``."""
    terms = [(sg, lg) for sg, lg in terms if sg != 0.0 and lg != -math.inf]
    if not terms:
        return 0.0, -math.inf
    m = max(lg for _, lg in terms)
    v = math.fsum(sg * math.exp(lg - m) for sg, lg in terms)
    if v == 0.0:
        return 0.0, -math.inf
    return math.copysign(1.0, v), m + math.log(abs(v))


def _slog(x):
    return (math.copysign(1.0, x), math.log(abs(x))) if x != 0.0 else (0.0, -math.inf)


@dataclass(frozen=True)
class ScaledProduct:
    """A product ``P = Q @ R`` with ``Q`` a rotation and ``R`` upper triangular.

    The entries of ``R`` are kept in sign/log form: ``R11 = exp(la)``,
    ``R12 = st * exp(lt)``, ``R22 = s22 * exp(lb)``.  Appending a factor costs
    one small QR step, never overflows or underflows, and keeps
    ``log |det P| = la + lb`` to the rounding accuracy of the factors.
    """

    q: Mat2
    la: float
    lb: float
    s22: float
    lt: float = -math.inf
    st: float = 0.0

    @classmethod
    def identity(cls) -> "ScaledProduct":
        return cls(Mat2.identity(), 0.0, 0.0, 1.0)

    @classmethod
    def from_mat2(cls, m: Mat2) -> "ScaledProduct":
        m = m.as_float()
        r11 = math.hypot(m.a, m.c)
        if r11 == 0.0:
            raise ValueError("first column is zero")
        c, s = m.a / r11, m.c / r11
        st, lt = _slog(c * m.b + s * m.d)
        s22, lb = _slog(m.det() / r11)
        return cls(Mat2(c, -s, s, c), math.log(r11), lb, s22 or 1.0, lt, st)

    @classmethod
    def from_log_diag(cls, l0: float, l1: float, s0: float = 1.0,
                      s1: float = 1.0) -> "ScaledProduct":
        """``diag(s0 e^{l0}, s1 e^{l1})`` without forming the entries."""
        q = Mat2.identity() if s0 > 0 else Mat2(-1.0, 0.0, 0.0, -1.0)
        return cls(q, l0, l1, s0 * s1)

    def _scale(self) -> float:
        return max(self.la, self.lb, self.lt)

    def _tri(self) -> Mat2:
        sc = self._scale()
        return Mat2(math.exp(self.la - sc), self.st * math.exp(self.lt - sc),
                    0.0, self.s22 * math.exp(self.lb - sc))

    def __matmul__(self, right: "ScaledProduct") -> "ScaledProduct":
        c, s = right.q.a, right.q.c
        sc, lc = _slog(c)
        ss, ls = _slog(s)
        # columns of R_left @ Q_right, in sign/log form
        x1 = _lsum([(sc, self.la + lc), (self.st * ss, self.lt + ls)])
        y1 = (self.s22 * ss, self.lb + ls)
        x2 = _lsum([(-ss, self.la + ls), (self.st * sc, self.lt + lc)])
        y2 = (self.s22 * sc, self.lb + lc)
        g1 = max(x1[1], y1[1])
        u1 = x1[0] * math.exp(x1[1] - g1)
        v1 = y1[0] * math.exp(y1[1] - g1)
        h = math.hypot(u1, v1)
        qc, qs = u1 / h, v1 / h
        log_r11 = g1 + math.log(h)
        r12 = _lsum([(qc * x2[0], x2[1]), (qs * y2[0], y2[1])])
        log_r22 = self.la + self.lb - log_r11
        lt = _lsum([(right.st, log_r11 + right.lt),
                    (r12[0] * right.s22, r12[1] + right.lb)])
        q = _renorm(self.q @ Mat2(qc, -qs, qs, qc))
        return ScaledProduct(q, log_r11 + right.la, log_r22 + right.lb,
                             self.s22 * right.s22, lt[1], lt[0])

    @property
    def unit(self) -> Mat2:
        """``P`` divided by a power of two so that its norm lies in ``[1, 2)``."""
        u0 = self.q @ self._tri()
        e = math.frexp(op_norm(u0))[1] - 1
        return u0 * (2.0 ** -e)

    @property
    def log_scale(self) -> float:
        """``log`` of the factor with ``P = exp(log_scale) * unit``."""
        e = math.frexp(op_norm(self._tri()))[1] - 1
        return self._scale() + e * _LN2

    def log_norm(self) -> float:
        return self._scale() + math.log(op_norm(self._tri()))

    def log_abs_det(self) -> float:
        return self.la + self.lb

    def det(self) -> float:
        return self.s22 * math.exp(self.la + self.lb)

    def to_mat2(self) -> Mat2:
        return self.unit * math.exp(self.log_scale)

    def image_directions(self):
        """Unit vectors along ``P e1`` and ``P e2`` (computed without overflow)."""
        q = self.q
        t = self._tri()
        v2 = q.apply((t.b, t.d))
        n2 = math.hypot(*v2)
        return (q.a, q.c), (v2[0] / n2, v2[1] / n2)


def _renorm(q: Mat2) -> Mat2:
    n = math.hypot(q.a, q.c)
    c, s = q.a / n, q.c / n
    return Mat2(c, -s, s, c)


def _qr_step(state, m0, m1, m2, m3):
    # state = (c, s, la, lb, s22, lt, st); returns the state of M @ P
    c, s, la, lb, s22, lt, st = state
    n0 = m0 * c + m1 * s
    n2 = m2 * c + m3 * s
    n1 = -m0 * s + m1 * c
    n3 = -m2 * s + m3 * c
    r11 = math.hypot(n0, n2)
    qc, qs = n0 / r11, n2 / r11
    r12 = qc * n1 + qs * n3
    r22 = (m0 * m3 - m1 * m2) / r11
    st, lt = _lsum([(st, math.log(r11) + lt), _slog_shift(r12, s22, lb)])
    return (qc, qs, la + math.log(r11), lb + math.log(abs(r22)),
            s22 * math.copysign(1.0, r22), lt, st)


def _slog_shift(x, sign, shift):
    sg, lg = _slog(x)
    return sg * sign, lg + shift


def scaled_mul(acc: ScaledProduct, m: Mat2) -> ScaledProduct:
    """``m @ acc``: append the next factor of a cocycle product."""
    m = m.as_float()
    st = _qr_step((acc.q.a, acc.q.c, acc.la, acc.lb, acc.s22, acc.lt, acc.st),
                  m.a, m.b, m.c, m.d)
    return ScaledProduct(Mat2(st[0], -st[1], st[1], st[0]), *st[2:])


def scaled_product(mats) -> ScaledProduct:
    """Product ``mats[n-1] @ ... @ mats[0]`` of an ``(n, 4)`` float array."""
    from ._kernels import qr_accumulate
    mats = np.ascontiguousarray(mats, dtype=np.float64).reshape(-1, 4)
    st = qr_accumulate(mats)
    return ScaledProduct(Mat2(st[0], -st[1], st[1], st[0]), *st[2:])


@dataclass(frozen=True)
class RowScaledProduct:
    """``P = diag(e^{l0}, e^{l1}) @ [[r00, r01], [r10, r11]]`` with unit rows.

    Exact under left multiplication by diagonal matrices, which makes it the
    right representation for products that stay (anti)diagonal up to the
    finitely many non-diagonal factors of an excursion.
    """

    l0: float
    l1: float
    r00: float
    r01: float
    r10: float
    r11: float

    @classmethod
    def identity(cls) -> "RowScaledProduct":
        return cls(0.0, 0.0, 1.0, 0.0, 0.0, 1.0)

    def left_mul(self, m: Mat2) -> "RowScaledProduct":
        m = m.as_float()
        n0, a0, a1 = _fold(m.a, m.b, self)
        n1, b0, b1 = _fold(m.c, m.d, self)
        return RowScaledProduct(n0, n1, a0, a1, b0, b1)

    def to_mat2(self) -> Mat2:
        e0 = math.exp(self.l0)
        e1 = math.exp(self.l1)
        return Mat2(e0 * self.r00, e0 * self.r01, e1 * self.r10, e1 * self.r11)

    def log_abs(self, i: int, j: int) -> float:
        """``log |P_ij|`` (``-inf`` for a zero entry)."""
        r = (self.r00, self.r01, self.r10, self.r11)[2 * i + j]
        l = self.l0 if i == 0 else self.l1
        return l + math.log(abs(r)) if r != 0.0 else -math.inf

    def antidiagonal_residual(self) -> float:
        """Row-relative size of the diagonal entries."""
        return max(_ratio(self.r00, self.r01), _ratio(self.r11, self.r10))

    def diagonal_residual(self) -> float:
        """Row-relative size of the off-diagonal entries."""
        return max(_ratio(self.r01, self.r00), _ratio(self.r10, self.r11))


def _ratio(num, den):
    if num == 0.0:
        return 0.0
    if den == 0.0:
        return math.inf
    return abs(num) / abs(den)


def _fold(m0, m1, p: RowScaledProduct):
    if m0 == 0.0:
        mx = p.l1
    elif m1 == 0.0:
        mx = p.l0
    else:
        mx = max(p.l0, p.l1)
    w0 = m0 * math.exp(p.l0 - mx) if m0 != 0.0 else 0.0
    w1 = m1 * math.exp(p.l1 - mx) if m1 != 0.0 else 0.0
    v0 = w0 * p.r00 + w1 * p.r10
    v1 = w0 * p.r01 + w1 * p.r11
    nv = max(abs(v0), abs(v1))
    return mx + math.log(nv), v0 / nv, v1 / nv
