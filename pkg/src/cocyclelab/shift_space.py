"""Bernoulli shift on two symbols: points, cylinders, metric, return times.

A point is an infinite 0/1 sequence indexed by the integers.  Sampled points
are lazy: coordinate ``i`` is a pure function of ``(seed, p, i)``, so any
finite window can be realized on demand and two views of the same source
always agree.  Shifting a point never copies coordinates; it only moves an
offset (``f(x)_i = x_{i+1}``).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import _kernels as K
from .errors import CapExceeded

DEFAULT_CAP = 10_000_000
_BLOCK = 4096


@dataclass(frozen=True)
class MetricParams:
    """Metric ``d(x, y) = rho**N(x, y)`` with ``0 < rho < 1``."""

    rho: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")


@dataclass(frozen=True)
class AtLeast:
    """Sentinel: the points agree on ``[-radius, radius]``, so ``N > radius``."""

    radius: int


@dataclass(frozen=True)
class Cylinder:
    """The set of points with ``x_{base+i} = word[i]`` for every ``i``."""

    base: int
    word: str

    def __post_init__(self):
        if not self.word:
            raise ValueError("cylinder word must be nonempty")
        if set(self.word) - {"0", "1"}:
            raise ValueError(f"cylinder word must be binary, got {self.word!r}")

    @property
    def end(self) -> int:
        """Last constrained position (inclusive)."""
        return self.base + len(self.word) - 1

    def __len__(self):
        return len(self.word)

    def items(self):
        """Yield ``(position, symbol)`` pairs."""
        for i, ch in enumerate(self.word):
            yield self.base + i, int(ch)

    def symbol(self, pos: int):
        """Constrained symbol at ``pos`` or ``None``."""
        j = pos - self.base
        if 0 <= j < len(self.word):
            return int(self.word[j])
        return None

    def image(self, n: int = 1) -> "Cylinder":
        """The cylinder ``f^n(self)``; coordinates move ``n`` places left."""
        return Cylinder(self.base - n, self.word)

    def measure(self, p: float = 0.5) -> float:
        ones = self.word.count("1")
        return p ** ones * (1.0 - p) ** (len(self.word) - ones)

    def compatible(self, other: "Cylinder") -> bool:
        """True when the two cylinders intersect."""
        lo = max(self.base, other.base)
        hi = min(self.end, other.end)
        if lo > hi:
            return True
        return (self.word[lo - self.base:hi - self.base + 1]
                == other.word[lo - other.base:hi - other.base + 1])

    def contains_cylinder(self, other: "Cylinder") -> bool:
        """True when ``other`` is a subset of ``self``."""
        if other.base > self.base or other.end < self.end:
            return False
        j = self.base - other.base
        return other.word[j:j + len(self.word)] == self.word

    def contains(self, x: "LazyPoint") -> bool:
        w = x.coordinates(self.base, self.end + 1)
        return bool(np.array_equal(w, _word_array(self.word)))

    def __str__(self):
        return f"[{self.base}; {self.word}]"


def _word_array(word: str) -> np.ndarray:
    return np.frombuffer(word.encode(), dtype=np.uint8) - ord("0")


def make_zk(k: int) -> Cylinder:
    """``Z_k = [0; 0^k 1]``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return Cylinder(0, "0" * k + "1")


def make_wk(k: int) -> Cylinder:
    """``W_k = [0; 0^{k+1} 1^k]``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return Cylinder(0, "0" * (k + 1) + "1" * k)


def shifted_disjointness(c: Cylinder, max_shift: int) -> bool:
    """True iff ``f^i(c)`` and ``f^j(c)`` are disjoint for ``0 <= i < j <= max_shift``."""
    for i in range(max_shift + 1):
        ci = c.image(i)
        for j in range(i + 1, max_shift + 1):
            if ci.compatible(c.image(j)):
                return False
    return True


def threshold(p: float) -> int:
    """Integer threshold such that a 53-bit uniform below it has probability ``p``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    return int(round(p * 2.0 ** 53))


@dataclass
class _Source:
    seed: int
    p: float
    pin_lo: int
    pins: np.ndarray
    key: int = field(init=False)
    thr: int = field(init=False)
    lo: int = field(init=False, default=0)
    buf: np.ndarray = field(init=False)
    lock: threading.Lock = field(init=False, default_factory=threading.Lock)

    def __post_init__(self):
        self.key = int(K.derive_key(np.uint64(self.seed % 2 ** 64)))
        self.thr = threshold(self.p)
        self.buf = np.empty(0, dtype=np.uint8)

    def block(self, start: int, stop: int) -> np.ndarray:
        with self.lock:
            hi = self.lo + self.buf.size
            if self.buf.size == 0:
                lo = start - start % _BLOCK
                n = (stop - lo + _BLOCK - 1) // _BLOCK * _BLOCK
                self.buf = self._make(lo, n)
                self.lo = lo
            elif start < self.lo or stop > hi:
                lo = min(self.lo, start - start % _BLOCK)
                new_hi = max(hi, stop + (-stop) % _BLOCK)
                parts = []
                if lo < self.lo:
                    parts.append(self._make(lo, self.lo - lo))
                parts.append(self.buf)
                if new_hi > hi:
                    parts.append(self._make(hi, new_hi - hi))
                self.buf = np.concatenate(parts)
                self.lo = lo
            out = self.buf[start - self.lo:stop - self.lo].copy()
        return out

    def _make(self, start, n):
        return K.coords_block(np.uint64(self.key), np.uint64(self.thr),
                              self.pin_lo, self.pins, start, n)


class LazyPoint:
    """A point of the full shift realized lazily from a counter-based stream.

    ``pins`` fixes finitely many coordinates (used to sample from a cylinder's
    conditional measure); every other coordinate is i.i.d. Bernoulli(p).
    """

    def __init__(self, seed: int = 0, p: float = 0.5,
                 pins: Mapping[int, int] | None = None, *, _source=None,
                 _offset: int = 0):
        if _source is None:
            pin_lo, arr = _pack_pins(seed, p, pins or {})
            _source = _Source(int(seed), float(p), pin_lo, arr)
        self._src = _source
        self._offset = int(_offset)

    @classmethod
    def conditioned(cls, c: Cylinder, seed: int = 0, p: float = 0.5) -> "LazyPoint":
        """A sample from the normalized restriction of the measure to ``c``."""
        return cls(seed, p, dict(c.items()))

    @classmethod
    def constant(cls, symbol: int) -> "LazyPoint":
        """The fixed point whose coordinates all equal ``symbol``."""
        if symbol not in (0, 1):
            raise ValueError("symbol must be 0 or 1")
        src = _Source(0, 0.5, 0, np.zeros(0, dtype=np.uint8))
        src.thr = 0 if symbol == 0 else 2 ** 53
        src.p = float(symbol)
        return cls(_source=src)

    @classmethod
    def from_word(cls, word: str, base: int = 0, seed: int = 0,
                  p: float = 0.5) -> "LazyPoint":
        """Point with ``word`` placed at ``base`` and random coordinates elsewhere."""
        return cls.conditioned(Cylinder(base, word), seed, p)

    @property
    def seed(self) -> int:
        return self._src.seed

    @property
    def p(self) -> float:
        return self._src.p

    @property
    def offset(self) -> int:
        return self._offset

    def shift(self, n: int = 1) -> "LazyPoint":
        """The point ``f^n(x)``."""
        return LazyPoint(_source=self._src, _offset=self._offset + n)

    def __getitem__(self, i: int) -> int:
        return int(self.coordinates(i, i + 1)[0])

    def coordinates(self, start: int, stop: int) -> np.ndarray:
        """Symbols ``x_start .. x_{stop-1}`` as a uint8 array."""
        if stop < start:
            raise ValueError("stop must be >= start")
        if stop == start:
            return np.empty(0, dtype=np.uint8)
        return self._src.block(start + self._offset, stop + self._offset)

    def kernel_args(self):
        """``(key, thr, pin_lo, pins, origin)`` for the walk kernels."""
        s = self._src
        return (np.uint64(s.key), np.uint64(s.thr), s.pin_lo, s.pins,
                self._offset)

    def __repr__(self):
        return f"LazyPoint(seed={self.seed}, p={self.p}, offset={self._offset})"


def _pack_pins(seed, p, pins: Mapping[int, int]):
    if not pins:
        return 0, np.zeros(0, dtype=np.uint8)
    lo = min(pins)
    hi = max(pins)
    # gaps keep the values the unpinned stream would have produced
    key = K.derive_key(np.uint64(int(seed) % 2 ** 64))
    arr = K.coords_block(np.uint64(key), np.uint64(threshold(p)), 0,
                         np.zeros(0, dtype=np.uint8), lo, hi - lo + 1)
    for i, v in pins.items():
        if v not in (0, 1):
            raise ValueError(f"pinned symbol must be 0 or 1, got {v}")
        arr[i - lo] = v
    return lo, arr


def first_disagreement(x: LazyPoint, y: LazyPoint, radius: int):
    """Smallest ``|i|`` with ``x_i != y_i``, searched within ``[-radius, radius]``.

    Returns ``AtLeast(radius)`` when the points agree on the whole window.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    a = x.coordinates(-radius, radius + 1)
    b = y.coordinates(-radius, radius + 1)
    diff = np.nonzero(a != b)[0]
    if diff.size == 0:
        return AtLeast(radius)
    return int(np.min(np.abs(diff - radius)))


def rho_distance(n, metric: MetricParams = MetricParams()) -> float:
    """``rho**N``; an ``AtLeast`` argument gives the upper bound ``rho**(radius+1)``."""
    if isinstance(n, AtLeast):
        return metric.rho ** (n.radius + 1)
    return metric.rho ** n


def cylinder_measure(c: Cylinder, p: float = 0.5) -> float:
    return c.measure(p)


def symbol_count(x: LazyPoint, m: int) -> int:
    """``S_m(x) = x_0 + ... + x_{m-1}``."""
    if m < 0:
        raise ValueError("m must be >= 0")
    return int(x.coordinates(0, m).sum(dtype=np.int64))


def cylinder_code(c: Cylinder, ulo: int, width: int):
    """Mask and value of ``c`` in a shift register whose bit ``j`` is position ``ulo + j``."""
    mask = 0
    val = 0
    for pos, sym in c.items():
        j = pos - ulo
        if not 0 <= j < width:
            raise ValueError(f"{c} does not fit the register window")
        mask |= 1 << j
        val |= sym << j
    return mask, val


def _register_window(cylinders: Iterable[Cylinder], extra=(0,)):
    positions = list(extra)
    for c in cylinders:
        positions += [c.base, c.end]
    return min(positions), max(positions) - min(positions) + 1


def return_times(x: LazyPoint, c: Cylinder, count: int, cap: int = DEFAULT_CAP):
    """Successive returns of ``x`` to ``c``.

    Returns a list of ``(tau_j, s_j)`` for ``j = 1..count`` where ``tau_j`` is
    the cumulative return time and ``s_j`` the number of ones seen at times
    ``tau_{j-1} .. tau_j - 1``.  Raises ``CapExceeded`` when ``cap`` steps are
    not enough.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    if not c.contains(x):
        raise ValueError(f"point does not lie in {c}")
    ulo, width = _register_window([c])
    if width > 64:
        return _return_times_py(x, c, count, cap)
    mask, val = cylinder_code(c, ulo, width)
    taus, svals, status = K.walk_returns(
        *x.kernel_args(), ulo, width, -ulo, np.uint64(mask), np.uint64(val),
        count, cap)
    if status != K.OK:
        raise CapExceeded(f"fewer than {count} returns to {c} within {cap} steps")
    cum = np.cumsum(taus)
    return [(int(t), int(s)) for t, s in zip(cum, svals)]


def _return_times_py(x, c, count, cap):
    word = _word_array(c.word)
    n = len(word)
    out = []
    last = 0
    t = 1
    chunk = 1 << 16
    while len(out) < count:
        if t > cap:
            raise CapExceeded(f"fewer than {count} returns to {c} within {cap} steps")
        stop = min(t + chunk, cap + 1)
        seq = x.coordinates(t + c.base, stop + c.end)
        win = np.lib.stride_tricks.sliding_window_view(seq, n)
        hits = np.nonzero(np.all(win == word, axis=1))[0] + t
        for h in hits:
            h = int(h)
            out.append((h, symbol_count(x.shift(last), h - last)))
            last = h
            if len(out) == count:
                break
        t = stop
    return out
