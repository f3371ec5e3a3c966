"""Numba kernels: counter-based coordinates and trajectory walks.

Coordinates of a sampled point are a pure function of ``(key, threshold, index)``
so any index can be realized in O(1) and in any order.  Walk kernels keep the
symbols of a finite window around the current position in a 64-bit shift
register (bit ``j`` is the symbol at relative position ``ulo + j``).
"""

import math

import numpy as np
from numba import njit, uint64, int64

GOLDEN = uint64(0x9E3779B97F4A7C15)
_M1 = uint64(0xBF58476D1CE4E5B9)
_M2 = uint64(0x94D049BB133111EB)

# walk status codes
OK = 0
CAP_EXCEEDED = 1


@njit(inline="always", cache=True)
def mix64(z):
    z = (z ^ (z >> uint64(30))) * _M1
    z = (z ^ (z >> uint64(27))) * _M2
    return z ^ (z >> uint64(31))


@njit(cache=True)
def derive_key(seed):
    return mix64(uint64(seed) ^ uint64(0x2545F4914F6CDD1D))


@njit(inline="always", cache=True)
def raw_coord(key, thr, i):
    h = mix64(uint64(key) + uint64(i) * GOLDEN)
    return int64((h >> uint64(11)) < uint64(thr))


@njit(inline="always", cache=True)
def coord(key, thr, pin_lo, pins, i):
    j = i - pin_lo
    if j >= 0 and j < pins.size:
        return int64(pins[j])
    return raw_coord(key, thr, i)


@njit(cache=True, nogil=True)
def coords_block(key, thr, pin_lo, pins, start, n):
    out = np.empty(n, dtype=np.uint8)
    for t in range(n):
        out[t] = coord(key, thr, pin_lo, pins, start + t)
    return out


@njit(inline="always", cache=True)
def _init_reg(key, thr, pin_lo, pins, cur, ulo, width):
    reg = uint64(0)
    for j in range(width):
        if coord(key, thr, pin_lo, pins, cur + ulo + j):
            reg |= uint64(1) << uint64(j)
    return reg


@njit(inline="always", cache=True)
def _advance(reg, key, thr, pin_lo, pins, cur, ulo, width):
    # register for position cur + 1
    bit = uint64(coord(key, thr, pin_lo, pins, cur + ulo + width))
    return (reg >> uint64(1)) | (bit << uint64(width - 1))


@njit(inline="always", cache=True)
def _branch(reg, tshift, tmask, table, masks, vals, ids, default_id):
    if table.size > 0:
        return int64(table[(reg >> uint64(tshift)) & tmask])
    for q in range(masks.size):
        if (reg & masks[q]) == vals[q]:
            return int64(ids[q])
    return int64(default_id)


@njit(cache=True, nogil=True)
def walk_log_norm(key, thr, pin_lo, pins, origin, ulo, width, tshift, tmask, table,
                  masks, vals, ids, default_id, mats, logdets, n):
    """Return (log ||F^n(x)||, log |det F^n(x)|) for the point at ``origin``."""
    reg = _init_reg(key, thr, pin_lo, pins, origin, ulo, width)
    # log-form QR state: plain rescaling underflows the small diagonal entry
    c, sn, la, lb, s22, lt, st = 1.0, 0.0, 0.0, 0.0, 1.0, -np.inf, 0.0
    log_det = 0.0
    for t in range(n):
        br = _branch(reg, tshift, tmask, table, masks, vals, ids, default_id)
        c, sn, la, lb, s22, lt, st = _qr_update(c, sn, la, lb, s22, lt, st, mats[br, 0],
                                                mats[br, 1], mats[br, 2], mats[br, 3])
        log_det += logdets[br]
        reg = _advance(reg, key, thr, pin_lo, pins, origin + t, ulo, width)
    return _tri_log_norm(la, lb, s22, lt, st), log_det


@njit(inline="always", cache=True)
def _tri_log_norm(la, lb, s22, lt, st):
    """``log ||R||`` for ``R = [[e^la, st e^lt], [0, s22 e^lb]]``."""
    m = max(la, lb, lt)
    x = math.exp(la - m)
    y = st * math.exp(lt - m) if lt != -np.inf else 0.0
    z = s22 * math.exp(lb - m)
    return m + math.log(0.5 * (math.hypot(x + z, y) + math.hypot(x - z, y)))


@njit(inline="always", cache=True)
def _fold_row(m0, m1, l0, l1, r00, r01, r10, r11):
    # row = m0 * e^{l0} row0 + m1 * e^{l1} row1, returned as (log scale, unit row)
    if m0 == 0.0:
        mx = l1
    elif m1 == 0.0:
        mx = l0
    else:
        mx = max(l0, l1)
    w0 = m0 * math.exp(l0 - mx) if m0 != 0.0 else 0.0
    w1 = m1 * math.exp(l1 - mx) if m1 != 0.0 else 0.0
    v0 = w0 * r00 + w1 * r10
    v1 = w0 * r01 + w1 * r11
    nv = max(abs(v0), abs(v1))
    return mx + math.log(nv), v0 / nv, v1 / nv


@njit(cache=True, nogil=True)
def walk_excursions(key, thr, pin_lo, pins, origin, ulo, width, tshift, tmask, table,
                    masks, vals, ids, default_id, mats, isdiag, logabs,
                    zero_bit, cmask, cval, count, cap):
    """Products of the cocycle along successive excursions from a cylinder.

    The product over each excursion is held row-scaled: row ``i`` equals
    ``exp(logs[e, i]) * rows[e, 2i:2i+2]`` with unit max-abs entry, which is
    exact under left multiplication by diagonal factors.
    """
    taus = np.zeros(count, dtype=np.int64)
    svals = np.zeros(count, dtype=np.int64)
    logs = np.zeros((count, 2), dtype=np.float64)
    rows = np.zeros((count, 4), dtype=np.float64)
    reg = _init_reg(key, thr, pin_lo, pins, origin, ulo, width)
    zb = uint64(zero_bit)
    t = int64(0)
    start = int64(0)
    e = 0
    s = int64(0)
    l0 = 0.0
    l1 = 0.0
    r00 = 1.0
    r01 = 0.0
    r10 = 0.0
    r11 = 1.0
    while e < count:
        if t >= cap:
            return taus[:e], svals[:e], logs[:e], rows[:e], CAP_EXCEEDED
        br = _branch(reg, tshift, tmask, table, masks, vals, ids, default_id)
        s += int64((reg >> zb) & uint64(1))
        if isdiag[br]:
            l0 += logabs[br, 0]
            l1 += logabs[br, 1]
            if mats[br, 0] < 0.0:
                r00 = -r00
                r01 = -r01
            if mats[br, 3] < 0.0:
                r10 = -r10
                r11 = -r11
        else:
            n0, a0, a1 = _fold_row(mats[br, 0], mats[br, 1], l0, l1,
                                   r00, r01, r10, r11)
            n1, b0, b1 = _fold_row(mats[br, 2], mats[br, 3], l0, l1,
                                   r00, r01, r10, r11)
            l0, r00, r01 = n0, a0, a1
            l1, r10, r11 = n1, b0, b1
        reg = _advance(reg, key, thr, pin_lo, pins, origin + t, ulo, width)
        t += 1
        if (reg & cmask) == cval:
            taus[e] = t - start
            svals[e] = s
            logs[e, 0] = l0
            logs[e, 1] = l1
            rows[e, 0] = r00
            rows[e, 1] = r01
            rows[e, 2] = r10
            rows[e, 3] = r11
            e += 1
            start = t
            s = 0
            l0 = 0.0
            l1 = 0.0
            r00 = 1.0
            r01 = 0.0
            r10 = 0.0
            r11 = 1.0
    return taus, svals, logs, rows, OK


@njit(cache=True, nogil=True)
def walk_returns(key, thr, pin_lo, pins, origin, ulo, width, zero_bit, cmask, cval,
                 count, cap):
    """Return times and symbol counts of successive excursions (no matrices)."""
    taus = np.zeros(count, dtype=np.int64)
    svals = np.zeros(count, dtype=np.int64)
    reg = _init_reg(key, thr, pin_lo, pins, origin, ulo, width)
    zb = uint64(zero_bit)
    t = int64(0)
    start = int64(0)
    s = int64(0)
    e = 0
    while e < count:
        if t >= cap:
            return taus[:e], svals[:e], CAP_EXCEEDED
        s += int64((reg >> zb) & uint64(1))
        reg = _advance(reg, key, thr, pin_lo, pins, origin + t, ulo, width)
        t += 1
        if (reg & cmask) == cval:
            taus[e] = t - start
            svals[e] = s
            e += 1
            start = t
            s = 0
    return taus, svals, OK


@njit(inline="always", cache=True)
def _nsum(total, comp, x):
    # Neumaier compensated addition
    t = total + x
    if abs(total) >= abs(x):
        comp += (total - t) + x
    else:
        comp += (x - t) + total
    return t, comp


@njit(cache=True)
def monomial_chain(signs, logs, anti):
    """Compose monomial 2x2 matrices given in log form, in order.

    Factor ``e`` is ``[[s0 e^{l0}, 0], [0, s1 e^{l1}]]`` when ``anti[e]`` is
    false and ``[[0, s0 e^{l0}], [s1 e^{l1}, 0]]`` otherwise (row ``i`` holds
    ``s_i e^{l_i}``).  Returns the running products in the same encoding.
    Log entries are accumulated with compensated summation.
    """
    n = anti.size
    out_s = np.empty((n, 2), dtype=np.float64)
    out_l = np.empty((n, 2), dtype=np.float64)
    out_a = np.empty(n, dtype=np.bool_)
    cs0 = 1.0
    cs1 = 1.0
    cl0 = 0.0
    cl1 = 0.0
    cc0 = 0.0
    cc1 = 0.0
    ca = False
    for e in range(n):
        # new = factor @ current; row i of factor picks row perm(i) of current
        if anti[e]:
            cs0, cs1 = signs[e, 0] * cs1, signs[e, 1] * cs0
            cl0, cl1 = cl1, cl0
            cc0, cc1 = cc1, cc0
            ca = not ca
        else:
            cs0 = signs[e, 0] * cs0
            cs1 = signs[e, 1] * cs1
        cl0, cc0 = _nsum(cl0, cc0, logs[e, 0])
        cl1, cc1 = _nsum(cl1, cc1, logs[e, 1])
        out_s[e, 0] = cs0
        out_s[e, 1] = cs1
        out_l[e, 0] = cl0 + cc0
        out_l[e, 1] = cl1 + cc1
        out_a[e] = ca
    return out_s, out_l, out_a


@njit(inline="always", cache=True)
def _lsum2(s1, l1, s2, l2):
    if s1 == 0.0 or l1 == -np.inf:
        return s2, l2
    if s2 == 0.0 or l2 == -np.inf:
        return s1, l1
    m = max(l1, l2)
    v = s1 * math.exp(l1 - m) + s2 * math.exp(l2 - m)
    if v == 0.0:
        return 0.0, -np.inf
    return math.copysign(1.0, v), m + math.log(abs(v))


@njit(inline="always", cache=True)
def _qr_update(c, s, la, lb, s22, lt, st, m0, m1, m2, m3):
    """Left-multiply the QR-form product by ``[[m0, m1], [m2, m3]]``."""
    n0 = m0 * c + m1 * s
    n2 = m2 * c + m3 * s
    n1 = -m0 * s + m1 * c
    n3 = -m2 * s + m3 * c
    r11 = math.hypot(n0, n2)
    c = n0 / r11
    s = n2 / r11
    r12 = c * n1 + s * n3
    r22 = (m0 * m3 - m1 * m2) / r11
    lr = math.log(r11)
    if r12 != 0.0:
        st, lt = _lsum2(st, lr + lt, math.copysign(1.0, r12) * s22,
                        math.log(abs(r12)) + lb)
    else:
        lt = lt + lr
    la += lr
    lb += math.log(abs(r22))
    if r22 < 0.0:
        s22 = -s22
    return c, s, la, lb, s22, lt, st


@njit(cache=True, nogil=True)
def qr_accumulate(mats):
    """QR-form product of the rows of ``mats`` (each ``a, b, c, d``).

    Returns ``(c, s, la, lb, s22, lt, st)``: the rotation ``[[c, -s], [s, c]]``
    and the sign/log entries of the triangular factor.
    """
    c = 1.0
    s = 0.0
    la = 0.0
    lb = 0.0
    s22 = 1.0
    lt = -np.inf
    st = 0.0
    for e in range(mats.shape[0]):
        c, s, la, lb, s22, lt, st = _qr_update(c, s, la, lb, s22, lt, st, mats[e, 0],
                                               mats[e, 1], mats[e, 2], mats[e, 3])
    return c, s, la, lb, s22, lt, st
