"""Moduli of continuity, exact seminorms of locally constant maps, analytic bounds.

For a map ``H`` that depends only on the window coordinates, the seminorm

    sup_{x != y} ||H(x) - H(y)|| * weight(N(x, y))

is a maximum over finitely many class pairs and agreement depths ``m``: two
window words ``u``, ``v`` that agree on ``|j| < m`` extend to points with
``N = m`` (choose the remaining coordinates equal).  The search below decides,
for each class pair, the largest feasible ``m`` by clause satisfiability.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cocycles import LocallyConstantCocycle, lk_params
from .errors import ClassSearchTimeout, Unsupported
from .mat2 import Mat2, op_norm
from .patterns import Budget, avoid_clause, merge, pattern_of, solve

DEFAULT_BUDGET = 1_000_000
KINDS = ("C0", "Holder", "Weak", "LogLog", "Log")


@dataclass(frozen=True)
class ModulusSpec:
    """One of the five moduli: C0, Holder(alpha), Weak(alpha, theta),
    LogLog(gamma, kappa), Log(delta)."""

    kind: str
    alpha: float | None = None
    theta: float | None = None
    gamma: float | None = None
    kappa: float | None = None
    delta: float | None = None

    def __post_init__(self):
        k = self.kind
        if k not in KINDS:
            raise ValueError(f"unknown modulus {k!r}")
        if k in ("Holder", "Weak") and not (self.alpha or 0) > 0:
            raise ValueError("alpha must be positive")
        if k == "Weak" and not 0 < (self.theta or 0) <= 1:
            raise ValueError("theta must lie in (0, 1]")
        if k == "LogLog" and not ((self.gamma or 0) >= 1 and (self.kappa or 0) >= 1):
            raise ValueError("gamma and kappa must be >= 1")
        if k == "Log" and not 0 < (self.delta or 0) <= 1:
            raise ValueError("delta must lie in (0, 1]")

    @classmethod
    def c0(cls):
        return cls("C0")

    @classmethod
    def holder(cls, alpha):
        return cls("Holder", alpha=alpha)

    @classmethod
    def weak(cls, alpha, theta):
        return cls("Weak", alpha=alpha, theta=theta)

    @classmethod
    def loglog(cls, gamma, kappa):
        return cls("LogLog", gamma=gamma, kappa=kappa)

    @classmethod
    def log(cls, delta):
        return cls("Log", delta=delta)

    @property
    def label(self) -> str:
        args = {"C0": (), "Holder": (self.alpha,), "Weak": (self.alpha, self.theta),
                "LogLog": (self.gamma, self.kappa), "Log": (self.delta,)}[self.kind]
        return f"{self.kind}({','.join(repr(a) for a in args)})"

    @classmethod
    def parse(cls, text: str) -> "ModulusSpec":
        """Inverse of ``label``, e.g. ``"Log(0.5)"`` or ``"C0"``."""
        text = text.strip()
        if "(" not in text:
            return cls(text)
        kind, rest = text.split("(", 1)
        args = [float(a) for a in rest.rstrip(")").split(",") if a.strip()]
        names = {"Holder": ("alpha",), "Weak": ("alpha", "theta"),
                 "LogLog": ("gamma", "kappa"), "Log": ("delta",), "C0": ()}[kind]
        if len(args) != len(names):
            raise ValueError(f"{kind} takes {len(names)} parameters")
        return cls(kind, **dict(zip(names, args)))


def log_weight(spec: ModulusSpec, n: int, rho: float) -> float:
    """Logarithm of ``weight``; ``-inf`` where the weight vanishes."""
    t = n * math.log(1.0 / rho)
    k = spec.kind
    if k == "C0":
        return 0.0
    if k == "Holder":
        return spec.alpha * t
    if k == "Weak":
        return spec.alpha * t ** spec.theta
    if k == "LogLog":
        lt = math.log(t) if t > 0 else 0.0
        return spec.kappa * max(0.0, lt) ** spec.gamma
    return spec.delta * math.log(t) if t > 0 else -math.inf


def weight(spec: ModulusSpec, n: int, rho: float) -> float:
    """Multiplier of ``||H(x) - H(y)||`` for a pair at distance ``rho**n``."""
    if spec.kind == "Log":
        return (n * math.log(1.0 / rho)) ** spec.delta
    lw = log_weight(spec, n, rho)
    return math.exp(lw) if lw < 709.0 else math.inf


def weight_chain_check(n: int, rho: float, delta: float, alpha: float,
                       theta: float, gamma: float, kappa: float) -> bool:
    """Whether Log(delta) <= Log(1) <= LogLog <= Weak <= Holder pointwise at ``n``.

    Only defined for ``t = n log(1/rho) >= e``.  Compared in logs, so large
    ``n`` does not overflow.
    """
    t = n * math.log(1.0 / rho)
    if t < math.e:
        raise Unsupported(f"t = {t:.4g} < e")
    specs = [ModulusSpec.log(delta), ModulusSpec.log(1.0),
             ModulusSpec.loglog(gamma, kappa), ModulusSpec.weak(alpha, theta),
             ModulusSpec.holder(alpha)]
    w = [log_weight(s, n, rho) for s in specs]
    return all(a <= b for a, b in zip(w, w[1:]))


# ---------------------------------------------------------------- maps


def _freeze(p) -> tuple:
    return tuple(sorted(p.items()))


@dataclass(frozen=True)
class ValueClass:
    """Words matching some alternative and none of the forbidden patterns."""

    alternatives: tuple
    forbidden: tuple
    matrix: Mat2
    label: str = ""

    def alt_dicts(self):
        return [dict(a) for a in self.alternatives]

    def forbidden_dicts(self):
        return [dict(f) for f in self.forbidden]


@dataclass(frozen=True)
class LocallyConstantMap:
    """A window-determined matrix-valued map given by disjoint value classes."""

    window: tuple
    classes: tuple

    @property
    def radius(self) -> int:
        return max(-self.window[0], self.window[1])

    @property
    def width(self) -> int:
        return self.window[1] - self.window[0] + 1

    def scaled(self, c: float) -> "LocallyConstantMap":
        return LocallyConstantMap(self.window, tuple(
            ValueClass(v.alternatives, v.forbidden, v.matrix * c, v.label)
            for v in self.classes))

    def _codes(self, pattern):
        lo = self.window[0]
        mask = val = 0
        for pos, sym in pattern:
            mask |= 1 << (pos - lo)
            val |= sym << (pos - lo)
        return np.uint64(mask), np.uint64(val)

    def classify_codes(self, codes: np.ndarray) -> np.ndarray:
        """Class index per window word, words encoded with bit ``j`` = position ``lo + j``."""
        codes = np.asarray(codes, dtype=np.uint64)
        out = np.full(codes.shape, -1, dtype=np.int64)
        for i, v in enumerate(self.classes):
            inside = np.zeros(codes.shape, dtype=bool)
            for a in v.alternatives:
                m, val = self._codes(a)
                inside |= (codes & m) == val
            for f in v.forbidden:
                m, val = self._codes(f)
                inside &= (codes & m) != val
            if np.any(out[inside] >= 0):
                raise ValueError("value classes overlap")
            out[inside] = i
        if np.any(out < 0):
            raise ValueError("value classes do not cover every window word")
        return out

    def class_of_word(self, word: str) -> int:
        code = sum(int(ch) << j for j, ch in enumerate(word))
        return int(self.classify_codes(np.array([code], dtype=np.uint64))[0])

    def value(self, word: str) -> Mat2:
        return self.classes[self.class_of_word(word)].matrix


def _branch_events(F: LocallyConstantCocycle):
    """(alternatives, forbidden, matrix, label) per branch, default last."""
    events = []
    all_cyls = []
    for b, (u, m) in enumerate(F.branches):
        alts = [pattern_of(c) for c in u]
        all_cyls += alts
        events.append((alts, [], m, f"b{b}"))
    events.append(([{}], all_cyls, F.default, "default"))
    return events


def diff_map(F: LocallyConstantCocycle, G: LocallyConstantCocycle,
             budget: int = DEFAULT_BUDGET) -> LocallyConstantMap:
    """``x -> F(x) - G(x)`` with classes the nonempty joint refinements of the branches."""
    window = (min(F.window[0], G.window[0]), max(F.window[1], G.window[1]))
    classes = []
    for fa, ff, fm, fl in _branch_events(F):
        for ga, gf, gm, gl in _branch_events(G):
            alts = []
            for a in fa:
                for b in ga:
                    ab = merge(a, b)
                    if ab is not None and ab not in alts:
                        alts.append(ab)
            forbidden = ff + gf
            alts = [a for a in alts
                    if solve(a, [avoid_clause(f) for f in forbidden], Budget(budget))
                    is not None]
            if not alts:
                continue
            dm = (fm.as_float() - gm.as_float())
            classes.append(ValueClass(tuple(_freeze(a) for a in alts),
                                      tuple(_freeze(f) for f in forbidden),
                                      dm, f"{fl}|{gl}"))
    return LocallyConstantMap(window, tuple(classes))


# ---------------------------------------------------------------- seminorm


@dataclass(frozen=True)
class SeminormWitness:
    value: float
    n_star: int | None
    classes: tuple | None
    words: tuple | None
    exact: bool = True

    def to_dict(self):
        return {"value": self.value, "N_star": self.n_star,
                "classes": list(self.classes) if self.classes else None,
                "witness_words": list(self.words) if self.words else None,
                "exact": self.exact}


def _pair_problem(m, alt_u, alt_v, forb_u, forb_v):
    def var(side):
        return lambda pos: ("s", pos) if abs(pos) < m else (side, pos)

    units = {}
    for side, alt in (("u", alt_u), ("v", alt_v)):
        vf = var(side)
        for pos, sym in alt.items():
            key = vf(pos)
            if units.setdefault(key, sym) != sym:
                return None, None
    clauses = [avoid_clause(f, var("u")) for f in forb_u]
    clauses += [avoid_clause(f, var("v")) for f in forb_v]
    return units, clauses


def _words_from(assign, window, m):
    lo, hi = window
    out = []
    for side in ("u", "v"):
        w = []
        for pos in range(lo, hi + 1):
            key = ("s", pos) if abs(pos) < m else (side, pos)
            w.append(str(assign.get(key, 0)))
        out.append("".join(w))
    return tuple(out)


def integrand(H: LocallyConstantMap, u: str, v: str, spec: ModulusSpec,
              rho: float) -> float:
    """``||H(u) - H(v)|| * weight(N(u, v))`` for two window words."""
    lo = H.window[0]
    diffs = [abs(lo + j) for j, (a, b) in enumerate(zip(u, v)) if a != b]
    if not diffs:
        return 0.0
    dm = op_norm(H.value(u) - H.value(v))
    return dm * weight(spec, min(diffs), rho)


def seminorm_exact(H: LocallyConstantMap, spec: ModulusSpec, rho: float,
                   budget: int = DEFAULT_BUDGET) -> SeminormWitness:
    """Exact seminorm of ``H`` with a witness pair of window words.

    Raises ``ClassSearchTimeout`` when the search exceeds ``budget`` nodes.
    """
    rw = H.radius
    weights = [weight(spec, m, rho) for m in range(rw + 1)]
    cands = []
    classes = H.classes
    for i in range(len(classes)):
        for j in range(i + 1, len(classes)):
            dm = op_norm(classes[i].matrix - classes[j].matrix)
            if dm == 0.0:
                continue
            for ai, a in enumerate(classes[i].alt_dicts()):
                for bi, b in enumerate(classes[j].alt_dicts()):
                    conf = [abs(p) for p, s in a.items() if p in b and b[p] != s]
                    ub = min(conf + [rw])
                    cands.append((-dm * weights[ub], i, j, ai, bi, ub, dm))
    cands.sort()
    counter = Budget(budget)
    best = 0.0
    wit = (None, None, None)
    for negub, i, j, ai, bi, ub, dm in cands:
        if -negub <= best:
            break
        a = classes[i].alt_dicts()[ai]
        b = classes[j].alt_dicts()[bi]
        fu = classes[i].forbidden_dicts()
        fv = classes[j].forbidden_dicts()
        lo_m = next(m for m in range(ub + 1) if dm * weights[m] > best)

        def feasible(m):
            units, clauses = _pair_problem(m, a, b, fu, fv)
            if units is None:
                return None
            return solve(units, clauses, counter)

        sol = feasible(lo_m)
        if sol is None:
            continue
        good, good_m = sol, lo_m
        lo_b, hi_b = lo_m + 1, ub
        while lo_b <= hi_b:
            mid = (lo_b + hi_b) // 2
            s = feasible(mid)
            if s is None:
                hi_b = mid - 1
            else:
                good, good_m = s, mid
                lo_b = mid + 1
        val = dm * weights[good_m]
        if val > best:
            best = val
            wit = (good_m, (classes[i].label, classes[j].label),
                   _words_from(good, H.window, good_m))
    return SeminormWitness(best, *wit, exact=True)


def seminorm_bruteforce(H: LocallyConstantMap, spec: ModulusSpec, rho: float) -> float:
    """Seminorm by enumerating every window word; for small windows only."""
    if H.width > 24:
        raise Unsupported("window too wide for exhaustive enumeration")
    lo = H.window[0]
    codes = np.arange(1 << H.width, dtype=np.uint64)
    cls = H.classify_codes(codes)
    nc = len(H.classes)
    if nc > 63:
        raise Unsupported("too many classes")
    dmat = np.array([[op_norm(a.matrix - b.matrix) for b in H.classes]
                     for a in H.classes])
    best = 0.0
    for m in range(H.radius + 1):
        shared = [pos - lo for pos in range(lo, H.window[1] + 1) if abs(pos) < m]
        smask = np.uint64(sum(1 << b for b in shared))
        keys = codes & smask
        uniq, inv = np.unique(keys, return_inverse=True)
        masks = np.zeros(uniq.size, dtype=np.uint64)
        np.bitwise_or.at(masks, inv, np.left_shift(np.uint64(1), cls.astype(np.uint64)))
        delta = 0.0
        for mk in np.unique(masks):
            present = [c for c in range(nc) if int(mk) >> c & 1]
            for x in present:
                for y in present:
                    delta = max(delta, dmat[x, y])
        best = max(best, delta * weight(spec, m, rho))
    return best


def seminorm_sampled(H: LocallyConstantMap, spec: ModulusSpec, rho: float,
                     trials: int, seed: int = 0) -> float:
    """Maximum of the integrand over random word pairs (a lower bound).

    Each pair shares a random depth ``m``: ``v`` copies ``u`` on ``|j| < m``
    and is resampled elsewhere.
    """
    rng = np.random.default_rng(seed)
    lo, hi = H.window
    pos = np.arange(lo, hi + 1)
    u = rng.integers(0, 2, size=(trials, H.width), dtype=np.uint64)
    v = rng.integers(0, 2, size=(trials, H.width), dtype=np.uint64)
    m = rng.integers(0, H.radius + 1, size=trials)
    keep = np.abs(pos)[None, :] < m[:, None]
    v = np.where(keep, u, v)
    bits = np.left_shift(np.uint64(1), np.arange(H.width, dtype=np.uint64))
    cu = H.classify_codes((u * bits).sum(axis=1, dtype=np.uint64))
    cv = H.classify_codes((v * bits).sum(axis=1, dtype=np.uint64))
    differ = u != v
    nmin = np.where(differ, np.abs(pos)[None, :], H.radius + 1).min(axis=1)
    dmat = np.array([[op_norm(a.matrix - b.matrix) for b in H.classes]
                     for a in H.classes])
    w = np.array([weight(spec, n, rho) if n <= H.radius else 0.0
                  for n in range(H.radius + 2)])
    vals = dmat[cu, cv] * w[nmin]
    return float(vals.max()) if trials else 0.0


@dataclass(frozen=True)
class NormDistance:
    spec: str
    sup_term: float
    seminorm_term: float
    witness: SeminormWitness

    @property
    def total(self) -> float:
        return self.sup_term + self.seminorm_term

    @property
    def exact(self) -> bool:
        return self.witness.exact

    def to_dict(self):
        return {"spec": self.spec, "sup_term": self.sup_term,
                "value": self.seminorm_term, "total": self.total,
                "N_star": self.witness.n_star,
                "witness_words": list(self.witness.words) if self.witness.words else None,
                "exact": self.exact}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def norm_distance(F: LocallyConstantCocycle, G: LocallyConstantCocycle,
                  spec: ModulusSpec, rho: float, budget: int = DEFAULT_BUDGET,
                  fallback_trials: int = 100_000, seed: int = 0) -> NormDistance:
    """``||F - G||`` in the given topology: sup term plus weighted seminorm.

    The C0 norm has no seminorm term.  When the exact search exceeds its
    budget the seminorm falls back to sampling and is flagged as a lower bound.
    """
    H = diff_map(F, G, budget)
    sup = max(op_norm(v.matrix) for v in H.classes)
    if spec.kind == "C0":
        return NormDistance(spec.label, sup, 0.0, SeminormWitness(0.0, None, None, None))
    try:
        w = seminorm_exact(H, spec, rho, budget)
    except ClassSearchTimeout:
        val = seminorm_sampled(H, spec, rho, fallback_trials, seed)
        w = SeminormWitness(val, None, None, None, exact=False)
    return NormDistance(spec.label, sup, w.value, w)


# ---------------------------------------------------------------- bounds


def analytic_bk_bound(k: int, sigma: float, delta: float, rho: float) -> float:
    """``sigma pi/(2k) + (pi/(2k)) k^delta (log 1/rho)^delta``."""
    if k < 1 or not 0 < delta <= 1 or not 0 < rho < 1:
        raise ValueError("need k >= 1, 0 < delta <= 1, 0 < rho < 1")
    th = math.pi / (2 * k)
    return sigma * th + th * k ** delta * math.log(1 / rho) ** delta


@dataclass(frozen=True)
class LkCaseBounds:
    cases: dict = field(default_factory=dict)
    sup_bound: float = 0.0

    @property
    def seminorm_bound(self) -> float:
        return max(self.cases.values())

    @property
    def total(self) -> float:
        return self.sup_bound + self.seminorm_bound


def analytic_lk_cases(k: int, sigma: float, beta: float, delta: float,
                      rho: float) -> LkCaseBounds:
    """Per-case bounds on the weighted differences of ``L_k`` and the base cocycle."""
    if not 0 < delta < beta < 1:
        raise ValueError("need 0 < delta < beta < 1")
    if k < 2 or not 0 < rho < 1:
        raise ValueError("need k >= 2 and 0 < rho < 1")
    P = lk_params(sigma, k, beta)
    lr = math.log(1 / rho) ** delta
    u2k = P.u ** (2 * k)
    cases = {
        "1.1": lr * ((2 * k + 1) / k ** (beta / delta)) ** delta,
        "1.2": k ** delta * (2 * math.log(1 / rho)) ** delta / k ** beta,
        "1.3": 2 * lr * k ** delta / k ** beta,
        "2.1": sigma * k ** beta * (k + 1) ** delta * lr / u2k,
        "2.2": sigma * lr * ((2 * k + 1) / k ** (beta / delta)) ** delta
        * (P.u / sigma) ** (2 * k),
        "2.3": sigma * lr * (P.gamma_tilde + k ** beta / u2k),
    }
    sup = sigma * max(P.h, P.gamma_tilde, P.theta)
    return LkCaseBounds(cases, sup)
