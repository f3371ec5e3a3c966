"""Finite partial assignments of symbols and a small DPLL satisfiability search.

A pattern is a dict ``{position: symbol}``; a cylinder is the special case of
a contiguous pattern.  Questions such as "is there a word matching this
pattern while avoiding those" or "are there two words in these classes that
agree on ``|j| < m``" reduce to clause satisfiability over symbol variables.
"""

from __future__ import annotations

from collections import Counter
from typing import Hashable, Iterable, Mapping

from .errors import ClassSearchTimeout
from .shift_space import Cylinder

Pattern = Mapping[int, int]


def pattern_of(c: Cylinder) -> dict:
    return dict(c.items())


def merge(p: Pattern, q: Pattern):
    """The conjunction of two patterns, or ``None`` when they conflict."""
    out = dict(p)
    for pos, sym in q.items():
        if out.setdefault(pos, sym) != sym:
            return None
    return out


def conflict_positions(p: Pattern, q: Pattern):
    return [pos for pos, sym in p.items() if pos in q and q[pos] != sym]


class Budget:
    """Counts search nodes and raises once the limit is reached."""

    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def tick(self):
        self.used += 1
        if self.used > self.limit:
            raise ClassSearchTimeout(f"search exceeded {self.limit} nodes")


def solve(units: Mapping[Hashable, int], clauses: Iterable, budget: Budget):
    """DPLL over boolean-valued variables.

    ``units`` fixes some variables; each clause is a list of ``(var, value)``
    literals, satisfied when any literal holds.  Returns a satisfying partial
    assignment (unmentioned variables are free) or ``None``.
    """
    return _dpll(dict(units), [list(c) for c in clauses], budget)


def _dpll(assign, clauses, budget):
    budget.tick()
    changed = True
    while changed:
        changed = False
        remaining = []
        for cl in clauses:
            free = []
            sat = False
            for var, val in cl:
                a = assign.get(var)
                if a is None:
                    free.append((var, val))
                elif a == val:
                    sat = True
                    break
            if sat:
                continue
            if not free:
                return None
            if len(free) == 1:
                var, val = free[0]
                assign[var] = val
                changed = True
            else:
                remaining.append(free)
        clauses = remaining
    if not clauses:
        return assign
    counts = Counter(lit for cl in clauses for lit in cl)
    (var, val), _ = counts.most_common(1)[0]
    for choice in (val, 1 - val):
        trial = dict(assign)
        trial[var] = choice
        out = _dpll(trial, clauses, budget)
        if out is not None:
            return out
    return None


def avoid_clause(forbidden: Pattern, var=lambda pos: pos):
    """Clause stating that a word does not match ``forbidden``."""
    return [(var(pos), 1 - sym) for pos, sym in forbidden.items()]


def word_exists(required: Pattern, forbidden: Iterable[Pattern],
                budget: Budget | None = None):
    """A word matching ``required`` and none of ``forbidden``, or ``None``."""
    budget = budget or Budget(1_000_000)
    return solve(required, [avoid_clause(f) for f in forbidden], budget)
