import itertools

import pytest
from hypothesis import given, strategies as st

from cocyclelab import Cylinder
from cocyclelab.errors import ClassSearchTimeout
from cocyclelab.patterns import (Budget, avoid_clause, conflict_positions, merge,
                                 pattern_of, solve, word_exists)


def test_merge_and_conflicts():
    a, b = pattern_of(Cylinder(0, "01")), pattern_of(Cylinder(1, "10"))
    assert merge(a, b) == {0: 0, 1: 1, 2: 0}
    assert merge(a, {1: 0}) is None
    assert conflict_positions(a, {1: 0, 5: 1}) == [1]


def test_word_exists():
    assert word_exists({0: 1}, [{0: 1, 1: 1}, {0: 1, 1: 0}]) is None
    w = word_exists({0: 1}, [{0: 1, 1: 1}, {-1: 0}])
    assert w is not None and w[0] == 1 and w[1] == 0 and w[-1] == 1


patterns = st.dictionaries(st.integers(0, 5), st.integers(0, 1), min_size=1, max_size=4)


@given(patterns, st.lists(patterns, max_size=6))
def test_solver_matches_enumeration(req, forb):
    found = word_exists(req, forb)
    brute = any(all(w[p] == s for p, s in req.items())
                and not any(all(w[p] == s for p, s in f.items()) for f in forb)
                for w in itertools.product((0, 1), repeat=6))
    assert (found is not None) == brute
    if found is not None:
        w = [found.get(i, 0) for i in range(6)]
        assert all(w[p] == s for p, s in req.items())
        assert not any(all(w[p] == s for p, s in f.items()) for f in forb)


def test_budget():
    clauses = [avoid_clause({i: 0, i + 1: 0}) for i in range(40)]
    clauses += [avoid_clause({i: 1, i + 1: 1}) for i in range(40)]
    clauses += [avoid_clause({0: 0}), avoid_clause({0: 1, 40: 1}),
                avoid_clause({0: 1, 40: 0})]
    with pytest.raises(ClassSearchTimeout):
        solve({}, [[(i, 0), (i, 1)] for i in range(3)] + clauses, Budget(0))
    assert solve({}, clauses, Budget(10_000)) is None
