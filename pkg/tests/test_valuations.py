import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prophetlp.valuations import (
    MPHk,
    PHk,
    XOS,
    Additive,
    UniverseMismatchError,
    bundle,
    demand,
    evaluate,
    items_of,
    supporting_additive,
    supporting_phk,
)


def subsets(m):
    return range(1 << m)


# --- strategies -----------------------------------------------------------

weights = st.floats(0, 10, allow_nan=False)


@st.composite
def xos_functions(draw, m=None):
    m = m or draw(st.integers(1, 6))
    clauses = draw(st.lists(st.lists(weights, min_size=m, max_size=m), min_size=1, max_size=4))
    return XOS(tuple(Additive(tuple(c)) for c in clauses))


@st.composite
def phk_functions(draw, m=None, k=None):
    m = m or draw(st.integers(1, 6))
    k = k or draw(st.integers(1, 3))
    edges = draw(st.dictionaries(
        st.integers(1, (1 << m) - 1).filter(lambda X: bin(X).count("1") <= k),
        st.floats(0.01, 5), max_size=8))
    return PHk(m, k, tuple(edges.items()))


@st.composite
def mphk_functions(draw):
    m = draw(st.integers(1, 6))
    k = draw(st.integers(1, 3))
    clauses = draw(st.lists(phk_functions(m, k), min_size=1, max_size=3))
    return MPHk(k, tuple(clauses))


any_valuation = st.one_of(xos_functions(), phk_functions(), mphk_functions())


# --- evaluate -------------------------------------------------------------


def test_xos_example():
    v = XOS((Additive((2, 1)), Additive((0, 3))))
    assert evaluate(v, bundle([0, 1])) == 3


def test_phk_example():
    v = PHk(2, 2, ((bundle([0]), 1.0), (bundle([0, 1]), 2.0)))
    assert evaluate(v, bundle([0, 1])) == 3
    assert evaluate(v, bundle([1])) == 0


@given(any_valuation)
def test_empty_bundle_is_zero(v):
    assert evaluate(v, 0) == 0


def test_universe_mismatch():
    v = Additive((1.0, 2.0))
    with pytest.raises(UniverseMismatchError):
        evaluate(v, bundle([2]))


@given(any_valuation)
@settings(max_examples=60)
def test_table_matches_direct_evaluation(v):
    # the vectorised table and the per-bundle formula are separate code paths
    for S in subsets(v.m):
        assert evaluate(v, S) == pytest.approx(v.value(S), abs=1e-12)


@given(any_valuation)
@settings(max_examples=60)
def test_monotone(v):
    for S in subsets(v.m):
        for j in range(v.m):
            assert evaluate(v, S) <= evaluate(v, S | (1 << j)) + 1e-12


def test_constructor_validation():
    with pytest.raises(ValueError):
        Additive((1.0, -0.5))
    with pytest.raises(ValueError):
        XOS(())
    with pytest.raises(ValueError):
        PHk(3, 2, ((bundle([0, 1, 2]), 1.0),))
    with pytest.raises(ValueError):
        PHk(2, 2, ((bundle([0]), 0.0),))
    with pytest.raises(UniverseMismatchError):
        PHk(2, 2, ((bundle([3]), 1.0),))
    with pytest.raises(ValueError):
        MPHk(1, (PHk(2, 2, ((bundle([0, 1]), 1.0),)),))


# --- supporting clauses ---------------------------------------------------


def test_supporting_additive_examples():
    a, b = Additive((2, 1)), Additive((0, 3))
    v = XOS((a, b))
    assert supporting_additive(v, bundle([0, 1])) is a  # tie, lowest index
    assert supporting_additive(v, bundle([1])) is b
    single = XOS((a,))
    for S in subsets(2):
        assert supporting_additive(single, S) is a


def test_supporting_phk_examples():
    c5 = PHk(2, 2, ((bundle([0, 1]), 5.0),))
    c7 = PHk(2, 2, ((bundle([0]), 3.0), (bundle([1]), 4.0)))
    v = MPHk(2, (c5, c7))
    assert supporting_phk(v, bundle([0, 1])) is c7
    assert supporting_phk(v, 0) is c5
    assert supporting_phk(MPHk(2, (c5,)), bundle([1])) is c5


@given(xos_functions())
def test_xos_lower_bound_property(v):
    for S in subsets(v.m):
        w = supporting_additive(v, S)
        assert w.value(S) == pytest.approx(evaluate(v, S))
        for T in subsets(v.m):
            assert evaluate(v, S & ~T) >= w.value(S & ~T) - 1e-12


@given(phk_functions())
def test_phk_restriction_identity(v):
    for S in subsets(v.m):
        inside = [(X, w) for X, w in v.edges if X & S == X]
        for T in subsets(v.m):
            expect = sum(w for X, w in inside if X & T == 0)
            assert evaluate(v, S & ~T) == pytest.approx(expect, abs=1e-12)


@given(st.integers(1, 6), st.data())
def test_mph1_equals_xos(m, data):
    clauses = data.draw(st.lists(st.lists(weights, min_size=m, max_size=m), min_size=1, max_size=3))
    xos = XOS(tuple(Additive(tuple(c)) for c in clauses))
    mph = MPHk(1, tuple(
        PHk(m, 1, tuple((1 << j, w) for j, w in enumerate(c) if w > 0)) for c in clauses))
    for S in subsets(m):
        assert evaluate(mph, S) == pytest.approx(evaluate(xos, S))


# --- demand ---------------------------------------------------------------


def test_demand_examples():
    v = Additive((1.0,))
    assert demand(v, [0.5], 1) == 1
    assert demand(v, [1.5], 1) == 0
    assert demand(v, [0.5], 0) == 0


def test_demand_zero_utility_tie_prefers_empty():
    assert demand(Additive((1.0,)), [1.0], 1) == 0


def test_demand_tie_smaller_cardinality_then_mask():
    # at zero prices {2}, {0,1}, {0,2}, {1,2} and {0,1,2} all have utility 1
    v = XOS((Additive((0.5, 0.5, 0.0)), Additive((0.0, 0.0, 1.0))))
    assert demand(v, [0.0, 0.0, 0.0], 0b111) == 0b100
    assert demand(v, [0.0, 0.0, 0.0], 0b011) == 0b011
    assert demand(Additive((1.0, 1.0)), [0.5, 0.5], 0b11) == 0b11
    # equal utility 0.5 for {1} and {0}: lower mask wins
    assert demand(XOS((Additive((1.0, 0.0)), Additive((0.0, 1.0)))), [0.5, 0.5], 0b11) == 0b01


def brute_demand(v, prices, available):
    cands = [S for S in range(1 << v.m) if S & ~available == 0]
    best = max(v.value(S) - sum(prices[j] for j in items_of(S)) for S in cands)
    tied = [S for S in cands if v.value(S) - sum(prices[j] for j in items_of(S)) >= best - 1e-12]
    return min(tied, key=lambda S: (bin(S).count("1"), S)), best


@given(any_valuation, st.data())
@settings(max_examples=80)
def test_demand_matches_brute_force(v, data):
    prices = data.draw(st.lists(st.floats(0, 5), min_size=v.m, max_size=v.m))
    available = data.draw(st.integers(0, (1 << v.m) - 1))
    got = demand(v, prices, available)
    want, best = brute_demand(v, prices, available)
    assert got & ~available == 0
    assert got == want
    assert best >= 0


@given(any_valuation)
def test_demand_empty_when_everything_too_expensive(v):
    prices = [evaluate(v, (1 << v.m) - 1) + 1.0] * v.m
    assert demand(v, prices, (1 << v.m) - 1) == 0


def test_bundle_helpers():
    assert bundle([0, 2]) == 5
    assert items_of(5) == [0, 2]
    for S in range(64):
        assert bundle(items_of(S)) == S
