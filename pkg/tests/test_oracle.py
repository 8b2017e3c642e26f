import random

from hypothesis import given, strategies as st

from gradium.oracle import Enumerator, UNIT, add, binder, derivable, member, minimal
from gradium.syntax import Let, Pair, Return, UnitVal, Var

vecs = st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=8)


@given(vecs)
def test_minimal_elements_cover_the_set(vs):
    chain = minimal(vs)
    assert all(member(v, chain) for v in vs)
    assert all(not (a != b and all(x <= y for x, y in zip(a, b))) for a in chain for b in chain)


@given(vecs, st.integers(0, 3))
def test_binder_keeps_only_affordable_demands(vs, q):
    chain = minimal(vs)
    assert binder(chain, (q,)) == minimal(v[:1] for v in chain if v[1] <= q)


def test_shared_pair_needs_two_copies():
    _, chain = derivable([UNIT], Return(Pair(Var(0), Var(0)), "1"))
    assert chain == {(2,)}


def test_let_multiplies_through():
    # the body uses its binder twice, so the bound term is scaled by the let grade
    term = Let(Return(Var(0), "1"), Return(Pair(Var(0), Var(0)), "1"), "2")
    _, chain = derivable([UNIT], term)
    assert chain == {(2,)}


def test_unaffordable_binder_has_no_derivation():
    term = Let(Return(UnitVal(), "1"), Return(Pair(Var(0), Var(0)), "1"), "1")
    _, chain = derivable([UNIT], term)
    assert chain == frozenset()


def test_enumeration_agrees_with_direct_derivation():
    terms = Enumerator().comps((UNIT,), 4)
    for term, ty, chain in random.Random(0).sample(terms, 3000):
        assert derivable([UNIT], term) == (ty, chain)


def test_enumeration_is_complete_for_small_terms():
    shown = {repr(t) for t, _, _ in Enumerator().comps((UNIT,), 2)}
    assert shown == {repr(Return(v, q)) for v in (UnitVal(), Var(0)) for q in "012"}
