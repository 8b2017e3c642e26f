import itertools

import pytest
from hypothesis import given, strategies as st

from gradium.errors import AlgebraMismatch, GradeSyntaxError
from gradium.grading import (
    COEFFECT_ALGEBRAS, EFFECT_ALGEBRAS, GradeVec, coeffect_algebra, eff_combine, eff_leq, effect_algebra, vec_add,
    vec_leq, vec_scale,
)

from oracles import counting_table

COST = effect_algebra("nat-cost")
EXACT = effect_algebra("nat-exact")
USAGE = coeffect_algebra("nat-usage")
ZOM = coeffect_algebra("zero-one-many")

nats = st.integers(min_value=0, max_value=50)


def vec(alg, *xs):
    return GradeVec.of(alg, xs)


# examples


def test_cost_order_examples():
    assert eff_leq(COST.lift(0), COST.lift(1))
    assert eff_leq(COST.lift(5), COST.lift(5))
    assert not eff_leq(EXACT.lift(1), EXACT.lift(2))


def test_combine_examples():
    assert eff_combine(COST.lift(1), COST.lift(1)) == COST.lift(2)
    for phi in COST.elements(6):
        assert eff_combine(COST.unit, phi) == phi


def test_vector_examples():
    assert vec_add(vec(USAGE, 1, 0), vec(USAGE, 1, 2)) == vec(USAGE, 2, 2)
    assert vec_scale(USAGE.lift(3), vec(USAGE, 1, 2)) == vec(USAGE, 3, 6)
    assert vec_leq(vec(USAGE, 3), vec(USAGE, 2))
    assert not vec_leq(vec(USAGE, 1, 3), vec(USAGE, 2, 2))
    assert vec(ZOM, "1") + vec(ZOM, "1") == vec(ZOM, "w")


def test_zero_one_many_tables_match_counting():
    add = counting_table(lambda m, n: m + n)
    mul = counting_table(lambda m, n: m * n)
    for a, b in itertools.product("01w", repeat=2):
        assert ZOM.format(ZOM.add(ZOM.parse(a), ZOM.parse(b))) == add[a, b]
        assert ZOM.format(ZOM.mul(ZOM.parse(a), ZOM.parse(b))) == mul[a, b]


def test_zero_one_many_order_is_many_below_everything():
    for a, b in itertools.product("01w", repeat=2):
        assert ZOM.leq(ZOM.parse(a), ZOM.parse(b)) == (a == b or a == "w")


def test_mixed_algebras_are_refused():
    with pytest.raises(AlgebraMismatch):
        COST.combine(COST.lift(1), EXACT.lift(1))
    with pytest.raises(AlgebraMismatch):
        USAGE.add(USAGE.one, coeffect_algebra("nat-exact").one)


def test_grade_literals():
    assert USAGE.parse("12") == USAGE.lift(12)
    with pytest.raises(GradeSyntaxError):
        USAGE.parse("two")
    with pytest.raises(GradeSyntaxError):
        ZOM.parse("2")


def test_joins_and_meets_are_capabilities():
    assert COST.has_joins and COST.join(COST.lift(2), COST.lift(5)) == COST.lift(5)
    assert not EXACT.has_joins
    assert USAGE.meet(USAGE.lift(1), USAGE.lift(3)) == USAGE.lift(3)


def test_resource_flags_hold_on_the_carrier():
    for alg in COEFFECT_ALGEBRAS.values():
        flags = alg.check_flags()
        assert flags == {"nontrivial": alg.nontrivial, "zero_sum_free": alg.zero_sum_free, "no_zero_divisors": alg.no_zero_divisors}
    assert USAGE.supports_resources


# laws


@given(nats, nats, nats)
def test_effect_monoid_laws(a, b, c):
    for alg in EFFECT_ALGEBRAS.values():
        x, y, z = alg.lift(a), alg.lift(b), alg.lift(c)
        assert alg.combine(alg.combine(x, y), z) == alg.combine(x, alg.combine(y, z))
        assert alg.combine(alg.unit, x) == x == alg.combine(x, alg.unit)
        if alg.leq(x, y):
            assert alg.leq(alg.combine(x, z), alg.combine(y, z))
            assert alg.leq(alg.combine(z, x), alg.combine(z, y))


@given(nats, nats)
def test_cost_join_is_least_upper_bound(a, b):
    x, y = COST.lift(a), COST.lift(b)
    j = COST.join(x, y)
    assert COST.leq(x, j) and COST.leq(y, j)
    for u in COST.elements(50):
        if COST.leq(x, u) and COST.leq(y, u):
            assert COST.leq(j, u)


def coeffect_triples():
    small = st.sampled_from(["0", "1", "2", "3", "7"])
    return st.sampled_from(sorted(COEFFECT_ALGEBRAS)).flatmap(
        lambda name: st.tuples(
            st.just(name),
            *(st.sampled_from(["0", "1", "w"]) if name == "zero-one-many" else small for _ in range(3)),
        )
    )


@given(coeffect_triples())
def test_semiring_laws(t):
    name, *lits = t
    alg = coeffect_algebra(name)
    a, b, c = (alg.parse(x) for x in lits)
    assert alg.add(alg.add(a, b), c) == alg.add(a, alg.add(b, c))
    assert alg.add(a, b) == alg.add(b, a)
    assert alg.mul(alg.mul(a, b), c) == alg.mul(a, alg.mul(b, c))
    assert alg.mul(a, alg.add(b, c)) == alg.add(alg.mul(a, b), alg.mul(a, c))
    assert alg.add(alg.zero, a) == a
    assert alg.mul(alg.one, a) == a == alg.mul(a, alg.one)
    assert alg.mul(alg.zero, a) == alg.zero
    if alg.leq(a, b):
        assert alg.leq(alg.add(a, c), alg.add(b, c))
        assert alg.leq(alg.mul(a, c), alg.mul(b, c))
        assert alg.leq(alg.mul(c, a), alg.mul(c, b))


@given(st.lists(nats, min_size=0, max_size=5), nats)
def test_vector_identities(xs, q):
    g = GradeVec.of(USAGE, xs)
    assert g + GradeVec.zeros(USAGE, len(xs)) == g
    assert g.scale(USAGE.zero).is_zero()
    assert g.scale(USAGE.one) == g
    assert g.leq(g)
    rest, last = g.extend(USAGE.lift(q)).split(1)
    assert rest == g and last == (USAGE.lift(q),)


@given(nats, nats)
def test_usage_order_is_reversed_numeric(a, b):
    assert USAGE.leq(USAGE.lift(a), USAGE.lift(b)) == (a >= b)
