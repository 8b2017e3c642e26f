import random

import pytest
from hypothesis import given, settings

from gradium.coeffect_system import check_declared, co_check, co_infer_comp, co_infer_value, elaborate, parse_grade_assignment
from gradium.errors import GradeViolation, TypeCheckError
from gradium.grading import GradeVec, coeffect_algebra
from gradium.generate import GenConfig
from gradium.harness import gen_typed, weaken
from gradium.oracle import Enumerator, agree
from gradium.syntax import PairType, SharedPairType, UnitType, parse_term

from strategies import coeffect_instances

USAGE = coeffect_algebra("nat-usage")
UNIT = UnitType()


def term(text, names=("x",)):
    return parse_term(text, "coeffect", list(names))


def vec(*xs, alg=USAGE):
    return GradeVec.of(alg, xs)


def test_variable_pair_and_shared_pair():
    assert co_infer_value([UNIT], term("x"), USAGE) == (UNIT, vec(1))
    assert co_infer_value([UNIT], term("(x, x)"), USAGE) == (PairType(UNIT, UNIT), vec(2))
    assert co_infer_value([UNIT], term("<x, ()>"), USAGE) == (SharedPairType(UNIT, UNIT), vec(1))


def test_return_scales_demand():
    ty, g = co_infer_comp([UNIT], term("return^3 x"), USAGE)
    assert g == vec(3) and ty.grade == "3"


def test_binder_annotation_must_cover_demand():
    ty, g = co_infer_comp([], term("\\x^2 : Unit. return^1 (x, x)", ()), USAGE)
    assert g == vec() and ty.grade == "2"
    with pytest.raises(GradeViolation, match="coeff-abs"):
        co_infer_comp([], term("\\x^1 : Unit. return^1 (x, x)", ()), USAGE)


def test_declared_vectors():
    m = term("return^1 x")
    co_check([UNIT], m, vec(5))
    with pytest.raises(GradeViolation):
        co_check([UNIT], m, vec(0))
    inferred = elaborate([UNIT], m).vec
    co_check([UNIT], m, inferred)


def test_case_requires_one_copy():
    ctx = [parse_term("(inl () : Unit + Unit)", "coeffect").type]
    with pytest.raises(GradeViolation, match="coeff-case"):
        elaborate(ctx, term("case^0 s of inl a -> return^1 () | inr b -> return^1 ()", ["s"]))


def test_grade_assignment_text():
    assert parse_grade_assignment("y=0, x=2", ["x", "y"], USAGE) == vec(2, 0)
    with pytest.raises(GradeViolation):
        parse_grade_assignment("x=2", ["x", "y"], USAGE)


def test_missing_annotations_are_type_errors():
    with pytest.raises(TypeCheckError):
        elaborate([], term("\\x^1. return^1 x", ()))


def vectors(e):
    yield e.vec
    for k in e.kids:
        yield from vectors(k)


@pytest.mark.parametrize("text", ["return^3 x", "<return^1 x, return^2 x>.2", "let y <-^2 return^1 x in return^1 (y, y)"])
def test_re_elaboration_reproduces_vectors(text):
    e = elaborate([UNIT], term(text))
    assert list(vectors(elaborate([UNIT], e.erase()))) == list(vectors(e))


@settings(max_examples=200, deadline=None)
@given(coeffect_instances)
def test_sub_coeffecting(inst):
    e = elaborate(list(inst.ctx), inst.term, USAGE, inst.type)
    weaker = weaken(e.vec, random.Random(inst.seed))
    assert weaker.leq(e.vec)
    co_check(list(inst.ctx), inst.term, weaker, USAGE, inst.type)


@settings(max_examples=100, deadline=None)
@given(coeffect_instances)
def test_elaboration_is_idempotent(inst):
    e = elaborate(list(inst.ctx), inst.term, USAGE, inst.type)
    again = elaborate(list(inst.ctx), e.erase(), USAGE, inst.type)
    assert list(vectors(again)) == list(vectors(e))


@pytest.mark.parametrize("algebra", ["nat-exact", "zero-one-many"])
def test_generated_terms_check_in_partial_algebras(algebra):
    alg = coeffect_algebra(algebra)
    for s in range(100):
        inst = gen_typed(GenConfig(mode="coeffect", algebra=algebra), s)
        e = elaborate(list(inst.ctx), inst.term, alg, inst.type)
        check_declared(e.vec, e.vec)


def test_declared_acceptance_agrees_with_derivations_up_to_depth_three():
    ctx = (UNIT,)
    for t, _, chain in Enumerator().comps(ctx, 3):
        assert agree(ctx, t, chain, 4, USAGE) is None
