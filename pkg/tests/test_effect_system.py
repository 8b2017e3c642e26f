import pytest
from hypothesis import given, settings, strategies as st

from gradium.effect_system import EffectChecker, check_comp, check_program, infer_comp
from gradium.errors import EffectBoundError, NoJoin, TypeCheckError
from gradium.grading import effect_algebra
from gradium.syntax import ReturnerType, ThunkType, UnitType, parse, parse_term, parse_type

from strategies import effect_instances, instances

COST = effect_algebra("nat-cost")
EXACT = effect_algebra("nat-exact")
F_UNIT = ReturnerType(UnitType())


def term(text, names=()):
    return parse_term(text, "effect", list(names))


def test_unit_value():
    assert EffectChecker(COST).infer_value([], term("()")) == UnitType()


def test_thunk_records_least_effect():
    assert EffectChecker(COST).infer_value([], term("{tick}")) == ThunkType(F_UNIT, "1")


def test_thunk_ascribed_too_small():
    with pytest.raises(EffectBoundError):
        EffectChecker(COST).infer_value([], term("({tick} : U^0 F Unit)"))


@pytest.mark.parametrize(
    "text,ty,eff",
    [
        ("let x <- tick in tick", "F Unit", 2),
        ("<tick, let y <- tick in tick>", "F Unit & F Unit", 2),
        ("return ()", "F Unit", 0),
    ],
)
def test_least_effects(text, ty, eff):
    r = infer_comp([], term(text), COST)
    assert (r.type, r.effect) == (parse_type(ty, "effect"), COST.lift(eff))


def test_bounds_are_upper_bounds():
    m = term("let x <- tick in tick")
    assert check_comp([], m, F_UNIT, COST.lift(2), COST) == COST.lift(2)
    assert check_comp([], m, F_UNIT, COST.lift(7), COST) == COST.lift(2)
    with pytest.raises(EffectBoundError):
        check_comp([], m, F_UNIT, COST.lift(1), COST)


def test_exact_order_rejects_looser_bounds():
    m = term("let x <- tick in tick")
    check_comp([], m, F_UNIT, EXACT.lift(2), EXACT)
    with pytest.raises(EffectBoundError):
        check_comp([], m, F_UNIT, EXACT.lift(7), EXACT)


def test_case_needs_join_under_exact_order():
    prog = parse("-- mode: effect\n-- context: s : Unit + Unit\ncase s of inl a -> tick | inr b -> return ()\n")
    assert check_program(prog, COST).effect == COST.lift(1)
    with pytest.raises(NoJoin):
        check_program(prog, EXACT)


def test_type_errors_name_their_rule():
    with pytest.raises(TypeCheckError, match="eff-"):
        infer_comp([], term("() !"), COST)


@settings(max_examples=200, deadline=None)
@given(effect_instances, st.integers(0, 6))
def test_principal_synthesis(inst, extra):
    least = infer_comp(list(inst.ctx), inst.term, COST).effect
    for bound in range(0, least.value + extra + 1):
        ok = True
        try:
            check_comp(list(inst.ctx), inst.term, inst.type, COST.lift(bound), COST)
        except EffectBoundError:
            ok = False
        assert ok == COST.leq(least, COST.lift(bound))


@settings(max_examples=200, deadline=None)
@given(instances("effect", "nat-exact"))
def test_exact_algebra_checks_only_at_least_effect(inst):
    least = infer_comp(list(inst.ctx), inst.term, EXACT).effect
    check_comp(list(inst.ctx), inst.term, inst.type, least, EXACT)
    with pytest.raises(EffectBoundError):
        check_comp(list(inst.ctx), inst.term, inst.type, EXACT.lift(least.value + 1), EXACT)


@settings(max_examples=100, deadline=None)
@given(effect_instances)
def test_inference_is_stable(inst):
    assert infer_comp(list(inst.ctx), inst.term, COST) == infer_comp(list(inst.ctx), inst.term, COST)
