import random

import pytest
from hypothesis import given, settings

from gradium.coeffect_eval import GUnit, JUNK, ceval, leval, show_gterminal, usage_of
from gradium.coeffect_system import elaborate
from gradium.errors import GradeViolation, JunkUse, RefusedAlgebra
from gradium.generate import GenConfig
from gradium.grading import GradeVec, coeffect_algebra
from gradium.harness import gen_env
from gradium.syntax import UnitType, parse_term, parse_type

from strategies import coeffect_instances

USAGE = coeffect_algebra("nat-usage")
UNIT = UnitType()


def elab(text, ctx=(UNIT,), names=("x",)):
    return elaborate(list(ctx), parse_term(text, "coeffect", list(names)), USAGE)


def gv(*xs):
    return GradeVec.of(USAGE, xs)


def test_variable_lookup_needs_one_copy():
    assert ceval(gv(1), (GUnit(),), elab("x")).terminal == GUnit()
    with pytest.raises(GradeViolation):
        ceval(gv(0), (GUnit(),), elab("x"))
    assert ceval(gv(0), (GUnit(),), elab("()")).terminal == GUnit()


@pytest.mark.parametrize(
    "text,grades,env,shown",
    [
        ("(\\x^1. return^1 x) ()", (), (), "return^1 ()"),
        ("return^2 x", (2,), (GUnit(),), "return^2 ()"),
        ("<return^1 x, return^1 ()>.2", (1,), (GUnit(),), "return^1 ()"),
    ],
)
def test_graded_runs(text, grades, env, shown):
    names = ("x",) if grades else ()
    e = elab(text, (UNIT,) * len(grades), names)
    assert show_gterminal(ceval(gv(*grades), env, e).terminal) == shown


def test_zero_return_never_looks_at_its_value():
    e = elab("return^0 (x, x)")
    assert show_gterminal(leval(gv(0), (JUNK,), e).terminal) == "return^0 <junk>"


def test_zero_argument_is_skipped():
    e = elab("(\\y^0 : Unit. return^1 ()) x")
    assert show_gterminal(leval(gv(0), (JUNK,), e).terminal) == "return^1 ()"


def test_forcing_junk_is_a_defect():
    e = elab("x!", (parse_type("U F^1 Unit", "coeffect"),))
    with pytest.raises(JunkUse):
        leval(gv(1), (JUNK,), e)


def test_usage_counts():
    assert usage_of(leval(gv(2), (GUnit(),), elab("return^2 x"), usage=True)) == (2,)
    assert usage_of(leval(gv(0), (JUNK,), elab("return^0 x"), usage=True)) == (0,)
    e = elab("let x <-^1 return^1 y in return^1 x", names=("y",))
    assert usage_of(leval(gv(1), (GUnit(),), e, usage=True)) == (1,)
    with pytest.raises(RefusedAlgebra):
        usage_of(ceval(gv(1), (GUnit(),), elab("x")))


def env_for(inst, junk=frozenset()):
    return gen_env(inst.ctx, GenConfig(mode="coeffect", algebra="nat-usage"), random.Random(inst.seed), junk)


@settings(max_examples=200, deadline=None)
@given(coeffect_instances)
def test_canonical_grades_never_violate(inst):
    e = elaborate(list(inst.ctx), inst.term, USAGE, inst.type)
    ceval(e.vec, env_for(inst), e)


@settings(max_examples=200, deadline=None)
@given(coeffect_instances)
def test_resource_run_with_junk_in_zero_slots(inst):
    e = elaborate(list(inst.ctx), inst.term, USAGE, inst.type)
    zeros = frozenset(i for i, g in enumerate(e.vec) if USAGE.is_zero(g))
    run = leval(e.vec, env_for(inst, zeros), e, usage=True)
    for used, g in zip(run.usage, e.vec):
        assert used <= g.value
    for i in zeros:
        assert run.usage[i] == 0


@settings(max_examples=100, deadline=None)
@given(coeffect_instances)
def test_runs_are_deterministic_and_semantics_agree_on_shape(inst):
    e = elaborate(list(inst.ctx), inst.term, USAGE, inst.type)
    env = env_for(inst)
    assert show_gterminal(ceval(e.vec, env, e).terminal) == show_gterminal(ceval(e.vec, env, e).terminal)
    assert type(leval(e.vec, env, e).terminal) is type(ceval(e.vec, env, e).terminal)
