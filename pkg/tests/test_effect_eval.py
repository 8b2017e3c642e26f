import random

import pytest
from hypothesis import given, settings

from gradium.effect_eval import CPairV, CUnit, Clo, TReturn, eval_comp, eval_value, show_terminal, step_budget
from gradium.effect_system import infer_comp
from gradium.errors import BudgetExceeded, StuckError
from gradium.grading import effect_algebra
from gradium.harness import gen_env
from gradium.generate import GenConfig
from gradium.syntax import Force, Prim, Thunk, UnitVal, Var, parse_term

from strategies import instances

COST = effect_algebra("nat-cost")


def term(text, names=()):
    return parse_term(text, "effect", list(names))


def test_values():
    assert eval_value((CUnit(),), Var(0)) == CUnit()
    assert eval_value((), Thunk(Prim("tick"))) == Clo((), Prim("tick"))
    assert eval_value((CUnit(),), term("(x, ())", ["x"])) == CPairV(CUnit(), CUnit())


@pytest.mark.parametrize(
    "text,ticks",
    [("let x <- tick in tick", 2), ("<tick, let y <- tick in tick>.1", 1), ("return ()", 0)],
)
def test_tick_counts(text, ticks):
    assert eval_comp((), term(text)) == (TReturn(CUnit()), COST.lift(ticks))


def test_projection_runs_fewer_ticks_than_its_type_allows():
    m = term("<tick, let y <- tick in tick>.1")
    _, ran = eval_comp((), m)
    assert COST.leq(ran, infer_comp([], m, COST).effect) and ran != infer_comp([], m, COST).effect


def test_thunks_delay_their_effects():
    t, eff = eval_comp((), term("let u <- return {tick} in return ()"))
    assert show_terminal(t) == "return ()" and eff == COST.lift(0)
    assert eval_comp((), term("let u <- return {tick} in u!"))[1] == COST.lift(1)


def test_stuck_terms_are_defects():
    with pytest.raises(StuckError):
        eval_comp((), Force(UnitVal()))


def test_step_budget(monkeypatch):
    with pytest.raises(BudgetExceeded):
        eval_comp((), term("let x <- tick in let y <- tick in tick"), budget=2)
    monkeypatch.setenv("GRADIUM_STEP_BUDGET", "17")
    assert step_budget() == 17


def closed_returners(algebra):
    return instances("effect", algebra, closed=True, returner=True)


@settings(max_examples=300, deadline=None)
@given(closed_returners("nat-cost"))
def test_soundness_on_closed_programs(inst):
    static = infer_comp([], inst.term, COST).effect
    t, eff = eval_comp((), inst.term)
    assert isinstance(t, TReturn)
    assert COST.leq(eff, static)


@settings(max_examples=200, deadline=None)
@given(closed_returners("nat-exact"))
def test_exact_algebra_runs_exactly_the_static_effect(inst):
    exact = effect_algebra("nat-exact")
    static = infer_comp([], inst.term, exact).effect
    assert eval_comp((), inst.term, exact)[1] == static


@settings(max_examples=200, deadline=None)
@given(instances("effect", "nat-cost"))
def test_open_programs_are_deterministic(inst):
    env = gen_env(inst.ctx, GenConfig(), random.Random(inst.seed))
    assert eval_comp(env, inst.term) == eval_comp(env, inst.term)
