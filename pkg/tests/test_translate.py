import time

import pytest
from hypothesis import given, settings, strategies as st

from gradium.effect_eval import eval_comp
from gradium.errors import GradiumError
from gradium.generate import GenConfig
from gradium.lam import DIALECTS, LApp, LPair, LSeq, SourceProgram, parse_source, src_check
from gradium.srcgen import gen_source, preservation_suite
from gradium.syntax import Force, Let, Prim, Return, Thunk, Var, print_term, shift
from gradium.translate import PreservationFailure, check_preservation, translate

from oracles import count_ticks


def src(text):
    return parse_source(text)


def target(text):
    tr = translate(src(text))
    return print_term(tr.program.term, tr.program.names)


def test_tick_translates_to_tick():
    assert translate(src("-- dialect: cbv-eff\ntick")).program.term == Prim("tick")


def test_cbn_box_is_a_graded_return_of_a_thunk():
    term = translate(src("-- dialect: cbn-co\n-- context: x : unit\nbox^3 x")).program.term
    assert term == Return(Thunk(Force(Var(0))), "3")


def test_cbv_unbox_binds_twice():
    text = "-- dialect: cbv-co\n-- context: x : unit\nunbox^2 y = box^3 x in (y, y)"
    shown = target(text)
    assert shown.startswith("let y <-^2 return^1 {") and "let y1 <-^2 y! in" in shown


def test_monadic_target_is_pure():
    _, report = check_preservation(src("-- dialect: cbn-mon\nbind x <- tick in bind y <- tick in return y"))
    assert report.effect.value == 0


def test_cbv_coeffect_target_returns_once():
    tr, report = check_preservation(src("-- dialect: cbv-co\n\\x^2 : unit. (x, x)"))
    assert tr.target_type.grade == "1"


def test_effect_target_keeps_the_source_effect():
    _, report = check_preservation(src("-- dialect: cbv-eff\n(\\x : unit. tick; x) (tick; ())"))
    assert report.effect.value == 2


def test_no_internal_names_leak():
    for d in DIALECTS:
        for s in range(30):
            tr = translate(gen_source(d, GenConfig(), s))
            assert "_" not in print_term(tr.program.term, tr.program.names)


def test_a_broken_translation_is_reported(monkeypatch):
    from gradium import translate as module

    monkeypatch.setattr(module.CbvEffect, "go", lambda self, e: Prim("tick"))
    with pytest.raises(PreservationFailure):
        check_preservation(src("-- dialect: cbv-eff\n()"))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32))
def test_tick_counts_match_a_direct_interpreter(seed):
    prog = gen_source("cbv-eff", GenConfig(context_size=0), seed)
    tr = translate(prog)
    _, eff = eval_comp((), tr.program.term)
    assert eff.value == count_ticks(prog)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32))
def test_translation_is_compositional(seed):
    prog = gen_source("cbv-eff", GenConfig(), seed)
    e = prog.term
    if not isinstance(e, (LApp, LPair, LSeq)):
        return
    whole = translate(prog).program.term
    first, second = (e.fn, e.arg) if isinstance(e, LApp) else (e.left, e.right) if isinstance(e, LPair) else (e.first, e.then)
    part = lambda sub: translate(SourceProgram(prog.dialect, prog.context, sub)).program.term
    assert isinstance(whole, Let) and whole.bound == part(first)
    later = whole.body.body if isinstance(e, LSeq) else whole.body.bound
    assert later == shift(part(second), 1)


@pytest.mark.parametrize("dialect", sorted(DIALECTS))
def test_preservation_on_a_thousand_generated_terms(dialect):
    result = preservation_suite(dialect, GenConfig(seed=3, trials=1000))
    assert result.ok, result.failures[:3]
