import pytest
from hypothesis import given, settings, strategies as st

from gradium.errors import GradeViolation, ParseError, TypeCheckError
from gradium.generate import GenConfig
from gradium.grading import GradeVec, coeffect_algebra, effect_algebra
from gradium.lam import (
    DIALECTS, TBox, TUnit, parse_source, parse_stype, show_source_program, src_check, src_eq,
)
from gradium.srcgen import gen_source

USAGE = coeffect_algebra("nat-usage")


def check(text, algebra=None):
    return src_check(parse_source(text), algebra)


def test_tick_has_effect_one():
    t = check("-- dialect: cbv-eff\ntick")
    assert t.type == TUnit() and t.effect == effect_algebra("nat-cost").lift(1)


def test_box_scales_demand():
    t = check("-- dialect: cbv-co\n-- context: x : unit\nbox^3 x")
    assert t.type == TBox("3", TUnit()) and t.vec == GradeVec.of(USAGE, [3])


def test_divide_over_unit():
    t = check("-- dialect: cbn-comonad\n-- context: x : Box^2 unit\ndivide x1^1, x2^1 = x in extract x1; extract x2")
    assert t.type == TUnit()


def test_divide_needs_enough_copies():
    with pytest.raises(GradeViolation):
        check("-- dialect: cbn-comonad\n-- context: x : Box^1 unit\ndivide x1^1, x2^1 = x in extract x1; extract x2")


def test_latent_effects_flow_to_application():
    t = check("-- dialect: cbv-eff\n(\\x : unit. tick; x) (tick; ())")
    assert t.effect.value == 2
    assert parse_stype("unit ->^1 unit", "effect", "cbv").grade == "1"


def test_monadic_bind_adds_effects():
    t = check("-- dialect: cbn-mon\nbind x <- tick in bind y <- tick in return y")
    assert t.type == parse_stype("T^2 unit", "monadic", "cbn")


@pytest.mark.parametrize(
    "text,err",
    [
        ("-- dialect: cbv-co\n<(), ()>", ParseError),
        ("-- dialect: cbn-mon\n((), ())", ParseError),
        ("-- dialect: cbn-comonad\n-- context: x : unit\nx; x", TypeCheckError),
        ("-- dialect: cbn-comonad\n-- context: x : unit\n()", TypeCheckError),
        ("-- dialect: cbv-co\n\\x : unit. x", ParseError),
        ("-- dialect: cbv-eff\nbox^1 ()", ParseError),
        ("-- dialect: cbv-co\n-- context: x : unit\ncase^0 (inl x : unit + unit) of inl a -> a | inr b -> b", GradeViolation),
    ],
)
def test_rejections(text, err):
    with pytest.raises(err):
        check(text)


def test_unknown_dialect():
    with pytest.raises(ParseError):
        parse_source("-- dialect: cbv-linear\n()")


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(sorted(DIALECTS)), st.integers(0, 2**32))
def test_source_programs_round_trip(dialect, seed):
    prog = gen_source(dialect, GenConfig(), seed)
    again = parse_source(show_source_program(prog))
    assert again.dialect == prog.dialect and again.context == prog.context
    assert src_eq(again.term, prog.term)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(sorted(DIALECTS)), st.integers(0, 2**32))
def test_generated_sources_check(dialect, seed):
    src_check(gen_source(dialect, GenConfig(), seed))


def test_generated_sources_are_deterministic():
    for d in DIALECTS:
        assert show_source_program(gen_source(d, GenConfig(), 5)) == show_source_program(gen_source(d, GenConfig(), 5))
