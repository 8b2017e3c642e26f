import pytest
from hypothesis import given, settings

from gradium.errors import ParseError
from gradium.syntax import (
    Force, Lam, Let, Pair, Prim, Program, Return, UnitVal, Var, alpha_eq, depth, erase_annotations, free_indices, parse,
    parse_term, print_program, print_term, resolve, shift, size,
)

from strategies import coeffect_instances, effect_instances

EXAMPLES = [
    ("effect", "let x <- tick in tick"),
    ("coeffect", "\\x^2. return^1 (x, x)"),
    ("effect", "<tick, let y <- tick in tick>"),
]


def test_let_of_ticks():
    assert parse_term("let x <- tick in tick", "effect") == Let(Prim("tick"), Prim("tick"))


def test_graded_lambda():
    t = parse_term("\\x^2. return^1 (x, x)", "coeffect")
    assert t == Lam(Return(Pair(Var(0), Var(0)), "1"), "2")


def test_grades_are_illegal_in_effect_mode():
    with pytest.raises(ParseError):
        parse_term("return^1 ()", "effect")


def test_grades_are_required_in_coeffect_mode():
    with pytest.raises(ParseError):
        parse_term("return ()", "coeffect")


@pytest.mark.parametrize("mode,text", EXAMPLES)
def test_example_round_trips(mode, text):
    prog = parse(f"-- mode: {mode}\n{text}\n")
    assert parse(print_program(prog)) == prog


def test_alpha_equivalence():
    assert alpha_eq(parse_term("\\x^1. x!", "coeffect"), parse_term("\\y^1. y!", "coeffect"))
    assert not alpha_eq(parse_term("\\x^1. x!", "coeffect"), parse_term("\\x^2. x!", "coeffect"))
    assert alpha_eq(Prim("tick"), Prim("tick"))


def test_headers_declare_context():
    prog = parse("-- mode: coeffect\n-- context: x : Unit, f : U (Unit ->^2 F^1 Unit)\nf! x\n")
    assert prog.names == ["x", "f"]
    assert prog.term.arg == Var(1)


def test_unbound_variable_reports_position():
    with pytest.raises(ParseError, match="1:1"):
        parse_term("y", "effect")


def test_de_bruijn_helpers():
    body = parse_term("\\y. return (x, y)", "effect", ["x"]).body
    assert free_indices(parse_term("(x, y)", "effect", ["x", "y"])) == {0, 1}
    assert shift(Var(0), 2) == Var(2)
    assert resolve(Var(0, "a"), ["a"]) == Var(0)
    assert size(Pair(UnitVal(), UnitVal())) == 3
    assert depth(Force(Var(0))) == 2
    assert body == Return(Pair(Var(1), Var(0)))


def round_trip(inst, mode):
    names = inst.names()
    prog = Program(mode, tuple(zip(names, inst.ctx)), inst.term)
    again = parse(print_program(prog))
    assert again.term == inst.term
    assert print_term(again.term, names) == print_term(inst.term, names)


@settings(max_examples=150, deadline=None)
@given(effect_instances)
def test_effect_programs_round_trip(inst):
    round_trip(inst, "effect")


@settings(max_examples=150, deadline=None)
@given(coeffect_instances)
def test_coeffect_programs_round_trip(inst):
    round_trip(inst, "coeffect")


@settings(max_examples=50, deadline=None)
@given(coeffect_instances)
def test_erasure_is_idempotent(inst):
    once = erase_annotations(inst.term)
    assert erase_annotations(once) == once


def test_top_level_splitting_ignores_arrows():
    from gradium.syntax import split_top

    assert split_top("f={let x <- tick in tick}, g : U (A ->^2 F B), p=<(), ()>") == [
        "f={let x <- tick in tick}",
        "g : U (A ->^2 F B)",
        "p=<(), ()>",
    ]
