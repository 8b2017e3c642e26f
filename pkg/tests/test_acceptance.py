"""The eleven acceptance criteria, one test each, at their stated time limits.

Each test prints a single PASS/FAIL line; the lines are also collected into
a summary section at the end of the pytest run.
"""
import random
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

from gradium import coeffect_eval, effect_eval
from gradium.coeffect_system import elaborate
from gradium.effect_system import check_program as effect_check
from gradium.errors import GradeViolation
from gradium.generate import GenConfig
from gradium.grading import coeffect_algebra, effect_algebra
from gradium.harness import gen_env, run_suite
from gradium.lam import DIALECTS, parse_source
from gradium.srcgen import gen_source, source_algebra
from gradium.syntax import ReturnerType, parse, print_type
from gradium.translate import check_preservation

ROOT = Path(__file__).resolve().parent.parent
COST = effect_algebra("nat-cost")
USAGE = coeffect_algebra("nat-usage")
TRIALS = 1000


@pytest.fixture
def criterion(request):
    @contextmanager
    def run(number: int, title: str, limit: float):
        start = time.perf_counter()
        status = "FAIL"
        try:
            yield
            elapsed = time.perf_counter() - start
            status = "PASS" if elapsed < limit else "FAIL"
            assert elapsed < limit, f"took {elapsed:.1f}s, limit {limit}s"
        finally:
            elapsed = time.perf_counter() - start
            line = f"criterion {number:2d} {status}  {title} ({elapsed:.2f}s, limit {limit:g}s)"
            print(line)
            request.config.acceptance_lines.append(line)

    return run


def effect_program(text):
    return parse(f"-- mode: effect\n{text}")


def coeffect_term(text, ctx=""):
    header = f"-- context: {ctx}\n" if ctx else ""
    prog = parse(f"-- mode: coeffect\n{header}{text}")
    return prog, elaborate([t for _, t in prog.context], prog.term, USAGE)


def test_1_tick_accounting(criterion):
    with criterion(1, "tick accounting", 1.0):
        twice = effect_program("let x <- tick in tick")
        report = effect_check(twice, COST)
        assert (print_type(report.type), report.effect.value) == ("F Unit", 2)
        terminal, eff = effect_eval.eval_comp((), twice.term, COST)
        assert (effect_eval.show_terminal(terminal), eff.value) == ("return ()", 2)

        pair = "<tick, let y <- tick in tick>"
        assert effect_check(effect_program(pair), COST).effect.value == 2
        first = effect_program(pair + ".1")
        static = effect_check(first, COST).effect
        _, dynamic = effect_eval.eval_comp((), first.term, COST)
        assert (dynamic.value, static.value) == (1, 2)


def test_2_subeffecting(criterion):
    with criterion(2, "subeffecting", 30.0):
        result = run_suite("subeff", GenConfig(seed=0, trials=TRIALS, algebra="nat-cost", mode="effect"))
        assert result.ok, result.failures[:2]
        families = result.stats["families"]
        # a family can only be tightened if some member sits above the bottom effect
        for name, fam in families.items():
            if fam["tightenable"]:
                assert fam["rejections"] >= 1, name
        untightenable = {n for n, f in families.items() if not f["tightenable"]}
        assert untightenable <= {"Return"}
        assert len(families) >= 10


def test_3_effect_soundness(criterion):
    with criterion(3, "effect soundness", 60.0):
        result = run_suite("eff-sound", GenConfig(seed=0, trials=TRIALS, algebra="nat-cost", mode="effect"))
        assert result.ok and result.trials == TRIALS, result.failures[:2]


def test_4_determinism(criterion):
    with criterion(4, "determinism", 60.0):
        for mode, algebra in (("effect", "nat-cost"), ("coeffect", "nat-usage")):
            result = run_suite("determinism", GenConfig(seed=0, trials=TRIALS, algebra=algebra, mode=mode))
            assert result.ok, result.failures[:2]


def test_5_coeffect_golden_values(criterion):
    with criterion(5, "coeffect golden values", 1.0):
        _, e = coeffect_term("return^3 x", "x : Unit")
        assert [g.value for g in e.vec] == [3]
        _, dup = coeffect_term("\\x^2 : Unit. return^1 (x, x)")
        assert print_type(dup.type) == "Unit ->^2 F^1 (Unit * Unit)"
        with pytest.raises(GradeViolation):
            coeffect_term("\\x^1 : Unit. return^1 (x, x)")
        assert USAGE.leq(USAGE.parse("3"), USAGE.parse("2"))
        assert not USAGE.leq(USAGE.parse("2"), USAGE.parse("3"))


def test_6_subcoeffecting(criterion):
    with criterion(6, "sub-coeffecting, static and operational", 60.0):
        result = run_suite("subcoeff", GenConfig(seed=0, trials=TRIALS, algebra="nat-usage", mode="coeffect"))
        assert result.ok, result.failures[:2]
        assert result.stats["strict_weakenings"] > TRIALS // 4


def test_7_coeffect_soundness(criterion):
    with criterion(7, "coeffect soundness", 60.0):
        result = run_suite("co-sound", GenConfig(seed=0, trials=TRIALS, algebra="nat-usage", mode="coeffect"))
        assert result.ok, result.failures[:2]


def test_8_resource_soundness(criterion):
    with criterion(8, "resource soundness and junk isolation", 60.0):
        result = run_suite("res-sound", GenConfig(seed=0, trials=TRIALS, algebra="nat-usage", mode="coeffect"))
        assert result.ok, result.failures[:2]
        assert result.stats["junk_slots"] > 0

        prog, e = coeffect_term("return^0 (x, {return^1 x})", "x : Unit")
        run = coeffect_eval.leval(e.vec, (coeffect_eval.JUNK,), e, USAGE, usage=True)
        assert coeffect_eval.show_gterminal(run.terminal) == "return^0 <junk>"
        assert run.usage == (0,)


def _shape_ok(dialect, tr, report):
    match dialect:
        case "cbn-mon" | "cbv-mon":
            return report.effect.value == 0
        case "cbv-eff":
            return isinstance(tr.target_type, ReturnerType)
        case "cbv-co":
            return isinstance(tr.target_type, ReturnerType) and tr.target_type.grade == "1"
        case _:
            return all(USAGE.leq(d, g) for d, g in zip(report.declared, report.vec))


def test_9_translation_preservation(criterion):
    with criterion(9, "translation preservation", 120.0):
        corpus = sorted((ROOT / "corpus").glob("*.lam"))
        assert {parse_source(p.read_text()).dialect for p in corpus} == set(DIALECTS)
        for path in corpus:
            prog = parse_source(path.read_text())
            tr, report = check_preservation(prog)
            assert _shape_ok(prog.dialect, tr, report), path.name
        for dialect in DIALECTS:
            cfg = GenConfig(seed=9)
            algebra = source_algebra(dialect, cfg)
            for seed in range(200):
                prog = gen_source(dialect, cfg, seed)
                tr, report = check_preservation(prog, algebra)
                assert _shape_ok(dialect, tr, report), (dialect, seed)


def test_10_canonicality_oracle(criterion):
    with criterion(10, "canonicality against exhaustive derivations", 300.0):
        result = run_suite("canonical", GenConfig(max_depth=4))
        assert result.ok, result.failures[:2]
        assert result.stats["terms"] > 900_000


PRODUCTS = [
    ("value_pair", "F^1 (Unit * Unit)", 2, "return^1 ((), ())"),
    ("shared_pair", "F^1 (Unit * Unit)", 2, "return^1 ((), ())"),
    ("comp_pair", "F^2 Unit", 2, "return^2 ()"),
    ("comp_tensor", "F^1 (Unit * Unit)", 3, "return^1 ((), ())"),
]


def _read(name):
    return parse((ROOT / "corpus" / f"{name}.cbpv").read_text())


def _elab(prog):
    return elaborate([t for _, t in prog.context], prog.term, USAGE)


def test_11_products(criterion):
    with criterion(11, "the four product types", 5.0):
        for name, ty, grade, terminal in PRODUCTS:
            prog = _read(name)
            e = _elab(prog)
            assert (print_type(e.type), [g.value for g in e.vec]) == (ty, [grade]), name
            env = gen_env(tuple(t for _, t in prog.context), GenConfig(mode="coeffect", algebra="nat-usage"), random.Random(0))
            run = coeffect_eval.ceval(e.vec, env, e, USAGE)
            assert coeffect_eval.show_gterminal(run.terminal) == terminal, name

        # F (U B1 * U B2) and B1 (x) B2 convert into each other
        assert print_type(_elab(_read("tensor_to_pair")).type) == "F^1 (U F^1 Unit * U F^1 Unit)"
        assert print_type(_elab(_read("pair_to_tensor")).type) == "F^1 Unit * F^1 Unit"
        there_and_back = _elab(_read("tensor_roundtrip"))
        run = coeffect_eval.ceval(there_and_back.vec, (), there_and_back, USAGE)
        assert coeffect_eval.show_gterminal(run.terminal) == "return^1 ((), ())"
        # the pair round trip returns thunks; forcing them recovers the original components
        inner = (ROOT / "corpus" / "pair_roundtrip.cbpv").read_text().split("\n", 1)[1].strip()
        forced = parse(f"-- mode: coeffect\nlet r <-^1 ({inner}) in case^1 r of (a, b) -> "
                       "let u <-^1 a! in let v <-^1 b! in return^1 (u, v)")
        e = _elab(forced)
        run = coeffect_eval.ceval(e.vec, (), e, USAGE)
        assert coeffect_eval.show_gterminal(run.terminal) == "return^1 ((), ())"
