import random
from dataclasses import replace

import pytest
from hypothesis import given, settings

from gradium import coeffect_eval, effect_eval
from gradium.coeffect_system import CoeffectChecker, elaborate
from gradium.effect_system import EffectChecker
from gradium.errors import RefusedAlgebra, UserError
from gradium.generate import GenConfig
from gradium.grading import GradeVec, coeffect_algebra, effect_algebra
from gradium.harness import (
    SUITES, PropertyFailure, gen_env, gen_typed, record_failure, run_suite, shrink, still_fails, trial_seed, weaken,
)
from gradium.syntax import Let, Prim, Return, UnitType, UnitVal, size

from strategies import coeffect_instances, effect_instances, seeds


def test_seeds_determine_instances():
    cfg = GenConfig(mode="coeffect", algebra="nat-usage")
    assert gen_typed(cfg, 7) == gen_typed(cfg, 7)
    assert len({gen_typed(cfg, s).term for s in range(20)}) > 10


def test_trial_seeds_do_not_collide():
    assert len({trial_seed(s, i) for s in range(5) for i in range(1000)}) == 5000


@settings(max_examples=100, deadline=None)
@given(effect_instances)
def test_generated_effect_programs_check(inst):
    EffectChecker(effect_algebra("nat-cost")).check(list(inst.ctx), inst.term, inst.type)


@settings(max_examples=100, deadline=None)
@given(coeffect_instances)
def test_generated_coeffect_programs_check(inst):
    elaborate(list(inst.ctx), inst.term, coeffect_algebra("nat-usage"), inst.type)


@pytest.mark.parametrize("algebra", ["nat-usage", "nat-exact", "zero-one-many"])
def test_generation_works_in_every_coeffect_algebra(algebra):
    cfg = GenConfig(mode="coeffect", algebra=algebra)
    alg = coeffect_algebra(algebra)
    for s in range(30):
        inst = gen_typed(cfg, s)
        elaborate(list(inst.ctx), inst.term, alg, inst.type)


def test_environments_are_closed_values_of_the_context_types():
    cfg = GenConfig(mode="effect")
    env = gen_env((UnitType(), UnitType()), cfg, random.Random(0))
    assert env == (effect_eval.CUnit(), effect_eval.CUnit())
    cenv = gen_env((UnitType(),), replace(cfg, mode="coeffect", algebra="nat-usage"), random.Random(0), frozenset({0}))
    assert cenv == (coeffect_eval.JUNK,)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_weakening_stays_below(seed):
    alg = coeffect_algebra("nat-usage")
    rng = random.Random(seed)
    vec = GradeVec.of(alg, [rng.randrange(4) for _ in range(3)])
    assert all(alg.leq(w, g) for w, g in zip(weaken(vec, rng), vec))


@pytest.mark.parametrize("suite", [s for s in SUITES if s != "canonical"])
def test_every_suite_passes_a_short_run(suite):
    cfg = GenConfig(seed=11, trials=40, max_depth=3)
    if suite in ("subcoeff", "co-sound", "res-sound") or suite == "determinism":
        cfg = replace(cfg, mode="coeffect", algebra="nat-usage")
    result = run_suite(suite, cfg)
    assert result.ok, result.failures[:2]
    assert result.to_json()["passed"] == 40


def test_canonical_suite_at_depth_three():
    result = run_suite("canonical", GenConfig(max_depth=3))
    assert result.ok and result.stats["terms"] > 300


def test_unknown_suite_and_unsupported_algebra_are_refused(monkeypatch):
    from gradium import grading

    with pytest.raises(UserError):
        run_suite("nonsense", GenConfig())
    lossy = replace(grading.ZERO_ONE_MANY, name="lossy", zero_sum_free=False)
    monkeypatch.setitem(grading.COEFFECT_ALGEBRAS, "lossy", lossy)
    with pytest.raises(RefusedAlgebra):
        run_suite("res-sound", GenConfig(mode="coeffect", algebra="lossy", trials=1))


def test_shrinking_finds_a_small_counterexample():
    tick = Prim("tick")
    big = Let(tick, Let(tick, Let(Return(UnitVal()), tick)))
    inst = replace(gen_typed(GenConfig(), 0, closed=True), ctx=(), term=big, env=())

    def check(candidate, stats):
        if "tick" in repr(candidate.term):
            raise PropertyFailure("contains a tick")

    small = shrink(inst, still_fails(check))
    assert small.term == tick and size(small.term) < size(big)


def test_failures_are_recorded_with_their_shrunk_form():
    from gradium.harness import SuiteResult

    inst = gen_typed(GenConfig(), 3)
    result = SuiteResult("x", "nat-cost", 1)

    def check(candidate, stats):
        raise PropertyFailure("always", "planted")

    record_failure(result, inst, check)
    [c] = result.failures
    assert c.rule == "planted" and len(c.shrunk) <= len(c.term)


# the suites must notice a broken checker


def test_effect_soundness_catches_a_checker_that_forgets_bound_effects(monkeypatch):
    original = EffectChecker.returner

    def forgetful(self, ctx, m):
        ty, _ = original(self, ctx, m)
        return ty, self.alg.unit

    monkeypatch.setattr(EffectChecker, "returner", forgetful)
    result = run_suite("eff-sound", GenConfig(seed=1, trials=200))
    assert not result.ok


def test_canonical_suite_catches_a_checker_that_ignores_annotations(monkeypatch):
    monkeypatch.setattr(CoeffectChecker, "need", lambda self, q, demand, rule, what: None)
    assert not run_suite("canonical", GenConfig(max_depth=3)).ok


def test_resource_soundness_catches_undercounting(monkeypatch):
    original = coeffect_eval.leval

    def undercount(*args, **kwargs):
        run = original(*args, **kwargs)
        if run.usage is not None:
            run = replace(run, usage=tuple(u + 1 for u in run.usage))
        return run

    monkeypatch.setattr(coeffect_eval, "leval", undercount)
    result = run_suite("res-sound", GenConfig(seed=2, trials=100, mode="coeffect", algebra="nat-usage"))
    assert not result.ok
