"""Soundness property suites over generated programs.

Each suite draws trials from a seeded generator, checks one property per
trial, and shrinks any counterexample greedily by replacing a computation
with one of its own sub-computations while the failure persists.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field, replace
from typing import Callable

from . import coeffect_eval, effect_eval
from .coeffect_system import check_declared, elaborate
from .effect_system import EffectChecker, check_comp
from .errors import Defect, EffectBoundError, GradeViolation, GradiumError, RefusedAlgebra, UserError
from .generate import CoeffectGen, DeadEnd, EffectGen, GenConfig
from .grading import CoeffectAlgebra, EffectAlgebra, GradeVec, coeffect_algebra, effect_algebra
from .lam import DIALECTS
from .syntax import free_indices, is_comp, map_subterms, print_term, print_type, shift, size, subterms

SUITES = (
    "determinism",
    "eff-sound",
    "subeff",
    "subcoeff",
    "co-sound",
    "res-sound",
    "canonical",
    *(f"preserve-{d}" for d in DIALECTS),
)


class PropertyFailure(Exception):
    def __init__(self, message: str, rule: str | None = None):
        self.rule = rule
        super().__init__(message)


@dataclass(frozen=True)
class Instance:
    ctx: tuple
    term: object
    type: object
    env: tuple = ()
    seed: int = 0

    def names(self) -> list[str]:
        return [f"v{i}" for i in range(len(self.ctx))]

    def show(self) -> str:
        ctx = ", ".join(f"{n} : {print_type(t)}" for n, t in zip(self.names(), self.ctx))
        return f"[{ctx}] ⊢ {print_term(self.term, self.names())} : {print_type(self.type)}"


@dataclass
class Counterexample:
    seed: int
    message: str
    rule: str | None
    term: str
    shrunk: str

    def to_json(self) -> dict:
        return {"seed": self.seed, "message": self.message, "rule": self.rule, "term": self.term, "shrunk": self.shrunk}


@dataclass
class SuiteResult:
    suite: str
    algebra: str
    trials: int
    failures: list[Counterexample] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "algebra": self.algebra,
            "trials": self.trials,
            "passed": self.trials - len(self.failures),
            "failed": len(self.failures),
            "ok": self.ok,
            "stats": self.stats,
            "seconds": round(self.seconds, 3),
            "counterexamples": [c.to_json() for c in self.failures],
        }


# --- generation ---------------------------------------------------------------


def trial_seed(seed: int, i: int) -> int:
    return seed * 1_000_003 + i


def _retrying(rng: random.Random, make: Callable[[], object], attempts: int = 200):
    for _ in range(attempts):
        try:
            return make()
        except DeadEnd:
            continue
    raise RuntimeError("generator kept hitting dead ends")


def gen_typed(cfg: GenConfig, seed: int | None = None, closed: bool = False, returner: bool = False) -> Instance:
    """A well-typed program for ``cfg.mode``, deterministic in the seed."""
    seed = cfg.seed if seed is None else seed
    rng = random.Random(seed)
    if cfg.mode == "effect":
        gen = EffectGen(rng, effect_algebra(cfg.algebra), cfg)
    else:
        gen = CoeffectGen(rng, coeffect_algebra(cfg.algebra), cfg)
    ctx, term, ty = _retrying(rng, lambda: gen.program(closed=closed, returner=returner))
    return Instance(tuple(ctx), term, ty, seed=seed)


def gen_env(ctx, cfg: GenConfig, rng: random.Random, junk: frozenset[int] = frozenset()) -> tuple:
    """Closed runtime values for each context entry; slots in ``junk`` hold the junk value."""
    env = []
    for i, ty in enumerate(ctx):
        if i in junk:
            env.append(coeffect_eval.JUNK)
            continue
        if cfg.mode == "effect":
            alg = effect_algebra(cfg.algebra)
            gen = EffectGen(rng, alg, replace(cfg, max_depth=2))
            v = _retrying(rng, lambda: gen.value([], ty, 2))
            env.append(effect_eval.eval_value([], v, alg))
        else:
            alg = coeffect_algebra(cfg.algebra)
            cgen = CoeffectGen(rng, alg, replace(cfg, max_depth=2))
            v = _retrying(rng, lambda: cgen.value([], ty, 2, frozenset()))
            elab = elaborate([], v, alg, ty)
            env.append(coeffect_eval.ceval(GradeVec.zeros(alg, 0), (), elab, alg).terminal)
    return tuple(env)


# --- shrinking ------------------------------------------------------------------


def _replace_child(t, k: int, new):
    count = iter(range(10**9))
    return map_subterms(t, lambda c, _: new if next(count) == k else c)


def reductions(t):
    """Terms one step smaller: a computation replaced by a sub-computation that fits."""
    for c, b in subterms(t):
        if is_comp(c) and is_comp(t) and all(i >= b for i in free_indices(c)):
            yield shift(c, -b) if b else c
    for k, (c, _) in enumerate(subterms(t)):
        for smaller in reductions(c):
            yield _replace_child(t, k, smaller)


def shrink(inst: Instance, fails: Callable[[Instance], bool], max_steps: int = 500) -> Instance:
    """Greedy shrinking; ``fails`` must return True exactly when the candidate still fails."""
    steps = 0
    progress = True
    while progress and steps < max_steps:
        progress = False
        for cand in reductions(inst.term):
            steps += 1
            candidate = replace(inst, term=cand)
            if size(cand) < size(inst.term) and fails(candidate):
                inst = candidate
                progress = True
                break
    return inst


# --- properties -------------------------------------------------------------------


def _effect_check(inst: Instance, alg: EffectAlgebra):
    return EffectChecker(alg).check(list(inst.ctx), inst.term, inst.type)


def _co_elab(inst: Instance, alg: CoeffectAlgebra):
    return elaborate(list(inst.ctx), inst.term, alg, inst.type)


def prop_eff_sound(inst: Instance, alg: EffectAlgebra, stats: dict) -> None:
    static = _effect_check(inst, alg)
    terminal, dynamic = effect_eval.eval_comp(inst.env, inst.term, alg)
    if not isinstance(terminal, effect_eval.TReturn):
        raise PropertyFailure(f"a returner evaluated to {effect_eval.show_terminal(terminal)}", "eff-sound")
    if not alg.leq(dynamic, static):
        raise PropertyFailure(f"runtime effect {dynamic} exceeds the static bound {static}", "eff-sound")
    stats["strict_overapprox"] = stats.get("strict_overapprox", 0) + (dynamic != static)


def prop_determinism(inst: Instance, cfg: GenConfig, stats: dict) -> None:
    if cfg.mode == "effect":
        alg = effect_algebra(cfg.algebra)
        _effect_check(inst, alg)
        first = effect_eval.eval_comp(inst.env, inst.term, alg)
        second = effect_eval.eval_comp(inst.env, inst.term, alg)
    else:
        calg = coeffect_algebra(cfg.algebra)
        e = _co_elab(inst, calg)
        first = coeffect_eval.ceval(e.vec, inst.env, e, calg)
        second = coeffect_eval.ceval(e.vec, inst.env, e, calg)
    if first != second:
        raise PropertyFailure("two runs of the same program disagree", "determinism")


def prop_subeff(inst: Instance, alg: EffectAlgebra, rng: random.Random, stats: dict) -> None:
    least = _effect_check(inst, alg)
    family = type(inst.term).__name__
    fam = stats.setdefault("families", {}).setdefault(family, {"terms": 0, "tightenable": 0, "rejections": 0})
    fam["terms"] += 1
    candidates = alg.elements(int(least.value) + 3)
    above = [e for e in candidates if alg.leq(least, e)]
    below = [e for e in candidates if not alg.leq(least, e)]
    for bound in rng.sample(above, min(3, len(above))):
        try:
            _check_bound(inst, alg, bound)
        except EffectBoundError as err:
            raise PropertyFailure(f"weakening to {bound} was rejected: {err}", "subeff") from err
    if below:
        fam["tightenable"] += 1
    for bound in below:
        try:
            _check_bound(inst, alg, bound)
        except EffectBoundError:
            fam["rejections"] += 1
            continue
        raise PropertyFailure(f"tightening to {bound} below the least effect {least} was accepted", "subeff")


def _check_bound(inst: Instance, alg: EffectAlgebra, bound) -> None:
    check_comp(list(inst.ctx), inst.term, inst.type, bound, alg)


def weaken(vec: GradeVec, rng: random.Random) -> GradeVec:
    """A random vector lying below ``vec`` in the grade order (a less restrictive demand)."""
    alg = vec.algebra
    out = []
    for g in vec:
        bound = g.value + 2 if alg.numeric else 4
        below = [h for h in alg.elements(bound) if alg.leq(h, g)]
        out.append(rng.choice(below + [g]))
    return GradeVec(alg, tuple(out))


def prop_subcoeff(inst: Instance, alg: CoeffectAlgebra, rng: random.Random, stats: dict) -> None:
    e = _co_elab(inst, alg)
    declared = weaken(e.vec, rng)
    try:
        check_declared(declared, e.vec)
    except GradeViolation as err:
        raise PropertyFailure(f"weakened vector {declared} rejected: {err}", "subcoeff") from err
    try:
        canonical = coeffect_eval.ceval(e.vec, inst.env, e, alg).terminal
        weakened = coeffect_eval.ceval(declared, inst.env, e, alg).terminal
    except GradeViolation as err:
        raise PropertyFailure(f"evaluation at {declared} violated a grade: {err}", "subcoeff") from err
    if canonical != weakened:
        raise PropertyFailure("weakened run produced a different terminal", "subcoeff")
    stats["strict_weakenings"] = stats.get("strict_weakenings", 0) + (declared != e.vec)


def prop_co_sound(inst: Instance, alg: CoeffectAlgebra, rng: random.Random, stats: dict) -> None:
    e = _co_elab(inst, alg)
    declared = weaken(e.vec, rng)
    try:
        coeffect_eval.ceval(declared, inst.env, e, alg)
    except GradeViolation as err:
        raise PropertyFailure(f"well-typed run violated a grade: {err}", "co-sound") from err


def prop_res_sound(inst: Instance, alg: CoeffectAlgebra, stats: dict) -> None:
    e = _co_elab(inst, alg)
    run = coeffect_eval.leval(e.vec, inst.env, e, alg, usage=alg.numeric)
    stats["junk_slots"] = stats.get("junk_slots", 0) + sum(isinstance(w, coeffect_eval.Junk) for w in inst.env)
    if run.usage is not None:
        for i, (used, g) in enumerate(zip(run.usage, e.vec)):
            if used > g.value:
                raise PropertyFailure(f"slot {i} used {used} times against a static grade of {g}", "res-sound")


# --- suite runner ---------------------------------------------------------------------


def _mode_for(suite: str) -> str:
    return "effect" if suite in ("eff-sound", "subeff") else "coeffect"


def _default_algebra(mode: str) -> str:
    return "nat-cost" if mode == "effect" else "nat-usage"


def run_suite(suite: str, cfg: GenConfig) -> SuiteResult:
    """Run one named suite.  ``cfg.mode`` only matters for ``determinism``."""
    if suite not in SUITES:
        raise UserError(f"unknown suite {suite!r}; expected one of {', '.join(SUITES)}", rule="soundness")
    start = time.perf_counter()
    if suite == "canonical":
        from .oracle import canonical_suite

        result = canonical_suite(cfg)
    elif suite.startswith("preserve-"):
        from .srcgen import preservation_suite

        result = preservation_suite(suite.removeprefix("preserve-"), cfg)
    else:
        result = _run_generated(suite, cfg)
    result.seconds = time.perf_counter() - start
    return result


def _run_generated(suite: str, cfg: GenConfig) -> SuiteResult:
    mode = cfg.mode if suite == "determinism" else _mode_for(suite)
    cfg = replace(cfg, mode=mode)
    if mode == "effect":
        effect_algebra(cfg.algebra)
    else:
        alg = coeffect_algebra(cfg.algebra)
        if suite == "res-sound" and not alg.supports_resources:
            raise RefusedAlgebra(f"{alg.name} lacks the properties resource tracking relies on", rule="res-sound")
    result = SuiteResult(suite, cfg.algebra, cfg.trials)
    for i in range(cfg.trials):
        seed = trial_seed(cfg.seed, i)
        rng = random.Random(seed ^ 0x5EED)
        inst = gen_typed(cfg, seed, closed=(suite == "eff-sound"), returner=(suite == "eff-sound"))
        junk = frozenset()
        if suite == "res-sound":
            e = _co_elab(inst, coeffect_algebra(cfg.algebra))
            junk = frozenset(k for k, g in enumerate(e.vec) if e.vec.algebra.is_zero(g))
        inst = replace(inst, env=gen_env(inst.ctx, cfg, rng, junk))

        def check(candidate: Instance, stats: dict) -> None:
            prop_rng = random.Random(seed ^ 0xC0FFEE)
            match suite:
                case "eff-sound":
                    prop_eff_sound(candidate, effect_algebra(cfg.algebra), stats)
                case "determinism":
                    prop_determinism(candidate, cfg, stats)
                case "subeff":
                    prop_subeff(candidate, effect_algebra(cfg.algebra), prop_rng, stats)
                case "subcoeff":
                    prop_subcoeff(candidate, coeffect_algebra(cfg.algebra), prop_rng, stats)
                case "co-sound":
                    prop_co_sound(candidate, coeffect_algebra(cfg.algebra), prop_rng, stats)
                case "res-sound":
                    prop_res_sound(candidate, coeffect_algebra(cfg.algebra), stats)

        record_failure(result, inst, check)
    return result


def still_fails(check: Callable[[Instance, dict], None]) -> Callable[[Instance], bool]:
    """Wrap a property so that it answers "does this (well-typed) candidate fail?"."""

    def fails(candidate: Instance) -> bool:
        try:
            check(candidate, {})
        except (PropertyFailure, Defect):
            return True
        except UserError:
            return False  # the candidate is ill-typed; not a counterexample
        return False

    return fails


def record_failure(result: SuiteResult, inst: Instance, check: Callable[[Instance, dict], None]) -> None:
    try:
        check(inst, result.stats)
        return
    except PropertyFailure as err:
        message, rule = str(err), err.rule
    except GradiumError as err:
        message, rule = str(err), err.rule
    small = shrink(inst, still_fails(check))
    result.failures.append(Counterexample(inst.seed, message, rule, inst.show(), small.show()))
