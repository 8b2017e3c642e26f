"""Graded evaluation over elaborated derivations.

``ceval`` runs the general semantics: every node checks that the vector it is
run at lies below its canonical vector, closures capture a vector next to
their environment, and eliminations hand each premise its own vector.

``leval`` is the resource-tracking variant.  Where the governing grade is
zero the value is never computed and the junk value takes its place; junk in
a slot that gets looked up is a hard error.

Both can count variable lookups per top-level slot (``usage=True``), scaled
by the grades the lookup happens under.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .coeffect_system import Elab
from .effect_eval import ensure_recursion_limit, env_names, step_budget
from .errors import BudgetExceeded, GradeViolation, JunkUse, RefusedAlgebra, StuckError
from .grading import CoeffectAlgebra, Grade, GradeVec, coeffect_algebra
from .syntax import (
    App, Ascribe, Case, CPair, CProj, Force, Inl, Inr, Lam, Let, Pair, Proj, Return, Seq, SharedPair,
    Split, Tensor, TensorSplit, Thunk, UnitVal, Var, print_term,
)

Origins = tuple[int | None, ...]


@dataclass(frozen=True)
class GUnit:
    pass


@dataclass(frozen=True)
class GPair:
    left: "GValue"
    right: "GValue"


@dataclass(frozen=True)
class GInl:
    value: "GValue"


@dataclass(frozen=True)
class GInr:
    value: "GValue"


@dataclass(frozen=True)
class GClo:
    """A thunk closure ``clo(vec . env, {M})``."""

    vec: GradeVec
    env: tuple["GValue", ...]
    body: Elab
    origins: Origins = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class GSharedClo:
    """A suspended shared value pair; each projection closes one side."""

    vec: GradeVec
    env: tuple["GValue", ...]
    pair: Elab
    origins: Origins = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class Junk:
    pass


JUNK = Junk()
GValue = GUnit | GPair | GInl | GInr | GClo | GSharedClo | Junk


@dataclass(frozen=True)
class GReturn:
    grade: Grade
    value: GValue


@dataclass(frozen=True)
class GLam:
    vec: GradeVec
    env: tuple[GValue, ...]
    lam: Elab
    origins: Origins = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class GCPair:
    vec: GradeVec
    env: tuple[GValue, ...]
    pair: Elab
    origins: Origins = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class GTensor:
    left: GClo
    right: GClo


GTerminal = GReturn | GLam | GCPair | GTensor


# --- rendering ---------------------------------------------------------------


def _closure(vec: GradeVec, env: tuple[GValue, ...], body: str) -> str:
    return f"clo({vec}·[{', '.join(show_gvalue(w) for w in env)}], {body})"


def show_gvalue(w: GValue) -> str:
    match w:
        case GUnit():
            return "()"
        case GPair(l, r):
            return f"({show_gvalue(l)}, {show_gvalue(r)})"
        case GInl(v):
            return f"inl {show_gvalue(v)}"
        case GInr(v):
            return f"inr {show_gvalue(v)}"
        case Junk():
            return "<junk>"
        case GClo(vec, env, body):
            return _closure(vec, env, "{ " + print_term(body.term, env_names(len(env))) + " }")
        case GSharedClo(vec, env, pair):
            return _closure(vec, env, print_term(pair.term, env_names(len(env))))
    raise TypeError(f"not a graded value: {w!r}")


def show_gterminal(t: GTerminal) -> str:
    match t:
        case GReturn(q, w):
            return f"return^{q} {show_gvalue(w)}"
        case GLam(vec, env, e) | GCPair(vec, env, e):
            return _closure(vec, env, print_term(e.term, env_names(len(env))))
        case GTensor(l, r):
            return f"({show_gvalue(l)}, {show_gvalue(r)})"
    raise TypeError(f"not a graded terminal: {t!r}")


# --- evaluator ---------------------------------------------------------------


class GradedEvaluator:
    def __init__(
        self,
        alg: CoeffectAlgebra,
        resource: bool = False,
        usage: bool = False,
        slots: int = 0,
        budget: int | None = None,
    ):
        if resource and not alg.supports_resources:
            raise RefusedAlgebra(
                f"{alg.name} lacks the properties resource tracking relies on", rule="eval-lin"
            )
        if usage and not alg.numeric:
            raise RefusedAlgebra(f"usage accounting needs a numeric algebra, not {alg.name}", rule="usage")
        self.alg = alg
        self.resource = resource
        self.counting = usage
        self.usage = [0] * slots
        self.budget = step_budget() if budget is None else budget
        self.steps = 0

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.budget:
            raise BudgetExceeded(f"step budget of {self.budget} exhausted", rule="eval")

    def guard(self, gv: GradeVec, e: Elab, rule: str) -> None:
        if len(gv) != len(e.vec):
            raise StuckError(f"vector of length {len(gv)} for a context of {len(e.vec)}", rule=rule)
        for i, (have, need) in enumerate(zip(gv, e.vec)):
            if not self.alg.leq(have, need):
                f = self.alg.format
                raise GradeViolation(
                    f"slot {len(gv) - 1 - i}: grade {f(have)} does not lie below the required {f(need)}", rule=rule
                )

    def scaled(self, mult: int, q: Grade) -> int:
        return mult * q.value if self.counting else 0

    def zero(self, q: Grade) -> bool:
        return self.resource and self.alg.is_zero(q)

    # values

    def value(self, gv: GradeVec, env, org: Origins, e: Elab, mult: int) -> GValue:
        self.tick()
        v = e.term
        match v:
            case Var(i):
                self.guard(gv, e, "eval-coeff-val-var")
                w = env[-1 - i]
                if isinstance(w, Junk):
                    raise JunkUse(f"variable {v.name} (slot {i}) holds junk", rule="eval-lin-val-var")
                if self.counting and org[-1 - i] is not None:
                    self.usage[org[-1 - i]] += mult
                return w
            case UnitVal():
                self.guard(gv, e, "eval-coeff-val-unit")
                return GUnit()
            case Thunk():
                self.guard(gv, e, "eval-coeff-val-thunk")
                return GClo(e.kids[0].vec, env, e.kids[0], org)
            case Pair():
                self.guard(gv, e, "eval-coeff-val-pair")
                l, r = e.kids
                return GPair(self.value(l.vec, env, org, l, mult), self.value(r.vec, env, org, r, mult))
            case Inl() | Inr() | Ascribe():
                self.guard(gv, e, "eval-coeff-val-inj")
                w = self.value(e.kids[0].vec, env, org, e.kids[0], mult)
                match v:
                    case Inl():
                        return GInl(w)
                    case Inr():
                        return GInr(w)
                return w
            case SharedPair():
                self.guard(gv, e, "eval-coeff-val-vwith")
                return GSharedClo(e.vec, env, e, org)
            case Proj(_, idx):
                self.guard(gv, e, "eval-coeff-val-vproj")
                match self.value(e.kids[0].vec, env, org, e.kids[0], mult):
                    case GSharedClo(vec, env2, pair, org2):
                        side = pair.kids[idx - 1]
                        return self.value(vec, env2, org2, side, mult)
                raise StuckError("projection from a non-pair", rule="eval-coeff-val-vproj")
        raise StuckError(f"no value rule for {type(v).__name__}", rule="eval-coeff-val")

    # computations

    def comp(self, gv: GradeVec, env, org: Origins, e: Elab, mult: int) -> GTerminal:
        self.tick()
        alg = self.alg
        m = e.term
        match m:
            case Return(_, lit):
                self.guard(gv, e, "eval-coeff-comp-return")
                q = alg.parse(lit)
                if self.zero(q):
                    return GReturn(q, JUNK)
                v = e.kids[0]
                return GReturn(q, self.value(v.vec, env, org, v, self.scaled(mult, q)))
            case Lam():
                self.guard(gv, e, "eval-coeff-comp-abs")
                return GLam(e.vec, env, e, org)
            case CPair():
                self.guard(gv, e, "eval-coeff-comp-cpair")
                return GCPair(e.vec, env, e, org)
            case Tensor():
                self.guard(gv, e, "eval-coeff-comp-ctensor")
                l, r = e.kids
                return GTensor(GClo(l.vec, env, l, org), GClo(r.vec, env, r, org))
            case App():
                self.guard(gv, e, "eval-coeff-comp-app")
                ef, ea = e.kids
                match self.comp(ef.vec, env, org, ef, mult):
                    case GLam(vec, env2, lam, org2):
                        q = alg.parse(lam.term.grade)
                        w = JUNK if self.zero(q) else self.value(ea.vec, env, org, ea, self.scaled(mult, q))
                        body = lam.kids[0]
                        return self.comp(vec.extend(q), env2 + (w,), org2 + (None,), body, mult)
                raise StuckError("application of a non-function", rule="eval-coeff-comp-app")
            case Force():
                self.guard(gv, e, "eval-coeff-comp-force")
                v = e.kids[0]
                match self.value(v.vec, env, org, v, mult):
                    case GClo(vec, env2, body, org2):
                        return self.comp(vec, env2, org2, body, mult)
                raise StuckError("force of a non-thunk", rule="eval-coeff-comp-force")
            case Let(_, _, lit):
                self.guard(gv, e, "eval-coeff-comp-letin")
                q2 = alg.parse(lit)
                em, en = e.kids
                q1 = alg.parse(em.type.grade)
                rest, _ = en.vec.split(1)
                if self.zero(q2):
                    w = JUNK
                else:
                    match self.comp(em.vec, env, org, em, self.scaled(mult, q2)):
                        case GReturn(_, w):
                            pass
                        case _:
                            raise StuckError("let-bound computation did not return", rule="eval-coeff-comp-letin")
                return self.comp(rest.extend(alg.mul(q1, q2)), env + (w,), org + (None,), en, mult)
            case Split(_, _, lit):
                self.guard(gv, e, "eval-coeff-comp-split")
                q = alg.parse(lit)
                es, en = e.kids
                rest, _ = en.vec.split(2)
                if self.zero(q):
                    a = b = JUNK
                else:
                    match self.value(es.vec, env, org, es, self.scaled(mult, q)):
                        case GPair(a, b):
                            pass
                        case _:
                            raise StuckError("split of a non-pair", rule="eval-coeff-comp-split")
                return self.comp(rest.extend(q, q), env + (a, b), org + (None, None), en, mult)
            case Seq():
                self.guard(gv, e, "eval-coeff-comp-sequence")
                ev, en = e.kids
                if self.value(ev.vec, env, org, ev, mult) != GUnit():
                    raise StuckError("sequencing a non-unit value", rule="eval-coeff-comp-sequence")
                return self.comp(en.vec, env, org, en, mult)
            case Case(_, _, _, lit):
                self.guard(gv, e, "eval-coeff-comp-case")
                q = alg.parse(lit)
                es, el, er = e.kids
                shared = el.vec.split(1)[0].meet(er.vec.split(1)[0])
                match self.value(es.vec, env, org, es, self.scaled(mult, q)):
                    case GInl(w):
                        branch = el
                    case GInr(w):
                        branch = er
                    case _:
                        raise StuckError("case on a non-sum", rule="eval-coeff-comp-case")
                return self.comp(shared.extend(q), env + (w,), org + (None,), branch, mult)
            case CProj(_, idx):
                self.guard(gv, e, "eval-coeff-comp-proj")
                inner = e.kids[0]
                match self.comp(inner.vec, env, org, inner, mult):
                    case GCPair(vec, env2, pair, org2):
                        return self.comp(vec, env2, org2, pair.kids[idx - 1], mult)
                raise StuckError("projection from a non-pair", rule="eval-coeff-comp-proj")
            case TensorSplit(_, _, lit):
                self.guard(gv, e, "eval-coeff-comp-csplit")
                q = alg.parse(lit)
                es, en = e.kids
                rest, _ = en.vec.split(2)
                match self.comp(es.vec, env, org, es, self.scaled(mult, q)):
                    case GTensor(a, b):
                        pass
                    case _:
                        raise StuckError("split of a non-tensor", rule="eval-coeff-comp-csplit")
                return self.comp(rest.extend(q, q), env + (a, b), org + (None, None), en, mult)
        raise StuckError(f"no computation rule for {type(m).__name__}", rule="eval-coeff-comp")


@dataclass(frozen=True)
class GradedRun:
    terminal: GTerminal
    usage: tuple[int, ...] | None = None


def _run(gv, env, e: Elab, algebra, resource: bool, usage: bool, budget: int | None) -> GradedRun:
    alg = coeffect_algebra(algebra) if isinstance(algebra, str) else algebra
    ensure_recursion_limit()
    env = tuple(env)
    ev = GradedEvaluator(alg, resource=resource, usage=usage, slots=len(env), budget=budget)
    org = tuple(range(len(env)))
    if len(gv) != len(env):
        raise StuckError(f"{len(gv)} grades for an environment of {len(env)}", rule="eval")
    t = ev.comp(gv, env, org, e, 1) if not _is_value_elab(e) else ev.value(gv, env, org, e, 1)
    return GradedRun(t, tuple(ev.usage) if usage else None)


def _is_value_elab(e: Elab) -> bool:
    from .syntax import is_value

    return is_value(e.term)


def ceval(gv: GradeVec, env, e: Elab, algebra="nat-usage", usage: bool = False, budget: int | None = None) -> GradedRun:
    """General graded semantics; ``e`` is an elaborated term closed under ``env``."""
    return _run(gv, env, e, algebra, False, usage, budget)


def leval(gv: GradeVec, env, e: Elab, algebra="nat-usage", usage: bool = False, budget: int | None = None) -> GradedRun:
    """Resource semantics: zero-graded values are skipped and replaced by junk."""
    return _run(gv, env, e, algebra, True, usage, budget)


def ceval_comp(gv, env, e: Elab, algebra="nat-usage") -> GTerminal:
    return ceval(gv, env, e, algebra).terminal


def ceval_value(gv, env, e: Elab, algebra="nat-usage") -> GValue:
    return ceval(gv, env, e, algebra).terminal  # type: ignore[return-value]


def leval_comp(gv, env, e: Elab, algebra="nat-usage") -> GTerminal:
    return leval(gv, env, e, algebra).terminal


def usage_of(run: GradedRun) -> tuple[int, ...]:
    if run.usage is None:
        raise RefusedAlgebra("the run was made without usage accounting", rule="usage")
    return run.usage
