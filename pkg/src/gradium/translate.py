"""Translations from the source calculi into graded CBPV, plus preservation checks.

Each translator is syntax-directed.  It builds the target term with named
variables and resolves them to indices at the end.  Binders introduced by a
translation get unique ``_``-prefixed names during construction (source names
cannot start with ``_``), so capture is impossible.  Their display names are
then reset to short hints, and the printer renames any clash.

Source ``int`` is rendered as ``unit``, since the target has no numeric base type.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from . import coeffect_system, effect_system
from .errors import Defect, GradiumError, TypeCheckError
from .grading import CoeffectAlgebra, Effect, EffectAlgebra, GradeVec, coeffect_algebra, effect_algebra
from .lam import (
    LAnnot, LApp, LBind, LBox, LCase, LDiscard, LDivide, LExtend, LExtract, LInl, LInr, LLam, LPair,
    LProj, LReturn, LSeq, LSplit, LTick, LUnbox, LUnit, LVar, LWith, SourceProgram, SourceTyping, Src,
    SType, TArrow, TBox, TLolli, TMonad, TSum, TTensor, TUnit, TWith, normalized_context, show_stype,
    src_check,
)
from .syntax import (
    App, Ascribe, Case, CompPairType, CPair, CProj, Force, FunType, Inl, Inr, Lam, Let, Pair,
    PairType, Prim, Program, Return, ReturnerType, Seq, Split, SumType, Thunk, ThunkType, UnitType,
    UnitVal, Var, map_subterms, print_type, resolve,
)


class PreservationFailure(Defect):
    """A well-typed source term whose translation misses the expected judgement."""


def _v(name: str) -> Var:
    return Var(0, name)


class _Fresh:
    def __init__(self):
        self.counter = itertools.count()
        self.hints: dict[str, str] = {}

    def __call__(self, hint: str) -> str:
        name = f"_{hint}{next(self.counter)}"
        self.hints[name] = hint
        return name

    def tidy(self, t):
        """Replace internal binder names by their hints (indices are already fixed)."""
        kw = {}
        if isinstance(getattr(t, "name", None), str):
            kw["name"] = self.hints.get(t.name, t.name)
        if isinstance(getattr(t, "names", None), tuple):
            kw["names"] = tuple(self.hints.get(n, n) for n in t.names)
        t = replace(t, **kw) if kw else t
        return map_subterms(t, lambda c, _: self.tidy(c))


# --- type translations -------------------------------------------------------


def _bad_type(t: SType, dialect: str) -> TypeCheckError:
    return TypeCheckError(f"{show_stype(t)} has no {dialect} translation", rule="translate-type")


def cbv_eff_type(t: SType):
    match t:
        case TUnit():
            return UnitType()
        case TArrow(d, c, phi):
            return ThunkType(FunType(cbv_eff_type(d), ReturnerType(cbv_eff_type(c))), phi)
        case TTensor(l, r):
            return PairType(cbv_eff_type(l), cbv_eff_type(r))
        case TSum(l, r):
            return SumType(cbv_eff_type(l), cbv_eff_type(r))
    raise _bad_type(t, "cbv-eff")


def cbn_mon_type(t: SType, pure: str):
    def thunk(s):
        return ThunkType(cbn_mon_type(s, pure), pure)

    match t:
        case TUnit():
            return ReturnerType(UnitType())
        case TArrow(d, c):
            return FunType(thunk(d), cbn_mon_type(c, pure))
        case TWith(l, r):
            return CompPairType(cbn_mon_type(l, pure), cbn_mon_type(r, pure))
        case TSum(l, r):
            return ReturnerType(SumType(thunk(l), thunk(r)))
        case TMonad(phi, b):
            return ReturnerType(ThunkType(ReturnerType(thunk(b)), phi))
    raise _bad_type(t, "cbn-mon")


def cbv_mon_type(t: SType, pure: str):
    match t:
        case TUnit():
            return UnitType()
        case TArrow(d, c):
            return ThunkType(FunType(cbv_mon_type(d, pure), ReturnerType(cbv_mon_type(c, pure))), pure)
        case TTensor(l, r):
            return PairType(cbv_mon_type(l, pure), cbv_mon_type(r, pure))
        case TSum(l, r):
            return SumType(cbv_mon_type(l, pure), cbv_mon_type(r, pure))
        case TMonad(phi, b):
            return ThunkType(ReturnerType(cbv_mon_type(b, pure)), phi)
    raise _bad_type(t, "cbv-mon")


def cbn_co_type(t: SType):
    match t:
        case TUnit():
            return ReturnerType(UnitType(), "1")
        case TArrow(d, c, q):
            return FunType(ThunkType(cbn_co_type(d)), cbn_co_type(c), q)
        case TLolli(d, c):
            return FunType(ThunkType(cbn_co_type(d)), cbn_co_type(c), "1")
        case TWith(l, r):
            return CompPairType(cbn_co_type(l), cbn_co_type(r))
        case TSum(l, r):
            return ReturnerType(SumType(ThunkType(cbn_co_type(l)), ThunkType(cbn_co_type(r))), "1")
        case TBox(q, b):
            return ReturnerType(ThunkType(cbn_co_type(b)), q)
    raise _bad_type(t, "call-by-name coeffect")


def cbv_co_type(t: SType):
    match t:
        case TUnit():
            return UnitType()
        case TArrow(d, c, q):
            return ThunkType(FunType(cbv_co_type(d), ReturnerType(cbv_co_type(c), "1"), q))
        case TTensor(l, r):
            return PairType(cbv_co_type(l), cbv_co_type(r))
        case TSum(l, r):
            return SumType(cbv_co_type(l), cbv_co_type(r))
        case TBox(q, b):
            return ThunkType(ReturnerType(cbv_co_type(b), q))
    raise _bad_type(t, "cbv-co")


def cbv_comonad_type(t: SType):
    match t:
        case TUnit():
            return UnitType()
        case TLolli(d, c):
            return ThunkType(FunType(cbv_comonad_type(d), ReturnerType(cbv_comonad_type(c), "1"), "1"))
        case TBox(q, b):
            inner = ThunkType(ReturnerType(cbv_comonad_type(b), "1"))
            return ThunkType(ReturnerType(inner, q))
    raise _bad_type(t, "cbv-comonad")


# --- term translations -------------------------------------------------------


class _Translator:
    def __init__(self, typing: SourceTyping, fresh: _Fresh):
        self.typing = typing
        self.fresh = fresh

    def ty(self, e: Src) -> SType:
        return self.typing.type_of(e)

    def unsupported(self, e: Src):
        return TypeCheckError(f"{type(e).__name__} has no translation in this dialect", rule="translate")


class CbvEffect(_Translator):
    def type(self, t: SType):
        return cbv_eff_type(t)

    def context_type(self, t: SType):
        return cbv_eff_type(t)

    def go(self, e: Src):
        f = self.fresh
        match e:
            case LVar(n):
                return Return(_v(n))
            case LUnit():
                return Return(UnitVal())
            case LTick():
                return Prim("tick")
            case LLam(n, d, b):
                body = Lam(self.go(b), annot=self.type(d), name=n)
                return Return(Ascribe(Thunk(body), self.type(self.ty(e))))
            case LApp(fn, arg):
                g, a = f("f"), f("a")
                return Let(self.go(fn), Let(self.go(arg), App(Force(_v(g)), _v(a)), name=a), name=g)
            case LPair(l, r):
                a, b = f("a"), f("b")
                return Let(self.go(l), Let(self.go(r), Return(Pair(_v(a), _v(b))), name=b), name=a)
            case LSplit(x, y, s, b):
                p = f("p")
                return Let(self.go(s), Split(_v(p), self.go(b), names=(x, y)), name=p)
            case LInl(v) | LInr(v):
                a = f("a")
                inj = Inl(_v(a)) if isinstance(e, LInl) else Inr(_v(a))
                return Let(self.go(v), Return(Ascribe(inj, self.type(self.ty(e)))), name=a)
            case LCase(s, x, l, y, r):
                sv = f("s")
                return Let(self.go(s), Case(_v(sv), self.go(l), self.go(r), names=(x, y)), name=sv)
            case LSeq(a, b):
                u = f("u")
                return Let(self.go(a), Seq(_v(u), self.go(b)), name=u)
            case LAnnot(t):
                return self.go(t)
        raise self.unsupported(e)


class CbnMonad(_Translator):
    def __init__(self, typing, fresh, alg: EffectAlgebra):
        super().__init__(typing, fresh)
        self.alg = alg
        self.pure = alg.format(alg.unit)

    def type(self, t: SType):
        return cbn_mon_type(t, self.pure)

    def context_type(self, t: SType):
        return ThunkType(self.type(t), self.pure)

    def thunk_of(self, t: SType):
        return ThunkType(self.type(t), self.pure)

    def go(self, e: Src):
        f = self.fresh
        match e:
            case LVar(n):
                return Force(_v(n))
            case LUnit():
                return Return(UnitVal())
            case LLam(n, d, b):
                return Lam(self.go(b), annot=self.context_type(d), name=n)
            case LApp(fn, arg):
                return App(self.go(fn), Thunk(self.go(arg)))
            case LWith(l, r):
                return CPair(self.go(l), self.go(r))
            case LProj(i, v):
                return CProj(self.go(v), i)
            case LInl(v) | LInr(v):
                inj = Inl(Thunk(self.go(v))) if isinstance(e, LInl) else Inr(Thunk(self.go(v)))
                return Return(Ascribe(inj, self.type(self.ty(e)).val))
            case LCase(s, x, l, y, r):
                sv = f("s")
                return Let(self.go(s), Case(_v(sv), self.go(l), self.go(r), names=(x, y)), name=sv)
            case LReturn(v):
                inner = Return(Ascribe(Thunk(self.go(v)), self.thunk_of(self.ty(v))))
                return Return(Ascribe(Thunk(inner), ThunkType(ReturnerType(self.thunk_of(self.ty(v))), self.pure)))
            case LBind(x, m, b):
                y, z = f("y"), f("z")
                run_first = Let(self.go(m), Force(_v(y)), name=y)
                rest = Let(self.go(b), Force(_v(z)), name=z)
                return Return(Ascribe(Thunk(Let(run_first, rest, name=x)), self.type(self.ty(e)).val))
            case LTick():
                u = f("u")
                unit_thunk = ThunkType(ReturnerType(UnitType()), self.pure)
                body = Let(Prim("tick"), Return(Ascribe(Thunk(Return(_v(u))), unit_thunk)), name=u)
                return Return(Ascribe(Thunk(body), self.type(self.ty(e)).val))
            case LAnnot(t):
                return self.go(t)
        raise self.unsupported(e)


class CbvMonad(CbvEffect):
    def __init__(self, typing, fresh, alg: EffectAlgebra):
        super().__init__(typing, fresh)
        self.pure = alg.format(alg.unit)

    def type(self, t: SType):
        return cbv_mon_type(t, self.pure)

    def context_type(self, t: SType):
        return self.type(t)

    def go(self, e: Src):
        f = self.fresh
        match e:
            case LTick():
                u = f("u")
                body = Let(Prim("tick"), Return(_v(u)), name=u)
                return Return(Ascribe(Thunk(body), self.type(self.ty(e))))
            case LReturn(v):
                return Return(Ascribe(Thunk(self.go(v)), self.type(self.ty(e))))
            case LBind(x, m, b):
                y, z = f("y"), f("z")
                inner = Let(Force(_v(y)), Let(self.go(b), Force(_v(z)), name=z), name=x)
                return Let(self.go(m), Return(Ascribe(Thunk(inner), self.type(self.ty(e)))), name=y)
        return super().go(e)


class CbnCoeffect(_Translator):
    """Call-by-name coeffect translation; shared with the comonadic CBN calculus."""

    def type(self, t: SType):
        return cbn_co_type(t)

    def context_type(self, t: SType):
        return ThunkType(self.type(t))

    def go(self, e: Src):
        f = self.fresh
        match e:
            case LVar(n):
                return Force(_v(n))
            case LUnit():
                return Return(UnitVal(), "1")
            case LLam(n, d, b, q):
                return Lam(self.go(b), q or "1", self.context_type(d), name=n)
            case LApp(fn, arg):
                return App(self.go(fn), Thunk(self.go(arg)))
            case LWith(l, r):
                return CPair(self.go(l), self.go(r))
            case LProj(i, v):
                return CProj(self.go(v), i)
            case LSeq(a, b):
                u = f("u")
                return Let(self.go(a), Seq(_v(u), self.go(b)), "1", name=u)
            case LInl(v) | LInr(v):
                inj = Inl(Thunk(self.go(v))) if isinstance(e, LInl) else Inr(Thunk(self.go(v)))
                return Return(Ascribe(inj, self.type(self.ty(e)).val), "1")
            case LCase(s, x, l, y, r, q):
                sv = f("s")
                return Let(self.go(s), Case(_v(sv), self.go(l), self.go(r), q, names=(x, y)), q, name=sv)
            case LBox(q, v):
                return Return(Thunk(self.go(v)), q)
            case LUnbox(q, x, m, b):
                return Let(self.go(m), self.go(b), q, name=x)
            case LExtract(v):
                x = f("x")
                return Let(self.go(v), Force(_v(x)), "1", name=x)
            case LExtend(q, binders, body):
                contents = {x: f(x + "'") for x, _, _ in binders}
                inner = self.go(body)
                for x, qx, _ in reversed(binders):
                    rebox = Return(Thunk(Return(_v(contents[x]), qx)), "1")
                    inner = Let(rebox, inner, "1", name=x)
                out = Return(Thunk(inner), q)
                for x, _, m in reversed(binders):
                    out = Let(self.go(m), out, "1", name=contents[x])
                return out
            case LDivide(x1, q1, x2, q2, m, b):
                x = f("x")
                body = Let(
                    Return(Thunk(Return(_v(x), q1)), "1"),
                    Let(Return(Thunk(Return(_v(x), q2)), "1"), self.go(b), "1", name=x2),
                    "1",
                    name=x1,
                )
                return Let(self.go(m), body, "1", name=x)
            case LDiscard(m, b):
                return Let(self.go(m), self.go(b), "1", name=f("x"))
            case LAnnot(t):
                return self.go(t)
        raise self.unsupported(e)

class CbvCoeffect(_Translator):
    def type(self, t: SType):
        return cbv_co_type(t)

    def context_type(self, t: SType):
        return self.type(t)

    def go(self, e: Src):
        f = self.fresh
        match e:
            case LVar(n):
                return Return(_v(n), "1")
            case LUnit():
                return Return(UnitVal(), "1")
            case LLam(n, d, b, q):
                return Return(Thunk(Lam(self.go(b), q or "1", self.type(d), name=n)), "1")
            case LApp(fn, arg):
                g, y = f("f"), f("y")
                q = self.ty(fn).grade
                return Let(self.go(fn), Let(self.go(arg), App(Force(_v(g)), _v(y)), q, name=y), "1", name=g)
            case LPair(l, r):
                a, b = f("a"), f("b")
                return Let(self.go(l), Let(self.go(r), Return(Pair(_v(a), _v(b)), "1"), "1", name=b), "1", name=a)
            case LSplit(x, y, s, b, q):
                p = f("p")
                return Let(self.go(s), Split(_v(p), self.go(b), q, names=(x, y)), q, name=p)
            case LInl(v) | LInr(v):
                a = f("a")
                inj = Inl(_v(a)) if isinstance(e, LInl) else Inr(_v(a))
                return Let(self.go(v), Return(Ascribe(inj, self.type(self.ty(e))), "1"), "1", name=a)
            case LCase(s, x, l, y, r, q):
                sv = f("s")
                return Let(self.go(s), Case(_v(sv), self.go(l), self.go(r), q, names=(x, y)), q, name=sv)
            case LSeq(a, b):
                u = f("u")
                return Let(self.go(a), Seq(_v(u), self.go(b)), "1", name=u)
            case LBox(q, v):
                x = f("x")
                return Return(Thunk(Let(self.go(v), Return(_v(x), q), q, name=x)), "1")
            case LUnbox(q, x, m, b):
                y = f("y")
                return Let(self.go(m), Let(Force(_v(y)), self.go(b), q, name=x), q, name=y)
            case LAnnot(t):
                return self.go(t)
        raise self.unsupported(e)


class CbvComonad(_Translator):
    def type(self, t: SType):
        return cbv_comonad_type(t)

    def context_type(self, t: SType):
        return self.type(t)

    def unwrap(self, x: str, m, body_of):
        """``x ⤳ m in body``: open a translated box, binding its content thunk as ``x``."""
        outer = self.fresh(self.fresh.hints.get(x, x) + "'")
        return Let(m, Let(Force(_v(outer)), body_of(), "1", name=x), "1", name=outer)

    def go(self, e: Src):
        f = self.fresh
        match e:
            case LVar(n):
                return Return(_v(n), "1")
            case LUnit():
                return Return(UnitVal(), "1")
            case LLam(n, d, b):
                return Return(Thunk(Lam(self.go(b), "1", self.type(d), name=n)), "1")
            case LApp(fn, arg):
                g, y = f("f"), f("y")
                return Let(self.go(fn), Let(self.go(arg), App(Force(_v(g)), _v(y)), "1", name=y), "1", name=g)
            case LSeq(a, b):
                u = f("u")
                return Let(self.go(a), Seq(_v(u), self.go(b)), "1", name=u)
            case LExtract(v):
                x = f("x")
                return self.unwrap(x, self.go(v), lambda: Force(_v(x)))
            case LExtend(q, binders, body):
                contents = {x: f(x + "'") for x, _, _ in binders}

                def inner():
                    out = self.go(body)
                    for x, qx, _ in reversed(binders):
                        rebox = Return(Thunk(Return(_v(contents[x]), qx)), "1")
                        out = Let(rebox, out, "1", name=x)
                    return Return(Thunk(Return(Thunk(out), q)), "1")

                def nest(i: int):
                    if i == len(binders):
                        return inner()
                    x, _, m = binders[i]
                    return self.unwrap(contents[x], self.go(m), lambda: nest(i + 1))

                return nest(0)
            case LDivide(x1, q1, x2, q2, m, b):
                x = f("x")

                def split_body():
                    return Let(
                        Return(Thunk(Return(_v(x), q1)), "1"),
                        Let(Return(Thunk(Return(_v(x), q2)), "1"), self.go(b), "1", name=x2),
                        "1",
                        name=x1,
                    )

                return self.unwrap(x, self.go(m), split_body)
            case LDiscard(m, b):
                return self.unwrap(f("x"), self.go(m), lambda: self.go(b))
            case LAnnot(t):
                return self.go(t)
        raise self.unsupported(e)


# --- drivers -----------------------------------------------------------------


@dataclass(frozen=True)
class Translation:
    source: SourceProgram
    typing: SourceTyping
    program: Program
    target_type: object

    @property
    def mode(self) -> str:
        return self.program.mode


def _translator(prog: SourceProgram, typing: SourceTyping, algebra: str | None) -> _Translator:
    fresh = _Fresh()
    match prog.dialect:
        case "cbv-eff":
            return CbvEffect(typing, fresh)
        case "cbn-mon":
            return CbnMonad(typing, fresh, effect_algebra(algebra or "nat-cost"))
        case "cbv-mon":
            return CbvMonad(typing, fresh, effect_algebra(algebra or "nat-cost"))
        case "cbn-co" | "cbn-comonad":
            return CbnCoeffect(typing, fresh)
        case "cbv-co":
            return CbvCoeffect(typing, fresh)
        case "cbv-comonad":
            return CbvComonad(typing, fresh)
    raise TypeCheckError(f"no translation for dialect {prog.dialect!r}", rule="translate")


def _target_type(prog: SourceProgram, tr: _Translator, t: SType):
    """The judgement's computation type: ``F ⟦t⟧`` for CBV targets, ``⟦t⟧`` for CBN."""
    if prog.strategy == "cbn":
        return tr.type(t)
    grade = None if prog.family in ("effect", "monadic") else "1"
    return ReturnerType(tr.type(t), grade)


def translate(prog: SourceProgram, algebra: str | None = None, typing: SourceTyping | None = None) -> Translation:
    """Translate a checked source program.  The result's term is closed over the translated context."""
    typing = typing or src_check(prog, algebra)
    tr = _translator(prog, typing, algebra)
    ctx = normalized_context(prog, algebra)
    names = [n for n, _ in ctx]
    raw = tr.go(prog.term)
    term = tr.fresh.tidy(resolve(raw, names))
    mode = "effect" if prog.family in ("effect", "monadic") else "coeffect"
    context = tuple((n, tr.context_type(t)) for n, t in ctx)
    return Translation(prog, typing, Program(mode, context, term), _target_type(prog, tr, typing.type))


@dataclass(frozen=True)
class PreservationReport:
    dialect: str
    target_type: object
    effect: Effect | None = None
    vec: GradeVec | None = None
    declared: GradeVec | None = None

    def describe(self) -> str:
        grading = ""
        if self.effect is not None:
            grading = f" at effect {self.effect}"
        elif self.vec is not None:
            grading = f" with demand {self.vec} (declared {self.declared})"
        return f"{self.dialect}: {print_type(self.target_type)}{grading}"


def check_preservation(prog: SourceProgram, algebra: str | None = None) -> tuple[Translation, PreservationReport]:
    """Translate and confirm the target judgement has the shape the dialect promises.

    Effect dialects: CBV-effect targets must land at ``F ⟦t⟧`` with exactly the
    source effect; monadic targets are pure.  Coeffect dialects: the source
    vector (all ones for the linear calculus) must be an acceptable declaration
    for the target's canonical vector.
    """
    typing = src_check(prog, algebra)
    tr = translate(prog, algebra, typing)
    target = tr.program
    try:
        if prog.family in ("effect", "monadic"):
            alg = effect_algebra(algebra or "nat-cost")
            want = typing.effect if prog.family == "effect" else alg.unit
            rep = effect_system.check_program(target, alg, expect_type=tr.target_type)
            if rep.effect != want:
                raise PreservationFailure(
                    f"target effect {rep.effect} differs from the expected {alg.format(want)}", rule="preserve"
                )
            return tr, PreservationReport(prog.dialect, rep.type, effect=rep.effect)
        calg = coeffect_algebra(algebra or "nat-usage")
        if prog.family == "coeffect":
            declared = typing.vec
        else:
            declared = GradeVec(calg, tuple(calg.one for _ in prog.context))
        rep = coeffect_system.check_program(target, calg, declared, expect_type=tr.target_type)
        return tr, PreservationReport(prog.dialect, rep.type, vec=rep.vec, declared=declared)
    except PreservationFailure:
        raise
    except GradiumError as err:
        raise PreservationFailure(f"translation of a well-typed term fails to check: {err}", rule="preserve") from err
