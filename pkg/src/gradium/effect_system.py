"""Effect typing: synthesises a computation's type together with its least effect.

Checking is bidirectional.  Thunks, injections and un-annotated lambdas are
checked against an expected type; everything else synthesises.  A declared
bound is compared against the least effect once, at the root.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import EffectBoundError, TypeCheckError
from .grading import Effect, EffectAlgebra, effect_algebra
from .syntax import (
    App, Ascribe, Case, CompPairType, CompType, CPair, CProj, Force, FunType, Inl, Inr, Lam, Let,
    Pair, PairType, Prim, Program, Proj, Return, ReturnerType, Seq, SharedPair, SharedPairType,
    Split, SumType, Tensor, TensorSplit, TensorType, Thunk, ThunkType, UnitType, UnitVal, ValType,
    Var, print_type,
)

Ctx = list[ValType]


@dataclass(frozen=True)
class EffectReport:
    type: CompType
    effect: Effect


def normalize_type(t, alg: EffectAlgebra):
    """Canonicalise effect literals and reject types outside effect mode."""
    match t:
        case UnitType():
            return t
        case ThunkType(body, eff):
            if eff is None:
                raise TypeCheckError("thunk types need an effect annotation", rule="eff-type")
            return ThunkType(normalize_type(body, alg), alg.format(alg.parse(eff)))
        case PairType(l, r):
            return PairType(normalize_type(l, alg), normalize_type(r, alg))
        case SumType(l, r):
            return SumType(normalize_type(l, alg), normalize_type(r, alg))
        case CompPairType(l, r):
            return CompPairType(normalize_type(l, alg), normalize_type(r, alg))
        case FunType(dom, cod, grade) if grade is None:
            return FunType(normalize_type(dom, alg), normalize_type(cod, alg))
        case ReturnerType(val, grade) if grade is None:
            return ReturnerType(normalize_type(val, alg))
        case SharedPairType() | TensorType():
            raise TypeCheckError(f"{print_type(t)} is a coeffect-mode type", rule="eff-type")
    raise TypeCheckError(f"{print_type(t)} carries a grade, which effect mode does not use", rule="eff-type")


def _mismatch(rule: str, expected, got) -> TypeCheckError:
    return TypeCheckError(f"expected {print_type(expected)}, found {print_type(got)}", rule=rule)


class EffectChecker:
    def __init__(self, alg: EffectAlgebra):
        self.alg = alg

    def lookup(self, ctx: Ctx, i: int) -> ValType:
        if i >= len(ctx):
            raise TypeCheckError(f"variable index {i} is out of scope", rule="eff-var")
        return ctx[-1 - i]

    # values

    def infer_value(self, ctx: Ctx, v) -> ValType:
        match v:
            case Var(i):
                return self.lookup(ctx, i)
            case UnitVal():
                return UnitType()
            case Thunk(body):
                b, eff = self.infer(ctx, body)
                return ThunkType(b, self.alg.format(eff))
            case Pair(l, r):
                return PairType(self.infer_value(ctx, l), self.infer_value(ctx, r))
            case Inl() | Inr():
                raise TypeCheckError("cannot infer the type of an injection; ascribe it", rule="eff-inj")
            case Ascribe(inner, ty):
                ty = normalize_type(ty, self.alg)
                self.check_value(ctx, inner, ty)
                return ty
            case SharedPair() | Proj():
                raise TypeCheckError("shared value products are not part of effect mode", rule="eff-val")
        raise TypeCheckError(f"not a value: {v!r}")

    def check_value(self, ctx: Ctx, v, ty: ValType) -> None:
        match v, ty:
            case Thunk(body), ThunkType(b, eff):
                got = self.check(ctx, body, b)
                bound = self.alg.parse(eff)
                if not self.alg.leq(got, bound):
                    raise EffectBoundError(
                        f"thunk body has effect {self.alg.format(got)}, which exceeds {eff}", rule="eff-thunk"
                    )
            case Inl(inner), SumType(l, _):
                self.check_value(ctx, inner, l)
            case Inr(inner), SumType(_, r):
                self.check_value(ctx, inner, r)
            case (Inl() | Inr()), _:
                raise TypeCheckError(f"an injection cannot have type {print_type(ty)}", rule="eff-inj")
            case Pair(l, r), PairType(tl, tr):
                self.check_value(ctx, l, tl)
                self.check_value(ctx, r, tr)
            case _:
                got = self.infer_value(ctx, v)
                if got != ty:
                    raise _mismatch("eff-val", ty, got)

    # computations

    def infer(self, ctx: Ctx, m) -> tuple[CompType, Effect]:
        alg = self.alg
        match m:
            case Prim(op):
                return ReturnerType(UnitType()), alg.prim(op)
            case Return(v):
                return ReturnerType(self.infer_value(ctx, v)), alg.unit
            case Lam(body, _, annot):
                if annot is None:
                    raise TypeCheckError("cannot infer a lambda's argument type; annotate the binder", rule="eff-abs")
                dom = normalize_type(annot, alg)
                b, eff = self.infer(ctx + [dom], body)
                return FunType(dom, b), eff
            case App(Lam(body, _, None), arg):
                dom = self.infer_value(ctx, arg)
                return self.infer(ctx + [dom], body)
            case App(fn, arg):
                match self.infer(ctx, fn):
                    case FunType(dom, cod), eff:
                        self.check_value(ctx, arg, dom)
                        return cod, eff
                    case other, _:
                        raise TypeCheckError(f"applying a term of type {print_type(other)}", rule="eff-app")
            case Force(v):
                match self.infer_value(ctx, v):
                    case ThunkType(b, eff):
                        return b, alg.parse(eff)
                    case other:
                        raise TypeCheckError(f"forcing a value of type {print_type(other)}", rule="eff-force")
            case Let(bound, body):
                a, e1 = self.returner(ctx, bound)
                b, e2 = self.infer(ctx + [a], body)
                return b, alg.combine(e1, e2)
            case Split(scrut, body):
                l, r = self.pair_of(ctx, scrut)
                return self.infer(ctx + [l, r], body)
            case Seq(v, body):
                self.check_value(ctx, v, UnitType())
                return self.infer(ctx, body)
            case Case(scrut, left, right):
                l, r = self.sum_of(ctx, scrut)
                bl, el = self.infer(ctx + [l], left)
                br, er = self.infer(ctx + [r], right)
                if bl != br:
                    raise _mismatch("eff-case", bl, br)
                return bl, alg.join(el, er)
            case CPair(left, right):
                bl, el = self.infer(ctx, left)
                br, er = self.infer(ctx, right)
                return CompPairType(bl, br), alg.join(el, er)
            case CProj(inner, i):
                match self.infer(ctx, inner):
                    case CompPairType(l, r), eff:
                        return (l if i == 1 else r), eff
                    case other, _:
                        raise TypeCheckError(f"projecting from {print_type(other)}", rule="eff-proj")
            case Tensor() | TensorSplit():
                raise TypeCheckError("computation tensors are not part of effect mode", rule="eff-comp")
        raise TypeCheckError(f"not a computation: {m!r}")

    def returner(self, ctx: Ctx, m) -> tuple[ValType, Effect]:
        match self.infer(ctx, m):
            case ReturnerType(a), eff:
                return a, eff
            case other, _:
                raise TypeCheckError(f"let binds a returner, found {print_type(other)}", rule="eff-letin")

    def pair_of(self, ctx: Ctx, v) -> tuple[ValType, ValType]:
        match self.infer_value(ctx, v):
            case PairType(l, r):
                return l, r
            case other:
                raise TypeCheckError(f"splitting a value of type {print_type(other)}", rule="eff-split")

    def sum_of(self, ctx: Ctx, v) -> tuple[ValType, ValType]:
        match self.infer_value(ctx, v):
            case SumType(l, r):
                return l, r
            case other:
                raise TypeCheckError(f"case on a value of type {print_type(other)}", rule="eff-case")

    def check(self, ctx: Ctx, m, ty: CompType) -> Effect:
        """Check ``m`` against ``ty`` and return its least effect."""
        alg = self.alg
        match m, ty:
            case Lam(body, _, annot), FunType(dom, cod):
                if annot is not None and normalize_type(annot, alg) != dom:
                    raise _mismatch("eff-abs", dom, annot)
                return self.check(ctx + [dom], body, cod)
            case Return(v), ReturnerType(a):
                self.check_value(ctx, v, a)
                return alg.unit
            case App(Lam(annot=None) as fn, arg), _:
                dom = self.infer_value(ctx, arg)
                return self.check(ctx, fn, FunType(dom, ty))
            case Let(bound, body), _:
                a, e1 = self.returner(ctx, bound)
                return alg.combine(e1, self.check(ctx + [a], body, ty))
            case Split(scrut, body), _:
                l, r = self.pair_of(ctx, scrut)
                return self.check(ctx + [l, r], body, ty)
            case Seq(v, body), _:
                self.check_value(ctx, v, UnitType())
                return self.check(ctx, body, ty)
            case Case(scrut, left, right), _:
                l, r = self.sum_of(ctx, scrut)
                return alg.join(self.check(ctx + [l], left, ty), self.check(ctx + [r], right, ty))
            case CPair(left, right), CompPairType(tl, tr):
                return alg.join(self.check(ctx, left, tl), self.check(ctx, right, tr))
        got, eff = self.infer(ctx, m)
        if got != ty:
            raise _mismatch("eff-sub", ty, got)
        return eff


def infer_comp(ctx: Ctx, m, alg: EffectAlgebra) -> EffectReport:
    ty, eff = EffectChecker(alg).infer(list(ctx), m)
    return EffectReport(ty, eff)


def check_comp(ctx: Ctx, m, ty: CompType, bound: Effect | None, alg: EffectAlgebra) -> Effect:
    """Check against ``ty``; if ``bound`` is given the least effect must lie below it."""
    checker = EffectChecker(alg)
    ty = normalize_type(ty, alg)
    eff = checker.check(list(ctx), m, ty)
    if bound is not None and not alg.leq(eff, bound):
        raise EffectBoundError(
            f"least effect {alg.format(eff)} is not below the bound {alg.format(bound)}", rule="eff-sub"
        )
    return eff


def check_program(
    prog: Program,
    algebra: str | EffectAlgebra = "nat-cost",
    expect_type: CompType | None = None,
    bound: Effect | str | int | None = None,
) -> EffectReport:
    alg = effect_algebra(algebra) if isinstance(algebra, str) else algebra
    if prog.mode != "effect":
        raise TypeCheckError("effect checking needs an effect-mode program", rule="eff-mode")
    ctx = [normalize_type(t, alg) for _, t in prog.context]
    match bound:
        case str():
            bound = alg.parse(bound)
        case int():
            bound = alg.lift(bound)
    checker = EffectChecker(alg)
    if expect_type is None:
        ty, eff = checker.infer(ctx, prog.term)
    else:
        ty = normalize_type(expect_type, alg)
        eff = checker.check(ctx, prog.term, ty)
    if bound is not None and not alg.leq(eff, bound):
        raise EffectBoundError(
            f"least effect {alg.format(eff)} is not below the bound {alg.format(bound)}", rule="eff-sub"
        )
    return EffectReport(ty, eff)
