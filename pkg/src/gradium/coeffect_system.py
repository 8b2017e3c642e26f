"""Coeffect typing by canonical demand vectors.

Every node gets the least-committal vector its rule allows: a variable demands
exactly one copy of itself, scaling and addition follow the rule shapes, and
shared constructs take the meet of their components.  Binder annotations and
the caller's declared vector are the only places a comparison happens.

``elaborate`` keeps the whole derivation as an ``Elab`` tree, which the
evaluators in ``coeffect_eval`` walk instead of re-deriving vectors.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import GradeViolation, TypeCheckError
from .grading import CoeffectAlgebra, Grade, GradeVec, coeffect_algebra
from .syntax import (
    App, Ascribe, Case, CompPairType, CompType, CPair, CProj, Force, FunType, Inl, Inr, Lam, Let,
    Pair, PairType, Prim, Program, Proj, Return, ReturnerType, Seq, SharedPair, SharedPairType,
    Split, SumType, Tensor, TensorSplit, TensorType, Term, Thunk, ThunkType, UnitType, UnitVal,
    ValType, Var, is_value, print_type,
)

Ctx = list[ValType]


@dataclass(frozen=True)
class Elab:
    """A term together with its canonical vector, its type and its children's derivations."""

    term: Term
    vec: GradeVec
    type: object
    kids: tuple["Elab", ...] = ()

    def erase(self) -> Term:
        return self.term


@dataclass(frozen=True)
class CoeffectReport:
    type: object
    vec: GradeVec
    elab: Elab


def normalize_type(t, alg: CoeffectAlgebra):
    match t:
        case UnitType():
            return t
        case ThunkType(body, eff) if eff is None:
            return ThunkType(normalize_type(body, alg))
        case PairType(l, r):
            return PairType(normalize_type(l, alg), normalize_type(r, alg))
        case SumType(l, r):
            return SumType(normalize_type(l, alg), normalize_type(r, alg))
        case SharedPairType(l, r):
            return SharedPairType(normalize_type(l, alg), normalize_type(r, alg))
        case CompPairType(l, r):
            return CompPairType(normalize_type(l, alg), normalize_type(r, alg))
        case TensorType(l, r):
            return TensorType(normalize_type(l, alg), normalize_type(r, alg))
        case FunType(dom, cod, grade) if grade is not None:
            return FunType(normalize_type(dom, alg), normalize_type(cod, alg), alg.format(alg.parse(grade)))
        case ReturnerType(val, grade) if grade is not None:
            return ReturnerType(normalize_type(val, alg), alg.format(alg.parse(grade)))
        case ThunkType():
            raise TypeCheckError("thunk types carry no effect in coeffect mode", rule="coeff-type")
    raise TypeCheckError(f"{print_type(t)} is missing a grade", rule="coeff-type")


def _mismatch(rule: str, expected, got) -> TypeCheckError:
    return TypeCheckError(f"expected {print_type(expected)}, found {print_type(got)}", rule=rule)


class CoeffectChecker:
    def __init__(self, alg: CoeffectAlgebra):
        self.alg = alg

    def grade(self, lit: str | None, what: str) -> Grade:
        if lit is None:
            raise TypeCheckError(f"{what} is missing its grade annotation", rule="coeff-annot")
        return self.alg.parse(lit)

    def need(self, q: Grade, demand: Grade, rule: str, what: str) -> None:
        if not self.alg.leq(q, demand):
            f = self.alg.format
            raise GradeViolation(f"{what}: annotation {f(q)} does not lie below the demand {f(demand)}", rule=rule)

    def at_most_one(self, q: Grade, rule: str) -> None:
        if not self.alg.leq(q, self.alg.one):
            raise GradeViolation(f"grade {self.alg.format(q)} does not provide at least one copy", rule=rule)

    def zeros(self, ctx: Ctx) -> GradeVec:
        return GradeVec.zeros(self.alg, len(ctx))

    # values

    def value(self, ctx: Ctx, v) -> Elab:
        alg = self.alg
        match v:
            case Var(i):
                if i >= len(ctx):
                    raise TypeCheckError(f"variable index {i} is out of scope", rule="coeff-var")
                return Elab(v, GradeVec.unit(alg, len(ctx), len(ctx) - 1 - i), ctx[-1 - i])
            case UnitVal():
                return Elab(v, self.zeros(ctx), UnitType())
            case Thunk(body):
                e = self.comp(ctx, body)
                return Elab(v, e.vec, ThunkType(e.type), (e,))
            case Pair(l, r):
                el, er = self.value(ctx, l), self.value(ctx, r)
                return Elab(v, el.vec + er.vec, PairType(el.type, er.type), (el, er))
            case SharedPair(l, r):
                el, er = self.value(ctx, l), self.value(ctx, r)
                return Elab(v, el.vec.meet(er.vec), SharedPairType(el.type, er.type), (el, er))
            case Proj(inner, i):
                e = self.value(ctx, inner)
                match e.type:
                    case SharedPairType(l, r):
                        return Elab(v, e.vec, l if i == 1 else r, (e,))
                raise TypeCheckError(f"projecting from {print_type(e.type)}", rule="coeff-vproj")
            case Inl() | Inr():
                raise TypeCheckError("cannot infer the type of an injection; ascribe it", rule="coeff-inj")
            case Ascribe(inner, ty):
                e = self.check_value(ctx, inner, normalize_type(ty, alg))
                return Elab(v, e.vec, e.type, (e,))
        raise TypeCheckError(f"not a value: {v!r}")

    def check_value(self, ctx: Ctx, v, ty: ValType) -> Elab:
        match v, ty:
            case Thunk(body), ThunkType(b):
                e = self.check(ctx, body, b)
                return Elab(v, e.vec, ty, (e,))
            case Inl(inner), SumType(l, _):
                e = self.check_value(ctx, inner, l)
                return Elab(v, e.vec, ty, (e,))
            case Inr(inner), SumType(_, r):
                e = self.check_value(ctx, inner, r)
                return Elab(v, e.vec, ty, (e,))
            case (Inl() | Inr()), _:
                raise TypeCheckError(f"an injection cannot have type {print_type(ty)}", rule="coeff-inj")
            case Pair(l, r), PairType(tl, tr):
                el, er = self.check_value(ctx, l, tl), self.check_value(ctx, r, tr)
                return Elab(v, el.vec + er.vec, ty, (el, er))
            case SharedPair(l, r), SharedPairType(tl, tr):
                el, er = self.check_value(ctx, l, tl), self.check_value(ctx, r, tr)
                return Elab(v, el.vec.meet(er.vec), ty, (el, er))
        e = self.value(ctx, v)
        if e.type != ty:
            raise _mismatch("coeff-val", ty, e.type)
        return e

    # computations

    def comp(self, ctx: Ctx, m) -> Elab:
        alg = self.alg
        match m:
            case Return(v, lit):
                q = self.grade(lit, "return")
                e = self.value(ctx, v)
                return Elab(m, e.vec.scale(q), ReturnerType(e.type, alg.format(q)), (e,))
            case Lam(body, lit, annot):
                if annot is None:
                    raise TypeCheckError("cannot infer a lambda's argument type; annotate the binder", rule="coeff-abs")
                return self._lam(ctx, m, normalize_type(annot, alg), None)
            case App(Lam(annot=None) as fn, arg):
                ea = self.value(ctx, arg)
                ef = self._lam(ctx, fn, ea.type, None)
                return Elab(m, ef.vec + ea.vec.scale(self.grade(fn.grade, "lambda")), ef.type.cod, (ef, ea))
            case App(fn, arg):
                ef = self.comp(ctx, fn)
                match ef.type:
                    case FunType(dom, cod, lit):
                        ea = self.check_value(ctx, arg, dom)
                        return Elab(m, ef.vec + ea.vec.scale(alg.parse(lit)), cod, (ef, ea))
                raise TypeCheckError(f"applying a term of type {print_type(ef.type)}", rule="coeff-app")
            case Force(v):
                e = self.value(ctx, v)
                match e.type:
                    case ThunkType(b):
                        return Elab(m, e.vec, b, (e,))
                raise TypeCheckError(f"forcing a value of type {print_type(e.type)}", rule="coeff-force")
            case Let():
                return self._let(ctx, m, None)
            case Split():
                return self._split(ctx, m, None)
            case Seq():
                return self._seq(ctx, m, None)
            case Case():
                return self._case(ctx, m, None)
            case TensorSplit():
                return self._tsplit(ctx, m, None)
            case CPair(l, r):
                el, er = self.comp(ctx, l), self.comp(ctx, r)
                return Elab(m, el.vec.meet(er.vec), CompPairType(el.type, er.type), (el, er))
            case CProj(inner, i):
                e = self.comp(ctx, inner)
                match e.type:
                    case CompPairType(l, r):
                        return Elab(m, e.vec, l if i == 1 else r, (e,))
                raise TypeCheckError(f"projecting from {print_type(e.type)}", rule="coeff-proj")
            case Tensor(l, r):
                el, er = self.comp(ctx, l), self.comp(ctx, r)
                return Elab(m, el.vec + er.vec, TensorType(el.type, er.type), (el, er))
            case Prim(op):
                raise TypeCheckError(f"primitive {op!r} is not part of coeffect mode", rule="coeff-comp")
        raise TypeCheckError(f"not a computation: {m!r}")

    def check(self, ctx: Ctx, m, ty: CompType) -> Elab:
        alg = self.alg
        match m, ty:
            case Lam(_, lit, annot), FunType(dom, _, tlit):
                if annot is not None and normalize_type(annot, alg) != dom:
                    raise _mismatch("coeff-abs", dom, annot)
                if self.grade(lit, "lambda") != alg.parse(tlit):
                    raise TypeCheckError(f"lambda graded {lit} checked against {print_type(ty)}", rule="coeff-abs")
                return self._lam(ctx, m, dom, ty)
            case Return(v, lit), ReturnerType(a, tlit):
                q = self.grade(lit, "return")
                if q != alg.parse(tlit):
                    raise TypeCheckError(f"return graded {lit} checked against {print_type(ty)}", rule="coeff-ret")
                e = self.check_value(ctx, v, a)
                return Elab(m, e.vec.scale(q), ty, (e,))
            case App(Lam(annot=None) as fn, arg), _:
                ea = self.value(ctx, arg)
                ef = self.check(ctx, fn, FunType(ea.type, ty, fn.grade))
                return Elab(m, ef.vec + ea.vec.scale(self.grade(fn.grade, "lambda")), ty, (ef, ea))
            case Let(), _:
                return self._let(ctx, m, ty)
            case Split(), _:
                return self._split(ctx, m, ty)
            case Seq(), _:
                return self._seq(ctx, m, ty)
            case Case(), _:
                return self._case(ctx, m, ty)
            case TensorSplit(), _:
                return self._tsplit(ctx, m, ty)
            case CPair(l, r), CompPairType(tl, tr):
                el, er = self.check(ctx, l, tl), self.check(ctx, r, tr)
                return Elab(m, el.vec.meet(er.vec), ty, (el, er))
            case Tensor(l, r), TensorType(tl, tr):
                el, er = self.check(ctx, l, tl), self.check(ctx, r, tr)
                return Elab(m, el.vec + er.vec, ty, (el, er))
        e = self.comp(ctx, m)
        if e.type != ty:
            raise _mismatch("coeff-sub", ty, e.type)
        return e

    def _body(self, ctx: Ctx, body, ty: CompType | None) -> Elab:
        return self.comp(ctx, body) if ty is None else self.check(ctx, body, ty)

    def _lam(self, ctx: Ctx, m: Lam, dom: ValType, ty: FunType | None) -> Elab:
        q = self.grade(m.grade, "lambda")
        eb = self._body(ctx + [dom], m.body, None if ty is None else ty.cod)
        rest, (d,) = eb.vec.split(1)
        self.need(q, d, "coeff-abs", f"binder {m.name}")
        return Elab(m, rest, FunType(dom, eb.type, self.alg.format(q)), (eb,))

    def _let(self, ctx: Ctx, m: Let, ty: CompType | None) -> Elab:
        alg = self.alg
        q2 = self.grade(m.grade, "let")
        em = self.comp(ctx, m.bound)
        match em.type:
            case ReturnerType(a, lit):
                q1 = alg.parse(lit)
            case other:
                raise TypeCheckError(f"let binds a returner, found {print_type(other)}", rule="coeff-letin")
        en = self._body(ctx + [a], m.body, ty)
        rest, (d,) = en.vec.split(1)
        self.need(alg.mul(q1, q2), d, "coeff-letin", f"binder {m.name}")
        return Elab(m, em.vec.scale(q2) + rest, en.type, (em, en))

    def _split(self, ctx: Ctx, m: Split, ty: CompType | None) -> Elab:
        q = self.grade(m.grade, "split")
        es = self.value(ctx, m.scrut)
        match es.type:
            case PairType(l, r):
                pass
            case other:
                raise TypeCheckError(f"splitting a value of type {print_type(other)}", rule="coeff-split")
        en = self._body(ctx + [l, r], m.body, ty)
        rest, (d1, d2) = en.vec.split(2)
        self.need(q, d1, "coeff-split", f"binder {m.names[0]}")
        self.need(q, d2, "coeff-split", f"binder {m.names[1]}")
        return Elab(m, es.vec.scale(q) + rest, en.type, (es, en))

    def _seq(self, ctx: Ctx, m: Seq, ty: CompType | None) -> Elab:
        ev = self.check_value(ctx, m.value, UnitType())
        en = self._body(ctx, m.body, ty)
        return Elab(m, ev.vec + en.vec, en.type, (ev, en))

    def _case(self, ctx: Ctx, m: Case, ty: CompType | None) -> Elab:
        q = self.grade(m.grade, "case")
        self.at_most_one(q, "coeff-case")
        es = self.value(ctx, m.scrut)
        match es.type:
            case SumType(l, r):
                pass
            case other:
                raise TypeCheckError(f"case on a value of type {print_type(other)}", rule="coeff-case")
        el = self._body(ctx + [l], m.left, ty)
        er = self._body(ctx + [r], m.right, ty if ty is not None else el.type)
        if el.type != er.type:
            raise _mismatch("coeff-case", el.type, er.type)
        rl, (dl,) = el.vec.split(1)
        rr, (dr,) = er.vec.split(1)
        self.need(q, dl, "coeff-case", f"binder {m.names[0]}")
        self.need(q, dr, "coeff-case", f"binder {m.names[1]}")
        return Elab(m, es.vec.scale(q) + rl.meet(rr), el.type, (es, el, er))

    def _tsplit(self, ctx: Ctx, m: TensorSplit, ty: CompType | None) -> Elab:
        q = self.grade(m.grade, "tensor split")
        self.at_most_one(q, "coeff-csplit")
        es = self.comp(ctx, m.scrut)
        match es.type:
            case TensorType(l, r):
                pass
            case other:
                raise TypeCheckError(f"splitting a computation of type {print_type(other)}", rule="coeff-csplit")
        en = self._body(ctx + [ThunkType(l), ThunkType(r)], m.body, ty)
        rest, (d1, d2) = en.vec.split(2)
        self.need(q, d1, "coeff-csplit", f"binder {m.names[0]}")
        self.need(q, d2, "coeff-csplit", f"binder {m.names[1]}")
        return Elab(m, es.vec.scale(q) + rest, en.type, (es, en))


def _alg(algebra: str | CoeffectAlgebra) -> CoeffectAlgebra:
    return coeffect_algebra(algebra) if isinstance(algebra, str) else algebra


def elaborate(ctx: Ctx, t: Term, algebra: str | CoeffectAlgebra = "nat-usage", expect_type=None) -> Elab:
    """Annotate every node of ``t`` with its canonical vector and type."""
    alg = _alg(algebra)
    checker = CoeffectChecker(alg)
    ctx = [normalize_type(a, alg) for a in ctx]
    if is_value(t):
        return checker.value(ctx, t) if expect_type is None else checker.check_value(ctx, t, normalize_type(expect_type, alg))
    return checker.comp(ctx, t) if expect_type is None else checker.check(ctx, t, normalize_type(expect_type, alg))


def co_infer_value(ctx: Ctx, v, algebra: str | CoeffectAlgebra = "nat-usage") -> tuple[ValType, GradeVec]:
    e = elaborate(ctx, v, algebra)
    return e.type, e.vec


def co_infer_comp(ctx: Ctx, m, algebra: str | CoeffectAlgebra = "nat-usage") -> tuple[CompType, GradeVec]:
    e = elaborate(ctx, m, algebra)
    return e.type, e.vec


def check_declared(declared: GradeVec, inferred: GradeVec, names: list[str] | None = None) -> None:
    """A declared vector is acceptable iff it lies below the canonical one."""
    if len(declared) != len(inferred):
        raise GradeViolation(f"declared {len(declared)} grades for a context of {len(inferred)}", rule="coeff-sub")
    alg = declared.algebra
    for i, (d, g) in enumerate(zip(declared, inferred)):
        if not alg.leq(d, g):
            slot = names[i] if names else str(i)
            raise GradeViolation(
                f"slot {slot}: declared {alg.format(d)} does not lie below the demand {alg.format(g)}", rule="coeff-sub"
            )


def co_check(ctx: Ctx, t: Term, declared: GradeVec, algebra: str | CoeffectAlgebra = "nat-usage", expect_type=None) -> Elab:
    e = elaborate(ctx, t, algebra, expect_type)
    check_declared(declared, e.vec)
    return e


def check_program(
    prog: Program,
    algebra: str | CoeffectAlgebra = "nat-usage",
    declared: GradeVec | None = None,
    expect_type=None,
) -> CoeffectReport:
    if prog.mode != "coeffect":
        raise TypeCheckError("coeffect checking needs a coeffect-mode program", rule="coeff-mode")
    e = elaborate([t for _, t in prog.context], prog.term, algebra, expect_type)
    if declared is not None:
        check_declared(declared, e.vec, prog.names)
    return CoeffectReport(e.type, e.vec, e)


def parse_grade_assignment(text: str, names: list[str], alg: CoeffectAlgebra) -> GradeVec:
    """Read ``x=2,y=0`` into a vector aligned with ``names``; unmentioned slots are an error."""
    values: dict[str, Grade] = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise GradeViolation(f"expected name=grade, got {part!r}", rule="grades")
        k, val = (s.strip() for s in part.split("=", 1))
        if k not in names:
            raise GradeViolation(f"{k!r} is not in the context", rule="grades")
        values[k] = alg.parse(val)
    missing = [n for n in names if n not in values]
    if missing:
        raise GradeViolation(f"no grade given for {', '.join(missing)}", rule="grades")
    return GradeVec(alg, tuple(values[n] for n in names))
