"""Goal-directed random generation of well-typed CBPV terms and closed values.

Generation inverts the typing rules: pick a goal type, pick a rule whose
conclusion matches, and recurse on its premises.  Effect-mode goals also carry
an effect budget, and every generated term's least effect lies below it.
Coeffect-mode binders are graded after their scope has been generated, using
the scope's canonical demand; a binder that no grade can satisfy is retried
with the variable withheld from its scope.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .coeffect_system import elaborate
from .errors import GradiumError
from .grading import CoeffectAlgebra, EffectAlgebra, Grade
from .syntax import (
    App, Ascribe, Case, CompPairType, CPair, CProj, Force, FunType, Inl, Inr, Lam, Let, Pair,
    PairType, Prim, Proj, Return, ReturnerType, Seq, SharedPair, SharedPairType, Split, SumType,
    Tensor, TensorSplit, TensorType, Thunk, ThunkType, UnitType, UnitVal, Var,
)


class DeadEnd(Exception):
    """The generator painted itself into a corner; the caller retries with a new seed."""


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_depth: int = 4
    grade_pool: tuple[str, ...] = ("0", "1", "2")
    algebra: str = "nat-cost"
    mode: str = "effect"
    trials: int = 1000
    context_size: int = 2
    type_depth: int = 2


def _name(ctx_len: int) -> str:
    return f"v{ctx_len}"


def _var(ctx: list, pos: int) -> Var:
    return Var(len(ctx) - 1 - pos, _name(pos))


class EffectGen:
    """Effect-mode terms whose least effect stays within a natural-number budget."""

    def __init__(self, rng: random.Random, alg: EffectAlgebra, cfg: GenConfig):
        self.rng = rng
        self.alg = alg
        self.cfg = cfg
        self.exact = not alg.leq(alg.lift(0), alg.lift(1))
        self.pool = [int(g) for g in cfg.grade_pool]

    # types

    def vtype(self, d: int):
        r = self.rng.random()
        if d <= 0 or r < 0.45:
            return UnitType()
        if r < 0.7:
            return ThunkType(self.ctype(d - 1), str(self.rng.choice(self.pool)))
        if r < 0.85:
            return PairType(self.vtype(d - 1), self.vtype(d - 1))
        return SumType(self.vtype(d - 1), self.vtype(d - 1))

    def ctype(self, d: int):
        r = self.rng.random()
        if d <= 0 or r < 0.6:
            return ReturnerType(self.vtype(d - 1))
        if r < 0.85:
            return FunType(self.vtype(d - 1), self.ctype(d - 1))
        return CompPairType(self.ctype(d - 1), self.ctype(d - 1))

    # terms

    def value(self, ctx: list, ty, depth: int):
        rng = self.rng
        hits = [i for i, t in enumerate(ctx) if t == ty]
        if hits and rng.random() < 0.5:
            return _var(ctx, rng.choice(hits))
        match ty:
            case UnitType():
                return UnitVal()
            case ThunkType(body, eff):
                budget = int(eff) if self.exact else rng.randint(0, int(eff))
                return Ascribe(Thunk(self.comp(ctx, body, budget, depth - 1)), ty)
            case PairType(l, r):
                return Pair(self.value(ctx, l, depth - 1), self.value(ctx, r, depth - 1))
            case SumType(l, r):
                if rng.random() < 0.5:
                    return Ascribe(Inl(self.value(ctx, l, depth - 1)), ty)
                return Ascribe(Inr(self.value(ctx, r, depth - 1)), ty)
        raise DeadEnd(f"no value of {ty}")

    def base(self, ctx: list, ty, e: int):
        match ty:
            case ReturnerType(a):
                if e == 0:
                    return Return(self.value(ctx, a, 0))
                return Let(Prim("tick"), self.base(ctx + [UnitType()], ty, e - 1), name=_name(len(ctx)))
            case FunType(dom, cod):
                return Lam(self.base(ctx + [dom], cod, e), annot=dom, name=_name(len(ctx)))
            case CompPairType(l, r):
                return CPair(self.base(ctx, l, e), self.base(ctx, r, e))
        raise DeadEnd(f"no computation of {ty}")

    def comp(self, ctx: list, ty, e: int, depth: int):
        if depth <= 0:
            return self.base(ctx, ty, e)
        rng, d = self.rng, depth - 1
        n = _name(len(ctx))
        rules = []
        match ty:
            case ReturnerType(a):
                if e == 0:
                    rules += [lambda: Return(self.value(ctx, a, d))] * 2
                if e == 1 and a == UnitType():
                    rules += [lambda: Prim("tick")] * 2
            case FunType(dom, cod):
                rules += [lambda: Lam(self.comp(ctx + [dom], cod, e, d), annot=dom, name=n)] * 3
            case CompPairType(l, r):
                rules += [lambda: CPair(self.comp(ctx, l, e, d), self.comp(ctx, r, e, d))] * 3

        def let():
            a = self.vtype(1)
            e1 = rng.randint(0, e)
            return Let(self.comp(ctx, ReturnerType(a), e1, d), self.comp(ctx + [a], ty, e - e1, d), name=n)

        def force():
            return Force(self.value(ctx, ThunkType(ty, str(e)), d))

        def app():
            a = self.vtype(1)
            return App(self.comp(ctx, FunType(a, ty), e, d), self.value(ctx, a, d))

        def seq():
            return Seq(self.value(ctx, UnitType(), d), self.comp(ctx, ty, e, d))

        def case():
            s = SumType(self.vtype(1), self.vtype(1))
            return Case(
                self.value(ctx, s, d),
                self.comp(ctx + [s.left], ty, e, d),
                self.comp(ctx + [s.right], ty, e, d),
                names=(n, n),
            )

        def split():
            p = PairType(self.vtype(1), self.vtype(1))
            return Split(self.value(ctx, p, d), self.comp(ctx + [p.left, p.right], ty, e, d), names=(n, _name(len(ctx) + 1)))

        def proj():
            other = self.ctype(1)
            if rng.random() < 0.5:
                return CProj(self.comp(ctx, CompPairType(ty, other), e, d), 1)
            return CProj(self.comp(ctx, CompPairType(other, ty), e, d), 2)

        rules += [let, let, force, app, seq, case, split, proj]
        return rng.choice(rules)()

    def program(self, closed: bool = False, returner: bool = False):
        ctx = [] if closed else [self.vtype(1) for _ in range(self.rng.randint(0, self.cfg.context_size))]
        ty = ReturnerType(self.vtype(self.cfg.type_depth)) if returner else self.ctype(self.cfg.type_depth)
        budget = self.rng.choice(self.pool)
        return ctx, self.comp(ctx, ty, budget, self.cfg.max_depth), ty


class CoeffectGen:
    """Coeffect-mode terms; binder grades are chosen to satisfy their side conditions."""

    def __init__(self, rng: random.Random, alg: CoeffectAlgebra, cfg: GenConfig):
        self.rng = rng
        self.alg = alg
        self.cfg = cfg
        grades = {alg.parse(g) for g in cfg.grade_pool if _parses(alg, g)} | set(alg.elements(3))
        self.grades = sorted(grades, key=lambda g: str(g.value))

    def grade(self) -> str:
        return self.alg.format(self.rng.choice(self.grades))

    # types

    def vtype(self, d: int):
        r = self.rng.random()
        if d <= 0 or r < 0.45:
            return UnitType()
        if r < 0.65:
            return ThunkType(self.ctype(d - 1))
        if r < 0.8:
            return PairType(self.vtype(d - 1), self.vtype(d - 1))
        if r < 0.9:
            return SumType(self.vtype(d - 1), self.vtype(d - 1))
        return SharedPairType(self.vtype(d - 1), self.vtype(d - 1))

    def ctype(self, d: int):
        r = self.rng.random()
        if d <= 0 or r < 0.55:
            return ReturnerType(self.vtype(d - 1), self.grade())
        if r < 0.8:
            return FunType(self.vtype(d - 1), self.ctype(d - 1), self.grade())
        if r < 0.9:
            return CompPairType(self.ctype(d - 1), self.ctype(d - 1))
        return TensorType(self.ctype(d - 1), self.ctype(d - 1))

    # grading helpers

    def demands(self, ctx: list, body, ty, k: int) -> tuple[Grade, ...]:
        try:
            e = elaborate(ctx, body, self.alg, ty)
        except GradiumError as err:
            raise DeadEnd(str(err)) from err
        return e.vec.split(k)[1]

    def pick(self, ok) -> str | None:
        fits = [g for g in self.grades if ok(g)]
        return self.alg.format(self.rng.choice(fits)) if fits else None

    def bind(self, ctx: list, new: list, ty, depth: int, banned: frozenset, ok):
        """Generate a scope extending ``ctx`` by ``new`` and a grade satisfying ``ok``.

        If no grade fits the scope's demands the scope is regenerated with
        the new variables withheld.
        """
        inner = ctx + new
        fresh = frozenset(range(len(ctx), len(inner)))
        for withheld in (frozenset(), fresh):
            body = self.comp(inner, ty, depth, banned | withheld)
            ds = self.demands(inner, body, ty, len(new))
            q = self.pick(lambda g: ok(g, ds))
            if q is not None:
                return body, q
        raise DeadEnd("no grade satisfies the binder")

    # terms

    def value(self, ctx: list, ty, depth: int, banned: frozenset):
        rng = self.rng
        hits = [i for i, t in enumerate(ctx) if t == ty and i not in banned]
        if hits and rng.random() < 0.5:
            return _var(ctx, rng.choice(hits))
        d = depth - 1
        match ty:
            case UnitType():
                return UnitVal()
            case ThunkType(body):
                return Thunk(self.comp(ctx, body, d, banned))
            case PairType(l, r):
                return Pair(self.value(ctx, l, d, banned), self.value(ctx, r, d, banned))
            case SharedPairType(l, r):
                return SharedPair(self.value(ctx, l, d, banned), self.value(ctx, r, d, banned))
            case SumType(l, r):
                if rng.random() < 0.5:
                    return Ascribe(Inl(self.value(ctx, l, d, banned)), ty)
                return Ascribe(Inr(self.value(ctx, r, d, banned)), ty)
        raise DeadEnd(f"no value of {ty}")

    def base(self, ctx: list, ty, banned: frozenset):
        n = _name(len(ctx))
        match ty:
            case ReturnerType(a, q):
                return Return(self.value(ctx, a, 0, banned), q)
            case FunType(dom, cod, q):
                if not self.alg.leq(self.alg.parse(q), self.alg.zero):
                    raise DeadEnd(f"grade {q} cannot discard an unused binder")
                return Lam(self.base(ctx + [dom], cod, banned | {len(ctx)}), q, dom, name=n)
            case CompPairType(l, r):
                return CPair(self.base(ctx, l, banned), self.base(ctx, r, banned))
            case TensorType(l, r):
                return Tensor(self.base(ctx, l, banned), self.base(ctx, r, banned))
        raise DeadEnd(f"no computation of {ty}")

    def comp(self, ctx: list, ty, depth: int, banned: frozenset = frozenset()):
        if depth <= 0:
            return self.base(ctx, ty, banned)
        rng, alg, d = self.rng, self.alg, depth - 1
        n, n2 = _name(len(ctx)), _name(len(ctx) + 1)
        one = alg.one
        rules = []
        match ty:
            case ReturnerType(a, q):
                rules += [lambda: Return(self.value(ctx, a, d, banned), q)] * 3
            case FunType(dom, cod, q):

                def lam():
                    qg = alg.parse(q)
                    body, _ = self.bind(ctx, [dom], cod, d, banned, lambda g, ds: g == qg and alg.leq(qg, ds[0]))
                    return Lam(body, q, dom, name=n)

                rules += [lam] * 3
            case CompPairType(l, r):
                rules += [lambda: CPair(self.comp(ctx, l, d, banned), self.comp(ctx, r, d, banned))] * 3
            case TensorType(l, r):
                rules += [lambda: Tensor(self.comp(ctx, l, d, banned), self.comp(ctx, r, d, banned))] * 3

        def let():
            a = self.vtype(1)
            q1 = alg.parse(self.grade())
            bound = self.comp(ctx, ReturnerType(a, alg.format(q1)), d, banned)
            body, q2 = self.bind(ctx, [a], ty, d, banned, lambda g, ds: alg.leq(alg.mul(q1, g), ds[0]))
            return Let(bound, body, q2, name=n)

        def force():
            return Force(self.value(ctx, ThunkType(ty), d, banned))

        def app():
            a = self.vtype(1)
            return App(self.comp(ctx, FunType(a, ty, self.grade()), d, banned), self.value(ctx, a, d, banned))

        def seq():
            return Seq(self.value(ctx, UnitType(), d, banned), self.comp(ctx, ty, d, banned))

        def case():
            s = SumType(self.vtype(1), self.vtype(1))
            scrut = self.value(ctx, s, d, banned)
            for withheld in (frozenset(), frozenset({len(ctx)})):
                left = self.comp(ctx + [s.left], ty, d, banned | withheld)
                right = self.comp(ctx + [s.right], ty, d, banned | withheld)
                (dl,) = self.demands(ctx + [s.left], left, ty, 1)
                (dr,) = self.demands(ctx + [s.right], right, ty, 1)
                q = self.pick(lambda g: alg.leq(g, one) and alg.leq(g, dl) and alg.leq(g, dr))
                if q is not None:
                    return Case(scrut, left, right, q, names=(n, n))
            raise DeadEnd("no grade for case")

        def split():
            p = PairType(self.vtype(1), self.vtype(1))
            scrut = self.value(ctx, p, d, banned)
            body, q = self.bind(ctx, [p.left, p.right], ty, d, banned, lambda g, ds: all(alg.leq(g, x) for x in ds))
            return Split(scrut, body, q, names=(n, n2))

        def proj():
            other = self.ctype(1)
            if rng.random() < 0.5:
                return CProj(self.comp(ctx, CompPairType(ty, other), d, banned), 1)
            return CProj(self.comp(ctx, CompPairType(other, ty), d, banned), 2)

        def tsplit():
            t = TensorType(self.ctype(1), self.ctype(1))
            scrut = self.comp(ctx, t, d, banned)
            new = [ThunkType(t.left), ThunkType(t.right)]
            body, q = self.bind(
                ctx, new, ty, d, banned, lambda g, ds: alg.leq(g, one) and all(alg.leq(g, x) for x in ds)
            )
            return TensorSplit(scrut, body, q, names=(n, n2))

        def vproj():
            other = self.vtype(1)
            a = ReturnerType(ty.val, ty.grade) if isinstance(ty, ReturnerType) else None
            if a is None:
                return force()
            pair = self.value(ctx, SharedPairType(ty.val, other), d, banned)
            return Return(Proj(pair, 1), ty.grade)

        rules += [let, let, force, app, seq, case, split, proj, tsplit, vproj]
        return rng.choice(rules)()

    def program(self, closed: bool = False, returner: bool = False):
        ctx = [] if closed else [self.vtype(1) for _ in range(self.rng.randint(0, self.cfg.context_size))]
        ty = ReturnerType(self.vtype(self.cfg.type_depth), self.grade()) if returner else self.ctype(self.cfg.type_depth)
        m = self.comp(ctx, ty, self.cfg.max_depth)
        # shared constructs need meets, which partial algebras may lack
        self.demands(ctx, m, ty, 0)
        return ctx, m, ty


def _parses(alg, text: str) -> bool:
    try:
        alg.parse(text)
        return True
    except GradiumError:
        return False
