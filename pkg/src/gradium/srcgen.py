"""Random well-typed programs in the source calculi, and the preservation suites."""
from __future__ import annotations

import itertools
import random

from .errors import GradiumError
from .generate import DeadEnd, GenConfig
from .grading import coeffect_algebra, effect_algebra
from .lam import (
    DIALECTS, CoeffectSourceChecker, LAnnot, LApp, LBind, LBox, LCase, LDiscard, LDivide, LExtend, LExtract,
    LInl, LInr, LLam, LPair, LProj, LReturn, LSeq, LSplit, LTick, LUnbox, LUnit, LVar, LWith, SourceProgram,
    TArrow, TBox, TLolli, TMonad, TSum, TTensor, TUnit, TWith, show_source_program, src_check,
)

UNIT = TUnit()


class _SrcGen:
    def __init__(self, rng: random.Random, cfg: GenConfig, strategy: str):
        self.rng = rng
        self.cfg = cfg
        self.strategy = strategy
        self.names = itertools.count()

    def fresh(self) -> str:
        return f"x{next(self.names)}"

    def product(self, l, r):
        return TWith(l, r) if self.strategy == "cbn" else TTensor(l, r)

    def vars_of(self, ctx, ty) -> list[str]:
        seen: dict[str, object] = {}
        for n, t in ctx:
            seen[n] = t
        return [n for n, t in seen.items() if t == ty]


class EffectSrcGen(_SrcGen):
    """CBV effect calculus; every term's least effect equals its budget exactly."""

    def __init__(self, rng, cfg, strategy="cbv"):
        super().__init__(rng, cfg, strategy)
        self.pool = [int(g) for g in cfg.grade_pool]

    def type(self, d: int):
        r = self.rng.random()
        if d <= 0 or r < 0.4:
            return UNIT
        if r < 0.7:
            return TArrow(self.type(d - 1), self.type(d - 1), str(self.rng.choice(self.pool)))
        if r < 0.85:
            return TTensor(self.type(d - 1), self.type(d - 1))
        return TSum(self.type(d - 1), self.type(d - 1))

    def split(self, e: int, k: int) -> list[int]:
        cuts = sorted(self.rng.randint(0, e) for _ in range(k - 1))
        return [b - a for a, b in zip([0] + cuts, cuts + [e])]

    def base(self, ctx, ty, e: int):
        if e > 0:
            return LSeq(LTick(), self.base(ctx, ty, e - 1))
        hits = self.vars_of(ctx, ty)
        if hits:
            return LVar(self.rng.choice(hits))
        match ty:
            case TUnit():
                return LUnit()
            case TArrow(d, c, phi):
                x = self.fresh()
                return LLam(x, d, self.base(ctx + [(x, d)], c, int(phi)))
            case TTensor(l, r):
                return LPair(self.base(ctx, l, 0), self.base(ctx, r, 0))
            case TSum(l, _):
                return LAnnot(LInl(self.base(ctx, l, 0)), ty)
        raise DeadEnd(str(ty))

    def term(self, ctx, ty, e: int, depth: int):
        if depth <= 0:
            return self.base(ctx, ty, e)
        rng, d = self.rng, depth - 1
        rules = []
        if e == 0:
            rules += [lambda: self.base(ctx, ty, 0)]
        if e == 1 and ty == UNIT:
            rules += [LTick]
        match ty:
            case TArrow(dom, cod, phi) if e == 0:
                x = self.fresh()
                rules += [lambda: LLam(x, dom, self.term(ctx + [(x, dom)], cod, int(phi), d))] * 2
            case TTensor(l, r):

                def pair():
                    e1, e2 = self.split(e, 2)
                    return LPair(self.term(ctx, l, e1, d), self.term(ctx, r, e2, d))

                rules += [pair] * 2
            case TSum(l, r):
                rules += [lambda: LAnnot(rng.choice([LInl(self.term(ctx, l, e, d)), LInr(self.term(ctx, r, e, d))]), ty)]

        def app():
            e1, e2, phi = self.split(e, 3)
            a = self.type(1)
            return LApp(self.term(ctx, TArrow(a, ty, str(phi)), e1, d), self.term(ctx, a, e2, d))

        def split():
            e1, e2 = self.split(e, 2)
            p = TTensor(self.type(1), self.type(1))
            x, y = self.fresh(), self.fresh()
            return LSplit(x, y, self.term(ctx, p, e1, d), self.term(ctx + [(x, p.left), (y, p.right)], ty, e2, d))

        def case():
            e1, e2 = self.split(e, 2)
            s = TSum(self.type(1), self.type(1))
            x, y = self.fresh(), self.fresh()
            return LCase(
                self.term(ctx, s, e1, d), x, self.term(ctx + [(x, s.left)], ty, e2, d), y, self.term(ctx + [(y, s.right)], ty, e2, d)
            )

        def seq():
            e1, e2 = self.split(e, 2)
            return LSeq(self.term(ctx, UNIT, e1, d), self.term(ctx, ty, e2, d))

        rules += [app, app, split, case, seq]
        return rng.choice(rules)()

    def program(self):
        ctx = [(self.fresh(), self.type(1)) for _ in range(self.rng.randint(0, self.cfg.context_size))]
        ty = self.type(self.cfg.type_depth)
        return ctx, self.term(ctx, ty, self.rng.choice(self.pool), self.cfg.max_depth)


class MonadSrcGen(_SrcGen):
    """Pure λ-calculus with a graded monad; budgets appear only inside ``T^e``."""

    def __init__(self, rng, cfg, strategy):
        super().__init__(rng, cfg, strategy)
        self.pool = [int(g) for g in cfg.grade_pool]

    def type(self, d: int):
        r = self.rng.random()
        if d <= 0 or r < 0.35:
            return UNIT
        if r < 0.55:
            return TMonad(str(self.rng.choice(self.pool)), self.type(d - 1))
        if r < 0.75:
            return TArrow(self.type(d - 1), self.type(d - 1))
        if r < 0.9:
            return self.product(self.type(d - 1), self.type(d - 1))
        return TSum(self.type(d - 1), self.type(d - 1))

    def base(self, ctx, ty):
        hits = self.vars_of(ctx, ty)
        if hits:
            return LVar(self.rng.choice(hits))
        match ty:
            case TUnit():
                return LUnit()
            case TArrow(d, c):
                x = self.fresh()
                return LLam(x, d, self.base(ctx + [(x, d)], c))
            case TWith(l, r):
                return LWith(self.base(ctx, l), self.base(ctx, r))
            case TTensor(l, r):
                return LPair(self.base(ctx, l), self.base(ctx, r))
            case TSum(l, _):
                return LAnnot(LInl(self.base(ctx, l)), ty)
            case TMonad(phi, b) if phi == "0":
                return LReturn(self.base(ctx, b))
            case TMonad(phi, b):
                x = self.fresh()
                rest = TMonad(str(int(phi) - 1), b)
                return LBind(x, LTick(), self.base(ctx + [(x, UNIT)], rest))
        raise DeadEnd(str(ty))

    def term(self, ctx, ty, depth: int):
        if depth <= 0:
            return self.base(ctx, ty)
        rng, d = self.rng, depth - 1
        rules = [lambda: self.base(ctx, ty)]
        match ty:
            case TArrow(dom, cod):
                x = self.fresh()
                rules += [lambda: LLam(x, dom, self.term(ctx + [(x, dom)], cod, d))] * 2
            case TWith(l, r):
                rules += [lambda: LWith(self.term(ctx, l, d), self.term(ctx, r, d))] * 2
            case TTensor(l, r):
                rules += [lambda: LPair(self.term(ctx, l, d), self.term(ctx, r, d))] * 2
            case TSum(l, r):
                rules += [lambda: LAnnot(rng.choice([LInl(self.term(ctx, l, d)), LInr(self.term(ctx, r, d))]), ty)]
            case TMonad(phi, b):
                if phi == "0":
                    rules += [lambda: LReturn(self.term(ctx, b, d))]
                if phi == "1" and b == UNIT:
                    rules += [LTick] * 2

                def bind():
                    p1 = rng.randint(0, int(phi))
                    a = self.type(1)
                    x = self.fresh()
                    return LBind(x, self.term(ctx, TMonad(str(p1), a), d), self.term(ctx + [(x, a)], TMonad(str(int(phi) - p1), b), d))

                rules += [bind] * 3

        def app():
            a = self.type(1)
            return LApp(self.term(ctx, TArrow(a, ty), d), self.term(ctx, a, d))

        def case():
            s = TSum(self.type(1), self.type(1))
            x, y = self.fresh(), self.fresh()
            return LCase(self.term(ctx, s, d), x, self.term(ctx + [(x, s.left)], ty, d), y, self.term(ctx + [(y, s.right)], ty, d))

        def eliminate_product():
            other = self.type(1)
            if self.strategy == "cbn":
                if rng.random() < 0.5:
                    return LProj(1, self.term(ctx, TWith(ty, other), d))
                return LProj(2, self.term(ctx, TWith(other, ty), d))
            x, y = self.fresh(), self.fresh()
            return LSplit(x, y, self.term(ctx, TTensor(ty, other), d), self.term(ctx + [(x, ty), (y, other)], ty, d))

        rules += [app, case, eliminate_product]
        return rng.choice(rules)()

    def program(self):
        ctx = [(self.fresh(), self.type(1)) for _ in range(self.rng.randint(0, self.cfg.context_size))]
        ty = self.type(self.cfg.type_depth)
        return ctx, self.term(ctx, ty, self.cfg.max_depth)


class CoeffectSrcGen(_SrcGen):
    """Graded λ-calculus; binder grades are picked from the scope's demands."""

    def __init__(self, rng, cfg, strategy):
        super().__init__(rng, cfg, strategy)
        self.alg = coeffect_algebra(cfg.algebra)
        self.grades = [self.alg.parse(g) for g in cfg.grade_pool]

    def grade(self) -> str:
        return self.alg.format(self.rng.choice(self.grades))

    def type(self, d: int):
        r = self.rng.random()
        if d <= 0 or r < 0.35:
            return UNIT
        if r < 0.6:
            return TArrow(self.type(d - 1), self.type(d - 1), self.grade())
        if r < 0.75:
            return TBox(self.grade(), self.type(d - 1))
        if r < 0.9:
            return self.product(self.type(d - 1), self.type(d - 1))
        return TSum(self.type(d - 1), self.type(d - 1))

    def demands(self, ctx, e, k: int):
        try:
            _, vec = CoeffectSourceChecker(self.alg, self.strategy).infer(list(ctx), e)
        except GradiumError as err:
            raise DeadEnd(str(err)) from err
        return vec.split(k)[1]

    def pick(self, ok) -> str | None:
        fits = [g for g in self.grades if ok(g)]
        return self.alg.format(self.rng.choice(fits)) if fits else None

    def bind(self, ctx, new, ty, depth, banned, ok):
        for withheld in (frozenset(), frozenset(n for n, _ in new)):
            body = self.term(ctx + new, ty, depth, banned | withheld)
            q = self.pick(lambda g: ok(g, self.demands(ctx + new, body, len(new))))
            if q is not None:
                return body, q
        raise DeadEnd("no grade fits")

    def usable(self, ctx, ty, banned) -> list[str]:
        return [n for n in self.vars_of(ctx, ty) if n not in banned]

    def base(self, ctx, ty, banned):
        hits = self.usable(ctx, ty, banned)
        if hits:
            return LVar(self.rng.choice(hits))
        alg = self.alg
        match ty:
            case TUnit():
                return LUnit()
            case TArrow(d, c, q):
                if not alg.leq(alg.parse(q), alg.zero):
                    raise DeadEnd("unused binder")
                x = self.fresh()
                return LLam(x, d, self.base(ctx + [(x, d)], c, banned | {x}), q)
            case TBox(q, b):
                return LBox(q, self.base(ctx, b, banned))
            case TWith(l, r):
                return LWith(self.base(ctx, l, banned), self.base(ctx, r, banned))
            case TTensor(l, r):
                return LPair(self.base(ctx, l, banned), self.base(ctx, r, banned))
            case TSum(l, _):
                return LAnnot(LInl(self.base(ctx, l, banned)), ty)
        raise DeadEnd(str(ty))

    def term(self, ctx, ty, depth: int, banned: frozenset = frozenset()):
        if depth <= 0:
            return self.base(ctx, ty, banned)
        rng, alg, d = self.rng, self.alg, depth - 1
        rules = [lambda: self.base(ctx, ty, banned)]
        match ty:
            case TArrow(dom, cod, q):

                def lam():
                    x = self.fresh()
                    qg = alg.parse(q)
                    body, _ = self.bind(ctx, [(x, dom)], cod, d, banned, lambda g, ds: g == qg and alg.leq(qg, ds[0]))
                    return LLam(x, dom, body, q)

                rules += [lam] * 2
            case TBox(q, b):
                rules += [lambda: LBox(q, self.term(ctx, b, d, banned))] * 2
            case TWith(l, r):
                rules += [lambda: LWith(self.term(ctx, l, d, banned), self.term(ctx, r, d, banned))] * 2
            case TTensor(l, r):
                rules += [lambda: LPair(self.term(ctx, l, d, banned), self.term(ctx, r, d, banned))] * 2
            case TSum(l, r):
                rules += [lambda: LAnnot(rng.choice([LInl(self.term(ctx, l, d, banned)), LInr(self.term(ctx, r, d, banned))]), ty)]

        def app():
            a = self.type(1)
            return LApp(self.term(ctx, TArrow(a, ty, self.grade()), d, banned), self.term(ctx, a, d, banned))

        def unbox():
            a = self.type(1)
            q1 = alg.parse(self.grade())
            bound = self.term(ctx, TBox(alg.format(q1), a), d, banned)
            x = self.fresh()
            body, q2 = self.bind(ctx, [(x, a)], ty, d, banned, lambda g, ds: alg.leq(alg.mul(q1, g), ds[0]))
            return LUnbox(q2, x, bound, body)

        def case():
            s = TSum(self.type(1), self.type(1))
            scrut = self.term(ctx, s, d, banned)
            x, y = self.fresh(), self.fresh()
            for withheld in (frozenset(), frozenset({x, y})):
                left = self.term(ctx + [(x, s.left)], ty, d, banned | withheld)
                right = self.term(ctx + [(y, s.right)], ty, d, banned | withheld)
                (dl,) = self.demands(ctx + [(x, s.left)], left, 1)
                (dr,) = self.demands(ctx + [(y, s.right)], right, 1)
                q = self.pick(lambda g: alg.leq(g, alg.one) and alg.leq(g, dl) and alg.leq(g, dr))
                if q is not None:
                    return LCase(scrut, x, left, y, right, q)
            raise DeadEnd("no grade for case")

        def seq():
            return LSeq(self.term(ctx, UNIT, d, banned), self.term(ctx, ty, d, banned))

        def eliminate_product():
            other = self.type(1)
            if self.strategy == "cbn":
                if rng.random() < 0.5:
                    return LProj(1, self.term(ctx, TWith(ty, other), d, banned))
                return LProj(2, self.term(ctx, TWith(other, ty), d, banned))
            x, y = self.fresh(), self.fresh()
            scrut = self.term(ctx, TTensor(ty, other), d, banned)
            body, q = self.bind(ctx, [(x, ty), (y, other)], ty, d, banned, lambda g, ds: all(alg.leq(g, v) for v in ds))
            return LSplit(x, y, scrut, body, q)

        rules += [app, unbox, unbox, case, seq, eliminate_product]
        return rng.choice(rules)()

    def program(self):
        ctx = [(self.fresh(), self.type(1)) for _ in range(self.rng.randint(0, self.cfg.context_size))]
        ty = self.type(self.cfg.type_depth)
        return ctx, self.term(ctx, ty, self.cfg.max_depth)


class ComonadSrcGen(_SrcGen):
    """Linear calculus: every variable in ``ctx`` is consumed exactly once."""

    def __init__(self, rng, cfg, strategy):
        super().__init__(rng, cfg, strategy)
        self.alg = coeffect_algebra(cfg.algebra)
        self.grades = [self.alg.parse(g) for g in cfg.grade_pool]

    def grade(self) -> str:
        return self.alg.format(self.rng.choice(self.grades))

    def type(self, d: int):
        r = self.rng.random()
        if d <= 0 or r < 0.25:
            return UNIT
        if r < 0.8:
            return TBox(self.grade(), self.type(d - 1))
        return TLolli(self.type(d - 1), self.type(d - 1))

    def consume(self, ctx, ty, depth: int):
        """Use up the first variable of ``ctx`` and continue with the rest."""
        (x, t), rest = ctx[0], ctx[1:]
        alg = self.alg
        match t:
            case TUnit():
                return LSeq(LVar(x), self.term(rest, ty, depth))
            case TBox(q, inner):
                qg = alg.parse(q)
                options = []
                if alg.leq(qg, alg.zero):
                    options.append(lambda: LDiscard(LVar(x), self.term(rest, ty, depth)))
                if inner == UNIT and alg.leq(qg, alg.one):
                    options.append(lambda: LSeq(LExtract(LVar(x)), self.term(rest, ty, depth)))
                splits = [
                    (a, b) for a in self.grades for b in self.grades if alg.leq(qg, alg.add(a, b))
                ]
                if splits and depth > 0:

                    def divide():
                        a, b = self.rng.choice(splits)
                        x1, x2 = self.fresh(), self.fresh()
                        fa, fb = alg.format(a), alg.format(b)
                        scope = rest + [(x1, TBox(fa, inner)), (x2, TBox(fb, inner))]
                        return LDivide(x1, fa, x2, fb, LVar(x), self.term(scope, ty, depth - 1))

                    options.append(divide)
                if not options:
                    raise DeadEnd("cannot consume a box")
                return self.rng.choice(options)()
            case TLolli(a, b) if b == UNIT:
                k = self.rng.randint(0, len(rest))
                return LSeq(LApp(LVar(x), self.term(rest[:k], a, depth - 1)), self.term(rest[k:], ty, depth))
        raise DeadEnd("cannot consume a function")

    def term(self, ctx, ty, depth: int):
        rng, alg = self.rng, self.alg
        if len(ctx) == 1 and ctx[0][1] == ty and rng.random() < 0.6:
            return LVar(ctx[0][0])
        if isinstance(ty, TLolli):
            x = self.fresh()
            return LLam(x, ty.dom, self.term(ctx + [(x, ty.dom)], ty.cod, depth - 1))
        boxes = [(n, t) for n, t in ctx if isinstance(t, TBox)]
        options = []
        if ctx and (depth > 0 or not isinstance(ty, TBox)):
            options.append(lambda: self.consume(ctx, ty, depth - 1))
        if not ctx and ty == UNIT:
            options.append(LUnit)
        if depth > 0:

            def redex():
                k = rng.randint(0, len(ctx))
                a = self.type(2)
                x = self.fresh()
                body = self.term(ctx[k:] + [(x, a)], ty, depth - 1)
                return LApp(LLam(x, a, body), self.term(ctx[:k], a, depth - 1))

            options += [redex] * 2
        if len(ctx) == 1 and isinstance(ctx[0][1], TBox) and ctx[0][1].body == ty and alg.leq(alg.parse(ctx[0][1].grade), alg.one):
            options.append(lambda: LExtract(LVar(ctx[0][0])))
        if isinstance(ty, TBox) and boxes:

            def extend():
                qg = alg.parse(ty.grade)
                chosen = rng.sample(boxes, rng.randint(1, min(2, len(boxes))))
                binders, inner = [], []
                for n, t in chosen:
                    fits = [g for g in self.grades if alg.leq(alg.parse(t.grade), alg.mul(qg, g))]
                    if not fits:
                        raise DeadEnd("no binder grade")
                    g = alg.format(rng.choice(fits))
                    y = self.fresh()
                    binders.append((y, g, LVar(n)))
                    inner.append((y, TBox(g, t.body)))
                body = LExtend(ty.grade, tuple(binders), self.term(inner, ty.body, depth - 1))
                leftover = [(n, t) for n, t in ctx if (n, t) not in chosen]
                return self.prefix_consume(leftover, body, depth)

            options.append(extend)
        if not options:
            raise DeadEnd(f"no linear term of this type from {len(ctx)} variables")
        return rng.choice(options)()

    def prefix_consume(self, ctx, body, depth: int):
        """Consume ``ctx`` in unit-typed positions before ``body``."""
        out = body
        for x, t in reversed(ctx):
            match t:
                case TUnit():
                    out = LSeq(LVar(x), out)
                case TBox(q, _) if self.alg.leq(self.alg.parse(q), self.alg.zero):
                    out = LDiscard(LVar(x), out)
                case _:
                    raise DeadEnd("cannot drop this variable")
        return out

    def program(self):
        ctx = [(self.fresh(), self.type(2)) for _ in range(self.rng.randint(0, self.cfg.context_size))]
        ty = self.type(self.cfg.type_depth)
        return ctx, self.term(ctx, ty, self.cfg.max_depth)


def source_generator(dialect: str, rng: random.Random, cfg: GenConfig):
    family, strategy = DIALECTS[dialect]
    match family:
        case "effect":
            return EffectSrcGen(rng, cfg, strategy)
        case "monadic":
            return MonadSrcGen(rng, cfg, strategy)
        case "coeffect":
            return CoeffectSrcGen(rng, cfg, strategy)
    return ComonadSrcGen(rng, cfg, strategy)


def source_algebra(dialect: str, cfg: GenConfig) -> str:
    family = DIALECTS[dialect][0]
    effectful = family in ("effect", "monadic")
    try:
        (effect_algebra if effectful else coeffect_algebra)(cfg.algebra)
        return cfg.algebra
    except (GradiumError, ValueError):
        return "nat-cost" if effectful else "nat-usage"


def gen_source(dialect: str, cfg: GenConfig, seed: int) -> SourceProgram:
    """A source program of ``dialect`` that passes its checker; deterministic in the seed."""
    rng = random.Random(seed)
    cfg = GenConfig(**{**cfg.__dict__, "algebra": source_algebra(dialect, cfg)})
    for _ in range(500):
        gen = source_generator(dialect, rng, cfg)
        try:
            ctx, term = gen.program()
        except (DeadEnd, RecursionError):
            continue
        prog = SourceProgram(dialect, tuple(ctx), term)
        try:
            src_check(prog, cfg.algebra)
        except GradiumError:
            continue
        return prog
    raise RuntimeError(f"could not generate a {dialect} program")


def preservation_suite(dialect: str, cfg: GenConfig):
    from .harness import Counterexample, SuiteResult, trial_seed
    from .translate import PreservationFailure, check_preservation

    if dialect not in DIALECTS:
        raise GradiumError(f"unknown dialect {dialect!r}", rule="soundness")
    algebra = source_algebra(dialect, cfg)
    result = SuiteResult(f"preserve-{dialect}", algebra, cfg.trials)
    shapes: dict[str, int] = {}
    for i in range(cfg.trials):
        seed = trial_seed(cfg.seed, i)
        prog = gen_source(dialect, cfg, seed)
        try:
            _, report = check_preservation(prog, algebra)
        except (PreservationFailure, GradiumError) as err:
            text = show_source_program(prog)
            result.failures.append(Counterexample(seed, str(err), getattr(err, "rule", None), text, text))
            continue
        key = type(report.target_type).__name__
        shapes[key] = shapes.get(key, 0) + 1
    result.stats["target_shapes"] = shapes
    return result
