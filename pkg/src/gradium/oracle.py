"""Brute-force derivation oracle for coeffect checking over ``nat-usage``.

For a term, the set of vectors some derivation can end in is upward closed
(a derivation may always be weakened), so it is stored as its antichain of
numerically minimal elements.  Each rule combines every pair of premise
derivations rather than following the checker's single canonical path, which
keeps this an independent check of principality.
"""
from __future__ import annotations

import itertools
import time

from .coeffect_system import check_declared, elaborate
from .errors import GradiumError
from .grading import GradeVec, coeffect_algebra
from .syntax import (
    App, Force, FunType, Lam, Let, Pair, PairType, Return, ReturnerType, Split, Thunk, ThunkType, UnitType, UnitVal, Var,
    print_term,
)

Vec = tuple[int, ...]
Antichain = frozenset[Vec]

GRADES = (0, 1, 2)
UNIT = UnitType()


class IllTyped(Exception):
    pass


def minimal(vs) -> Antichain:
    vs = set(vs)
    return frozenset(v for v in vs if not any(w != v and all(a <= b for a, b in zip(w, v)) for w in vs))


def add(a: Vec, b: Vec) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def scale(q: int, a: Vec) -> Vec:
    return tuple(q * x for x in a)


def member(v: Vec, chain: Antichain) -> bool:
    return any(all(a <= b for a, b in zip(m, v)) for m in chain)


def binder(chain: Antichain, qs: tuple[int, ...]) -> Antichain:
    """Derivations of a body whose last ``len(qs)`` slots are granted exactly ``qs``."""
    k = len(qs)
    return minimal(m[:-k] for m in chain if all(d <= q for d, q in zip(m[-k:], qs)))


def sums(xs: Antichain, ys: Antichain) -> Antichain:
    return minimal(add(a, b) for a in xs for b in ys)


def value(ctx: list, v) -> tuple[object, Antichain]:
    n = len(ctx)
    match v:
        case Var(i):
            return ctx[-1 - i], frozenset({tuple(int(j == n - 1 - i) for j in range(n))})
        case UnitVal():
            return UNIT, frozenset({(0,) * n})
        case Thunk(body):
            ty, d = comp(ctx, body)
            return ThunkType(ty), d
        case Pair(l, r):
            tl, dl = value(ctx, l)
            tr, dr = value(ctx, r)
            return PairType(tl, tr), sums(dl, dr)
    raise IllTyped(repr(v))


def comp(ctx: list, m) -> tuple[object, Antichain]:
    match m:
        case Return(v, q):
            ty, d = value(ctx, v)
            return ReturnerType(ty, q), minimal(scale(int(q), a) for a in d)
        case Force(v):
            match value(ctx, v):
                case ThunkType(b), d:
                    return b, d
        case Lam(body, q, dom):
            ty, d = comp(ctx + [dom], body)
            return FunType(dom, ty, q), binder(d, (int(q),))
        case App(fn, arg):
            match comp(ctx, fn):
                case FunType(dom, cod, q), df:
                    ta, da = value(ctx, arg)
                    if ta == dom:
                        return cod, minimal(add(a, scale(int(q), b)) for a in df for b in da)
        case Let(bound, body, q2):
            match comp(ctx, bound):
                case ReturnerType(a, q1), dm:
                    ty, dn = comp(ctx + [a], body)
                    rest = binder(dn, (int(q1) * int(q2),))
                    return ty, minimal(add(scale(int(q2), x), y) for x in dm for y in rest)
        case Split(scrut, body, q):
            match value(ctx, scrut):
                case PairType(l, r), dv:
                    ty, dn = comp(ctx + [l, r], body)
                    rest = binder(dn, (int(q), int(q)))
                    return ty, minimal(add(scale(int(q), x), y) for x in dv for y in rest)
    raise IllTyped(repr(m))


def derivable(ctx: list, m) -> tuple[object, Antichain]:
    """Type and minimal derivable vectors of ``m``; an empty antichain means no derivation."""
    return comp(ctx, m)


# enumeration


class Enumerator:
    """All well-typed terms up to a depth, each with its type and antichain.

    Built bottom-up and memoised on (context, depth); the antichains are
    assembled by the same combinators as ``derivable`` so the two agree by
    construction, and ``derivable`` stays available for spot checks.
    """

    def __init__(self):
        self.memo_v: dict = {}
        self.memo_c: dict = {}

    def values(self, ctx: tuple, depth: int) -> list:
        key = (ctx, depth)
        if key in self.memo_v:
            return self.memo_v[key]
        n = len(ctx)
        out = []
        if depth >= 1:
            out.append((UnitVal(), UNIT, frozenset({(0,) * n})))
            for i in range(n):
                out.append((Var(i), ctx[-1 - i], frozenset({tuple(int(j == n - 1 - i) for j in range(n))})))
        if depth >= 2:
            for m, ty, d in self.comps(ctx, depth - 1):
                out.append((Thunk(m), ThunkType(ty), d))
            subs = self.values(ctx, depth - 1)
            for (l, tl, dl), (r, tr, dr) in itertools.product(subs, subs):
                out.append((Pair(l, r), PairType(tl, tr), sums(dl, dr)))
        self.memo_v[key] = out
        return out

    def comps(self, ctx: tuple, depth: int) -> list:
        key = (ctx, depth)
        if key in self.memo_c:
            return self.memo_c[key]
        out = []
        if depth >= 2:
            below = self.values(ctx, depth - 1)
            for v, ty, d in below:
                for q in GRADES:
                    out.append((Return(v, str(q)), ReturnerType(ty, str(q)), minimal(scale(q, a) for a in d)))
                if isinstance(ty, ThunkType):
                    out.append((Force(v), ty.body, d))
            for q in GRADES:
                for m, ty, d in self.comps(ctx + (UNIT,), depth - 1):
                    out.append((Lam(m, str(q), UNIT), FunType(UNIT, ty, str(q)), binder(d, (q,))))
            fns = self.comps(ctx, depth - 1)
            for f, tf, df in fns:
                match tf:
                    case FunType(dom, cod, q):
                        for v, tv, dv in below:
                            if tv == dom:
                                out.append((App(f, v), cod, minimal(add(a, scale(int(q), b)) for a in df for b in dv)))
                    case ReturnerType(a, q1):
                        for n, tn, dn in self.comps(ctx + (a,), depth - 1):
                            for q2 in GRADES:
                                rest = binder(dn, (int(q1) * q2,))
                                d = minimal(add(scale(q2, x), y) for x in df for y in rest)
                                out.append((Let(f, n, str(q2)), tn, d))
            for v, tv, dv in below:
                if isinstance(tv, PairType):
                    for n, tn, dn in self.comps(ctx + (tv.left, tv.right), depth - 1):
                        for q in GRADES:
                            rest = binder(dn, (q, q))
                            out.append((Split(v, n, str(q)), tn, minimal(add(scale(q, x), y) for x in dv for y in rest)))
        self.memo_c[key] = out
        return out


def agree(ctx: tuple, term, chain: Antichain, bound: int, alg) -> str | None:
    """Compare checker acceptance with oracle membership on every vector in ``[0, bound]^n``."""
    try:
        inferred = elaborate(list(ctx), term, alg).vec
    except GradiumError as err:
        if chain:
            return f"checker rejected a derivable term: {err}"
        return None
    if not chain:
        return f"checker accepted a term with no derivation, inferring {inferred}"
    if chain != {tuple(g.value for g in inferred)}:
        return f"canonical vector {inferred} is not the least derivable one {sorted(chain)}"
    for declared in itertools.product(range(bound + 1), repeat=len(ctx)):
        try:
            check_declared(GradeVec.of(alg, declared), inferred)
            accepted = True
        except GradiumError:
            accepted = False
        if accepted != member(declared, chain):
            return f"declared {list(declared)}: checker {'accepts' if accepted else 'rejects'}, oracle disagrees"
    return None


def canonical_suite(cfg):
    """Exhaustive check on every well-typed term up to ``cfg.max_depth`` in context ``x : Unit``."""
    from .harness import Counterexample, SuiteResult

    start = time.perf_counter()
    alg = coeffect_algebra("nat-usage")
    ctx = (UNIT,)
    terms = Enumerator().comps(ctx, cfg.max_depth)
    result = SuiteResult("canonical", "nat-usage", len(terms))
    underivable = 0
    for term, _, chain in terms:
        underivable += not chain
        msg = agree(ctx, term, chain, 3, alg)
        if msg is not None:
            text = print_term(term, ["x"])
            result.failures.append(Counterexample(cfg.seed, msg, "coeff-sub", text, text))
    result.stats.update(terms=len(terms), underivable=underivable)
    result.seconds = time.perf_counter() - start
    return result
