"""Environment-based big-step evaluation with exact effect accounting."""
from __future__ import annotations

import os
import sys
from dataclasses import dataclass

from .errors import BudgetExceeded, StuckError
from .grading import Effect, EffectAlgebra, effect_algebra
from .syntax import (
    App, Ascribe, Case, CPair, CProj, Force, Inl, Inr, Lam, Let, Pair, Prim, Return, Seq, Split,
    Thunk, UnitVal, Var, print_term,
)

DEFAULT_STEP_BUDGET = 1_000_000


def step_budget() -> int:
    return int(os.environ.get("GRADIUM_STEP_BUDGET", DEFAULT_STEP_BUDGET))


def ensure_recursion_limit(limit: int = 20_000) -> None:
    if sys.getrecursionlimit() < limit:
        sys.setrecursionlimit(limit)


# --- closed values and terminals ---------------------------------------------


@dataclass(frozen=True)
class CUnit:
    pass


@dataclass(frozen=True)
class CPairV:
    left: "Closed"
    right: "Closed"


@dataclass(frozen=True)
class CInl:
    value: "Closed"


@dataclass(frozen=True)
class CInr:
    value: "Closed"


@dataclass(frozen=True)
class Clo:
    env: tuple["Closed", ...]
    body: object


Closed = CUnit | CPairV | CInl | CInr | Clo


@dataclass(frozen=True)
class TReturn:
    value: Closed


@dataclass(frozen=True)
class TLam:
    env: tuple[Closed, ...]
    lam: Lam


@dataclass(frozen=True)
class TCPair:
    env: tuple[Closed, ...]
    pair: CPair


Terminal = TReturn | TLam | TCPair


def env_names(n: int) -> list[str]:
    """Names for an environment of length ``n``: the innermost slot is ``x0``."""
    return [f"x{n - 1 - k}" for k in range(n)]


def show_env(env: tuple[Closed, ...]) -> str:
    return "[" + ", ".join(show_closed(w) for w in env) + "]"


def show_closed(w: Closed) -> str:
    match w:
        case CUnit():
            return "()"
        case CPairV(l, r):
            return f"({show_closed(l)}, {show_closed(r)})"
        case CInl(v):
            return f"inl {show_closed(v)}"
        case CInr(v):
            return f"inr {show_closed(v)}"
        case Clo(env, body):
            return f"clo({show_env(env)}, {{ {print_term(body, env_names(len(env)))} }})"
    raise TypeError(f"not a closed value: {w!r}")


def show_terminal(t: Terminal) -> str:
    match t:
        case TReturn(w):
            return f"return {show_closed(w)}"
        case TLam(env, lam) | TCPair(env, lam):
            return f"clo({show_env(env)}, {print_term(lam, env_names(len(env)))})"
    raise TypeError(f"not a terminal: {t!r}")


# --- evaluator ---------------------------------------------------------------


class EffectEvaluator:
    def __init__(self, alg: EffectAlgebra, budget: int | None = None):
        self.alg = alg
        self.budget = step_budget() if budget is None else budget
        self.steps = 0
        self.effect = alg.unit

    def emit(self, e: Effect) -> None:
        self.effect = self.alg.combine(self.effect, e)

    def value(self, env: tuple[Closed, ...], v) -> Closed:
        match v:
            case Var(i):
                if i >= len(env):
                    raise StuckError(f"variable index {i} outside an environment of size {len(env)}", rule="eval-val-var")
                return env[-1 - i]
            case UnitVal():
                return CUnit()
            case Thunk(body):
                return Clo(env, body)
            case Pair(l, r):
                return CPairV(self.value(env, l), self.value(env, r))
            case Inl(inner):
                return CInl(self.value(env, inner))
            case Inr(inner):
                return CInr(self.value(env, inner))
            case Ascribe(inner):
                return self.value(env, inner)
        raise StuckError(f"cannot close {v!r} in effect mode", rule="eval-val")

    def comp(self, env: tuple[Closed, ...], m) -> Terminal:
        self.steps += 1
        if self.steps > self.budget:
            raise BudgetExceeded(f"step budget of {self.budget} exhausted", rule="eval")
        match m:
            case Prim(op):
                self.emit(self.alg.prim(op))
                return TReturn(CUnit())
            case Return(v):
                return TReturn(self.value(env, v))
            case Lam():
                return TLam(env, m)
            case CPair():
                return TCPair(env, m)
            case App(fn, arg):
                match self.comp(env, fn):
                    case TLam(env2, lam):
                        return self.comp(env2 + (self.value(env, arg),), lam.body)
                raise StuckError("application of a non-function", rule="eval-eff-comp-app")
            case Force(v):
                match self.value(env, v):
                    case Clo(env2, body):
                        return self.comp(env2, body)
                raise StuckError("force of a non-thunk", rule="eval-eff-comp-force")
            case Let(bound, body):
                match self.comp(env, bound):
                    case TReturn(w):
                        return self.comp(env + (w,), body)
                raise StuckError("let-bound computation did not return", rule="eval-eff-comp-letin")
            case Split(scrut, body):
                match self.value(env, scrut):
                    case CPairV(a, b):
                        return self.comp(env + (a, b), body)
                raise StuckError("split of a non-pair", rule="eval-eff-comp-split")
            case Seq(v, body):
                if self.value(env, v) != CUnit():
                    raise StuckError("sequencing a non-unit value", rule="eval-eff-comp-sequence")
                return self.comp(env, body)
            case Case(scrut, left, right):
                match self.value(env, scrut):
                    case CInl(w):
                        return self.comp(env + (w,), left)
                    case CInr(w):
                        return self.comp(env + (w,), right)
                raise StuckError("case on a non-sum", rule="eval-eff-comp-case")
            case CProj(inner, i):
                match self.comp(env, inner):
                    case TCPair(env2, pair):
                        return self.comp(env2, pair.left if i == 1 else pair.right)
                raise StuckError("projection from a non-pair", rule="eval-eff-comp-proj")
        raise StuckError(f"no effect-mode rule for {type(m).__name__}", rule="eval")


def eval_value(env, v, algebra: str | EffectAlgebra = "nat-cost") -> Closed:
    alg = effect_algebra(algebra) if isinstance(algebra, str) else algebra
    return EffectEvaluator(alg).value(tuple(env), v)


def eval_comp(env, m, algebra: str | EffectAlgebra = "nat-cost", budget: int | None = None) -> tuple[Terminal, Effect]:
    """Run ``m`` under ``env``; returns the terminal and the exact effect produced."""
    alg = effect_algebra(algebra) if isinstance(algebra, str) else algebra
    ensure_recursion_limit()
    ev = EffectEvaluator(alg, budget)
    t = ev.comp(tuple(env), m)
    return t, ev.effect
