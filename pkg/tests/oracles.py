"""Reference implementations used only by the tests.

Each one is written from the calculus' definitions without touching the
package's own checkers or evaluators.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from gradium.lam import (
    LAnnot, LApp, LCase, LInl, LInr, LLam, LPair, LSeq, LSplit, LTick, LUnit, LVar, SourceProgram,
)

# --- zero-one-many as an abstraction of counts -----------------------------


def abstract(n: int) -> str:
    return "0" if n == 0 else "1" if n == 1 else "w"


def counting_table(op) -> dict[tuple[str, str], str]:
    """Transport ``op`` on usage counts to the three-point carrier; fails if not well defined."""
    table: dict[tuple[str, str], set[str]] = {}
    for m, n in itertools.product(range(5), repeat=2):
        table.setdefault((abstract(m), abstract(n)), set()).add(abstract(op(m, n)))
    out = {}
    for key, results in table.items():
        assert len(results) == 1, f"{key} is not well defined on the abstraction"
        out[key] = results.pop()
    return out


# --- direct interpreter for the CBV effect dialect ---------------------------


@dataclass(frozen=True)
class Closure:
    env: dict
    name: str
    body: object


class TickCounter:
    """Big-step CBV evaluation of source terms, counting ``tick``."""

    def __init__(self):
        self.ticks = 0

    def run(self, env: dict, e):
        match e:
            case LVar(n):
                return env[n]
            case LUnit():
                return ()
            case LTick():
                self.ticks += 1
                return ()
            case LLam(n, _, body):
                return Closure(dict(env), n, body)
            case LApp(f, a):
                fn = self.run(env, f)
                arg = self.run(env, a)
                return self.run({**fn.env, fn.name: arg}, fn.body)
            case LPair(l, r):
                return (self.run(env, l), self.run(env, r))
            case LSplit(x, y, scrut, body):
                a, b = self.run(env, scrut)
                return self.run({**env, x: a, y: b}, body)
            case LInl(v):
                return ("inl", self.run(env, v))
            case LInr(v):
                return ("inr", self.run(env, v))
            case LCase(scrut, x, left, y, right):
                tag, w = self.run(env, scrut)
                return self.run({**env, x: w}, left) if tag == "inl" else self.run({**env, y: w}, right)
            case LSeq(first, then):
                self.run(env, first)
                return self.run(env, then)
            case LAnnot(inner, _):
                return self.run(env, inner)
        raise TypeError(f"not a CBV effect term: {e!r}")


def count_ticks(prog: SourceProgram, env: dict | None = None) -> int:
    counter = TickCounter()
    counter.run(env or {}, prog.term)
    return counter.ticks
