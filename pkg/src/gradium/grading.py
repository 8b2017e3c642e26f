"""Grading algebras: preordered effect monoids, preordered coeffect semirings,
and grade-vector arithmetic.

Every grade value carries the name of the algebra that produced it, and every
binary operation checks that both operands agree.  Algebras are plain runtime
values looked up by name, so a single binary serves every instance.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence

from .errors import AlgebraMismatch, GradeSyntaxError, NoJoin


@dataclass(frozen=True)
class Effect:
    algebra: str
    value: Any

    def __str__(self) -> str:
        return EFFECT_ALGEBRAS[self.algebra].format(self)


@dataclass(frozen=True)
class Grade:
    algebra: str
    value: Any

    def __str__(self) -> str:
        return COEFFECT_ALGEBRAS[self.algebra].format(self)


_NAT = re.compile(r"\d+")


def _parse_nat(text: str) -> int:
    if not _NAT.fullmatch(text):
        raise GradeSyntaxError(f"expected a natural-number literal, got {text!r}")
    return int(text)


@dataclass(frozen=True)
class EffectAlgebra:
    """A preordered monoid plus a table of primitive operations."""

    name: str
    unit_value: Any
    combine_fn: Callable[[Any, Any], Any]
    leq_fn: Callable[[Any, Any], bool]
    join_fn: Callable[[Any, Any], Any] | None
    prim_table: Mapping[str, Any]
    parse_fn: Callable[[str], Any]
    format_fn: Callable[[Any], str] = str
    sample_fn: Callable[[int], Sequence[Any]] | None = None

    def lift(self, value: Any) -> Effect:
        return Effect(self.name, value)

    def _own(self, *effects: Effect) -> None:
        for e in effects:
            if not isinstance(e, Effect) or e.algebra != self.name:
                raise AlgebraMismatch(f"{e!r} does not belong to effect algebra {self.name}")

    @property
    def unit(self) -> Effect:
        return self.lift(self.unit_value)

    def combine(self, a: Effect, b: Effect) -> Effect:
        self._own(a, b)
        return self.lift(self.combine_fn(a.value, b.value))

    def leq(self, a: Effect, b: Effect) -> bool:
        self._own(a, b)
        return self.leq_fn(a.value, b.value)

    @property
    def has_joins(self) -> bool:
        return self.join_fn is not None

    def join(self, a: Effect, b: Effect) -> Effect:
        """Least upper bound of two branch effects, or NoJoin."""
        self._own(a, b)
        if self.join_fn is None:
            if a.value == b.value:
                return a
            raise NoJoin(f"{self.name}: branch effects {self.format(a)} and {self.format(b)} differ")
        return self.lift(self.join_fn(a.value, b.value))

    def prim(self, op: str) -> Effect:
        if op not in self.prim_table:
            raise KeyError(f"{self.name} has no primitive operation {op!r}")
        return self.lift(self.prim_table[op])

    def parse(self, text: str) -> Effect:
        return self.lift(self.parse_fn(text))

    def format(self, e: Effect) -> str:
        self._own(e)
        return self.format_fn(e.value)

    def elements(self, bound: int = 8) -> list[Effect]:
        assert self.sample_fn is not None
        return [self.lift(v) for v in self.sample_fn(bound)]


@dataclass(frozen=True)
class CoeffectAlgebra:
    """A preordered semiring.

    ``meet`` is the greatest lower bound in the preorder when it exists.  Shared
    constructs (with-pairs, case branches) need a single vector below both
    branch demands, and the meet is the least restrictive such vector.
    """

    name: str
    zero_value: Any
    one_value: Any
    add_fn: Callable[[Any, Any], Any]
    mul_fn: Callable[[Any, Any], Any]
    leq_fn: Callable[[Any, Any], bool]
    meet_fn: Callable[[Any, Any], Any] | None
    parse_fn: Callable[[str], Any]
    carrier: Callable[[int], Sequence[Any]]
    nontrivial: bool
    zero_sum_free: bool
    no_zero_divisors: bool
    format_fn: Callable[[Any], str] = str
    numeric: bool = False

    def lift(self, value: Any) -> Grade:
        return Grade(self.name, value)

    def _own(self, *grades: Grade) -> None:
        for g in grades:
            if not isinstance(g, Grade) or g.algebra != self.name:
                raise AlgebraMismatch(f"{g!r} does not belong to coeffect algebra {self.name}")

    @property
    def zero(self) -> Grade:
        return self.lift(self.zero_value)

    @property
    def one(self) -> Grade:
        return self.lift(self.one_value)

    def add(self, a: Grade, b: Grade) -> Grade:
        self._own(a, b)
        return self.lift(self.add_fn(a.value, b.value))

    def mul(self, a: Grade, b: Grade) -> Grade:
        self._own(a, b)
        return self.lift(self.mul_fn(a.value, b.value))

    def leq(self, a: Grade, b: Grade) -> bool:
        self._own(a, b)
        return self.leq_fn(a.value, b.value)

    def is_zero(self, a: Grade) -> bool:
        self._own(a)
        return a.value == self.zero_value

    def meet(self, a: Grade, b: Grade) -> Grade:
        self._own(a, b)
        if self.meet_fn is None:
            if a.value == b.value:
                return a
            raise NoJoin(f"{self.name}: shared demands {self.format(a)} and {self.format(b)} differ")
        return self.lift(self.meet_fn(a.value, b.value))

    def parse(self, text: str) -> Grade:
        return self.lift(self.parse_fn(text))

    def format(self, g: Grade) -> str:
        self._own(g)
        return self.format_fn(g.value)

    def elements(self, bound: int = 8) -> list[Grade]:
        return [self.lift(v) for v in self.carrier(bound)]

    def check_flags(self, bound: int = 6) -> dict[str, bool]:
        """Recompute the three resource flags on the carrier (up to ``bound``)."""
        elems = self.elements(bound)
        zero = self.zero
        nontrivial = self.zero != self.one
        zero_sum_free = all(
            not self.leq(zero, self.add(a, b)) or (self.is_zero(a) and self.is_zero(b))
            for a, b in itertools.product(elems, repeat=2)
        )
        no_zero_divisors = all(
            not self.is_zero(self.mul(a, b)) or self.is_zero(a) or self.is_zero(b)
            for a, b in itertools.product(elems, repeat=2)
        )
        return {
            "nontrivial": nontrivial,
            "zero_sum_free": zero_sum_free,
            "no_zero_divisors": no_zero_divisors,
        }

    @property
    def supports_resources(self) -> bool:
        # Resource evaluation also relies on "q <= 1 implies q != 0".
        return (
            self.nontrivial
            and self.zero_sum_free
            and self.no_zero_divisors
            and not self.leq(self.zero, self.one)
        )


# --- effect instances -------------------------------------------------------

NAT_COST = EffectAlgebra(
    name="nat-cost",
    unit_value=0,
    combine_fn=lambda a, b: a + b,
    leq_fn=lambda a, b: a <= b,
    join_fn=max,
    prim_table={"tick": 1},
    parse_fn=_parse_nat,
    sample_fn=lambda bound: range(bound + 1),
)

NAT_EXACT_EFFECT = EffectAlgebra(
    name="nat-exact",
    unit_value=0,
    combine_fn=lambda a, b: a + b,
    leq_fn=lambda a, b: a == b,
    join_fn=None,
    prim_table={"tick": 1},
    parse_fn=_parse_nat,
    sample_fn=lambda bound: range(bound + 1),
)

# --- coeffect instances -----------------------------------------------------

NAT_USAGE = CoeffectAlgebra(
    name="nat-usage",
    zero_value=0,
    one_value=1,
    add_fn=lambda a, b: a + b,
    mul_fn=lambda a, b: a * b,
    # Allowing more uses is less restrictive: a <= b iff a >= b numerically.
    leq_fn=lambda a, b: a >= b,
    meet_fn=max,
    parse_fn=_parse_nat,
    carrier=lambda bound: range(bound + 1),
    nontrivial=True,
    zero_sum_free=True,
    no_zero_divisors=True,
    numeric=True,
)

NAT_EXACT_COEFFECT = CoeffectAlgebra(
    name="nat-exact",
    zero_value=0,
    one_value=1,
    add_fn=lambda a, b: a + b,
    mul_fn=lambda a, b: a * b,
    leq_fn=lambda a, b: a == b,
    meet_fn=None,
    parse_fn=_parse_nat,
    carrier=lambda bound: range(bound + 1),
    nontrivial=True,
    zero_sum_free=True,
    no_zero_divisors=True,
    numeric=True,
)

_ZOM = ("0", "1", "w")


def _zom_add(a: str, b: str) -> str:
    if a == "0":
        return b
    if b == "0":
        return a
    return "w"


def _zom_mul(a: str, b: str) -> str:
    if a == "0" or b == "0":
        return "0"
    if a == "1":
        return b
    if b == "1":
        return a
    return "w"


def _zom_leq(a: str, b: str) -> bool:
    return a == b or a == "w"


def _zom_meet(a: str, b: str) -> str:
    return a if a == b else "w"


def _zom_parse(text: str) -> str:
    if text not in _ZOM:
        raise GradeSyntaxError(f"expected one of 0, 1, w, got {text!r}")
    return text


ZERO_ONE_MANY = CoeffectAlgebra(
    name="zero-one-many",
    zero_value="0",
    one_value="1",
    add_fn=_zom_add,
    mul_fn=_zom_mul,
    leq_fn=_zom_leq,
    meet_fn=_zom_meet,
    parse_fn=_zom_parse,
    carrier=lambda bound: _ZOM,
    nontrivial=True,
    zero_sum_free=True,
    no_zero_divisors=True,
)

EFFECT_ALGEBRAS: dict[str, EffectAlgebra] = {
    a.name: a for a in (NAT_COST, NAT_EXACT_EFFECT)
}
COEFFECT_ALGEBRAS: dict[str, CoeffectAlgebra] = {
    a.name: a for a in (NAT_USAGE, NAT_EXACT_COEFFECT, ZERO_ONE_MANY)
}


def effect_algebra(name: str) -> EffectAlgebra:
    try:
        return EFFECT_ALGEBRAS[name]
    except KeyError:
        raise ValueError(f"unknown effect algebra {name!r}; choose from {sorted(EFFECT_ALGEBRAS)}") from None


def coeffect_algebra(name: str) -> CoeffectAlgebra:
    try:
        return COEFFECT_ALGEBRAS[name]
    except KeyError:
        raise ValueError(f"unknown coeffect algebra {name!r}; choose from {sorted(COEFFECT_ALGEBRAS)}") from None


def eff_leq(a: Effect, b: Effect) -> bool:
    if a.algebra != b.algebra:
        raise AlgebraMismatch(f"cannot compare effects of {a.algebra} and {b.algebra}")
    return effect_algebra(a.algebra).leq(a, b)


def eff_combine(a: Effect, b: Effect) -> Effect:
    if a.algebra != b.algebra:
        raise AlgebraMismatch(f"cannot combine effects of {a.algebra} and {b.algebra}")
    return effect_algebra(a.algebra).combine(a, b)


# --- grade vectors ----------------------------------------------------------


@dataclass(frozen=True)
class GradeVec:
    """Grades aligned positionally with a typing context (oldest binding first)."""

    algebra: CoeffectAlgebra = field(compare=False, repr=False)
    grades: tuple[Grade, ...]

    def __post_init__(self) -> None:
        self.algebra._own(*self.grades)

    @classmethod
    def zeros(cls, algebra: CoeffectAlgebra, n: int) -> GradeVec:
        return cls(algebra, (algebra.zero,) * n)

    @classmethod
    def unit(cls, algebra: CoeffectAlgebra, n: int, slot: int) -> GradeVec:
        gs = [algebra.zero] * n
        gs[slot] = algebra.one
        return cls(algebra, tuple(gs))

    @classmethod
    def of(cls, algebra: CoeffectAlgebra, values: Iterable[Any]) -> GradeVec:
        return cls(algebra, tuple(v if isinstance(v, Grade) else algebra.lift(v) for v in values))

    def __len__(self) -> int:
        return len(self.grades)

    def __getitem__(self, i: int) -> Grade:
        return self.grades[i]

    def __iter__(self) -> Iterator[Grade]:
        return iter(self.grades)

    def _same_shape(self, other: GradeVec) -> None:
        if self.algebra.name != other.algebra.name:
            raise AlgebraMismatch(f"vectors over {self.algebra.name} and {other.algebra.name}")
        if len(self) != len(other):
            raise ValueError(f"grade vectors of lengths {len(self)} and {len(other)}")

    def __add__(self, other: GradeVec) -> GradeVec:
        self._same_shape(other)
        add = self.algebra.add
        return GradeVec(self.algebra, tuple(add(a, b) for a, b in zip(self, other)))

    def scale(self, q: Grade) -> GradeVec:
        mul = self.algebra.mul
        return GradeVec(self.algebra, tuple(mul(q, g) for g in self))

    def leq(self, other: GradeVec) -> bool:
        self._same_shape(other)
        return all(self.algebra.leq(a, b) for a, b in zip(self, other))

    def meet(self, other: GradeVec) -> GradeVec:
        self._same_shape(other)
        meet = self.algebra.meet
        return GradeVec(self.algebra, tuple(meet(a, b) for a, b in zip(self, other)))

    def extend(self, *grades: Grade) -> GradeVec:
        return GradeVec(self.algebra, self.grades + tuple(grades))

    def split(self, k: int) -> tuple[GradeVec, tuple[Grade, ...]]:
        """Separate the last ``k`` grades (the innermost binders)."""
        if k == 0:
            return self, ()
        return GradeVec(self.algebra, self.grades[:-k]), self.grades[-k:]

    def is_zero(self) -> bool:
        return all(self.algebra.is_zero(g) for g in self)

    def __str__(self) -> str:
        return "[" + ", ".join(self.algebra.format(g) for g in self) + "]"


def vec_add(g1: GradeVec, g2: GradeVec) -> GradeVec:
    return g1 + g2


def vec_scale(q: Grade, g: GradeVec) -> GradeVec:
    return g.scale(q)


def vec_leq(g1: GradeVec, g2: GradeVec) -> bool:
    return g1.leq(g2)
