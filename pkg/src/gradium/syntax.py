"""Graded call-by-push-value syntax: types, value terms, computation terms.

Variables are positional: ``Var(i)`` refers to the ``i``-th closest enclosing
binder (de Bruijn indices).  User-facing names ride along as hints that do not
take part in equality, so ``==`` on terms is alpha-equivalence.  Grade and
effect annotations are stored as canonical literal strings and interpreted by
the algebra chosen at check time.

Concrete grammar (the ``^lit`` annotations are mode dependent)::

    values        x | () | { M } | (V, V) | inl V | inr V | <V, V> | V.1 | V.2 | (V : A)
    computations  \\x^q : A. M | M V | V! | return^q V | let x <-^q M in N
                  | case^q V of (x, y) -> M | V ; M
                  | case^q V of inl x -> M | inr y -> N
                  | <M, M> | M.1 | M.2 | (M, M) | case^q M of (x, y) -> N | tick
    types         Unit | U^phi B | F^q A | A ->^q B | A * A | A + A | A & A | B & B | B * B
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Iterator, Literal, Union

from .errors import ParseError

Mode = Literal["effect", "coeffect"]
MODES: tuple[Mode, ...] = ("effect", "coeffect")
PRIM_OPS = ("tick",)


def _span() -> tuple[int, int] | None:
    return field(default=None, compare=False, repr=False, kw_only=True)  # type: ignore[return-value]


# --- types ------------------------------------------------------------------


@dataclass(frozen=True)
class UnitType:
    pass


@dataclass(frozen=True)
class ThunkType:
    body: "CompType"
    effect: str | None = None


@dataclass(frozen=True)
class PairType:
    left: "ValType"
    right: "ValType"


@dataclass(frozen=True)
class SumType:
    left: "ValType"
    right: "ValType"


@dataclass(frozen=True)
class SharedPairType:
    left: "ValType"
    right: "ValType"


@dataclass(frozen=True)
class FunType:
    dom: "ValType"
    cod: "CompType"
    grade: str | None = None


@dataclass(frozen=True)
class ReturnerType:
    val: "ValType"
    grade: str | None = None


@dataclass(frozen=True)
class CompPairType:
    left: "CompType"
    right: "CompType"


@dataclass(frozen=True)
class TensorType:
    left: "CompType"
    right: "CompType"


ValType = Union[UnitType, ThunkType, PairType, SumType, SharedPairType]
CompType = Union[FunType, ReturnerType, CompPairType, TensorType]
VAL_TYPES = (UnitType, ThunkType, PairType, SumType, SharedPairType)
COMP_TYPES = (FunType, ReturnerType, CompPairType, TensorType)


# --- value terms ------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    index: int
    name: str = field(default="x", compare=False)
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class UnitVal:
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class Thunk:
    body: "Comp"
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class Pair:
    left: "Value"
    right: "Value"
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class Inl:
    value: "Value"
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class Inr:
    value: "Value"
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class SharedPair:
    left: "Value"
    right: "Value"
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class Proj:
    value: "Value"
    index: int
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class Ascribe:
    value: "Value"
    type: ValType
    span: tuple[int, int] | None = _span()


# --- computation terms ------------------------------------------------------


@dataclass(frozen=True)
class Lam:
    body: "Comp"
    grade: str | None = None
    annot: ValType | None = None
    name: str = field(default="x", compare=False)
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class App:
    fn: "Comp"
    arg: "Value"
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class Force:
    value: "Value"
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class Return:
    value: "Value"
    grade: str | None = None
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class Let:
    bound: "Comp"
    body: "Comp"
    grade: str | None = None
    name: str = field(default="x", compare=False)
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class Split:
    scrut: "Value"
    body: "Comp"
    grade: str | None = None
    names: tuple[str, str] = field(default=("x", "y"), compare=False)
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class Seq:
    value: "Value"
    body: "Comp"
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class Case:
    scrut: "Value"
    left: "Comp"
    right: "Comp"
    grade: str | None = None
    names: tuple[str, str] = field(default=("x", "y"), compare=False)
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class CPair:
    left: "Comp"
    right: "Comp"
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class CProj:
    comp: "Comp"
    index: int
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class Tensor:
    left: "Comp"
    right: "Comp"
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class TensorSplit:
    scrut: "Comp"
    body: "Comp"
    grade: str | None = None
    names: tuple[str, str] = field(default=("x", "y"), compare=False)
    span: tuple[int, int] | None = _span()


@dataclass(frozen=True)
class Prim:
    op: str
    span: tuple[int, int] | None = _span()


Value = Union[Var, UnitVal, Thunk, Pair, Inl, Inr, SharedPair, Proj, Ascribe]
Comp = Union[Lam, App, Force, Return, Let, Split, Seq, Case, CPair, CProj, Tensor, TensorSplit, Prim]
Term = Union[Value, Comp]
VALUES = (Var, UnitVal, Thunk, Pair, Inl, Inr, SharedPair, Proj, Ascribe)
COMPS = (Lam, App, Force, Return, Let, Split, Seq, Case, CPair, CProj, Tensor, TensorSplit, Prim)

# Subterm fields and how many binders each one sits under.
SUBTERMS: dict[type, tuple[tuple[str, int], ...]] = {
    Var: (),
    UnitVal: (),
    Thunk: (("body", 0),),
    Pair: (("left", 0), ("right", 0)),
    Inl: (("value", 0),),
    Inr: (("value", 0),),
    SharedPair: (("left", 0), ("right", 0)),
    Proj: (("value", 0),),
    Ascribe: (("value", 0),),
    Lam: (("body", 1),),
    App: (("fn", 0), ("arg", 0)),
    Force: (("value", 0),),
    Return: (("value", 0),),
    Let: (("bound", 0), ("body", 1)),
    Split: (("scrut", 0), ("body", 2)),
    Seq: (("value", 0), ("body", 0)),
    Case: (("scrut", 0), ("left", 1), ("right", 1)),
    CPair: (("left", 0), ("right", 0)),
    CProj: (("comp", 0),),
    Tensor: (("left", 0), ("right", 0)),
    TensorSplit: (("scrut", 0), ("body", 2)),
    Prim: (),
}


def is_value(t: Term) -> bool:
    return isinstance(t, VALUES)


def is_comp(t: Term) -> bool:
    return isinstance(t, COMPS)


def subterms(t: Term) -> Iterator[tuple[Term, int]]:
    for name, binders in SUBTERMS[type(t)]:
        yield getattr(t, name), binders


def map_subterms(t: Term, fn: Callable[[Term, int], Term]) -> Term:
    spec = SUBTERMS[type(t)]
    if not spec:
        return t
    return replace(t, **{name: fn(getattr(t, name), b) for name, b in spec})


def binder_names(t: Term) -> tuple[str, ...]:
    match t:
        case Lam(name=n) | Let(name=n):
            return (n,)
        case Split(names=ns) | TensorSplit(names=ns):
            return ns
        case Case(names=ns):
            return ns
    return ()


def shift(t: Term, by: int, cutoff: int = 0) -> Term:
    """Add ``by`` to every free index at or above ``cutoff``."""
    if isinstance(t, Var):
        if t.index >= cutoff:
            if t.index + by < 0:
                raise ValueError("shift would produce a negative index")
            return replace(t, index=t.index + by)
        return t
    return map_subterms(t, lambda c, b: shift(c, by, cutoff + b))


def free_indices(t: Term, depth: int = 0) -> set[int]:
    if isinstance(t, Var):
        return {t.index - depth} if t.index >= depth else set()
    out: set[int] = set()
    for c, b in subterms(t):
        out |= free_indices(c, depth + b)
    return out


def resolve(t: Term, scope: list[str] | tuple[str, ...] = ()) -> Term:
    """Recompute variable indices from their names (innermost binding wins).

    Used to build terms by name, e.g. in the translators.
    """
    scope = list(scope)

    def go(t: Term, scope: list[str]) -> Term:
        if isinstance(t, Var):
            for i, n in enumerate(reversed(scope)):
                if n == t.name:
                    return replace(t, index=i)
            raise ParseError(f"unbound variable {t.name!r}")
        names = binder_names(t)
        spec = SUBTERMS[type(t)]
        if not spec:
            return t
        kw = {}
        for fname, b in spec:
            if isinstance(t, Case):
                extra = [t.names[0]] if fname == "left" else [t.names[1]] if fname == "right" else []
            else:
                extra = list(names[:b])
            kw[fname] = go(getattr(t, fname), scope + extra)
        return replace(t, **kw)

    return go(t, scope)


def size(t: Term) -> int:
    return 1 + sum(size(c) for c, _ in subterms(t))


def depth(t: Term) -> int:
    return 1 + max((depth(c) for c, _ in subterms(t)), default=0)


def walk(t: Term) -> Iterator[Term]:
    yield t
    for c, _ in subterms(t):
        yield from walk(c)


# --- programs ---------------------------------------------------------------


@dataclass(frozen=True)
class Program:
    mode: Mode
    context: tuple[tuple[str, ValType], ...]
    term: Comp

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.context]


# --- lexer ------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<comment>--[^\n]*)|(?P<num>\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<sym><-|->|[\\.^(){}<>,;!:|*+&])"
)
KEYWORDS = {"let", "in", "case", "of", "inl", "inr", "return", "Unit", "U", "F"} | set(PRIM_OPS)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        assert kind is not None
        if kind not in ("ws", "comment"):
            tk = kind
            if kind == "ident" and m.group() in KEYWORDS:
                tk = "kw"
            out.append(Token(tk, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


_LIT = re.compile(r"\d+|w")


def _canon_lit(text: str) -> str:
    return str(int(text)) if text.isdigit() else text


class _Parser:
    def __init__(self, text: str, mode: Mode):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.toks = tokenize(text)
        self.i = 0
        self.mode = mode

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("sym", "kw")

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        found = tok.text or "end of input"
        return ParseError(f"{msg} (found {found!r})", tok.line, tok.col)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def ident(self) -> str:
        if self.tok.kind != "ident":
            raise self.error("expected an identifier")
        t = self.tok
        self.i += 1
        return t.text

    def literal(self) -> str:
        t = self.tok
        if t.kind == "num" or (t.kind == "ident" and t.text == "w"):
            self.i += 1
            return _canon_lit(t.text)
        raise self.error("expected a grade literal")

    def annotation(self, what: str, wanted: bool) -> str | None:
        """Parse an optional ``^lit`` and validate it against the mode."""
        start = self.tok
        lit = self.literal() if self.accept("^") else None
        if wanted and lit is None:
            raise self.error(f"missing annotation on {what} ({self.mode} mode)", start)
        if not wanted and lit is not None:
            raise self.error(f"annotation on {what} is illegal in {self.mode} mode", start)
        return lit

    @property
    def co(self) -> bool:
        return self.mode == "coeffect"

    # types
    def type_(self):
        start = self.tok
        left = self.sum_type()
        if self.accept("->"):
            grade = self.annotation("function type", self.co)
            cod = self.type_()
            if not isinstance(left, VAL_TYPES) or not isinstance(cod, COMP_TYPES):
                raise self.error("function types map a value type to a computation type", start)
            return FunType(left, cod, grade)
        return left

    def sum_type(self):
        start = self.tok
        left = self.prod_type()
        while self.accept("+"):
            right = self.prod_type()
            if not isinstance(left, VAL_TYPES) or not isinstance(right, VAL_TYPES):
                raise self.error("sums combine value types", start)
            left = SumType(left, right)
        return left

    def prod_type(self):
        start = self.tok
        left = self.prefix_type()
        while self.at("*") or self.at("&"):
            op = self.tok.text
            self.i += 1
            right = self.prefix_type()
            vals = isinstance(left, VAL_TYPES) and isinstance(right, VAL_TYPES)
            comps = isinstance(left, COMP_TYPES) and isinstance(right, COMP_TYPES)
            if op == "*" and vals:
                left = PairType(left, right)
            elif op == "&" and vals:
                if not self.co:
                    raise self.error("shared value products exist only in coeffect mode", start)
                left = SharedPairType(left, right)
            elif op == "&" and comps:
                left = CompPairType(left, right)
            elif op == "*" and comps:
                if not self.co:
                    raise self.error("computation tensors exist only in coeffect mode", start)
                left = TensorType(left, right)
            else:
                raise self.error(f"both sides of {op!r} must have the same sort", start)
        return left

    def prefix_type(self):
        start = self.tok
        if self.accept("U"):
            eff = self.annotation("thunk type", not self.co)
            body = self.prefix_type()
            if not isinstance(body, COMP_TYPES):
                raise self.error("U expects a computation type", start)
            return ThunkType(body, eff)
        if self.accept("F"):
            grade = self.annotation("returner type", self.co)
            val = self.prefix_type()
            if not isinstance(val, VAL_TYPES):
                raise self.error("F expects a value type", start)
            return ReturnerType(val, grade)
        if self.accept("Unit"):
            return UnitType()
        if self.accept("("):
            t = self.type_()
            self.expect(")")
            return t
        raise self.error("expected a type")

    # terms
    def program_term(self, scope: list[str]) -> Comp:
        t = self.term(scope)
        if self.tok.kind != "eof":
            raise self.error("unexpected trailing input")
        if not is_comp(t):
            raise self.error("a program is a computation, not a value", self.toks[0])
        return t

    def need_comp(self, t: Term, tok: Token, where: str) -> Comp:
        if not is_comp(t):
            raise self.error(f"{where} must be a computation", tok)
        return t  # type: ignore[return-value]

    def need_value(self, t: Term, tok: Token, where: str) -> Value:
        if not is_value(t):
            raise self.error(f"{where} must be a value", tok)
        return t  # type: ignore[return-value]

    def term(self, scope: list[str]) -> Term:
        tok = self.tok
        sp = (tok.line, tok.col)
        if self.accept("\\"):
            name = self.ident()
            grade = self.annotation("lambda", self.co)
            annot = None
            if self.accept(":"):
                annot = self.type_()
                if not isinstance(annot, VAL_TYPES):
                    raise self.error("a binder's type must be a value type", tok)
            self.expect(".")
            body_tok = self.tok
            body = self.need_comp(self.term(scope + [name]), body_tok, "a lambda body")
            return Lam(body, grade, annot, name, span=sp)
        if self.accept("let"):
            name = self.ident()
            self.expect("<-")
            grade = self.annotation("let", self.co)
            b_tok = self.tok
            bound = self.need_comp(self.term(scope), b_tok, "a let-bound term")
            self.expect("in")
            body_tok = self.tok
            body = self.need_comp(self.term(scope + [name]), body_tok, "a let body")
            return Let(bound, body, grade, name, span=sp)
        if self.accept("case"):
            grade = self.annotation("case", self.co)
            s_tok = self.tok
            scrut = self.term(scope)
            self.expect("of")
            if self.accept("("):
                x = self.ident()
                self.expect(",")
                y = self.ident()
                self.expect(")")
                self.expect("->")
                body_tok = self.tok
                body = self.need_comp(self.term(scope + [x, y]), body_tok, "a split body")
                if is_value(scrut):
                    return Split(scrut, body, grade, (x, y), span=sp)  # type: ignore[arg-type]
                if not self.co:
                    raise self.error("splitting a computation tensor needs coeffect mode", s_tok)
                return TensorSplit(scrut, body, grade, (x, y), span=sp)  # type: ignore[arg-type]
            scrut_v = self.need_value(scrut, s_tok, "a case scrutinee")
            self.expect("inl")
            x = self.ident()
            self.expect("->")
            l_tok = self.tok
            left = self.need_comp(self.term(scope + [x]), l_tok, "a case branch")
            self.expect("|")
            self.expect("inr")
            y = self.ident()
            self.expect("->")
            r_tok = self.tok
            right = self.need_comp(self.term(scope + [y]), r_tok, "a case branch")
            return Case(scrut_v, left, right, grade, (x, y), span=sp)
        head = self.app(scope)
        if self.accept(";"):
            v = self.need_value(head, tok, "the left of ';'")
            body_tok = self.tok
            body = self.need_comp(self.term(scope), body_tok, "the right of ';'")
            return Seq(v, body, span=sp)
        return head

    def app(self, scope: list[str]) -> Term:
        tok = self.tok
        head = self.prefix(scope)
        while self.starts_atom():
            a_tok = self.tok
            arg = self.postfix(scope)
            fn = self.need_comp(head, tok, "an applied term")
            head = App(fn, self.need_value(arg, a_tok, "an argument"), span=(tok.line, tok.col))
        return head

    def starts_atom(self) -> bool:
        t = self.tok
        return t.kind == "ident" or (t.kind in ("sym", "kw") and t.text in ("(", "<", "{") + PRIM_OPS)

    def prefix(self, scope: list[str]) -> Term:
        tok = self.tok
        sp = (tok.line, tok.col)
        for kw, ctor in (("inl", Inl), ("inr", Inr)):
            if self.accept(kw):
                a_tok = self.tok
                return ctor(self.need_value(self.prefix(scope), a_tok, f"the argument of {kw}"), span=sp)
        if self.accept("return"):
            grade = self.annotation("return", self.co)
            a_tok = self.tok
            return Return(self.need_value(self.prefix(scope), a_tok, "the argument of return"), grade, span=sp)
        return self.postfix(scope)

    def postfix(self, scope: list[str]) -> Term:
        tok = self.tok
        t = self.atom(scope)
        while True:
            if self.accept("!"):
                t = Force(self.need_value(t, tok, "a forced term"), span=(tok.line, tok.col))
            elif self.at(".") and self.toks[self.i + 1].kind == "num":
                self.i += 1
                n_tok = self.tok
                self.i += 1
                if n_tok.text not in ("1", "2"):
                    raise self.error("projections are .1 or .2", n_tok)
                idx = int(n_tok.text)
                if is_value(t):
                    if not self.co:
                        raise self.error("value projections exist only in coeffect mode", tok)
                    t = Proj(t, idx, span=(tok.line, tok.col))  # type: ignore[arg-type]
                else:
                    t = CProj(t, idx, span=(tok.line, tok.col))  # type: ignore[arg-type]
            else:
                return t

    def atom(self, scope: list[str]) -> Term:
        tok = self.tok
        sp = (tok.line, tok.col)
        if tok.kind == "ident":
            self.i += 1
            for i, n in enumerate(reversed(scope)):
                if n == tok.text:
                    return Var(i, tok.text, span=sp)
            raise self.error(f"unbound variable {tok.text!r}", tok)
        if tok.kind == "kw" and tok.text in PRIM_OPS:
            self.i += 1
            if self.co:
                raise self.error(f"primitive {tok.text!r} exists only in effect mode", tok)
            return Prim(tok.text, span=sp)
        if self.accept("{"):
            b_tok = self.tok
            body = self.need_comp(self.term(scope), b_tok, "a thunk body")
            self.expect("}")
            return Thunk(body, span=sp)
        if self.accept("<"):
            left = self.term(scope)
            self.expect(",")
            right = self.term(scope)
            self.expect(">")
            if is_value(left) and is_value(right):
                if not self.co:
                    raise self.error("shared value pairs exist only in coeffect mode", tok)
                return SharedPair(left, right, span=sp)  # type: ignore[arg-type]
            if is_comp(left) and is_comp(right):
                return CPair(left, right, span=sp)  # type: ignore[arg-type]
            raise self.error("both components of <_, _> must have the same sort", tok)
        if self.accept("("):
            if self.accept(")"):
                return UnitVal(span=sp)
            inner = self.term(scope)
            if self.accept(")"):
                return inner
            if self.accept(":"):
                ty = self.type_()
                self.expect(")")
                v = self.need_value(inner, tok, "an ascribed term")
                if not isinstance(ty, VAL_TYPES):
                    raise self.error("ascriptions use value types", tok)
                return Ascribe(v, ty, span=sp)
            self.expect(",")
            right = self.term(scope)
            self.expect(")")
            if is_value(inner) and is_value(right):
                return Pair(inner, right, span=sp)  # type: ignore[arg-type]
            if is_comp(inner) and is_comp(right):
                if not self.co:
                    raise self.error("computation tensors exist only in coeffect mode", tok)
                return Tensor(inner, right, span=sp)  # type: ignore[arg-type]
            raise self.error("both components of (_, _) must have the same sort", tok)
        raise self.error("expected a term")


_HEADER = re.compile(r"^\s*--\s*(\w+)\s*:\s*(.*?)\s*$")


def read_headers(text: str) -> dict[str, str]:
    """Collect leading ``-- key: value`` comment lines."""
    headers: dict[str, str] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        m = _HEADER.match(line)
        if not m:
            if line.lstrip().startswith("--"):
                continue
            break
        headers[m.group(1)] = m.group(2)
    return headers


def split_top(text: str, sep: str = ",") -> list[str]:
    """Split on ``sep`` outside brackets."""
    parts, depth, cur = [], 0, []
    for i, ch in enumerate(text):
        arrow = (ch == ">" and text[i - 1 : i] == "-") or (ch == "<" and text[i + 1 : i + 2] == "-")
        if ch in "([{<" and not arrow:
            depth += 1
        elif ch in ")]}>" and not arrow:
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        parts.append("".join(cur))
    return [p.strip() for p in parts]


def parse_type(text: str, mode: Mode):
    p = _Parser(text, mode)
    t = p.type_()
    if p.tok.kind != "eof":
        raise p.error("unexpected trailing input")
    return t


def parse_context(text: str, mode: Mode) -> tuple[tuple[str, ValType], ...]:
    out = []
    for entry in split_top(text):
        if ":" not in entry:
            raise ParseError(f"context entry {entry!r} needs the form name : type")
        name, ty_text = entry.split(":", 1)
        name = name.strip()
        ty = parse_type(ty_text, mode)
        if not isinstance(ty, VAL_TYPES):
            raise ParseError(f"context entry {name!r} must have a value type")
        out.append((name, ty))
    return tuple(out)


def parse(text: str, mode: Mode | None = None, context: tuple[tuple[str, ValType], ...] | None = None) -> Program:
    """Parse a ``.cbpv`` program.

    The mode comes from the argument or a ``-- mode:`` header; a ``-- context:``
    header declares free variables as ``x : A, y : B``.
    """
    headers = read_headers(text)
    header_mode = headers.get("mode")
    if mode is None:
        mode = header_mode or "effect"  # type: ignore[assignment]
    elif header_mode and header_mode != mode:
        raise ParseError(f"file declares mode {header_mode!r} but {mode!r} was requested")
    if mode not in MODES:
        raise ParseError(f"unknown mode {mode!r}")
    if context is None:
        context = parse_context(headers["context"], mode) if headers.get("context") else ()  # type: ignore[arg-type]
    term = _Parser(text, mode).program_term([n for n, _ in context])  # type: ignore[arg-type]
    return Program(mode, context, term)  # type: ignore[arg-type]


def parse_term(text: str, mode: Mode, names: list[str] | None = None) -> Term:
    p = _Parser(text, mode)
    t = p.term(list(names or []))
    if p.tok.kind != "eof":
        raise p.error("unexpected trailing input")
    return t


# --- printer ----------------------------------------------------------------


def _ann(lit: str | None) -> str:
    return f"^{lit}" if lit is not None else ""


def print_type(t) -> str:
    def sub(t) -> str:
        s = print_type(t)
        return s if isinstance(t, (UnitType, ThunkType, ReturnerType)) else f"({s})"

    match t:
        case UnitType():
            return "Unit"
        case ThunkType(body, eff):
            return f"U{_ann(eff)} {sub(body)}"
        case ReturnerType(val, grade):
            return f"F{_ann(grade)} {sub(val)}"
        case PairType(l, r) | TensorType(l, r):
            return f"{sub(l)} * {sub(r)}"
        case SharedPairType(l, r) | CompPairType(l, r):
            return f"{sub(l)} & {sub(r)}"
        case SumType(l, r):
            return f"{sub(l)} + {sub(r)}"
        case FunType(dom, cod, grade):
            return f"{sub(dom)} ->{_ann(grade)} {print_type(cod)}"
    raise TypeError(f"not a type: {t!r}")


_OPEN, _APP, _POSTFIX, _ATOM = 0, 1, 2, 3


def _level(t: Term) -> int:
    match t:
        case Lam() | Let() | Case() | Split() | TensorSplit() | Seq():
            return _OPEN
        case App() | Return() | Inl() | Inr():
            return _APP
        case Force() | Proj() | CProj():
            return _POSTFIX
    return _ATOM


class _Printer:
    def __init__(self, free: list[str]):
        self.free = free

    def fresh(self, hint: str, scope: list[str]) -> str:
        taken = set(scope) | set(self.free)
        if hint not in taken:
            return hint
        base = hint.rstrip("0123456789'") or "x"
        k = 1
        while f"{base}{k}" in taken:
            k += 1
        return f"{base}{k}"

    def name(self, v: Var, scope: list[str]) -> str:
        if v.index < len(scope):
            return scope[-1 - v.index]
        j = v.index - len(scope)
        if j < len(self.free):
            return self.free[-1 - j]
        return v.name

    def at(self, t: Term, scope: list[str], min_level: int) -> str:
        s = self.show(t, scope)
        return s if _level(t) >= min_level else f"({s})"

    def prefix_arg(self, t: Term, scope: list[str]) -> str:
        if isinstance(t, (Inl, Inr)):
            return self.show(t, scope)
        return self.at(t, scope, _POSTFIX)

    def show(self, t: Term, scope: list[str]) -> str:
        match t:
            case Var():
                return self.name(t, scope)
            case UnitVal():
                return "()"
            case Thunk(body):
                return "{ " + self.show(body, scope) + " }"
            case Pair(l, r) | Tensor(l, r):
                return f"({self.show(l, scope)}, {self.show(r, scope)})"
            case SharedPair(l, r) | CPair(l, r):
                return f"<{self.show(l, scope)}, {self.show(r, scope)}>"
            case Inl(v):
                return "inl " + self.prefix_arg(v, scope)
            case Inr(v):
                return "inr " + self.prefix_arg(v, scope)
            case Proj(v, i):
                return f"{self.at(v, scope, _POSTFIX)}.{i}"
            case CProj(m, i):
                return f"{self.at(m, scope, _POSTFIX)}.{i}"
            case Ascribe(v, ty):
                return f"({self.show(v, scope)} : {print_type(ty)})"
            case Lam(body, grade, annot, name):
                x = self.fresh(name, scope)
                ann = f" : {print_type(annot)}" if annot is not None else ""
                return f"\\{x}{_ann(grade)}{ann}. {self.show(body, scope + [x])}"
            case App(fn, arg):
                return f"{self.at(fn, scope, _APP)} {self.at(arg, scope, _POSTFIX)}"
            case Force(v):
                return f"{self.at(v, scope, _POSTFIX)}!"
            case Return(v, grade):
                return f"return{_ann(grade)} {self.prefix_arg(v, scope)}"
            case Let(bound, body, grade, name):
                x = self.fresh(name, scope)
                return f"let {x} <-{_ann(grade)} {self.show(bound, scope)} in {self.show(body, scope + [x])}"
            case Split(scrut, body, grade, (n1, n2)) | TensorSplit(scrut, body, grade, (n1, n2)):
                x = self.fresh(n1, scope)
                y = self.fresh(n2, scope + [x])
                return (
                    f"case{_ann(grade)} {self.at(scrut, scope, _APP)} of ({x}, {y}) -> "
                    f"{self.show(body, scope + [x, y])}"
                )
            case Seq(v, body):
                return f"{self.at(v, scope, _APP)}; {self.show(body, scope)}"
            case Case(scrut, left, right, grade, (n1, n2)):
                x = self.fresh(n1, scope)
                y = self.fresh(n2, scope)
                return (
                    f"case{_ann(grade)} {self.at(scrut, scope, _APP)} of inl {x} -> "
                    f"{self.at(left, scope + [x], _APP)} | inr {y} -> {self.show(right, scope + [y])}"
                )
            case Prim(op):
                return op
        raise TypeError(f"not a term: {t!r}")


def print_term(t: Term, names: list[str] | tuple[str, ...] = ()) -> str:
    """Render a term; ``names`` name its free variables (oldest first)."""
    return _Printer(list(names)).show(t, [])


def print_program(p: Program) -> str:
    lines = [f"-- mode: {p.mode}"]
    if p.context:
        ctx = ", ".join(f"{n} : {print_type(ty)}" for n, ty in p.context)
        lines.append(f"-- context: {ctx}")
    lines.append(print_term(p.term, p.names))
    return "\n".join(lines) + "\n"


def alpha_eq(t1: Term, t2: Term) -> bool:
    """Equality up to bound-variable names (names never take part in ``==``)."""
    return t1 == t2


def erase_annotations(t: Term) -> Term:
    """Strip grade/effect annotations (used when comparing shapes across modes)."""
    kw = {}
    for f in fields(t):
        if f.name in ("grade",):
            kw[f.name] = None
    t2 = replace(t, **kw) if kw else t
    return map_subterms(t2, lambda c, b: erase_annotations(c))
