"""Source λ-calculi for the translations: syntax, parser and type checkers.

Four families share one AST and differ in which constructs they admit:

``effect``     CBV λ-calculus whose arrows carry a latent effect, plus ``tick``.
``monadic``    pure λ-calculus with a graded monad ``T^e t`` (``return``, ``bind``, ``tick``).
``coeffect``   graded arrows ``t ->^q t``, a graded box ``Box^q t`` and graded eliminators.
``comonadic``  linear λ-calculus with ``extract``, ``extend``, ``divide`` and ``discard``.

A dialect is a family plus an evaluation strategy (``cbn``/``cbv``).  The
strategy decides the product former: CBN programs use ``<e, e>`` with
``fst``/``snd``, CBV programs use ``(e, e)`` with ``let (x, y) = e in e``.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

from .errors import GradeViolation, ParseError, TypeCheckError
from .grading import CoeffectAlgebra, Effect, EffectAlgebra, GradeVec, coeffect_algebra, effect_algebra
from .syntax import Token, read_headers, split_top

FAMILIES = ("effect", "monadic", "coeffect", "comonadic")
DIALECTS: dict[str, tuple[str, str]] = {
    "cbv-eff": ("effect", "cbv"),
    "cbn-mon": ("monadic", "cbn"),
    "cbv-mon": ("monadic", "cbv"),
    "cbn-co": ("coeffect", "cbn"),
    "cbv-co": ("coeffect", "cbv"),
    "cbn-comonad": ("comonadic", "cbn"),
    "cbv-comonad": ("comonadic", "cbv"),
}


def dialect_parts(dialect: str) -> tuple[str, str]:
    if dialect not in DIALECTS:
        raise ParseError(f"unknown dialect {dialect!r}; expected one of {', '.join(DIALECTS)}")
    return DIALECTS[dialect]


def is_effect_family(family: str) -> bool:
    return family in ("effect", "monadic")


# --- types ------------------------------------------------------------------


@dataclass(frozen=True)
class TUnit:
    pass


@dataclass(frozen=True)
class TArrow:
    """``dom -> cod``; ``grade`` is the latent effect (effect family) or the
    argument grade (coeffect family), and absent otherwise."""

    dom: "SType"
    cod: "SType"
    grade: str | None = None


@dataclass(frozen=True)
class TLolli:
    dom: "SType"
    cod: "SType"


@dataclass(frozen=True)
class TTensor:
    left: "SType"
    right: "SType"


@dataclass(frozen=True)
class TWith:
    left: "SType"
    right: "SType"


@dataclass(frozen=True)
class TSum:
    left: "SType"
    right: "SType"


@dataclass(frozen=True)
class TMonad:
    effect: str
    body: "SType"


@dataclass(frozen=True)
class TBox:
    grade: str
    body: "SType"


SType = TUnit | TArrow | TLolli | TTensor | TWith | TSum | TMonad | TBox


# --- terms ------------------------------------------------------------------


def _node() -> int:
    return field(default=0, compare=False, repr=False)  # type: ignore[return-value]


@dataclass(frozen=True, eq=False)
class Src:
    """Base for source terms.  Identity matters: checkers key node types by ``id``."""


@dataclass(frozen=True, eq=False)
class LVar(Src):
    name: str


@dataclass(frozen=True, eq=False)
class LUnit(Src):
    pass


@dataclass(frozen=True, eq=False)
class LTick(Src):
    pass


@dataclass(frozen=True, eq=False)
class LLam(Src):
    name: str
    dom: SType
    body: Src
    grade: str | None = None


@dataclass(frozen=True, eq=False)
class LApp(Src):
    fn: Src
    arg: Src


@dataclass(frozen=True, eq=False)
class LPair(Src):
    left: Src
    right: Src


@dataclass(frozen=True, eq=False)
class LSplit(Src):
    x: str
    y: str
    scrut: Src
    body: Src
    grade: str | None = None


@dataclass(frozen=True, eq=False)
class LWith(Src):
    left: Src
    right: Src


@dataclass(frozen=True, eq=False)
class LProj(Src):
    index: int
    value: Src


@dataclass(frozen=True, eq=False)
class LInl(Src):
    value: Src


@dataclass(frozen=True, eq=False)
class LInr(Src):
    value: Src


@dataclass(frozen=True, eq=False)
class LCase(Src):
    scrut: Src
    x: str
    left: Src
    y: str
    right: Src
    grade: str | None = None


@dataclass(frozen=True, eq=False)
class LSeq(Src):
    first: Src
    then: Src


@dataclass(frozen=True, eq=False)
class LAnnot(Src):
    term: Src
    type: SType


@dataclass(frozen=True, eq=False)
class LReturn(Src):
    value: Src


@dataclass(frozen=True, eq=False)
class LBind(Src):
    name: str
    bound: Src
    body: Src


@dataclass(frozen=True, eq=False)
class LBox(Src):
    grade: str
    value: Src


@dataclass(frozen=True, eq=False)
class LUnbox(Src):
    grade: str
    name: str
    bound: Src
    body: Src


@dataclass(frozen=True, eq=False)
class LExtract(Src):
    value: Src


@dataclass(frozen=True, eq=False)
class LExtend(Src):
    grade: str
    binders: tuple[tuple[str, str, Src], ...]
    body: Src


@dataclass(frozen=True, eq=False)
class LDivide(Src):
    x1: str
    q1: str
    x2: str
    q2: str
    bound: Src
    body: Src


@dataclass(frozen=True, eq=False)
class LDiscard(Src):
    bound: Src
    body: Src


def src_eq(a, b) -> bool:
    """Structural equality of source terms (terms compare by identity otherwise)."""
    if type(a) is not type(b):
        return False
    if not isinstance(a, Src):
        if isinstance(a, tuple):
            return len(a) == len(b) and all(src_eq(x, y) for x, y in zip(a, b))
        return a == b
    return all(src_eq(getattr(a, f), getattr(b, f)) for f in a.__dataclass_fields__)


@dataclass(frozen=True)
class SourceProgram:
    dialect: str
    context: tuple[tuple[str, SType], ...]
    term: Src

    @property
    def family(self) -> str:
        return DIALECTS[self.dialect][0]

    @property
    def strategy(self) -> str:
        return DIALECTS[self.dialect][1]


# --- parser -----------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<comment>--[^\n]*)|(?P<num>\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<sym><-|->|-o|[\\.^(){}<>,;:|*+&=])"
)
KEYWORDS = {
    "let", "in", "case", "of", "inl", "inr", "fst", "snd", "tick", "return", "bind", "box", "unbox",
    "extract", "extend", "divide", "discard", "unit", "T", "Box",
}


def _tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos, line, start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup or ""
        if kind not in ("ws", "comment"):
            if kind == "ident" and m.group() in KEYWORDS:
                kind = "kw"
            out.append(Token(kind, m.group(), line, pos - start + 1))
        chunk = m.group()
        if "\n" in chunk:
            line += chunk.count("\n")
            start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


_PREFIX = ("inl", "inr", "fst", "snd", "return", "extract", "box")


class _SrcParser:
    def __init__(self, text: str, family: str, strategy: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.family = family
        self.strategy = strategy

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("sym", "kw")

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(f"{msg} (found {tok.text or 'end of input'!r})", tok.line, tok.col)

    def expect(self, text: str) -> None:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        self.i += 1

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def ident(self) -> str:
        if self.tok.kind != "ident" or self.tok.text.startswith("_"):
            raise self.error("expected a variable name (names may not start with '_')")
        self.i += 1
        return self.toks[self.i - 1].text

    def literal(self) -> str:
        t = self.tok
        if t.kind == "num" or (t.kind == "ident" and t.text == "w"):
            self.i += 1
            return str(int(t.text)) if t.text.isdigit() else t.text
        raise self.error("expected a grade literal")

    def grade(self, required: bool) -> str | None:
        if self.accept("^"):
            return self.literal()
        if required:
            raise self.error("missing grade annotation")
        return None

    def only(self, families: tuple[str, ...], what: str, tok: Token) -> None:
        if self.family not in families:
            raise self.error(f"{what} is not part of the {self.family} calculus", tok)

    def strategy_only(self, strategy: str, what: str, tok: Token) -> None:
        if self.strategy != strategy:
            raise self.error(f"{what} belongs to {strategy.upper()} programs", tok)

    # types

    def type_(self) -> SType:
        tok = self.tok
        left = self.sum_type()
        if self.accept("->"):
            if self.family == "comonadic":
                raise self.error("the comonadic calculus uses linear arrows '-o'", tok)
            grade = None
            if self.family in ("effect", "coeffect"):
                grade = self.grade(self.family == "coeffect")
                if grade is None:
                    grade = "0"
            return TArrow(left, self.type_(), grade)
        if self.accept("-o"):
            self.only(("comonadic",), "'-o'", tok)
            return TLolli(left, self.type_())
        return left

    def sum_type(self) -> SType:
        left = self.prod_type()
        while self.accept("+"):
            left = TSum(left, self.prod_type())
        return left

    def prod_type(self) -> SType:
        left = self.prefix_type()
        while True:
            tok = self.tok
            if self.accept("*"):
                self.strategy_only("cbv", "'*'", tok)
                left = TTensor(left, self.prefix_type())
            elif self.accept("&"):
                self.strategy_only("cbn", "'&'", tok)
                left = TWith(left, self.prefix_type())
            else:
                return left

    def prefix_type(self) -> SType:
        tok = self.tok
        if self.accept("T"):
            self.only(("monadic",), "T", tok)
            self.expect("^")
            return TMonad(self.literal(), self.prefix_type())
        if self.accept("Box"):
            self.only(("coeffect", "comonadic"), "Box", tok)
            self.expect("^")
            return TBox(self.literal(), self.prefix_type())
        if self.accept("unit"):
            return TUnit()
        if self.accept("("):
            t = self.type_()
            self.expect(")")
            return t
        raise self.error("expected a type")

    # terms

    def expr(self) -> Src:
        tok = self.tok
        if self.accept("\\"):
            name = self.ident()
            grade = self.grade(self.family == "coeffect") if self.family == "coeffect" else None
            self.expect(":")
            dom = self.type_()
            self.expect(".")
            return LLam(name, dom, self.expr(), grade)
        if self.accept("let"):
            self.strategy_only("cbv", "pair splitting", tok)
            grade = self.grade(self.family == "coeffect") if self.family == "coeffect" else None
            self.expect("(")
            x = self.ident()
            self.expect(",")
            y = self.ident()
            self.expect(")")
            self.expect("=")
            scrut = self.expr()
            self.expect("in")
            return LSplit(x, y, scrut, self.expr(), grade)
        if self.accept("case"):
            self.only(("effect", "monadic", "coeffect"), "case", tok)
            grade = self.grade(self.family == "coeffect") if self.family == "coeffect" else None
            scrut = self.expr()
            self.expect("of")
            self.expect("inl")
            x = self.ident()
            self.expect("->")
            left = self.expr()
            self.expect("|")
            self.expect("inr")
            y = self.ident()
            self.expect("->")
            return LCase(scrut, x, left, y, self.expr(), grade)
        if self.accept("bind"):
            self.only(("monadic",), "bind", tok)
            name = self.ident()
            self.expect("<-")
            bound = self.expr()
            self.expect("in")
            return LBind(name, bound, self.expr())
        if self.accept("unbox"):
            self.only(("coeffect",), "unbox", tok)
            self.expect("^")
            q = self.literal()
            name = self.ident()
            self.expect("=")
            bound = self.expr()
            self.expect("in")
            return LUnbox(q, name, bound, self.expr())
        if self.accept("extend"):
            self.only(("comonadic",), "extend", tok)
            self.expect("^")
            q = self.literal()
            binders = []
            while True:
                x = self.ident()
                self.expect("^")
                qx = self.literal()
                self.expect("=")
                binders.append((x, qx, self.expr()))
                if not self.accept(","):
                    break
            self.expect("in")
            return LExtend(q, tuple(binders), self.expr())
        if self.accept("divide"):
            self.only(("comonadic",), "divide", tok)
            x1 = self.ident()
            self.expect("^")
            q1 = self.literal()
            self.expect(",")
            x2 = self.ident()
            self.expect("^")
            q2 = self.literal()
            self.expect("=")
            bound = self.expr()
            self.expect("in")
            return LDivide(x1, q1, x2, q2, bound, self.expr())
        if self.accept("discard"):
            self.only(("comonadic",), "discard", tok)
            if self.tok.kind == "ident" and self.tok.text == "_":
                self.i += 1
                self.expect("=")
            bound = self.expr()
            self.expect("in")
            return LDiscard(bound, self.expr())
        head = self.app()
        if self.accept(";"):
            self.only(("effect", "coeffect", "comonadic"), "';'", tok)
            return LSeq(head, self.expr())
        return head

    def app(self) -> Src:
        tok = self.tok
        for kw in _PREFIX:
            if self.accept(kw):
                match kw:
                    case "inl":
                        return LInl(self.app())
                    case "inr":
                        return LInr(self.app())
                    case "fst" | "snd":
                        self.strategy_only("cbn", kw, tok)
                        return LProj(1 if kw == "fst" else 2, self.app())
                    case "return":
                        self.only(("monadic",), "return", tok)
                        return LReturn(self.app())
                    case "extract":
                        self.only(("comonadic",), "extract", tok)
                        return LExtract(self.app())
                    case "box":
                        self.only(("coeffect",), "box", tok)
                        self.expect("^")
                        q = self.literal()
                        return LBox(q, self.app())
        head = self.atom()
        while self.starts_atom():
            head = LApp(head, self.atom())
        return head

    def starts_atom(self) -> bool:
        t = self.tok
        return (t.kind == "ident" and not t.text.startswith("_")) or (t.kind in ("sym", "kw") and t.text in ("(", "<", "tick"))

    def atom(self) -> Src:
        tok = self.tok
        if tok.kind == "ident":
            return LVar(self.ident())
        if self.accept("tick"):
            self.only(("effect", "monadic"), "tick", tok)
            return LTick()
        if self.accept("<"):
            self.strategy_only("cbn", "'<_, _>'", tok)
            left = self.expr()
            self.expect(",")
            right = self.expr()
            self.expect(">")
            return LWith(left, right)
        if self.accept("("):
            if self.accept(")"):
                return LUnit()
            inner = self.expr()
            if self.accept(")"):
                return inner
            if self.accept(":"):
                ty = self.type_()
                self.expect(")")
                return LAnnot(inner, ty)
            self.expect(",")
            self.strategy_only("cbv", "'(_, _)'", tok)
            right = self.expr()
            self.expect(")")
            return LPair(inner, right)
        raise self.error("expected a term")


def parse_stype(text: str, family: str, strategy: str) -> SType:
    p = _SrcParser(text, family, strategy)
    t = p.type_()
    if p.tok.kind != "eof":
        raise p.error("unexpected trailing input")
    return t


def parse_source(text: str, dialect: str | None = None) -> SourceProgram:
    """Parse a ``.lam`` file.  Headers: ``-- dialect:`` and ``-- context: x : t, ...``.

    A header may name just the family (``coeffect``) when ``dialect`` supplies
    the strategy.
    """
    headers = read_headers(text)
    declared = headers.get("dialect")
    if dialect is None:
        if declared is None:
            raise ParseError("no dialect given and no '-- dialect:' header")
        dialect = declared
    family, strategy = dialect_parts(dialect)
    if declared and declared != dialect and declared != family:
        raise ParseError(f"file declares dialect {declared!r} but {dialect!r} was requested")
    ctx = []
    for entry in split_top(headers.get("context", "")):
        if ":" not in entry:
            raise ParseError(f"context entry {entry!r} needs the form name : type")
        name, ty = entry.split(":", 1)
        ctx.append((name.strip(), parse_stype(ty, family, strategy)))
    p = _SrcParser(text, family, strategy)
    term = p.expr()
    if p.tok.kind != "eof":
        raise p.error("unexpected trailing input")
    return SourceProgram(dialect, tuple(ctx), term)


# --- printer ----------------------------------------------------------------


def show_stype(t: SType) -> str:
    def sub(t: SType) -> str:
        s = show_stype(t)
        return s if isinstance(t, (TUnit, TMonad, TBox)) else f"({s})"

    match t:
        case TUnit():
            return "unit"
        case TArrow(d, c, g):
            return f"{sub(d)} ->{'^' + g if g is not None else ''} {show_stype(c)}"
        case TLolli(d, c):
            return f"{sub(d)} -o {show_stype(c)}"
        case TTensor(l, r):
            return f"{sub(l)} * {sub(r)}"
        case TWith(l, r):
            return f"{sub(l)} & {sub(r)}"
        case TSum(l, r):
            return f"{sub(l)} + {sub(r)}"
        case TMonad(e, b):
            return f"T^{e} {sub(b)}"
        case TBox(q, b):
            return f"Box^{q} {sub(b)}"
    raise TypeError(f"not a source type: {t!r}")


def show_src(e: Src) -> str:
    def atom(e: Src) -> str:
        s = show_src(e)
        return s if isinstance(e, (LVar, LUnit, LTick, LPair, LWith, LAnnot)) else f"({s})"

    def g(q: str | None) -> str:
        return f"^{q}" if q is not None else ""

    match e:
        case LVar(n):
            return n
        case LUnit():
            return "()"
        case LTick():
            return "tick"
        case LLam(n, d, b, q):
            return f"\\{n}{g(q)} : {show_stype(d)}. {show_src(b)}"
        case LApp(f, a):
            head = show_src(f) if isinstance(f, LApp) else atom(f)
            return f"{head} {atom(a)}"
        case LPair(l, r):
            return f"({show_src(l)}, {show_src(r)})"
        case LSplit(x, y, s, b, q):
            return f"let{g(q)} ({x}, {y}) = {show_src(s)} in {show_src(b)}"
        case LWith(l, r):
            return f"<{show_src(l)}, {show_src(r)}>"
        case LProj(i, v):
            return f"{'fst' if i == 1 else 'snd'} {atom(v)}"
        case LInl(v):
            return f"inl {atom(v)}"
        case LInr(v):
            return f"inr {atom(v)}"
        case LCase(s, x, l, y, r, q):
            return f"case{g(q)} {show_src(s)} of inl {x} -> {atom(l)} | inr {y} -> {show_src(r)}"
        case LSeq(a, b):
            return f"{atom(a)}; {show_src(b)}"
        case LAnnot(t, ty):
            return f"({show_src(t)} : {show_stype(ty)})"
        case LReturn(v):
            return f"return {atom(v)}"
        case LBind(n, m, b):
            return f"bind {n} <- {show_src(m)} in {show_src(b)}"
        case LBox(q, v):
            return f"box^{q} {atom(v)}"
        case LUnbox(q, n, m, b):
            return f"unbox^{q} {n} = {show_src(m)} in {show_src(b)}"
        case LExtract(v):
            return f"extract {atom(v)}"
        case LExtend(q, bs, b):
            binds = ", ".join(f"{x}^{qx} = {show_src(m)}" for x, qx, m in bs)
            return f"extend^{q} {binds} in {show_src(b)}"
        case LDivide(x1, q1, x2, q2, m, b):
            return f"divide {x1}^{q1}, {x2}^{q2} = {show_src(m)} in {show_src(b)}"
        case LDiscard(m, b):
            return f"discard _ = {show_src(m)} in {show_src(b)}"
    raise TypeError(f"not a source term: {e!r}")


def show_source_program(p: SourceProgram) -> str:
    lines = [f"-- dialect: {p.dialect}"]
    if p.context:
        lines.append("-- context: " + ", ".join(f"{n} : {show_stype(t)}" for n, t in p.context))
    lines.append(show_src(p.term))
    return "\n".join(lines) + "\n"


# --- checkers ---------------------------------------------------------------

SCtx = list[tuple[str, SType]]


def _lookup(ctx: SCtx, name: str) -> tuple[int, SType]:
    for i in range(len(ctx) - 1, -1, -1):
        if ctx[i][0] == name:
            return i, ctx[i][1]
    raise TypeCheckError(f"unbound variable {name!r}", rule="lam-var")


def _mismatch(rule: str, expected: SType, got: SType) -> TypeCheckError:
    return TypeCheckError(f"expected {show_stype(expected)}, found {show_stype(got)}", rule=rule)


@dataclass
class SourceTyping:
    """Result of a source check: the root type, its grading, and per-node types."""

    type: SType
    effect: Effect | None = None
    vec: GradeVec | None = None
    node_types: dict[int, SType] = field(default_factory=dict)
    node_effects: dict[int, Effect] = field(default_factory=dict)

    def type_of(self, e: Src) -> SType:
        return self.node_types[id(e)]


class _Base:
    def __init__(self, strategy: str):
        self.strategy = strategy
        self.out = SourceTyping(TUnit())

    def record(self, e: Src, t: SType) -> SType:
        self.out.node_types[id(e)] = t
        return t


class EffectSourceChecker(_Base):
    """CBV λ-calculus with latent effects: ``Γ ⊢ e : t ! φ`` with least φ."""

    def __init__(self, alg: EffectAlgebra, strategy: str = "cbv"):
        super().__init__(strategy)
        self.alg = alg

    def lit(self, e: Effect) -> str:
        return self.alg.format(e)

    def norm(self, t: SType) -> SType:
        match t:
            case TArrow(d, c, g):
                return TArrow(self.norm(d), self.norm(c), self.alg.format(self.alg.parse(g or "0")))
            case TTensor(l, r):
                return TTensor(self.norm(l), self.norm(r))
            case TSum(l, r):
                return TSum(self.norm(l), self.norm(r))
            case TUnit():
                return t
        raise TypeCheckError(f"{show_stype(t)} is not a type of the effect calculus", rule="lam-eff-type")

    def infer(self, ctx: SCtx, e: Src) -> tuple[SType, Effect]:
        t, eff = self._infer(ctx, e)
        self.record(e, t)
        self.out.node_effects[id(e)] = eff
        return t, eff

    def _infer(self, ctx: SCtx, e: Src) -> tuple[SType, Effect]:
        alg = self.alg
        bot = alg.unit
        match e:
            case LVar(n):
                return _lookup(ctx, n)[1], bot
            case LUnit():
                return TUnit(), bot
            case LTick():
                return TUnit(), alg.prim("tick")
            case LLam(n, d, b):
                d = self.norm(d)
                t2, phi = self.infer(ctx + [(n, d)], b)
                return TArrow(d, t2, self.lit(phi)), bot
            case LApp(f, a):
                tf, e1 = self.infer(ctx, f)
                match tf:
                    case TArrow(d, c, g):
                        e2 = self.check(ctx, a, d)
                        return c, alg.combine(alg.combine(e1, e2), alg.parse(g))
                raise TypeCheckError(f"applying a term of type {show_stype(tf)}", rule="lam-eff-app")
            case LPair(l, r):
                tl, e1 = self.infer(ctx, l)
                tr, e2 = self.infer(ctx, r)
                return TTensor(tl, tr), alg.combine(e1, e2)
            case LSplit(x, y, s, b):
                ts, e1 = self.infer(ctx, s)
                match ts:
                    case TTensor(tl, tr):
                        t, e2 = self.infer(ctx + [(x, tl), (y, tr)], b)
                        return t, alg.combine(e1, e2)
                raise TypeCheckError(f"splitting a term of type {show_stype(ts)}", rule="lam-eff-split")
            case LCase(s, x, l, y, r):
                ts, e1 = self.infer(ctx, s)
                match ts:
                    case TSum(tl, tr):
                        t1, el = self.infer(ctx + [(x, tl)], l)
                        t2, er = self.infer(ctx + [(y, tr)], r)
                        if t1 != t2:
                            raise _mismatch("lam-eff-case", t1, t2)
                        return t1, alg.combine(e1, alg.join(el, er))
                raise TypeCheckError(f"case on a term of type {show_stype(ts)}", rule="lam-eff-case")
            case LSeq(a, b):
                e1 = self.check(ctx, a, TUnit())
                t, e2 = self.infer(ctx, b)
                return t, alg.combine(e1, e2)
            case LAnnot(t, ty):
                ty = self.norm(ty)
                return ty, self.check(ctx, t, ty)
            case LInl() | LInr():
                raise TypeCheckError("injections need a type ascription", rule="lam-eff-inj")
        raise TypeCheckError(f"{type(e).__name__} is not part of the effect calculus", rule="lam-eff")

    def check(self, ctx: SCtx, e: Src, ty: SType) -> Effect:
        match e, ty:
            case LInl(v), TSum(l, _):
                self.record(e, ty)
                eff = self.check(ctx, v, l)
            case LInr(v), TSum(_, r):
                self.record(e, ty)
                eff = self.check(ctx, v, r)
            case _:
                got, eff = self.infer(ctx, e)
                if got != ty:
                    raise _mismatch("lam-eff-sub", ty, got)
                return eff
        self.out.node_effects[id(e)] = eff
        return eff


class MonadicSourceChecker(_Base):
    """Pure λ-calculus with a graded monad; effects live only in ``T^φ``."""

    def __init__(self, alg: EffectAlgebra, strategy: str):
        super().__init__(strategy)
        self.alg = alg

    def norm(self, t: SType) -> SType:
        match t:
            case TArrow(d, c, _):
                return TArrow(self.norm(d), self.norm(c))
            case TTensor(l, r):
                return TTensor(self.norm(l), self.norm(r))
            case TWith(l, r):
                return TWith(self.norm(l), self.norm(r))
            case TSum(l, r):
                return TSum(self.norm(l), self.norm(r))
            case TMonad(eff, b):
                return TMonad(self.alg.format(self.alg.parse(eff)), self.norm(b))
            case TUnit():
                return t
        raise TypeCheckError(f"{show_stype(t)} is not a type of the monadic calculus", rule="lam-mon-type")

    def infer(self, ctx: SCtx, e: Src) -> SType:
        return self.record(e, self._infer(ctx, e))

    def _infer(self, ctx: SCtx, e: Src) -> SType:
        alg = self.alg
        match e:
            case LVar(n):
                return _lookup(ctx, n)[1]
            case LUnit():
                return TUnit()
            case LTick():
                return TMonad(alg.format(alg.prim("tick")), TUnit())
            case LLam(n, d, b):
                d = self.norm(d)
                return TArrow(d, self.infer(ctx + [(n, d)], b))
            case LApp(f, a):
                match self.infer(ctx, f):
                    case TArrow(d, c):
                        self.check(ctx, a, d)
                        return c
                    case other:
                        raise TypeCheckError(f"applying a term of type {show_stype(other)}", rule="lam-mon-app")
            case LPair(l, r):
                return TTensor(self.infer(ctx, l), self.infer(ctx, r))
            case LSplit(x, y, s, b):
                match self.infer(ctx, s):
                    case TTensor(tl, tr):
                        return self.infer(ctx + [(x, tl), (y, tr)], b)
                    case other:
                        raise TypeCheckError(f"splitting a term of type {show_stype(other)}", rule="lam-mon-split")
            case LWith(l, r):
                return TWith(self.infer(ctx, l), self.infer(ctx, r))
            case LProj(i, v):
                match self.infer(ctx, v):
                    case TWith(tl, tr):
                        return tl if i == 1 else tr
                    case other:
                        raise TypeCheckError(f"projecting from {show_stype(other)}", rule="lam-mon-proj")
            case LCase(s, x, l, y, r):
                match self.infer(ctx, s):
                    case TSum(tl, tr):
                        t1 = self.infer(ctx + [(x, tl)], l)
                        t2 = self.infer(ctx + [(y, tr)], r)
                        if t1 != t2:
                            raise _mismatch("lam-mon-case", t1, t2)
                        return t1
                    case other:
                        raise TypeCheckError(f"case on a term of type {show_stype(other)}", rule="lam-mon-case")
            case LReturn(v):
                return TMonad(alg.format(alg.unit), self.infer(ctx, v))
            case LBind(n, m, b):
                match self.infer(ctx, m):
                    case TMonad(e1, t1):
                        pass
                    case other:
                        raise TypeCheckError(f"binding a term of type {show_stype(other)}", rule="lam-mon-bind")
                match self.infer(ctx + [(n, t1)], b):
                    case TMonad(e2, t2):
                        return TMonad(alg.format(alg.combine(alg.parse(e1), alg.parse(e2))), t2)
                    case other:
                        raise TypeCheckError(f"bind body has type {show_stype(other)}", rule="lam-mon-bind")
            case LAnnot(t, ty):
                ty = self.norm(ty)
                self.check(ctx, t, ty)
                return ty
            case LInl() | LInr():
                raise TypeCheckError("injections need a type ascription", rule="lam-mon-inj")
        raise TypeCheckError(f"{type(e).__name__} is not part of the monadic calculus", rule="lam-mon")

    def check(self, ctx: SCtx, e: Src, ty: SType) -> None:
        match e, ty:
            case LInl(v), TSum(l, _):
                self.record(e, ty)
                self.check(ctx, v, l)
            case LInr(v), TSum(_, r):
                self.record(e, ty)
                self.check(ctx, v, r)
            case _:
                got = self.infer(ctx, e)
                if got != ty:
                    raise _mismatch("lam-mon-sub", ty, got)


class CoeffectSourceChecker(_Base):
    """Graded λ-calculus: canonical demand vectors over the context."""

    def __init__(self, alg: CoeffectAlgebra, strategy: str):
        super().__init__(strategy)
        self.alg = alg

    def norm(self, t: SType) -> SType:
        f = lambda q: self.alg.format(self.alg.parse(q))  # noqa: E731
        match t:
            case TArrow(d, c, g):
                return TArrow(self.norm(d), self.norm(c), f(g or "1"))
            case TTensor(l, r):
                return TTensor(self.norm(l), self.norm(r))
            case TWith(l, r):
                return TWith(self.norm(l), self.norm(r))
            case TSum(l, r):
                return TSum(self.norm(l), self.norm(r))
            case TBox(q, b):
                return TBox(f(q), self.norm(b))
            case TUnit():
                return t
        raise TypeCheckError(f"{show_stype(t)} is not a type of the coeffect calculus", rule="lam-coeff-type")

    def need(self, q, d, rule: str, what: str) -> None:
        if not self.alg.leq(q, d):
            f = self.alg.format
            raise GradeViolation(f"{what}: grade {f(q)} does not lie below the demand {f(d)}", rule=rule)

    def infer(self, ctx: SCtx, e: Src) -> tuple[SType, GradeVec]:
        t, v = self._infer(ctx, e)
        self.record(e, t)
        return t, v

    def _infer(self, ctx: SCtx, e: Src) -> tuple[SType, GradeVec]:
        alg = self.alg
        zeros = GradeVec.zeros(alg, len(ctx))
        match e:
            case LVar(n):
                i, t = _lookup(ctx, n)
                return t, GradeVec.unit(alg, len(ctx), i)
            case LUnit():
                return TUnit(), zeros
            case LLam(n, d, b, q):
                d = self.norm(d)
                qg = alg.parse(q or "1")
                t2, vec = self.infer(ctx + [(n, d)], b)
                rest, (dem,) = vec.split(1)
                self.need(qg, dem, "lam-coeff-abs", f"binder {n}")
                return TArrow(d, t2, alg.format(qg)), rest
            case LApp(f, a):
                tf, v1 = self.infer(ctx, f)
                match tf:
                    case TArrow(d, c, g):
                        v2 = self.check(ctx, a, d)
                        return c, v1 + v2.scale(alg.parse(g))
                raise TypeCheckError(f"applying a term of type {show_stype(tf)}", rule="lam-coeff-app")
            case LPair(l, r):
                tl, v1 = self.infer(ctx, l)
                tr, v2 = self.infer(ctx, r)
                return TTensor(tl, tr), v1 + v2
            case LSplit(x, y, s, b, q):
                qg = alg.parse(q or "1")
                ts, v1 = self.infer(ctx, s)
                match ts:
                    case TTensor(tl, tr):
                        pass
                    case _:
                        raise TypeCheckError(f"splitting a term of type {show_stype(ts)}", rule="lam-coeff-split")
                t, v2 = self.infer(ctx + [(x, tl), (y, tr)], b)
                rest, (d1, d2) = v2.split(2)
                self.need(qg, d1, "lam-coeff-split", f"binder {x}")
                self.need(qg, d2, "lam-coeff-split", f"binder {y}")
                return t, v1.scale(qg) + rest
            case LWith(l, r):
                tl, v1 = self.infer(ctx, l)
                tr, v2 = self.infer(ctx, r)
                return TWith(tl, tr), v1.meet(v2)
            case LProj(i, v):
                tv, vec = self.infer(ctx, v)
                match tv:
                    case TWith(tl, tr):
                        return (tl if i == 1 else tr), vec
                raise TypeCheckError(f"projecting from {show_stype(tv)}", rule="lam-coeff-proj")
            case LCase(s, x, l, y, r, q):
                qg = alg.parse(q or "1")
                if not alg.leq(qg, alg.one):
                    raise GradeViolation(f"case grade {alg.format(qg)} does not provide one copy", rule="lam-coeff-case")
                ts, v1 = self.infer(ctx, s)
                match ts:
                    case TSum(tl, tr):
                        pass
                    case _:
                        raise TypeCheckError(f"case on a term of type {show_stype(ts)}", rule="lam-coeff-case")
                t1, vl = self.infer(ctx + [(x, tl)], l)
                t2, vr = self.infer(ctx + [(y, tr)], r)
                if t1 != t2:
                    raise _mismatch("lam-coeff-case", t1, t2)
                rl, (dl,) = vl.split(1)
                rr, (dr,) = vr.split(1)
                self.need(qg, dl, "lam-coeff-case", f"binder {x}")
                self.need(qg, dr, "lam-coeff-case", f"binder {y}")
                return t1, v1.scale(qg) + rl.meet(rr)
            case LSeq(a, b):
                v1 = self.check(ctx, a, TUnit())
                t, v2 = self.infer(ctx, b)
                return t, v1 + v2
            case LBox(q, v):
                qg = alg.parse(q)
                t, vec = self.infer(ctx, v)
                return TBox(alg.format(qg), t), vec.scale(qg)
            case LUnbox(q, n, m, b):
                q2 = alg.parse(q)
                tm, v1 = self.infer(ctx, m)
                match tm:
                    case TBox(q1, t1):
                        pass
                    case _:
                        raise TypeCheckError(f"unboxing a term of type {show_stype(tm)}", rule="lam-coeff-unbox")
                t, v2 = self.infer(ctx + [(n, t1)], b)
                rest, (dem,) = v2.split(1)
                self.need(alg.mul(alg.parse(q1), q2), dem, "lam-coeff-unbox", f"binder {n}")
                return t, v1.scale(q2) + rest
            case LAnnot(t, ty):
                ty = self.norm(ty)
                return ty, self.check(ctx, t, ty)
            case LInl() | LInr():
                raise TypeCheckError("injections need a type ascription", rule="lam-coeff-inj")
        raise TypeCheckError(f"{type(e).__name__} is not part of the coeffect calculus", rule="lam-coeff")

    def check(self, ctx: SCtx, e: Src, ty: SType) -> GradeVec:
        match e, ty:
            case LInl(v), TSum(l, _):
                self.record(e, ty)
                return self.check(ctx, v, l)
            case LInr(v), TSum(_, r):
                self.record(e, ty)
                return self.check(ctx, v, r)
        got, vec = self.infer(ctx, e)
        if got != ty:
            raise _mismatch("lam-coeff-sub", ty, got)
        return vec


class ComonadicSourceChecker(_Base):
    """Linear λ-calculus with a graded comonad ``Box^q``."""

    def __init__(self, alg: CoeffectAlgebra, strategy: str):
        super().__init__(strategy)
        self.alg = alg

    def norm(self, t: SType) -> SType:
        match t:
            case TLolli(d, c):
                return TLolli(self.norm(d), self.norm(c))
            case TBox(q, b):
                return TBox(self.alg.format(self.alg.parse(q)), self.norm(b))
            case TUnit():
                return t
        raise TypeCheckError(f"{show_stype(t)} is not a type of the comonadic calculus", rule="lam-com-type")

    def box_of(self, t: SType, rule: str) -> tuple[str, SType]:
        match t:
            case TBox(q, b):
                return q, b
        raise TypeCheckError(f"expected a boxed type, found {show_stype(t)}", rule=rule)

    def need(self, a, b, rule: str, what: str) -> None:
        if not self.alg.leq(a, b):
            f = self.alg.format
            raise GradeViolation(f"{what}: {f(a)} does not lie below {f(b)}", rule=rule)

    def infer(self, ctx: SCtx, e: Src) -> SType:
        return self.record(e, self._infer(ctx, e))

    def _infer(self, ctx: SCtx, e: Src) -> SType:
        alg = self.alg
        match e:
            case LVar(n):
                return _lookup(ctx, n)[1]
            case LUnit():
                return TUnit()
            case LLam(n, d, b):
                d = self.norm(d)
                return TLolli(d, self.infer(ctx + [(n, d)], b))
            case LApp(f, a):
                match self.infer(ctx, f):
                    case TLolli(d, c):
                        got = self.infer(ctx, a)
                        if got != d:
                            raise _mismatch("lam-com-app", d, got)
                        return c
                    case other:
                        raise TypeCheckError(f"applying a term of type {show_stype(other)}", rule="lam-com-app")
            case LSeq(a, b):
                got = self.infer(ctx, a)
                if got != TUnit():
                    raise _mismatch("lam-com-seq", TUnit(), got)
                return self.infer(ctx, b)
            case LExtract(v):
                q, t = self.box_of(self.infer(ctx, v), "lam-com-extract")
                self.need(alg.parse(q), alg.one, "lam-com-extract", "extract")
                return t
            case LExtend(q, binders, body):
                qg = alg.parse(q)
                inner: SCtx = []
                for x, qx, m in binders:
                    q1, t1 = self.box_of(self.infer(ctx, m), "lam-com-extend")
                    self.need(alg.parse(q1), alg.mul(qg, alg.parse(qx)), "lam-com-extend", f"binder {x}")
                    inner.append((x, TBox(alg.format(alg.parse(qx)), t1)))
                return TBox(alg.format(qg), self.infer(inner, body))
            case LDivide(x1, q1, x2, q2, m, b):
                q, t = self.box_of(self.infer(ctx, m), "lam-com-divide")
                g1, g2 = alg.parse(q1), alg.parse(q2)
                self.need(alg.parse(q), alg.add(g1, g2), "lam-com-divide", "divide")
                return self.infer(ctx + [(x1, TBox(alg.format(g1), t)), (x2, TBox(alg.format(g2), t))], b)
            case LDiscard(m, b):
                q, _ = self.box_of(self.infer(ctx, m), "lam-com-discard")
                self.need(alg.parse(q), alg.zero, "lam-com-discard", "discard")
                return self.infer(ctx, b)
            case LAnnot(t, ty):
                ty = self.norm(ty)
                got = self.infer(ctx, t)
                if got != ty:
                    raise _mismatch("lam-com-annot", ty, got)
                return ty
        raise TypeCheckError(f"{type(e).__name__} is not part of the comonadic calculus", rule="lam-com")


def free_uses(e: Src) -> Counter:
    """Occurrences of each free variable."""
    match e:
        case LVar(n):
            return Counter({n: 1})
        case LLam(n, _, b):
            c = free_uses(b)
            c.pop(n, None)
            return c
        case LExtend(_, binders, body):
            c = Counter()
            for _, _, m in binders:
                c += free_uses(m)
            inner = free_uses(body)
            for x, _, _ in binders:
                inner.pop(x, None)
            return c + inner
        case LDivide(x1, _, x2, _, m, b):
            inner = free_uses(b)
            inner.pop(x1, None)
            inner.pop(x2, None)
            return free_uses(m) + inner
        case LSplit(x, y, s, b):
            inner = free_uses(b)
            inner.pop(x, None)
            inner.pop(y, None)
            return free_uses(s) + inner
        case LCase(s, x, l, y, r):
            cl, cr = free_uses(l), free_uses(r)
            cl.pop(x, None)
            cr.pop(y, None)
            return free_uses(s) + (cl | cr)
        case LBind(n, m, b) | LUnbox(_, n, m, b):
            inner = free_uses(b)
            inner.pop(n, None)
            return free_uses(m) + inner
    c = Counter()
    for f in e.__dataclass_fields__:
        sub = getattr(e, f)
        if isinstance(sub, Src):
            c += free_uses(sub)
    return c


def check_linear(e: Src, roots: list[str]) -> None:
    """Every bound or context variable must occur exactly once in its scope."""

    def binder_scopes(e: Src):
        match e:
            case LLam(n, _, b):
                yield n, b
            case LExtend(_, binders, body):
                for x, _, _ in binders:
                    yield x, body
            case LDivide(x1, _, x2, _, _, b):
                yield x1, b
                yield x2, b
        for f in e.__dataclass_fields__:
            sub = getattr(e, f)
            if isinstance(sub, Src):
                yield from binder_scopes(sub)
            elif isinstance(sub, tuple):
                for item in sub:
                    for part in item:
                        if isinstance(part, Src):
                            yield from binder_scopes(part)

    uses = free_uses(e)
    for n in roots:
        if uses.get(n, 0) != 1:
            raise TypeCheckError(f"context variable {n} is used {uses.get(n, 0)} times, not once", rule="lam-com-linear")
    for n, scope in binder_scopes(e):
        k = free_uses(scope).get(n, 0)
        if k != 1:
            raise TypeCheckError(f"bound variable {n} is used {k} times, not once", rule="lam-com-linear")


def src_check(
    prog: SourceProgram,
    algebra: str | None = None,
) -> SourceTyping:
    """Type a source program under its dialect; returns node types for the translators."""
    family, strategy = prog.family, prog.strategy
    ctx = list(prog.context)
    if is_effect_family(family):
        alg = effect_algebra(algebra or "nat-cost")
        if family == "effect":
            ch = EffectSourceChecker(alg, strategy)
            ctx = [(n, ch.norm(t)) for n, t in ctx]
            t, eff = ch.infer(ctx, prog.term)
            ch.out.type, ch.out.effect = t, eff
            return ch.out
        ch2 = MonadicSourceChecker(alg, strategy)
        ctx = [(n, ch2.norm(t)) for n, t in ctx]
        ch2.out.type = ch2.infer(ctx, prog.term)
        return ch2.out
    calg = coeffect_algebra(algebra or "nat-usage")
    if family == "coeffect":
        ch3 = CoeffectSourceChecker(calg, strategy)
        ctx = [(n, ch3.norm(t)) for n, t in ctx]
        t, vec = ch3.infer(ctx, prog.term)
        ch3.out.type, ch3.out.vec = t, vec
        return ch3.out
    ch4 = ComonadicSourceChecker(calg, strategy)
    ctx = [(n, ch4.norm(t)) for n, t in ctx]
    ch4.out.type = ch4.infer(ctx, prog.term)
    check_linear(prog.term, [n for n, _ in ctx])
    return ch4.out


def normalized_context(prog: SourceProgram, algebra: str | None = None) -> list[tuple[str, SType]]:
    family, strategy = prog.family, prog.strategy
    match family:
        case "effect":
            norm = EffectSourceChecker(effect_algebra(algebra or "nat-cost")).norm
        case "monadic":
            norm = MonadicSourceChecker(effect_algebra(algebra or "nat-cost"), strategy).norm
        case "coeffect":
            norm = CoeffectSourceChecker(coeffect_algebra(algebra or "nat-usage"), strategy).norm
        case _:
            norm = ComonadicSourceChecker(coeffect_algebra(algebra or "nat-usage"), strategy).norm
    return [(n, norm(t)) for n, t in prog.context]
