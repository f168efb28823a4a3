"""Multimodal formulas: surface syntax, negation normal form, parsing and printing.

Two families share the connective classes. ``InputFormula`` is what the parser
produces and may contain ``Atom``, ``Not`` and ``Implies``. ``Formula`` is the
NNF image: negation lives only inside ``Lit``. ``Bot``, ``Top``, ``And``,
``Or``, ``Box`` and ``Dia`` belong to both.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Union


class _Node:
    """Hash-caching base; formulas are immutable and hashed very often."""

    __slots__ = ()

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._key() == other._key()

    def __ne__(self, other) -> bool:
        return not self == other

    def _key(self) -> tuple:
        return tuple(getattr(self, n) for n in self.__dataclass_fields__ if n != "_hash")

    def __str__(self) -> str:
        return to_text(self)


def _cache_hash(obj, *parts) -> None:
    object.__setattr__(obj, "_hash", hash((type(obj).__name__,) + parts))


@dataclass(frozen=True, eq=False, repr=False)
class Bot(_Node):
    _hash: int = field(init=False, compare=False, default=0)

    def __post_init__(self):
        _cache_hash(self)

    def __repr__(self):
        return "Bot()"


@dataclass(frozen=True, eq=False, repr=False)
class Top(_Node):
    _hash: int = field(init=False, compare=False, default=0)

    def __post_init__(self):
        _cache_hash(self)

    def __repr__(self):
        return "Top()"


@dataclass(frozen=True, eq=False, repr=False)
class Lit(_Node):
    name: str
    positive: bool = True
    _hash: int = field(init=False, compare=False, default=0)

    def __post_init__(self):
        _cache_hash(self, self.name, self.positive)

    def complement(self) -> "Lit":
        return Lit(self.name, not self.positive)

    def __repr__(self):
        return f"Lit({self.name!r}{'' if self.positive else ', False'})"


@dataclass(frozen=True, eq=False, repr=False)
class Atom(_Node):
    name: str
    _hash: int = field(init=False, compare=False, default=0)

    def __post_init__(self):
        _cache_hash(self, self.name)

    def __repr__(self):
        return f"Atom({self.name!r})"


@dataclass(frozen=True, eq=False, repr=False)
class Not(_Node):
    sub: "AnyFormula"
    _hash: int = field(init=False, compare=False, default=0)

    def __post_init__(self):
        _cache_hash(self, self.sub)

    def __repr__(self):
        return f"Not({self.sub!r})"


@dataclass(frozen=True, eq=False, repr=False)
class And(_Node):
    left: "AnyFormula"
    right: "AnyFormula"
    _hash: int = field(init=False, compare=False, default=0)

    def __post_init__(self):
        _cache_hash(self, self.left, self.right)

    def __repr__(self):
        return f"And({self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=False, repr=False)
class Or(_Node):
    left: "AnyFormula"
    right: "AnyFormula"
    _hash: int = field(init=False, compare=False, default=0)

    def __post_init__(self):
        _cache_hash(self, self.left, self.right)

    def __repr__(self):
        return f"Or({self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=False, repr=False)
class Implies(_Node):
    left: "AnyFormula"
    right: "AnyFormula"
    _hash: int = field(init=False, compare=False, default=0)

    def __post_init__(self):
        _cache_hash(self, self.left, self.right)

    def __repr__(self):
        return f"Implies({self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=False, repr=False)
class Box(_Node):
    agent: int
    sub: "AnyFormula"
    _hash: int = field(init=False, compare=False, default=0)

    def __post_init__(self):
        if not isinstance(self.agent, int) or self.agent < 1:
            raise ValueError(f"agent index must be a positive integer, got {self.agent!r}")
        _cache_hash(self, self.agent, self.sub)

    def __repr__(self):
        return f"Box({self.agent}, {self.sub!r})"


@dataclass(frozen=True, eq=False, repr=False)
class Dia(_Node):
    agent: int
    sub: "AnyFormula"
    _hash: int = field(init=False, compare=False, default=0)

    def __post_init__(self):
        if not isinstance(self.agent, int) or self.agent < 1:
            raise ValueError(f"agent index must be a positive integer, got {self.agent!r}")
        _cache_hash(self, self.agent, self.sub)

    def __repr__(self):
        return f"Dia({self.agent}, {self.sub!r})"


Formula = Union[Bot, Top, Lit, And, Or, Box, Dia]
InputFormula = Union[Bot, Top, Atom, Not, And, Or, Implies, Box, Dia]
AnyFormula = Union[Bot, Top, Lit, Atom, Not, And, Or, Implies, Box, Dia]

BOT = Bot()
TOP = Top()


# ---------------------------------------------------------------- builders

def conj(*parts: Formula) -> Formula:
    """Left-nested conjunction; the empty conjunction is ``Top``."""
    parts = [p for p in parts if p is not None]
    if not parts:
        return TOP
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(*parts: Formula) -> Formula:
    """Left-nested disjunction; the empty disjunction is ``Bot``."""
    parts = [p for p in parts if p is not None]
    if not parts:
        return BOT
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def boxes(agents, sub: Formula) -> Formula:
    """``boxes([1, 2], f)`` is ``[1][2]f``."""
    for a in reversed(list(agents)):
        sub = Box(a, sub)
    return sub


def iter_box(agent: int, times: int, sub: Formula) -> Formula:
    for _ in range(times):
        sub = Box(agent, sub)
    return sub


# ------------------------------------------------------------------- NNF

def to_nnf(f: AnyFormula) -> Formula:
    """Push negations to the atoms. ``Implies(a, b)`` is read as ``~a | b``."""
    return _nnf(f, True)


def _nnf(f: AnyFormula, pos: bool) -> Formula:
    if isinstance(f, Bot):
        return BOT if pos else TOP
    if isinstance(f, Top):
        return TOP if pos else BOT
    if isinstance(f, Atom):
        return Lit(f.name, pos)
    if isinstance(f, Lit):
        return Lit(f.name, f.positive == pos)
    if isinstance(f, Not):
        return _nnf(f.sub, not pos)
    if isinstance(f, And):
        l, r = _nnf(f.left, pos), _nnf(f.right, pos)
        return And(l, r) if pos else Or(l, r)
    if isinstance(f, Or):
        l, r = _nnf(f.left, pos), _nnf(f.right, pos)
        return Or(l, r) if pos else And(l, r)
    if isinstance(f, Implies):
        l, r = _nnf(f.left, not pos), _nnf(f.right, pos)
        return Or(l, r) if pos else And(l, r)
    if isinstance(f, Box):
        sub = _nnf(f.sub, pos)
        return Box(f.agent, sub) if pos else Dia(f.agent, sub)
    if isinstance(f, Dia):
        sub = _nnf(f.sub, pos)
        return Dia(f.agent, sub) if pos else Box(f.agent, sub)
    raise TypeError(f"not a formula: {f!r}")


def embed(f: Formula) -> InputFormula:
    """Reinterpret an NNF formula in the surface syntax (``~p`` becomes ``Not(Atom p)``)."""
    if isinstance(f, (Bot, Top)):
        return f
    if isinstance(f, Lit):
        return Atom(f.name) if f.positive else Not(Atom(f.name))
    if isinstance(f, And):
        return And(embed(f.left), embed(f.right))
    if isinstance(f, Or):
        return Or(embed(f.left), embed(f.right))
    if isinstance(f, Box):
        return Box(f.agent, embed(f.sub))
    if isinstance(f, Dia):
        return Dia(f.agent, embed(f.sub))
    raise TypeError(f"not an NNF formula: {f!r}")


def is_nnf(f: AnyFormula) -> bool:
    return all(not isinstance(g, (Atom, Not, Implies)) for g in walk(f))


# ---------------------------------------------------------------- metrics

def children(f: AnyFormula) -> tuple:
    if isinstance(f, (And, Or, Implies)):
        return (f.left, f.right)
    if isinstance(f, (Box, Dia, Not)):
        return (f.sub,)
    return ()


def walk(f: AnyFormula) -> Iterator[AnyFormula]:
    """Pre-order traversal, duplicates included."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(children(g)))


def size(f: AnyFormula) -> int:
    return sum(1 for _ in walk(f))


class Metrics(NamedTuple):
    modal_depth: int
    diamond_free: bool
    variables: frozenset
    node_count: int


def modal_depth(f: AnyFormula) -> int:
    if isinstance(f, (Box, Dia)):
        return 1 + modal_depth(f.sub)
    return max((modal_depth(c) for c in children(f)), default=0)


def variables(f: AnyFormula) -> frozenset:
    return frozenset(g.name for g in walk(f) if isinstance(g, (Lit, Atom)))


def agents(f: AnyFormula) -> frozenset:
    return frozenset(g.agent for g in walk(f) if isinstance(g, (Box, Dia)))


def is_diamond_free(f: AnyFormula) -> bool:
    return not any(isinstance(g, Dia) for g in walk(f))


def metrics(f: AnyFormula) -> Metrics:
    return Metrics(modal_depth(f), is_diamond_free(f), variables(f), size(f))


def enumerate_subformulas(f: Formula) -> list:
    """Distinct subformulas, smaller first.

    Equal sizes keep the order of first appearance in a post-order
    (leftmost-innermost) traversal, so a proper subformula always precedes
    the formulas containing it and ``f`` itself comes last.
    """
    seen = {}

    def visit(g):
        for c in children(g):
            visit(c)
        if g not in seen:
            seen[g] = len(seen)

    visit(f)
    return sorted(seen, key=lambda g: (size(g), seen[g]))


# ----------------------------------------------------------------- parser

class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


_TOKEN = re.compile(
    r"\s*(?:(?P<arrow>->)|(?P<int>[0-9]+)|(?P<ident>[a-z][a-z0-9_]*)|(?P<punct>[~&|()\[\]<>]))"
)


def _tokenize(text: str) -> list:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None):
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            raise FormulaSyntaxError(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok[2])
        self.i += 1
        return tok

    def formula(self):
        left = self.disj()
        if self.peek()[1] == "->":
            self.take()
            return Implies(left, self.formula())
        return left

    def disj(self):
        out = self.conj()
        while self.peek()[1] == "|":
            self.take()
            out = Or(out, self.conj())
        return out

    def conj(self):
        out = self.unary()
        while self.peek()[1] == "&":
            self.take()
            out = And(out, self.unary())
        return out

    def agent(self, close):
        kind, value, pos = self.take()
        if kind != "int":
            raise FormulaSyntaxError("expected agent index", pos)
        if value.startswith("0"):
            raise FormulaSyntaxError("agent index must be a positive integer", pos)
        self.take(close)
        return int(value)

    def unary(self):
        kind, value, pos = self.peek()
        if value == "~":
            self.take()
            return Not(self.unary())
        if value == "[":
            self.take()
            a = self.agent("]")
            return Box(a, self.unary())
        if value == "<":
            self.take()
            a = self.agent(">")
            return Dia(a, self.unary())
        return self.atom()

    def atom(self):
        kind, value, pos = self.take()
        if kind == "ident":
            if value == "false":
                return BOT
            if value == "true":
                return TOP
            return Atom(value)
        if value == "(":
            inner = self.formula()
            self.take(")")
            return inner
        raise FormulaSyntaxError(f"unexpected {value or 'end of input'!r}", pos)


def parse(text: str) -> InputFormula:
    """Parse the text grammar; precedence from loosest: ``->``, ``|``, ``&``, unary."""
    p = _Parser(text)
    out = p.formula()
    kind, value, pos = p.peek()
    if kind != "eof":
        raise FormulaSyntaxError(f"trailing input {value!r}", pos)
    return out


def parse_nnf(text: str) -> Formula:
    return to_nnf(parse(text))


# ---------------------------------------------------------------- printer

_PREC = {Implies: 0, Or: 1, And: 2}


def to_text(f: AnyFormula) -> str:
    """Render in the parser's grammar; ``parse`` reads it back to the same tree."""
    if isinstance(f, Bot):
        return "false"
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Lit):
        return f.name if f.positive else "~" + f.name
    if isinstance(f, Not):
        return "~" + _wrap_unary(f.sub)
    if isinstance(f, Box):
        return f"[{f.agent}]" + _wrap_unary(f.sub)
    if isinstance(f, Dia):
        return f"<{f.agent}>" + _wrap_unary(f.sub)
    prec = _PREC[type(f)]
    op = {And: " & ", Or: " | ", Implies: " -> "}[type(f)]
    if isinstance(f, Implies):
        # right associative
        left = _wrap(f.left, prec + 1)
        right = _wrap(f.right, prec)
    else:
        left = _wrap(f.left, prec)
        right = _wrap(f.right, prec + 1)
    return left + op + right


def _wrap(f, min_prec):
    text = to_text(f)
    p = _PREC.get(type(f))
    if p is not None and p < min_prec:
        return f"({text})"
    return text


def _wrap_unary(f):
    text = to_text(f)
    return f"({text})" if type(f) in _PREC else text
