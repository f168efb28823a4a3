"""Formula translations between logics and the alternating-machine instance generator."""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Mapping, Sequence

from .formula import (
    BOT, TOP, And, Bot, Box, Dia, Formula, Lit, Or, Top,
    conj, disj, enumerate_subformulas, is_diamond_free, iter_box, variables, agents as formula_agents,
)
from .logic import FrameClass, LogicSpec, is_pure, is_simple, min_n, min_of


class TransformError(ValueError):
    pass


def fresh_variable(taken, base: str = "q") -> str:
    name = base
    k = 0
    while name in taken:
        k += 1
        name = f"{base}{k}"
    return name


def _map(f: Formula, leaf, box) -> Formula:
    """Homomorphic rewrite: ``leaf`` handles literals, ``box`` handles boxes (given the rewritten body)."""
    @lru_cache(maxsize=None)
    def go(g):
        if isinstance(g, (Bot, Top)):
            return g
        if isinstance(g, Lit):
            return leaf(g)
        if isinstance(g, And):
            return And(go(g.left), go(g.right))
        if isinstance(g, Or):
            return Or(go(g.left), go(g.right))
        if isinstance(g, Box):
            return box(g.agent, go(g.sub))
        raise TransformError(f"unexpected node {type(g).__name__}; input must be diamond-free NNF")
    return go(f)


def _require_agents(f: Formula, allowed, what: str):
    extra = sorted(set(formula_agents(f)) - set(allowed))
    if extra:
        raise TransformError(f"{what} expects agents {sorted(allowed)}, found {extra}")


# ------------------------------------------------------------- K → D2K

def dseq(x: int, k: int) -> tuple:
    """Agents of the box sequence naming subformula ``x`` (1-based) among ``k``."""
    width = max(1, math.ceil(math.log2(k)))
    bits = format(x - 1, f"0{width}b")
    return tuple(int(b) + 1 for b in bits)


def k_to_d2k(phi: Formula, q: str | None = None) -> Formula:
    """Diamond-free trimodal formula satisfiable in D2K iff ``phi`` is satisfiable in K."""
    _require_agents(phi, {1}, "k_to_d2k")
    subs = enumerate_subformulas(phi)
    k = len(subs)
    if k == 1:
        return phi
    q = q or fresh_variable(variables(phi))
    width = max(1, math.ceil(math.log2(k)))
    mark, unmark = Lit(q), Lit(q, False)
    tr = {}
    for x, s in enumerate(subs, start=1):
        if isinstance(s, (Bot, Top, Lit)):
            tr[s] = s
        elif isinstance(s, And):
            tr[s] = And(tr[s.left], tr[s.right])
        elif isinstance(s, Or):
            tr[s] = Or(tr[s.left], tr[s.right])
        elif isinstance(s, Box):
            tr[s] = iter_box(3, width, Or(tr[s.sub], unmark))
        elif isinstance(s, Dia):
            body = And(tr[s.sub], mark)
            for a in reversed(dseq(x, k)):
                body = Box(a, body)
            tr[s] = body
        else:
            raise TransformError(f"k_to_d2k needs NNF input, found {type(s).__name__}")
    return And(tr[phi], mark)


# --------------------------------------------------- one-variable translations

_PINDEX = re.compile(r"p([1-9][0-9]*)$")


def variable_indices(f: Formula) -> dict:
    """Map each variable to its index: ``p<n>`` keeps ``n``, anything else is numbered in sorted order."""
    names = sorted(variables(f))
    if all(_PINDEX.match(v) for v in names):
        return {v: int(_PINDEX.match(v).group(1)) for v in names}
    return {v: k for k, v in enumerate(names, start=1)}


def one_var_d2k4(phi: Formula, q: str | None = None) -> Formula:
    """Replace each literal ``p_i`` by ``□1□2^i q`` (negated: ``□1□2^i ¬q``)."""
    if not is_diamond_free(phi):
        raise TransformError("one_var_d2k4 needs a diamond-free formula")
    idx = variable_indices(phi)
    q = q or fresh_variable(idx)

    def leaf(lit):
        return Box(1, iter_box(2, idx[lit.name], Lit(q, lit.positive)))

    return _map(phi, leaf, Box)


def mold(k: int, q: str) -> Formula:
    """``q ∧ □1 q ∧ ⋀_{i=1..k} □1^{2i+1} ¬q``."""
    parts = [Lit(q), Box(1, Lit(q))]
    parts += [iter_box(1, 2 * i + 1, Lit(q, False)) for i in range(1, k + 1)]
    return conj(*parts)


def one_var_dk4(phi: Formula, q: str | None = None, verbatim: bool = False) -> Formula:
    """One-variable formula equisatisfiable with ``phi`` in DK4.

    Each world becomes a ``□1``-chain of ``2k+2`` steps whose even positions
    carry the variables. ``verbatim=True`` keeps the textbook ``□2`` clause,
    which loses equisatisfiability (a chain start is confused with position 1
    when ``p1`` holds); the default marks chain starts with a pattern no other
    position can show and forces the next chain after every marked start.
    """
    if not is_diamond_free(phi):
        raise TransformError("one_var_dk4 needs a diamond-free formula")
    _require_agents(phi, {1, 2}, "one_var_dk4")
    idx = variable_indices(phi)
    q = q or fresh_variable(idx)
    k = max([1, *idx.values()])
    s = mold(k, q)
    pos, neg = Lit(q), Lit(q, False)
    step = 2 * k + 2

    def leaf(lit):
        return iter_box(1, 2 * idx[lit.name], Lit(q, lit.positive))

    def box(agent, body):
        nxt = iter_box(1, step, And(body, s))
        if agent == 1:
            return nxt
        if verbatim:
            return Box(2, Or(conj(body, pos, Box(1, pos)), Or(neg, Box(1, neg))))
        not_start = disj(neg, Box(1, neg), iter_box(1, step - 1, pos))
        return And(nxt, Box(2, Or(not_start, And(body, iter_box(1, step, s)))))

    return And(_map(phi, leaf, box), s)


def dk4_to_d4k4(phi: Formula) -> Formula:
    """``□2 ↦ □1□3□2`` and ``□1 ↦ □1□2``."""
    if not is_diamond_free(phi):
        raise TransformError("dk4_to_d4k4 needs a diamond-free formula")
    _require_agents(phi, {1, 2}, "dk4_to_d4k4")

    def box(agent, body):
        return Box(1, Box(3, Box(2, body))) if agent == 2 else Box(1, Box(2, body))

    return _map(phi, lambda lit: lit, box)


# ------------------------------------------------------------ embeddings

class Mode(enum.Enum):
    PAIR_SIMPLE = "pair_simple"
    TRIPLE = "triple"
    PAIR_WITH_J = "pair_with_j"


@dataclass(frozen=True)
class Embedding:
    mode: Mode
    x: int
    y: int
    i: int
    z: int | None = None
    j: int | None = None


def _check_embedding(target: LogicSpec, e: Embedding):
    named = [a for a in (e.x, e.y, e.z, e.i, e.j) if a is not None]
    for a in named:
        if a not in target.agents or a in target.vacuous:
            raise TransformError(f"agent {a} is not an active agent of the target logic")
    mins = min_of(target, e.i)
    group = [e.x, e.y] + ([e.z] if e.mode is Mode.TRIPLE else [])
    if len(set(group)) != len(group):
        raise TransformError("the agents of A must be distinct")
    if not set(group) <= mins:
        raise TransformError(f"case condition fails: A={sorted(group)} is not contained in min({e.i})={sorted(mins)}")
    if not is_pure(target, group):
        raise TransformError(f"case condition fails: A={sorted(group)} is not pure")
    if e.mode is Mode.PAIR_SIMPLE:
        if not target.frame[e.i].transitive:
            raise TransformError(f"case 1 condition fails: F({e.i}) is not transitive")
        if target.frame[e.x].transitive:
            raise TransformError(f"case 1 condition fails: F({e.x}) must be non-transitive (A simple)")
    if e.mode is Mode.PAIR_WITH_J:
        if e.j not in min_n(target) or not (is_pure(target, [e.j]) and is_simple(target, [e.j])):
            raise TransformError(f"case 2 condition fails: {e.j} is not a pure and simple member of min(N)")


def embed_general(phi: Formula, target: LogicSpec, mode: Embedding) -> Formula:
    """Rewrite the boxes of a (at most) trimodal formula into box sequences of ``target``."""
    if not is_diamond_free(phi):
        raise TransformError("embed_general needs a diamond-free formula")
    _require_agents(phi, {1, 2, 3}, "embed_general")
    _check_embedding(target, mode)
    x, y, i = mode.x, mode.y, mode.i
    if mode.mode is Mode.PAIR_SIMPLE:
        seqs = {
            1: (x, x, x, y, x, y, x, x),
            2: (y, x, x, y, x, y, x, x),
            3: (i, y, x, y, x, x),
        }
    elif mode.mode is Mode.PAIR_WITH_J:
        seqs = {1: (x, mode.j), 2: (y, mode.j), 3: (i, mode.j)}
    else:
        return _rotate(phi, (x, y, mode.z), i)

    def box(agent, body):
        for a in reversed(seqs[agent]):
            body = Box(a, body)
        return body

    return _map(phi, lambda lit: lit, box)


def _rotate(phi: Formula, cycle: tuple, i: int) -> Formula:
    @lru_cache(maxsize=None)
    def go(g, a):
        if isinstance(g, (Bot, Top, Lit)):
            return g
        if isinstance(g, And):
            return And(go(g.left, a), go(g.right, a))
        if isinstance(g, Or):
            return Or(go(g.left, a), go(g.right, a))
        if g.agent == 1:
            b = (a + 1) % 3
            return Box(cycle[b], go(g.sub, b))
        if g.agent == 2:
            c = (a + 2) % 3
            return Box(cycle[c], go(g.sub, c))
        return Box(i, go(g.sub, a))
    return go(phi, 0)


# ---------------------------------------------------------- alternating machines

@dataclass(frozen=True)
class ATMSpec:
    """Two-tape alternating machine; ``alphabet[0]`` is the blank and the input end marker.

    ``delta1``/``delta2`` map ``(state, read1, read2)`` to ``(state, write2, move1, move2)``.
    """

    states: tuple
    existential: frozenset
    universal: frozenset
    alphabet: tuple
    delta1: Mapping
    delta2: Mapping
    start: str
    accept: str
    reject: str
    input: str
    space_bound: int
    halting: frozenset = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "halting", frozenset({self.accept, self.reject}))
        self.validate()

    def validate(self):
        st = set(self.states)
        if len(st) != len(self.states):
            raise TransformError("duplicate states")
        if self.existential & self.universal or (self.existential | self.universal) != st:
            raise TransformError("existential and universal states must partition the state set")
        if len(set(self.alphabet)) != len(self.alphabet) or not self.alphabet:
            raise TransformError("alphabet must be a non-empty list of distinct symbols")
        for name in (self.start, self.accept, self.reject):
            if name not in st:
                raise TransformError(f"unknown state {name!r}")
        if self.accept == self.reject:
            raise TransformError("accept and reject states must differ")
        if not isinstance(self.space_bound, int) or self.space_bound < 1:
            raise TransformError("space_bound must be a positive integer")
        if any(c not in self.alphabet for c in self.input):
            raise TransformError("input uses symbols outside the alphabet")
        for label, delta in (("delta1", self.delta1), ("delta2", self.delta2)):
            for (e, a, b), (f, c, m1, m2) in delta.items():
                if e not in st or f not in st or a not in self.alphabet or b not in self.alphabet or c not in self.alphabet:
                    raise TransformError(f"{label} entry {(e, a, b)} mentions unknown states or symbols")
                if m1 not in (-1, 0, 1) or m2 not in (-1, 0, 1):
                    raise TransformError(f"{label} entry {(e, a, b)} has a move outside -1, 0, 1")
            for e in self.states:
                if e in self.halting:
                    continue
                for a in self.alphabet:
                    for b in self.alphabet:
                        if (e, a, b) not in delta:
                            raise TransformError(f"{label} is undefined on {(e, a, b)}")

    @property
    def r1(self) -> range:
        return range(0, len(self.input) + 2)

    @property
    def r2(self) -> range:
        return range(1, self.space_bound + 1)

    def input_tape(self) -> tuple:
        blank = self.alphabet[0]
        return (blank,) + tuple(self.input) + (blank,)

    @classmethod
    def from_json(cls, data: Mapping) -> "ATMSpec":
        try:
            def table(rows):
                out = {}
                for row in rows:
                    e, a, b, f, c, m1, m2 = row
                    out[(str(e), str(a), str(b))] = (str(f), str(c), int(m1), int(m2))
                return out

            return cls(
                states=tuple(str(s) for s in data["states"]),
                existential=frozenset(str(s) for s in data.get("existential", [])),
                universal=frozenset(str(s) for s in data.get("universal", [])),
                alphabet=tuple(str(a) for a in data["alphabet"]),
                delta1=table(data["delta1"]),
                delta2=table(data["delta2"]),
                start=str(data["start"]),
                accept=str(data["accept"]),
                reject=str(data["reject"]),
                input=str(data.get("input", "")),
                space_bound=data["space_bound"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, TransformError):
                raise
            raise TransformError(f"malformed machine description: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "ATMSpec":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise TransformError(f"cannot read machine file {path}: {exc}") from None
        return cls.from_json(data)


def accepts(m: ATMSpec) -> bool:
    """Whether ``m`` accepts its input: least fixpoint over configurations, so cycles reject."""
    tape1 = m.input_tape()
    start = (m.start, 1, 1, (m.alphabet[0],) * m.space_bound)

    def successors(c):
        e, h1, h2, work = c
        out = []
        for delta in (m.delta1, m.delta2):
            f, w, m1, m2 = delta[(e, tape1[h1], work[h2 - 1])]
            n1, n2 = h1 + m1, h2 + m2
            if n1 not in m.r1 or n2 not in m.r2:
                out.append(None)
            else:
                nw = work[:h2 - 1] + (w,) + work[h2:]
                out.append((f, n1, n2, nw))
        return out

    configs, frontier = {start}, [start]
    edges = {}
    while frontier:
        c = frontier.pop()
        if c[0] in m.halting:
            continue
        edges[c] = successors(c)
        for d in edges[c]:
            if d is not None and d not in configs:
                configs.add(d)
                frontier.append(d)
    good = {c for c in configs if c[0] == m.accept}
    changed = True
    while changed:
        changed = False
        for c, succ in edges.items():
            if c in good:
                continue
            ok = [d is not None and d in good for d in succ]
            if (c[0] in m.existential and any(ok)) or (c[0] in m.universal and all(ok)):
                good.add(c)
                changed = True
    return start in good


class _Vars:
    def __init__(self, m: ATMSpec):
        self.state = {e: f"q_{k}" for k, e in enumerate(m.states)}
        self.sym = {a: k for k, a in enumerate(m.alphabet)}

    def q(self, e, positive=True):
        return Lit(self.state[e], positive)

    def t(self, tape, cell, positive=True):
        return Lit(f"t{tape}_{cell}", positive)

    def s(self, tape, a, cell, positive=True):
        return Lit(f"s{tape}_{self.sym[a]}_{cell}", positive)


def _exactly_one(lits: Sequence[Lit]) -> Formula:
    parts = [disj(*lits)]
    for x in range(len(lits)):
        for y in range(x + 1, len(lits)):
            parts.append(Or(lits[x].complement(), lits[y].complement()))
    return conj(*parts)


def atm_to_formula(m: ATMSpec, deterministic: bool = False) -> Formula:
    """Diamond-free formula satisfiable (in D2K4, or DK4 when deterministic) iff ``m`` accepts.

    Agents 1 and 2 step to the two successor configurations and agent 3
    (agent 2 in deterministic mode) reaches every later configuration.
    """
    if deterministic:
        if m.universal:
            raise TransformError("deterministic mode needs a machine without universal states")
        if m.delta1 != m.delta2:
            raise TransformError("deterministic mode needs delta1 = delta2")
    v = _Vars(m)
    r1, r2 = list(m.r1), list(m.r2)
    ranges = {1: r1, 2: r2}
    tape1 = m.input_tape()
    reach = 2 if deterministic else 3
    steps = (1,) if deterministic else (1, 2)

    q_part = _exactly_one([v.q(e) for e in m.states])
    sigma = conj(*[
        _exactly_one([v.s(j, a, i) for a in m.alphabet]) for j in (1, 2) for i in ranges[j]
    ])
    t_part = conj(*[_exactly_one([v.t(j, i) for i in ranges[j]]) for j in (1, 2)])
    keep = []
    for j in (1, 2):
        for i in ranges[j]:
            for i2 in ranges[j]:
                if i == i2:
                    continue
                for a in m.alphabet:
                    cell = v.s(j, a, i2)
                    keep.append(disj(v.t(j, i, False), cell.complement(), conj(*[Box(b, cell) for b in steps])))
    sigma_keep = conj(*keep)
    ac = v.q(m.reject, False)
    st = conj(
        v.q(m.start), v.t(1, 1), v.t(2, 1),
        *[v.s(1, tape1[i], i) for i in r1],
        *[v.s(2, m.alphabet[0], i) for i in r2],
    )

    def successor(delta_entry, read1, l1, l2):
        f, c, m1, m2 = delta_entry
        if l1 + m1 not in r1 or l2 + m2 not in r2:
            return BOT
        return conj(v.q(f), v.s(2, c, l2), v.s(1, read1, l1), v.t(1, l1 + m1), v.t(2, l2 + m2))

    d_e, d_u = [], []
    for e in m.states:
        if e in m.halting:
            continue
        for a in m.alphabet:
            for b in m.alphabet:
                for j1 in r1:
                    for j2 in r2:
                        guard = [v.q(e, False), v.s(1, a, j1, False), v.s(2, b, j2, False), v.t(1, j1, False), v.t(2, j2, False)]
                        n1 = successor(m.delta1[(e, a, b)], a, j1, j2)
                        n2 = successor(m.delta2[(e, a, b)], a, j1, j2)
                        if e in m.existential:
                            goal = Box(1, n1) if deterministic else Or(Box(1, n1), Box(1, n2))
                            d_e.append(disj(*guard, goal))
                        else:
                            d_u.append(disj(*guard, And(Box(1, n1), Box(2, n2))))
    com = conj(q_part, sigma, t_part, sigma_keep, ac, conj(*d_e), conj(*d_u))
    return conj(st, com, Box(reach, com))


def atm_variable_count(m: ATMSpec) -> int:
    n1, n2 = len(m.r1), len(m.r2)
    return len(m.states) + n1 + n2 + len(m.alphabet) * (n1 + n2)
