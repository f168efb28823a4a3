"""Prefixed tableaux: the diamond-free engine for any validated logic and the full unimodal K engine.

The general engine runs a depth-first search over prefixes. Each prefix is
saturated locally (conjunctions, one disjunct per disjunction, the box rules
that stay on the prefix), then the box rules that point at child prefixes
seed the children, which are expanded in agent order. A child whose saturated
set repeats the one of a proper ancestor in the same state is not expanded;
a back-edge to that ancestor is recorded instead.
"""

from __future__ import annotations

import sys
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

from .formula import And, Bot, Box, Dia, Lit, Or, Top, Formula, is_diamond_free, is_nnf, to_nnf, agents as formula_agents
from .logic import LogicSpec, min_n, min_of, n_i, preset, render_prefix
from .models import KripkeModel, check, extract_model, verify_frame

__all__ = [
    "Branch", "Sat", "Unsat", "TraceRecord", "TableauError",
    "n_i", "solve", "solve_k", "trace",
]

_RECURSION_FLOOR = 20000


class TableauError(ValueError):
    """Input outside the fragment a procedure handles."""


class TraceRecord(NamedTuple):
    rule: str
    source: str
    formula: Formula
    result: Formula | None
    targets: tuple

    def __str__(self):
        res = "" if self.result is None else f" → {self.result}"
        return f"{self.rule:5} {self.source}: {self.formula}{res} @ {', '.join(self.targets)}"


@dataclass
class Branch:
    entries: dict
    back_edges: dict = field(default_factory=dict)
    closed: bool = False

    def render(self) -> dict:
        return {render_prefix(p): sorted(str(f) for f in fs) for p, fs in sorted(self.entries.items())}


@dataclass
class Sat:
    model: KripkeModel
    world: str
    branch: Branch
    satisfiable = True

    def __bool__(self):
        return True


@dataclass
class Unsat:
    explored: int = 0
    satisfiable = False

    def __bool__(self):
        return False


@dataclass
class _Node:
    prefix: tuple
    entries: dict
    records: list
    deposits: list = field(default_factory=list)
    children: list = field(default_factory=list)
    back_edge: tuple | None = None


def _complement(lit: Lit) -> Lit:
    return Lit(lit.name, not lit.positive)


def _present(f, s) -> bool:
    if isinstance(f, Top) or f in s:
        return True
    if isinstance(f, And):
        return _present(f.left, s) and _present(f.right, s)
    if isinstance(f, Or):
        return _present(f.left, s) or _present(f.right, s)
    return False


def _dead(f, s) -> bool:
    if isinstance(f, Bot):
        return True
    if isinstance(f, Lit):
        return _complement(f) in s
    if isinstance(f, And):
        return _dead(f.left, s) or _dead(f.right, s)
    if isinstance(f, Or):
        return _dead(f.left, s) and _dead(f.right, s)
    return False


class _Saturator:
    """Propositional saturation with disjunction choice, shared by both engines.

    ``local_box`` is the hook that applies the box rules staying on the prefix.
    """

    def __init__(self, local_box, log):
        self.local_box = local_box
        self.log = log

    def run(self, prefix, seed) -> Iterator[tuple]:
        s = {}
        recs = []
        queue = deque()
        for f in seed:
            if f not in s:
                s[f] = None
                queue.append(f)
        yield from self._step(prefix, s, recs, queue)

    def _step(self, prefix, s, recs, queue):
        src = render_prefix(prefix)
        while True:
            if not self._propagate(prefix, src, s, recs, queue):
                if self.log is not None:
                    self.log.extend(recs)
                return
            choice = None
            for f in s:
                if not isinstance(f, Or) or _present(f.left, s) or _present(f.right, s):
                    continue
                dl, dr = _dead(f.left, s), _dead(f.right, s)
                if dl and dr:
                    recs.append(TraceRecord("CLASH", src, f, None, (src,)))
                    if self.log is not None:
                        self.log.extend(recs)
                    return
                if dl or dr:
                    side = f.right if dl else f.left
                    recs.append(TraceRecord("OR", src, f, side, (src,)))
                    s[side] = None
                    queue.append(side)
                    choice = False
                    break
                if choice is None:
                    choice = f
            if choice is False:
                continue
            if choice is None:
                yield s, recs
                return
            for side in (choice.left, choice.right):
                s2 = dict(s)
                s2[side] = None
                recs2 = recs + [TraceRecord("OR", src, choice, side, (src,))]
                yield from self._step(prefix, s2, recs2, deque([side]))
            return

    def _propagate(self, prefix, src, s, recs, queue) -> bool:
        def add(f, rule, origin):
            if f not in s:
                s[f] = None
                queue.append(f)
                recs.append(TraceRecord(rule, src, origin, f, (src,)))

        while queue:
            f = queue.popleft()
            if isinstance(f, Bot):
                recs.append(TraceRecord("CLASH", src, f, None, (src,)))
                return False
            if isinstance(f, Lit):
                if _complement(f) in s:
                    recs.append(TraceRecord("CLASH", src, f, _complement(f), (src,)))
                    return False
            elif isinstance(f, And):
                add(f.left, "AND", f)
                add(f.right, "AND", f)
            elif isinstance(f, Box):
                self.local_box(prefix, f, add)
        return True


class _Engine:
    def __init__(self, spec: LogicSpec, keep_log: bool):
        self.spec = spec
        self.mins = min_n(spec)
        self.min_of = {i: sorted(min_of(spec, i)) for i in spec.active}
        self.below = {i: spec.below(i) for i in spec.agents}
        self.transitive = frozenset(i for i in spec.agents if spec.frame[i].transitive)
        self.reflexive = frozenset(i for i in spec.agents if spec.frame[i].reflexive)
        # (y, x): a child σ.x of a prefix ending in y is a "last prefix"
        self.last_pairs = {
            (y, x)
            for i in spec.active if spec.frame[i].transitive
            for x in self.min_of[i] for y in self.min_of[i]
        }
        self.failed = set()
        self.explored = 0
        self.log = [] if keep_log else None
        self.sat = _Saturator(self._local_box, self.log)

    def _tag(self, prefix):
        # only a transitive last agent changes how n_i treats the prefix
        if prefix and prefix[-1] in self.transitive:
            return prefix[-1]
        return None

    def _local_box(self, prefix, f: Box, add):
        i = f.agent
        if i in self.spec.vacuous:
            return
        for j in self.below[i]:
            add(Box(j, f.sub), "R1", f)
        if i in self.reflexive:
            add(f.sub, "R3", f)
        if i in self.mins and n_i(self.spec, i, prefix) == prefix:
            add(f.sub, "R2", f)
        if i in self.transitive:
            for j in self.min_of[i]:
                if n_i(self.spec, j, prefix) == prefix:
                    add(f, "R4", f)

    def _deposits(self, prefix, s):
        src = render_prefix(prefix)
        seeds = {}
        recs = []

        def put(target, f, rule, origin):
            bucket = seeds.setdefault(target, {})
            if f not in bucket:
                bucket[f] = None
                recs.append(TraceRecord(rule, src, origin, f, (render_prefix(target),)))

        for f in s:
            if not isinstance(f, Box) or f.agent in self.spec.vacuous:
                continue
            i = f.agent
            if i in self.mins:
                t = n_i(self.spec, i, prefix)
                if t != prefix:
                    put(t, f.sub, "R2", f)
            if i in self.transitive:
                for j in self.min_of[i]:
                    t = n_i(self.spec, j, prefix)
                    if t != prefix:
                        put(t, f, "R4", f)
        last = prefix[-1] if prefix else None
        order = sorted(seeds, key=lambda t: ((last, t[-1]) in self.last_pairs, t[-1]))
        return [(t, seeds[t]) for t in order], recs

    def expand(self, prefix, seed, path):
        tag = self._tag(prefix)
        key = (tag, frozenset(seed))
        if key in self.failed:
            return None
        self.explored += 1
        for s, recs in self.sat.run(prefix, seed):
            fs = frozenset(s)
            for atag, aset, apfx in path:
                if atag == tag and aset == fs:
                    loop = TraceRecord("LOOP", render_prefix(prefix), Top(), None, (render_prefix(apfx),))
                    if self.log is not None:
                        self.log.extend(recs)
                        self.log.append(loop)
                    return _Node(prefix, s, recs + [loop], back_edge=apfx)
            kids_spec, dep_recs = self._deposits(prefix, s)
            if self.log is not None:
                self.log.extend(recs)
                self.log.extend(dep_recs)
            path.append((tag, fs, prefix))
            kids = []
            for child, cseed in kids_spec:
                sub = self.expand(child, cseed, path)
                if sub is None:
                    break
                kids.append(sub)
            path.pop()
            if len(kids) == len(kids_spec):
                return _Node(prefix, s, recs, dep_recs, kids)
        self.failed.add(key)
        return None


def _tree_branch(root: _Node) -> Branch:
    entries, back = {}, {}
    stack = [root]
    while stack:
        node = stack.pop()
        entries[node.prefix] = frozenset(node.entries)
        if node.back_edge is not None:
            back[node.prefix] = node.back_edge
        stack.extend(node.children)
    return Branch(entries, back, False)


def _preorder(root: _Node) -> list:
    out = []
    stack = [root]
    while stack:
        node = stack.pop()
        out.extend(node.records)
        out.extend(node.deposits)
        stack.extend(reversed(node.children))
    return out


def _prepare(spec: LogicSpec, phi) -> Formula:
    f = phi if is_nnf(phi) else to_nnf(phi)
    if not is_diamond_free(f):
        raise TableauError("formula contains a diamond; only the diamond-free fragment is supported")
    bad = sorted(a for a in formula_agents(f) if a not in spec.agents)
    if bad:
        raise TableauError(f"agent {bad[0]} out of range 1..{spec.agent_count}")
    return f


def _ensure_stack():
    if sys.getrecursionlimit() < _RECURSION_FLOOR:
        sys.setrecursionlimit(_RECURSION_FLOOR)


def _run(spec, phi, keep_log):
    f = _prepare(spec, phi)
    _ensure_stack()
    eng = _Engine(spec, keep_log)
    root = eng.expand((), {f: None}, [])
    return f, eng, root


def solve(spec: LogicSpec, phi) -> Sat | Unsat:
    """Decide ``phi`` in ``spec``; a Sat verdict carries a frame-checked model."""
    f, eng, root = _run(spec, phi, keep_log=False)
    if root is None:
        return Unsat(eng.explored)
    branch = _tree_branch(root)
    model, world = extract_model(branch, spec)
    problems = verify_frame(model, spec)
    if problems or not check(model, world, f):
        raise AssertionError(f"extracted model failed verification: {problems[:3]}")
    return Sat(model, world, branch)


def trace(spec: LogicSpec, phi) -> list:
    """Rule applications: the accepted branch in pre-order, or the whole search when unsatisfiable."""
    _, eng, root = _run(spec, phi, keep_log=True)
    if root is None:
        return eng.log
    return _preorder(root)


# ------------------------------------------------------------------- K

class _KEngine:
    def __init__(self):
        self.failed = set()
        self.explored = 0
        self.sat = _Saturator(lambda prefix, f, add: None, None)

    def expand(self, prefix, seed):
        key = frozenset(seed)
        if key in self.failed:
            return None
        self.explored += 1
        for s, recs in self.sat.run(prefix, seed):
            payloads = [f.sub for f in s if isinstance(f, Box)]
            dias = [f for f in s if isinstance(f, Dia)]
            kids = []
            for k, d in enumerate(dias, start=1):
                cseed = {d.sub: None}
                cseed.update((p, None) for p in payloads)
                sub = self.expand(prefix + (k,), cseed)
                if sub is None:
                    break
                kids.append(sub)
            if len(kids) == len(dias):
                return _Node(prefix, s, recs, [], kids)
        self.failed.add(key)
        return None


def solve_k(phi) -> Sat | Unsat:
    """Full-language tableau for unimodal K; a Sat verdict carries a finite tree model."""
    f = phi if is_nnf(phi) else to_nnf(phi)
    if any(a != 1 for a in formula_agents(f)):
        raise TableauError("solve_k handles the unimodal language: every agent index must be 1")
    _ensure_stack()
    eng = _KEngine()
    root = eng.expand((), {f: None})
    if root is None:
        return Unsat(eng.explored)
    branch = _tree_branch(root)
    worlds, pairs, val = [], set(), {}
    stack = [root]
    while stack:
        node = stack.pop()
        w = render_prefix(node.prefix)
        worlds.append(w)
        for lit in node.entries:
            if isinstance(lit, Lit) and lit.positive:
                val.setdefault(lit.name, set()).add(w)
        for c in node.children:
            pairs.add((w, render_prefix(c.prefix)))
        stack.extend(node.children)
    worlds.sort(key=lambda w: (w.count("."), w))
    model = KripkeModel(tuple(worlds), {1: frozenset(pairs)}, {v: frozenset(ws) for v, ws in sorted(val.items())})
    if not check(model, "0", f) or verify_frame(model, preset("K")):
        raise AssertionError("K tableau produced an invalid model")
    return Sat(model, "0", branch)
