"""Kripke models: satisfaction, frame-condition checks, and models read off tableau branches."""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

from .formula import And, Atom, Bot, Box, Dia, Implies, Lit, Not, Or, Top
from .logic import FrameClass, LogicSpec, min_n, n_i, render_prefix


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class KripkeModel:
    worlds: tuple
    relations: Mapping[int, frozenset]
    valuation: Mapping[str, frozenset] = field(default_factory=dict)

    def __post_init__(self):
        ws = set(self.worlds)
        if len(ws) != len(self.worlds):
            raise ModelError("duplicate world ids")
        for agent, pairs in self.relations.items():
            for a, b in pairs:
                if a not in ws or b not in ws:
                    raise ModelError(f"relation {agent} mentions unknown world in {(a, b)}")
        for var, where in self.valuation.items():
            if not set(where) <= ws:
                raise ModelError(f"valuation of {var} mentions unknown worlds")

    @functools.cached_property
    def _succ(self) -> dict:
        out = {}
        for agent, pairs in self.relations.items():
            table = {w: [] for w in self.worlds}
            for a, b in sorted(pairs):
                table[a].append(b)
            out[agent] = table
        return out

    def successors(self, agent: int, w) -> list:
        try:
            return self._succ[agent][w]
        except KeyError:
            raise ModelError(f"model has no relation for agent {agent}") from None

    def to_json(self, root=None) -> dict:
        out = {
            "worlds": list(self.worlds),
            "relations": {str(a): sorted([list(p) for p in pairs]) for a, pairs in sorted(self.relations.items())},
            "valuation": {v: sorted(ws, key=self.worlds.index) for v, ws in sorted(self.valuation.items())},
        }
        if root is not None:
            out["root"] = root
        return out

    @classmethod
    def from_json(cls, data: Mapping):
        try:
            worlds = tuple(data["worlds"])
            relations = {int(a): frozenset(tuple(p) for p in pairs) for a, pairs in data["relations"].items()}
            valuation = {v: frozenset(ws) for v, ws in data.get("valuation", {}).items()}
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed model: {exc}") from None
        return cls(worlds, relations, valuation), data.get("root")

    def dumps(self, root=None) -> str:
        return json.dumps(self.to_json(root), indent=2)


# -------------------------------------------------------------- semantics

def check(model: KripkeModel, w, f) -> bool:
    """``model, w ⊨ f`` for NNF and surface formulas alike."""
    if w not in model.worlds:
        raise ModelError(f"unknown world {w!r}")
    return _holds(model, w, f)


def _holds(m: KripkeModel, w, f) -> bool:
    if isinstance(f, Bot):
        return False
    if isinstance(f, Top):
        return True
    if isinstance(f, Lit):
        return (w in m.valuation.get(f.name, ())) == f.positive
    if isinstance(f, Atom):
        return w in m.valuation.get(f.name, ())
    if isinstance(f, Not):
        return not _holds(m, w, f.sub)
    if isinstance(f, And):
        return _holds(m, w, f.left) and _holds(m, w, f.right)
    if isinstance(f, Or):
        return _holds(m, w, f.left) or _holds(m, w, f.right)
    if isinstance(f, Implies):
        return (not _holds(m, w, f.left)) or _holds(m, w, f.right)
    if isinstance(f, Box):
        return all(_holds(m, v, f.sub) for v in m.successors(f.agent, w))
    if isinstance(f, Dia):
        return any(_holds(m, v, f.sub) for v in m.successors(f.agent, w))
    raise TypeError(f"not a formula: {f!r}")


class Violation(NamedTuple):
    agent: int
    condition: str
    witness: tuple

    def __str__(self):
        return f"agent {self.agent}: {self.condition} fails at {self.witness}"


def verify_frame(model: KripkeModel, spec: LogicSpec) -> list:
    """Every frame condition the logic imposes that ``model`` breaks; empty means a valid frame."""
    out = []
    worlds = model.worlds
    rel = {}
    for a in spec.agents:
        if a not in model.relations:
            out.append(Violation(a, "missing relation", ()))
        rel[a] = set(model.relations.get(a, ()))
    for a in spec.agents:
        cls = spec.frame[a]
        r = rel[a]
        succ = {w: set() for w in worlds}
        for u, v in r:
            succ.setdefault(u, set()).add(v)
        if a not in spec.vacuous and cls.serial:
            for w in worlds:
                if not succ[w]:
                    out.append(Violation(a, "seriality", (w,)))
        if cls.reflexive:
            for w in worlds:
                if (w, w) not in r:
                    out.append(Violation(a, "reflexivity", (w,)))
        if cls.transitive:
            for (u, v) in sorted(r):
                for x in sorted(succ[v]):
                    if (u, x) not in r:
                        out.append(Violation(a, "transitivity", (u, v, x)))
        if cls.symmetric:
            for (u, v) in sorted(r):
                if (v, u) not in r:
                    out.append(Violation(a, "symmetry", (u, v)))
    for (i, j) in sorted(spec.inclusion):
        for pair in sorted(rel[i] - rel[j]):
            out.append(Violation(j, f"inclusion R{i} ⊆ R{j}", pair))
    return out


# ------------------------------------------------------------- closures

def reflexive_closure(pairs: Iterable, worlds: Iterable) -> set:
    return set(pairs) | {(w, w) for w in worlds}


def transitive_closure(pairs: Iterable) -> set:
    closed = set(pairs)
    succ = {}
    for a, b in closed:
        succ.setdefault(a, set()).add(b)
    for a in list(succ):
        stack = list(succ[a])
        seen = set(stack)
        while stack:
            b = stack.pop()
            for c in succ.get(b, ()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        closed |= {(a, c) for c in seen}
    return closed


def close_relation(pairs: Iterable, worlds: Iterable, cls: FrameClass) -> set:
    """Apply the closures the frame class demands, reflexive first."""
    out = set(pairs)
    if cls.reflexive:
        out = reflexive_closure(out, worlds)
    if cls.symmetric:
        out |= {(b, a) for (a, b) in out}
    if cls.transitive:
        out = transitive_closure(out)
    return out


# ------------------------------------------------------------- extraction

def extract_model(branch, spec: LogicSpec):
    """Read a finite model off an open, saturated branch.

    Prefixes carrying a back-edge are merged into their target. Minimal agents
    step to ``n_i(σ)`` (or loop on ``σ`` when that prefix never appeared);
    every other agent gets the union of what lies below it. Each relation is
    then closed as its frame class requires. Returns ``(model, root_world)``.
    """
    if branch.closed:
        raise ModelError("cannot extract a model from a closed branch")
    entries = branch.entries
    back = branch.back_edges

    def resolve(p):
        seen = set()
        while p in back:
            if p in seen:
                raise ModelError(f"back-edge cycle at {render_prefix(p)}")
            seen.add(p)
            p = back[p]
        return p

    prefixes = sorted((p for p in entries if p not in back), key=lambda p: (len(p), p))
    names = {p: render_prefix(p) for p in prefixes}
    worlds = tuple(names[p] for p in prefixes)
    mins = min_n(spec)
    rel = {}
    for a in spec.topological():
        if a in spec.vacuous:
            rel[a] = set()
            continue
        if a in mins:
            pairs = set()
            for p in prefixes:
                target = n_i(spec, a, p)
                if target == p or target not in entries:
                    pairs.add((names[p], names[p]))
                else:
                    pairs.add((names[p], names[resolve(target)]))
        else:
            pairs = set()
            for b in spec.below(a):
                pairs |= rel[b]
        rel[a] = close_relation(pairs, worlds, spec.frame[a])
    valuation = {}
    for p in prefixes:
        for f in entries[p]:
            if isinstance(f, Lit) and f.positive:
                valuation.setdefault(f.name, set()).add(names[p])
    model = KripkeModel(
        worlds,
        {a: frozenset(r) for a, r in sorted(rel.items())},
        {v: frozenset(ws) for v, ws in sorted(valuation.items())},
    )
    return model, names[resolve(())]
