"""Brute-force bounded model search, used as ground truth for the tableau and the translations.

For diamond-free input only minimal frames are enumerated: boxes are
antimonotone in the relations, so shrinking every relation to a minimal one
that still meets the frame conditions preserves truth. Minimal relations are
functions for serial minimal agents (closed transitively for D4), the identity
for reflexive minimal agents, the closure of the union below for every other
agent and the empty relation for vacuous agents. Input with diamonds falls
back to enumerating every relation, under a budget.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .formula import And, Atom, Bot, Box, Dia, Implies, Lit, Not, Or, Top, is_diamond_free, variables
from .logic import LogicSpec, min_n
from .models import KripkeModel, check, verify_frame

DEFAULT_VARIABLE_BUDGET = 2
DEFAULT_FRAME_BUDGET = 2_000_000


class OracleBudgetError(RuntimeError):
    """The requested search is too large; use fewer variables or worlds."""


@dataclass(frozen=True)
class SatWitness:
    model: KripkeModel
    world: str
    satisfiable = True

    def __bool__(self):
        return True


@dataclass(frozen=True)
class NoModelUpTo:
    bound: int
    satisfiable = False

    def __bool__(self):
        return False


def _close(mats: np.ndarray, reflexive: bool, symmetric: bool, transitive: bool) -> np.ndarray:
    """Close a stack of boolean adjacency matrices, reflexive first."""
    out = mats.copy()
    n = out.shape[-1]
    if reflexive:
        out |= np.eye(n, dtype=bool)
    if symmetric:
        out |= np.swapaxes(out, -1, -2)
    if transitive:
        for _ in range(max(1, n.bit_length())):
            out |= np.matmul(out.astype(np.uint8), out.astype(np.uint8)) > 0
    return out


def _functions(n: int) -> np.ndarray:
    rows = np.array(list(itertools.product(range(n), repeat=n)), dtype=np.int64)
    mats = np.zeros((len(rows), n, n), dtype=bool)
    idx = np.arange(n)
    for k, row in enumerate(rows):
        mats[k, idx, row] = True
    return mats


def _all_relations(n: int) -> np.ndarray:
    bits = np.array(list(itertools.product((False, True), repeat=n * n)), dtype=bool)
    return bits.reshape(-1, n, n)


def _meets(mats: np.ndarray, cls, serial: bool) -> np.ndarray:
    ok = np.ones(len(mats), dtype=bool)
    n = mats.shape[-1]
    if serial:
        ok &= mats.any(axis=2).all(axis=1)
    if cls.reflexive:
        ok &= mats[:, np.arange(n), np.arange(n)].all(axis=1)
    if cls.symmetric:
        ok &= (mats == np.swapaxes(mats, 1, 2)).all(axis=(1, 2))
    if cls.transitive:
        comp = np.matmul(mats.astype(np.uint8), mats.astype(np.uint8)) > 0
        ok &= ~(comp & ~mats).any(axis=(1, 2))
    return ok


def _reachable_all(stack: np.ndarray) -> np.ndarray:
    """Mask of frames in which every world is reachable from world 0."""
    union = stack.any(axis=1)
    n = union.shape[-1]
    reach = np.zeros(union.shape[:1] + (n,), dtype=bool)
    reach[:, 0] = True
    for _ in range(n):
        reach = reach | (np.einsum("fi,fij->fj", reach.astype(np.uint8), union.astype(np.uint8)) > 0)
    return reach.all(axis=1)


def _canonical(stack: np.ndarray) -> np.ndarray:
    """Indices of one representative per isomorphism class fixing world 0."""
    n = stack.shape[-1]
    perms = [(0,) + p for p in itertools.permutations(range(1, n))]
    keys = []
    for p in perms:
        p = np.array(p)
        permuted = stack[:, :, p][:, :, :, p]
        keys.append(np.packbits(permuted.reshape(len(stack), -1), axis=1))
    keys = np.stack(keys, axis=1)
    flat = [min(bytes(k) for k in row) for row in keys]
    seen = {}
    for idx, key in enumerate(flat):
        seen.setdefault(key, idx)
    return np.array(sorted(seen.values()), dtype=np.int64)


@lru_cache(maxsize=64)
def frames(spec: LogicSpec, n: int, minimal: bool, budget: int = DEFAULT_FRAME_BUDGET) -> np.ndarray:
    """All frames of ``spec`` on ``n`` worlds (up to iso), shape ``(F, agents, n, n)``.

    Rooted at world 0, every world reachable, ordered by total pair count.
    """
    agents = list(spec.agents)
    pos = {a: k for k, a in enumerate(agents)}
    order = spec.topological()
    if minimal:
        mins = min_n(spec)
        gens = {}
        for a in spec.active:
            if a not in mins:
                continue
            cls = spec.frame[a]
            if cls.reflexive:
                gens[a] = np.eye(n, dtype=bool)[None]
            else:
                gens[a] = _close(_functions(n), False, False, cls.transitive)
        total = 1
        for g in gens.values():
            total *= len(g)
        if total > budget:
            raise OracleBudgetError(f"{total} frames on {n} worlds exceed the budget of {budget}")
        combos = list(itertools.product(*[range(len(gens[a])) for a in sorted(gens)]))
        stack = np.zeros((len(combos), len(agents), n, n), dtype=bool)
        if combos:
            idx = np.array(combos, dtype=np.int64).reshape(len(combos), -1)
            for col, a in enumerate(sorted(gens)):
                stack[:, pos[a]] = gens[a][idx[:, col]]
        for a in order:
            if a in spec.vacuous or a in gens:
                continue
            below = [pos[b] for b in spec.below(a)]
            union = stack[:, below].any(axis=1) if below else np.zeros((len(stack), n, n), dtype=bool)
            cls = spec.frame[a]
            stack[:, pos[a]] = _close(union, cls.reflexive, cls.symmetric, cls.transitive)
    else:
        rels = _all_relations(n)
        stack = np.zeros((1, len(agents), n, n), dtype=bool)
        for a in order:
            cls = spec.frame[a]
            cand = rels[_meets(rels, cls, cls.serial)]
            below = [pos[b] for b in spec.below(a)]
            need = stack[:, below].any(axis=1) if below else np.zeros((len(stack), n, n), dtype=bool)
            if len(stack) * len(cand) > budget:
                raise OracleBudgetError(
                    f"more than {budget} candidate frames on {n} worlds; lower the world bound"
                )
            fits = ~(need[:, None] & ~cand[None]).any(axis=(2, 3))
            fi, ci = np.nonzero(fits)
            stack = stack[fi].copy()
            stack[:, pos[a]] = cand[ci]
    stack = stack[_reachable_all(stack)]
    if len(stack) == 0:
        return stack
    stack = stack[_canonical(stack)]
    counts = stack.reshape(len(stack), -1).sum(axis=1)
    return stack[np.argsort(counts, kind="stable")]


class _Packed:
    """Truth tables packed over valuations: shape ``(F, n, words)`` of uint64.

    Valuation index ``v`` makes variable ``k`` true at world ``w`` iff bit
    ``k*n + w`` of ``v`` is set; bit ``v`` of the packed words says whether the
    formula holds under valuation ``v``.
    """

    def __init__(self, n: int, nvars: int):
        self.n = n
        self.count = 1 << (n * nvars)
        self.words = (self.count + 63) // 64
        idx = np.arange(self.words * 64, dtype=np.int64)
        live = idx < self.count
        self.valid = self._pack(live)
        self.ones = np.full(self.words, np.uint64(0xFFFFFFFFFFFFFFFF))
        self.var = np.zeros((nvars, n, self.words), dtype=np.uint64)
        for k in range(nvars):
            for w in range(n):
                self.var[k, w] = self._pack(live & (((idx >> (k * n + w)) & 1) == 1))

    @staticmethod
    def _pack(bits: np.ndarray) -> np.ndarray:
        return np.packbits(bits.astype(np.uint8), bitorder="little").view(np.uint64)

    def valuation(self, v: int, nvars: int) -> list:
        return [[(v >> (k * self.n + w)) & 1 == 1 for w in range(self.n)] for k in range(nvars)]


def _evaluate(f, rel: np.ndarray, pk: _Packed, var_index: dict, pos: dict, memo: dict) -> np.ndarray:
    """Packed truth table of ``f`` over frames ``rel`` (shape ``(F, agents, n, n)``)."""
    hit = memo.get(f)
    if hit is not None:
        return hit
    F, n = rel.shape[0], rel.shape[-1]
    shape = (F, n, pk.words)

    def sub(g):
        return _evaluate(g, rel, pk, var_index, pos, memo)

    if isinstance(f, Bot):
        out = np.zeros(shape, dtype=np.uint64)
    elif isinstance(f, Top):
        out = np.broadcast_to(pk.ones, shape)
    elif isinstance(f, (Lit, Atom)):
        base = np.broadcast_to(pk.var[var_index[f.name]], shape)
        out = base if getattr(f, "positive", True) else ~base
    elif isinstance(f, Not):
        out = ~sub(f.sub)
    elif isinstance(f, And):
        out = sub(f.left) & sub(f.right)
    elif isinstance(f, Or):
        out = sub(f.left) | sub(f.right)
    elif isinstance(f, Implies):
        out = ~sub(f.left) | sub(f.right)
    elif isinstance(f, (Box, Dia)):
        body = sub(f.sub)[:, None, :, :]
        edges = rel[:, pos[f.agent], :, :, None]
        if isinstance(f, Box):
            out = np.bitwise_and.reduce(np.where(edges, body, pk.ones), axis=2)
        else:
            out = np.bitwise_or.reduce(np.where(edges, body, np.uint64(0)), axis=2)
    else:
        raise TypeError(f"not a formula: {f!r}")
    memo[f] = out
    return out


def _to_model(spec: LogicSpec, frame: np.ndarray, val: list, names: list) -> KripkeModel:
    n = frame.shape[-1]
    worlds = tuple(str(w) for w in range(n))
    rels = {}
    for k, a in enumerate(spec.agents):
        src, dst = np.nonzero(frame[k])
        rels[a] = frozenset((worlds[s], worlds[d]) for s, d in zip(src, dst))
    valuation = {v: frozenset(worlds[w] for w in range(n) if val[k][w]) for k, v in enumerate(names)}
    return KripkeModel(worlds, rels, valuation)


def _witness(spec, phi, frame, pk, root_row, names) -> SatWitness:
    word = next(k for k in range(pk.words) if root_row[k])
    v = word * 64 + (int(root_row[word]) & -int(root_row[word])).bit_length() - 1
    model = _to_model(spec, frame, pk.valuation(v, len(names)), names)
    if verify_frame(model, spec) or not check(model, "0", phi):
        raise AssertionError("oracle produced an invalid witness")
    return SatWitness(model, "0")


def brute_sat(
    spec: LogicSpec,
    phi,
    max_worlds: int,
    variable_budget: int = DEFAULT_VARIABLE_BUDGET,
    frame_budget: int = DEFAULT_FRAME_BUDGET,
) -> SatWitness | NoModelUpTo:
    """Search every model of ``spec`` with up to ``max_worlds`` worlds for one satisfying ``phi`` at its root."""
    if max_worlds < 1:
        raise ValueError("max_worlds must be at least 1")
    names = sorted(variables(phi))
    if len(names) > variable_budget:
        raise OracleBudgetError(
            f"formula has {len(names)} variables, above the budget of {variable_budget}; use a smaller formula"
        )
    minimal = is_diamond_free(phi)
    pos = {a: k for k, a in enumerate(spec.agents)}
    var_index = {v: k for k, v in enumerate(names)}
    for n in range(1, max_worlds + 1):
        rel = frames(spec, n, minimal, frame_budget)
        if len(rel) == 0:
            continue
        pk = _Packed(n, len(names))
        step = max(1, frame_budget // (16 * n * n * pk.words))
        for start in range(0, len(rel), step):
            chunk = rel[start:start + step]
            root = _evaluate(phi, chunk, pk, var_index, pos, {})[:, 0, :] & pk.valid
            hits = np.nonzero(root.any(axis=1))[0]
            if len(hits):
                return _witness(spec, phi, chunk[hits[0]], pk, root[hits[0]], names)
    return NoModelUpTo(max_worlds)


def brute_sat_many(
    spec: LogicSpec,
    formulas,
    max_worlds: int,
    variables_used=None,
    frame_budget: int = DEFAULT_FRAME_BUDGET,
    memo_limit: int = 1024,
) -> list:
    """``brute_sat`` over many diamond-free formulas, sharing subformula tables between them.

    Every formula is evaluated over the same variable list (``variables_used``,
    by default the union over the batch, at most the default budget), so
    results match ``brute_sat`` in verdict; witnesses may differ in which
    model is reported.
    """
    formulas = list(formulas)
    names = sorted(variables_used if variables_used is not None else set().union(*map(variables, formulas)) if formulas else ())
    if len(names) > DEFAULT_VARIABLE_BUDGET:
        raise OracleBudgetError(f"batch uses {len(names)} variables, above the budget of {DEFAULT_VARIABLE_BUDGET}")
    if not all(is_diamond_free(f) for f in formulas):
        raise ValueError("brute_sat_many handles diamond-free formulas only")
    pos = {a: k for k, a in enumerate(spec.agents)}
    var_index = {v: k for k, v in enumerate(names)}
    results = [None] * len(formulas)
    for n in range(1, max_worlds + 1):
        rel = frames(spec, n, True, frame_budget)
        pending = [k for k, r in enumerate(results) if r is None]
        if len(rel) == 0 or not pending:
            continue
        pk = _Packed(n, len(names))
        step = max(1, frame_budget // (16 * n * n * pk.words))
        for start in range(0, len(rel), step):
            chunk = rel[start:start + step]
            memo = {}
            for k in pending:
                if results[k] is not None:
                    continue
                if len(memo) > memo_limit:
                    memo = {}
                root = _evaluate(formulas[k], chunk, pk, var_index, pos, memo)[:, 0, :] & pk.valid
                hits = np.nonzero(root.any(axis=1))[0]
                if len(hits):
                    results[k] = _witness(spec, formulas[k], chunk[hits[0]], pk, root[hits[0]], names)
    return [r if r is not None else NoModelUpTo(max_worlds) for r in results]
