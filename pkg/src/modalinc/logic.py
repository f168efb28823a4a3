"""Logic descriptions ``(N, ⊂, F)``: agents, an inclusion order and a frame class per agent."""

from __future__ import annotations

import dataclasses
import enum
import itertools
import functools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping


class FrameClass(enum.Enum):
    K = "K"
    D = "D"
    T = "T"
    K4 = "K4"
    D4 = "D4"
    S5 = "S5"

    @property
    def serial(self) -> bool:
        return self in (FrameClass.D, FrameClass.T, FrameClass.D4, FrameClass.S5)

    @property
    def reflexive(self) -> bool:
        return self in (FrameClass.T, FrameClass.S5)

    @property
    def transitive(self) -> bool:
        return self in (FrameClass.K4, FrameClass.D4, FrameClass.S5)

    @property
    def symmetric(self) -> bool:
        return self is FrameClass.S5


class LogicError(ValueError):
    """Raised for malformed or unsupported logic descriptions."""


@dataclass(frozen=True)
class LogicSpec:
    """A validated logic.

    ``inclusion`` holds pairs ``(i, j)`` meaning ``R_i ⊆ R_j`` (so ``[j]φ → [i]φ``)
    and is irreflexive, acyclic and transitively closed. ``vacuous`` agents are
    non-serial modalities with no serial modality below them; their boxes hold
    trivially on diamond-free input.
    """

    agent_count: int
    inclusion: frozenset
    frame: Mapping[int, FrameClass]
    vacuous: frozenset = frozenset()
    name: str = dataclasses.field(default="", compare=False)

    def __hash__(self):
        return hash((self.agent_count, self.inclusion, tuple(sorted(self.frame.items(), key=lambda kv: kv[0])), self.vacuous))

    @property
    def agents(self) -> range:
        return range(1, self.agent_count + 1)

    @functools.cached_property
    def active(self) -> tuple:
        """Non-vacuous agents in ascending order."""
        return tuple(i for i in self.agents if i not in self.vacuous)

    @functools.cached_property
    def _below(self) -> dict:
        return {i: tuple(sorted(j for (j, k) in self.inclusion if k == i)) for i in self.agents}

    def below(self, i: int) -> tuple:
        """Agents ``j`` with ``j ⊂ i``."""
        return self._below[i]

    def above(self, i: int) -> tuple:
        return tuple(sorted(k for (j, k) in self.inclusion if j == i))

    def topological(self) -> list:
        """Agents ordered so that every agent follows everything below it."""
        return sorted(self.agents, key=lambda i: (len(self.below(i)), i))

    def to_json(self) -> dict:
        return {
            "agents": self.agent_count,
            "frames": {str(i): self.frame[i].value for i in self.agents},
            "inclusions": [list(p) for p in sorted(self.inclusion)],
        }


def _closure(pairs: set) -> set:
    closed = set(pairs)
    while True:
        extra = {(a, d) for (a, b) in closed for (c, d) in closed if b == c} - closed
        if not extra:
            return closed
        closed |= extra


def _find_cycle(agent_count: int, pairs: set) -> list | None:
    succ = {i: sorted(j for (a, j) in pairs if a == i) for i in range(1, agent_count + 1)}
    state = {}

    def dfs(v, stack):
        state[v] = 1
        stack.append(v)
        for w in succ[v]:
            if state.get(w) == 1:
                return stack[stack.index(w):] + [w]
            if w not in state:
                found = dfs(w, stack)
                if found:
                    return found
        stack.pop()
        state[v] = 2
        return None

    for v in range(1, agent_count + 1):
        if v not in state:
            found = dfs(v, [])
            if found:
                return found
    return None


def validate_and_normalize(agent_count: int, raw_inclusion: Iterable, raw_frame: Mapping, name: str = "") -> LogicSpec:
    """Check a raw description and bring it into the form the solver expects.

    K/K4 agents sitting above a serial agent inherit seriality and become D/D4.
    K/K4 agents with nothing serial below them are marked vacuous.
    """
    if not isinstance(agent_count, int) or agent_count < 1:
        raise LogicError(f"agent count must be a positive integer, got {agent_count!r}")
    pairs = set()
    for pair in raw_inclusion:
        i, j = (int(x) for x in pair)
        for a in (i, j):
            if not 1 <= a <= agent_count:
                raise LogicError(f"agent {a} out of range 1..{agent_count}")
        if i == j:
            raise LogicError(f"self-inclusion ({i}, {i}) is not allowed")
        pairs.add((i, j))
    cycle = _find_cycle(agent_count, pairs)
    if cycle:
        path = " ⊂ ".join(str(a) for a in cycle)
        raise LogicError(f"inclusion cycle {path}; collapse the agents of the cycle into one")
    inclusion = frozenset(_closure(pairs))

    frame = {}
    for i in range(1, agent_count + 1):
        value = raw_frame.get(i, raw_frame.get(str(i)))
        if value is None:
            raise LogicError(f"no frame class given for agent {i}")
        try:
            frame[i] = value if isinstance(value, FrameClass) else FrameClass(str(value).upper())
        except ValueError:
            raise LogicError(f"unknown frame class {value!r} for agent {i}") from None

    vacuous = set()
    order = sorted(frame, key=lambda i: (sum(1 for (a, b) in inclusion if b == i), i))
    for i in order:
        if frame[i] in (FrameClass.K, FrameClass.K4):
            serial_below = any(b == i and a not in vacuous for (a, b) in inclusion)
            if serial_below:
                frame[i] = FrameClass.D if frame[i] is FrameClass.K else FrameClass.D4
            else:
                vacuous.add(i)

    spec = LogicSpec(agent_count, inclusion, frame, frozenset(vacuous), name)
    for i in spec.active:
        if frame[i] is FrameClass.S5 and min_of(spec, i) != frozenset({i}):
            raise LogicError(
                f"agent {i} is S5 but has serial agents below it; "
                "S5 is only supported for agents with nothing below them"
            )
    return spec


@functools.lru_cache(maxsize=1024)
def min_of(spec: LogicSpec, i: int) -> frozenset:
    """The ⊂-minimal active agents at or below ``i``.

    Vacuous agents never generate worlds, so they are left out of the order;
    a vacuous agent is its own minimum.
    """
    if i in spec.vacuous:
        return frozenset({i})
    cands = [j for j in spec.active if j == i or (j, i) in spec.inclusion]
    return frozenset(
        j for j in cands if not any((k, j) in spec.inclusion for k in spec.active)
    )


@functools.lru_cache(maxsize=256)
def min_n(spec: LogicSpec) -> frozenset:
    out = frozenset()
    for i in spec.active:
        out |= min_of(spec, i)
    return out


def is_pure(spec: LogicSpec, agents: Iterable[int]) -> bool:
    return all(not spec.frame[a].reflexive for a in agents)


def is_simple(spec: LogicSpec, agents: Iterable[int]) -> bool:
    return any(spec.frame[a] in (FrameClass.D, FrameClass.T, FrameClass.K) for a in agents)


# ---------------------------------------------------------------- presets

_PRESETS = {
    "K": (1, [], {1: "K"}),
    "D2K": (3, [(1, 3), (2, 3)], {1: "D", 2: "D", 3: "K"}),
    "D2K4": (3, [(1, 3), (2, 3)], {1: "D", 2: "D", 3: "K4"}),
    "DK4": (2, [(1, 2)], {1: "D", 2: "K4"}),
    "D42K4": (3, [(1, 3), (2, 3)], {1: "D4", 2: "D4", 3: "K4"}),
    "D4K4": (2, [(1, 2)], {1: "D4", 2: "K4"}),
}

PRESET_NAMES = tuple(_PRESETS)


def preset(name: str) -> LogicSpec:
    try:
        n, inc, frames = _PRESETS[name]
    except KeyError:
        raise LogicError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None
    return validate_and_normalize(n, inc, frames, name=name)


def from_json(data: Mapping) -> LogicSpec:
    """Build a spec from ``{"agents": n, "frames": {...}, "inclusions": [[i, j], ...]}``."""
    expected = {"agents", "frames", "inclusions"}
    if not isinstance(data, Mapping) or set(data) != expected:
        raise LogicError(f"logic file must have exactly the keys {sorted(expected)}")
    frames = data["frames"]
    if not isinstance(frames, Mapping):
        raise LogicError("'frames' must be an object")
    return validate_and_normalize(data["agents"], data["inclusions"], {int(k): v for k, v in frames.items()})


def load(source: str) -> LogicSpec:
    """A preset name or a path to a logic file."""
    if source in _PRESETS:
        return preset(source)
    path = Path(source)
    if not path.exists():
        raise LogicError(f"{source!r} is neither a preset ({', '.join(PRESET_NAMES)}) nor a readable file")
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise LogicError(f"cannot read logic file {source}: {exc}") from None
    return from_json(data)


def renumber(spec: LogicSpec, perm: Mapping[int, int]) -> LogicSpec:
    """The same logic with agent ``i`` renamed ``perm[i]``."""
    inc = [(perm[i], perm[j]) for (i, j) in spec.inclusion]
    frames = {perm[i]: spec.frame[i] for i in spec.agents}
    out = validate_and_normalize(spec.agent_count, inc, frames)
    return dataclasses.replace(out, name=spec.name)


def all_permutations(spec: LogicSpec):
    for p in itertools.permutations(spec.agents):
        yield renumber(spec, dict(zip(spec.agents, p)))


def n_i(spec: LogicSpec, i: int, prefix: tuple) -> tuple:
    """Where agent ``i``'s serial successor of ``prefix`` lives.

    Reflexive agents stay put, a transitive agent stays on a prefix that
    already ends in ``i``, otherwise a fresh child ``prefix.i``.
    """
    cls = spec.frame[i]
    if cls.reflexive:
        return prefix
    if cls.transitive and prefix and prefix[-1] == i:
        return prefix
    return prefix + (i,)


def render_prefix(prefix: tuple) -> str:
    return ".".join(["0"] + [str(a) for a in prefix])


def parse_prefix(text: str) -> tuple:
    parts = text.split(".")
    if parts[0] != "0" or not all(p.isdigit() and int(p) > 0 for p in parts[1:]):
        raise ValueError(f"malformed prefix {text!r}")
    return tuple(int(p) for p in parts[1:])
