"""Complexity of the diamond-free fragment (and its one-variable part) of a logic."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

from .logic import LogicSpec, is_pure, is_simple, min_n, min_of


class Case(enum.Enum):
    Case1_EXP = 1
    Case2_PSPACE = 2
    Case3_PSPACE = 3
    Case4_NP = 4


_CLASSES = {
    Case.Case1_EXP: ("EXP-complete", "EXP-complete"),
    Case.Case2_PSPACE: ("PSPACE-complete", "PSPACE-complete"),
    Case.Case3_PSPACE: ("PSPACE-complete", "PSPACE-complete"),
    Case.Case4_NP: ("P", "NP-complete"),
}


@dataclass(frozen=True)
class ComplexityVerdict:
    case: Case
    witness_agent: int | None = None
    witness_set: frozenset | None = None
    witness_j: int | None = None

    @property
    def one_var_class(self) -> str:
        return _CLASSES[self.case][0]

    @property
    def multi_var_class(self) -> str:
        return _CLASSES[self.case][1]

    def to_json(self) -> dict:
        return {
            "case": self.case.name,
            "multi_var_class": self.multi_var_class,
            "one_var_class": self.one_var_class,
            "witness_agent": self.witness_agent,
            "witness_set": None if self.witness_set is None else sorted(self.witness_set),
            "witness_j": self.witness_j,
        }

    def __str__(self):
        parts = [f"{self.case.name}: {self.multi_var_class} (1-variable: {self.one_var_class})"]
        if self.witness_agent is not None:
            parts.append(f"i={self.witness_agent}")
        if self.witness_set is not None:
            parts.append("A={" + ",".join(map(str, sorted(self.witness_set))) + "}")
        if self.witness_j is not None:
            parts.append(f"j={self.witness_j}")
        return " ".join(parts)


def _pure_subsets(spec: LogicSpec, i: int, size: int):
    pool = sorted(min_of(spec, i))
    for a in itertools.combinations(pool, size):
        if is_pure(spec, a):
            yield frozenset(a)


def classify(spec: LogicSpec) -> ComplexityVerdict:
    """Run the four-case test in priority order; vacuous agents are ignored throughout."""
    active = spec.active
    transitive = {i for i in active if spec.frame[i].transitive}

    for i in active:
        if i not in transitive:
            continue
        for a in _pure_subsets(spec, i, 2):
            if is_simple(spec, a):
                return ComplexityVerdict(Case.Case1_EXP, i, a)
        for a in _pure_subsets(spec, i, 3):
            return ComplexityVerdict(Case.Case1_EXP, i, a)

    pure_simple = [j for j in sorted(min_n(spec)) if is_pure(spec, [j]) and is_simple(spec, [j])]
    for i in active:
        if pure_simple:
            for a in _pure_subsets(spec, i, 2):
                return ComplexityVerdict(Case.Case2_PSPACE, i, a, pure_simple[0])
        for a in _pure_subsets(spec, i, 3):
            return ComplexityVerdict(Case.Case2_PSPACE, i, a)

    for i in active:
        if i not in transitive:
            continue
        for a in _pure_subsets(spec, i, 1):
            if is_simple(spec, a):
                return ComplexityVerdict(Case.Case3_PSPACE, i, a)
        for a in _pure_subsets(spec, i, 2):
            return ComplexityVerdict(Case.Case3_PSPACE, i, a)

    return ComplexityVerdict(Case.Case4_NP)
