import pytest

from corpus import leaves, sample
from modalinc.formula import BOT, Lit, parse, parse_nnf
from modalinc.logic import PRESET_NAMES, preset, validate_and_normalize
from modalinc.models import check, verify_frame
from modalinc.oracle import (
    NoModelUpTo, OracleBudgetError, SatWitness, _to_model, brute_sat, brute_sat_many, frames,
)
from modalinc.tableau import solve, solve_k


def test_examples():
    assert brute_sat(preset("D2K"), BOT, 3) == NoModelUpTo(3)
    w = brute_sat(preset("D2K"), Lit("q"), 1)
    assert isinstance(w, SatWitness)
    assert w.model.worlds == ("0",)
    assert all(w.model.relations[a] == {("0", "0")} for a in (1, 2, 3))
    assert w.model.valuation["q"] == {"0"}
    w = brute_sat(preset("D2K"), parse_nnf("[3]q & ~q"), 2)
    assert len(w.model.worlds) == 2
    assert not brute_sat(preset("D2K"), parse_nnf("[3]q & ~q"), 1)


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_frames_are_frames(name):
    spec = preset(name)
    for n in (1, 2, 3):
        stack = frames(spec, n, True)
        for fr in stack[:50]:
            model = _to_model(spec, fr, [], [])
            assert verify_frame(model, spec) == []


def test_full_enumeration_contains_minimal_frames():
    spec = preset("DK4")
    full = frames(spec, 2, False)
    assert len(full) > len(frames(spec, 2, True))


def test_monotone_in_bound():
    spec = preset("D2K4")
    for f in sample(5, 60, (1, 6), 2, (1, 2, 3), leaves(1), and_bias=0.7):
        found = [bool(brute_sat(spec, f, n)) for n in (1, 2, 3)]
        assert found == sorted(found)


def test_batch_matches_single():
    spec = preset("D2K")
    corpus = sample(6, 200, (1, 6), 2, (1, 2, 3), leaves(1), and_bias=0.7)
    many = brute_sat_many(spec, corpus, 3, {"p1"}, memo_limit=16)
    for f, r in zip(corpus, many):
        assert bool(r) == bool(brute_sat(spec, f, 3))
        if r:
            assert check(r.model, r.world, f) and verify_frame(r.model, spec) == []


def test_budgets():
    f = parse_nnf("p & q & r")
    with pytest.raises(OracleBudgetError):
        brute_sat(preset("D2K"), f, 2)
    assert brute_sat(preset("D2K"), f, 1, variable_budget=3)
    with pytest.raises(OracleBudgetError):
        brute_sat(preset("D2K"), BOT, 6, frame_budget=1000)
    with pytest.raises(ValueError):
        brute_sat(preset("D2K"), Lit("p"), 0)


def test_diamonds_use_full_enumeration():
    k = preset("K")
    assert brute_sat(k, parse("<1>p & <1>~p"), 3)
    assert not brute_sat(k, parse("<1>p & [1]~p"), 3)
    for text in ("<1>p & [1](p -> <1>~p)", "[1]false & <1>true", "<1><1>p & [1][1]~p", "<1>(p & [1]false)"):
        f = parse(text)
        assert bool(brute_sat(k, f, 3)) == bool(solve_k(f))


def test_vacuous_agent_has_empty_relation():
    spec = validate_and_normalize(2, set(), {1: "K", 2: "D"})
    w = brute_sat(spec, parse("[1]false & [2]p"), 1)
    assert w and w.model.relations[1] == frozenset()


def test_reflexive_and_symmetric_logics():
    t = validate_and_normalize(1, set(), {1: "T"})
    assert not brute_sat(t, parse("[1]p & ~p"), 3)
    s5 = validate_and_normalize(1, set(), {1: "S5"})
    f = parse_nnf("[1]([1]p | q) & ~q")
    assert bool(brute_sat(s5, f, 3)) == bool(solve(s5, f))
