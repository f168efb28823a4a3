"""Acceptance suite: one PASS/FAIL line per criterion, collected in the terminal summary.

Corpus sizes can be reduced for quick local runs with environment variables;
the defaults are the full sizes:

    MODALINC_CORPUS_CONNECTIVES   connective bound of the certificate/oracle corpus (7)
    MODALINC_COLLAPSE_CONNECTIVES exhaustive bound of the variable-free corpus (6)
    MODALINC_COLLAPSE_SAMPLE      sampled variable-free formulas with 7-8 connectives, per preset (10000)
"""

from __future__ import annotations

import os
import time
from pathlib import Path

import pytest

from conftest import report
from corpus import exhaustive, leaves, sample, unimodal_by_subformulas
from modalinc.classifier import Case, classify
from modalinc.formula import And, Bot, Box, Or, Top, size
from modalinc.logic import PRESET_NAMES, parse_prefix, preset, validate_and_normalize
from modalinc.models import check, verify_frame
from modalinc.oracle import NoModelUpTo, brute_sat_many
from modalinc.tableau import solve, solve_k, trace
from modalinc.transform import ATMSpec, accepts, atm_to_formula, dk4_to_d4k4, k_to_d2k, one_var_d2k4, one_var_dk4

MACHINES = Path(__file__).parent / "data" / "machines"

CORPUS_CONNECTIVES = int(os.environ.get("MODALINC_CORPUS_CONNECTIVES", "7"))
CORPUS_DEPTH = 2
ORACLE_BOUND = 4
CERTIFICATE_SECONDS = 300.0
CLASSIFY_SECONDS = 1.0
MACHINE_SECONDS = 600.0
COLLAPSE_CONNECTIVES = int(os.environ.get("MODALINC_COLLAPSE_CONNECTIVES", "6"))
COLLAPSE_SAMPLE = int(os.environ.get("MODALINC_COLLAPSE_SAMPLE", "10000"))
ORACLE_BATCH = 2000


def line(criterion: str, ok: bool, detail: str) -> None:
    report(f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}")


# ------------------------------------------------------------- criterion 1

def test_criterion_1_classification_table():
    table = [
        (preset("D2K"), Case.Case2_PSPACE, "PSPACE-complete"),
        (preset("D2K4"), Case.Case1_EXP, "EXP-complete"),
        (preset("DK4"), Case.Case3_PSPACE, "PSPACE-complete"),
        (preset("D42K4"), Case.Case3_PSPACE, "PSPACE-complete"),
        (preset("D4K4"), Case.Case4_NP, "NP-complete"),
        (validate_and_normalize(1, [], {1: "T"}), Case.Case4_NP, "NP-complete"),
        (validate_and_normalize(2, [(1, 2)], {1: "T", 2: "T"}), Case.Case4_NP, "NP-complete"),
        (validate_and_normalize(3, [(1, 3), (2, 3)], {1: "T", 2: "T", 3: "T"}), Case.Case4_NP, "NP-complete"),
        (validate_and_normalize(2, [], {1: "S5", 2: "S5"}), Case.Case4_NP, "NP-complete"),
        (validate_and_normalize(3, [(1, 2)], {1: "T", 2: "T", 3: "S5"}), Case.Case4_NP, "NP-complete"),
    ]
    start = time.perf_counter()
    got = [classify(spec) for spec, _, _ in table]
    elapsed = time.perf_counter() - start
    wrong = [
        (spec.name or spec.to_json(), v.case.name, v.multi_var_class)
        for (spec, case, label), v in zip(table, got)
        if v.case is not case or v.multi_var_class != label
    ]
    d4k4 = got[4]
    wrong += [] if d4k4.one_var_class == "P" else [("D4K4 one-variable", d4k4.one_var_class)]
    ok = not wrong and elapsed < CLASSIFY_SECONDS
    line("1", ok, f"{len(table) - len(wrong)}/{len(table)} logics classified as expected in {elapsed:.3f}s (limit {CLASSIFY_SECONDS}s)")
    assert not wrong, wrong
    assert elapsed < CLASSIFY_SECONDS


# ---------------------------------------------------------- criteria 2, 3

CERT_PRESETS = ("D2K", "DK4", "D42K4")


@pytest.fixture(scope="module")
def corpus_sweep():
    """Solve every corpus formula once; certify Sat verdicts; run the oracle on Unsat ones."""
    out = {}
    for name in CERT_PRESETS:
        spec = preset(name)
        stats = dict(formulas=0, sat=0, unsat=0, bad_certificates=[], oracle_disagreements=[])
        pending = []
        solve_time = oracle_time = 0.0

        def flush():
            nonlocal oracle_time
            t0 = time.perf_counter()
            results = brute_sat_many(spec, pending, ORACLE_BOUND, {"p1"})
            oracle_time += time.perf_counter() - t0
            for f, r in zip(pending, results):
                if not isinstance(r, NoModelUpTo):
                    stats["oracle_disagreements"].append(f)
            pending.clear()

        for f in exhaustive(CORPUS_CONNECTIVES, CORPUS_DEPTH, tuple(spec.agents), leaves(1)):
            t0 = time.perf_counter()
            verdict = solve(spec, f)
            if verdict:
                if verify_frame(verdict.model, spec) or not check(verdict.model, verdict.world, f):
                    stats["bad_certificates"].append(f)
            solve_time += time.perf_counter() - t0
            stats["formulas"] += 1
            if verdict:
                stats["sat"] += 1
            else:
                stats["unsat"] += 1
                pending.append(f)
                if len(pending) >= ORACLE_BATCH:
                    flush()
        if pending:
            flush()
        stats["solve_seconds"] = solve_time
        stats["oracle_seconds"] = oracle_time
        out[name] = stats
    return out


def test_criterion_2_certificate_soundness(corpus_sweep):
    total = sum(s["formulas"] for s in corpus_sweep.values())
    sat = sum(s["sat"] for s in corpus_sweep.values())
    bad = [f for s in corpus_sweep.values() for f in s["bad_certificates"]]
    per = ", ".join(f"{n} {s['sat']}/{s['formulas']} sat" for n, s in corpus_sweep.items())
    line("2", not bad, f"{sat - len(bad)}/{sat} Sat certificates verified over {total} formulas "
                       f"(<= {CORPUS_CONNECTIVES} connectives, depth <= {CORPUS_DEPTH}; {per})")
    assert not bad, [str(f) for f in bad[:5]]


def test_criterion_2_time_target(corpus_sweep):
    elapsed = sum(s["solve_seconds"] for s in corpus_sweep.values())
    per = ", ".join(f"{n} {s['solve_seconds']:.0f}s" for n, s in corpus_sweep.items())
    ok = elapsed < CERTIFICATE_SECONDS
    line("2 (time)", ok, f"solve + certificate checks took {elapsed:.0f}s (target {CERTIFICATE_SECONDS:.0f}s; {per})")
    assert ok


def test_criterion_3_oracle_consistency(corpus_sweep):
    unsat = sum(s["unsat"] for s in corpus_sweep.values())
    bad = [f for s in corpus_sweep.values() for f in s["oracle_disagreements"]]
    seconds = sum(s["oracle_seconds"] for s in corpus_sweep.values())
    line("3", not bad, f"{unsat - len(bad)}/{unsat} Unsat verdicts confirmed by the oracle up to "
                       f"{ORACLE_BOUND} worlds ({seconds:.0f}s); no oracle witness contradicts a solver verdict")
    assert not bad, [str(f) for f in bad[:5]]


# ------------------------------------------------------------- criterion 4

def test_criterion_4_k_to_d2k():
    d2k = preset("D2K")
    exhaustive_set = unimodal_by_subformulas(6, leaves(1, constants=True))
    randoms = [f for f in sample(4, 2000, (1, 9), 6, (1,), leaves(1, constants=True), diamonds=True) if size(f) <= 10][:600]
    bad = []
    sat = 0
    for f in exhaustive_set + randoms:
        a = bool(solve_k(f))
        sat += a
        if a != bool(solve(d2k, k_to_d2k(f))):
            bad.append(f)
    total = len(exhaustive_set) + len(randoms)
    line("4", not bad and len(randoms) >= 500,
         f"{total - len(bad)}/{total} agree ({len(exhaustive_set)} exhaustive with <= 6 subformulas, "
         f"{len(randoms)} random of size <= 10; {sat} satisfiable)")
    assert len(randoms) >= 500
    assert not bad, [str(f) for f in bad[:5]]


# ---------------------------------------------------------- criteria 5, 6

def _p4_corpus_d2k4():
    return sample(7, 400, (1, 8), 2, (1, 2, 3), leaves(3), and_bias=0.75)


def _p4_corpus_dk4():
    return sample(8, 400, (1, 8), 2, (1, 2), leaves(3), and_bias=0.75)


def test_criterion_5_one_variable():
    d2k4, dk4 = preset("D2K4"), preset("DK4")
    rows = []
    for label, spec, corpus, translate in (
        ("one_var_d2k4 in D2K4", d2k4, _p4_corpus_d2k4(), one_var_d2k4),
        ("one_var_dk4 in DK4", dk4, _p4_corpus_dk4(), one_var_dk4),
    ):
        bad, sat = [], 0
        for f in corpus:
            a = bool(solve(spec, f))
            sat += a
            if a != bool(solve(spec, translate(f))):
                bad.append(f)
        rows.append((label, len(corpus), sat, bad))
    ok = all(not bad and n >= 200 for _, n, _, bad in rows)
    detail = "; ".join(f"{label}: {n - len(bad)}/{n} agree ({sat} sat)" for label, n, sat, bad in rows)
    line("5", ok, detail)
    assert ok, [(label, [str(f) for f in bad[:3]]) for label, _, _, bad in rows if bad]


def test_criterion_6_dk4_to_d4k4():
    dk4, d42k4 = preset("DK4"), preset("D42K4")
    corpus = _p4_corpus_dk4()
    bad, sat = [], 0
    for f in corpus:
        a = bool(solve(dk4, f))
        sat += a
        if a != bool(solve(d42k4, dk4_to_d4k4(f))):
            bad.append(f)
    line("6", not bad, f"{len(corpus) - len(bad)}/{len(corpus)} verdicts preserved in D42K4 ({sat} sat)")
    assert not bad, [str(f) for f in bad[:5]]


# ------------------------------------------------------------- criterion 7

ALTERNATING = ("accept_now", "reject_now", "universal_accept", "universal_reject", "write_then_accept")
DETERMINISTIC = ("accept_now", "reject_now", "write_then_accept", "write_then_reject")


def test_criterion_7_atm_fidelity():
    rows, ok = [], True
    for mode, names, spec in (("D2K4", ALTERNATING, preset("D2K4")), ("DK4 deterministic", DETERMINISTIC, preset("DK4"))):
        for name in names:
            m = ATMSpec.load(MACHINES / f"{name}.json")
            assert len(m.states) <= 3 and len(m.input) <= 2 and m.space_bound <= 2
            start = time.perf_counter()
            verdict = bool(solve(spec, atm_to_formula(m, deterministic=spec.name == "DK4")))
            elapsed = time.perf_counter() - start
            good = verdict == accepts(m) and elapsed < MACHINE_SECONDS
            ok &= good
            rows.append(f"{name}@{mode}={'ok' if good else 'MISMATCH'}({elapsed:.1f}s)")
    line("7", ok, f"solver verdict equals machine acceptance for all runs: {', '.join(rows)}")
    assert ok


# ------------------------------------------------------------- criterion 8

def collapse_value(f, spec) -> bool:
    """Truth of a variable-free formula: boxes of vacuous agents are true, other boxes pass through."""
    if isinstance(f, Top):
        return True
    if isinstance(f, Bot):
        return False
    if isinstance(f, And):
        return collapse_value(f.left, spec) and collapse_value(f.right, spec)
    if isinstance(f, Or):
        return collapse_value(f.left, spec) or collapse_value(f.right, spec)
    if isinstance(f, Box):
        return f.agent in spec.vacuous or collapse_value(f.sub, spec)
    raise TypeError(f)


def test_criterion_8_variable_free_collapse():
    rows, bad, total = [], [], 0
    for name in PRESET_NAMES:
        spec = preset(name)
        ags = tuple(spec.agents)
        corpus = list(exhaustive(COLLAPSE_CONNECTIVES, COLLAPSE_CONNECTIVES, ags, leaves(0)))
        if COLLAPSE_CONNECTIVES < 8:
            corpus += sample(80 + len(name), COLLAPSE_SAMPLE, (COLLAPSE_CONNECTIVES + 1, 8), 8, ags, leaves(0))
        wrong = [f for f in corpus if bool(solve(spec, f)) != collapse_value(f, spec)]
        bad += wrong
        total += len(corpus)
        rows.append(f"{name} {len(corpus) - len(wrong)}/{len(corpus)}")
    scope = (f"exhaustive <= {COLLAPSE_CONNECTIVES} connectives + {COLLAPSE_SAMPLE} sampled with "
             f"{COLLAPSE_CONNECTIVES + 1}-8 per preset" if COLLAPSE_CONNECTIVES < 8 else "exhaustive <= 8 connectives")
    line("8", not bad, f"{total - len(bad)}/{total} agree with the recursive evaluation ({scope}; {', '.join(rows)})")
    assert not bad, [str(f) for f in bad[:5]]


# ------------------------------------------------------------- criterion 9

def _n(i, sigma, transitive_min):
    if transitive_min and sigma and sigma[-1] == i:
        return sigma
    return sigma + (i,)


# Per preset: R1 targets of each agent, and the direct (non-R1) deposits of □ₐφ at σ,
# as (target, carries the box) pairs. Read off the tableau tables; the general
# rules add a self-carry of transitive minimal boxes, which is redundant there.
def _direct(name, a, sigma):
    if name in ("D2K", "D2K4"):
        if a in (1, 2):
            return {(sigma + (a,), False)}
        return {(sigma + (1,), True), (sigma + (2,), True)} if name == "D2K4" else set()
    if name == "DK4":
        return {(sigma + (1,), False)} if a == 1 else {(sigma + (1,), True)}
    if name == "D42K4":
        if a in (1, 2):
            t = _n(a, sigma, True)
            return {(t, False), (t, True)}
        return {(_n(1, sigma, True), True), (_n(2, sigma, True), True)}
    if name == "D4K4":
        t = _n(1, sigma, True)
        return {(t, False), (t, True)} if a == 1 else {(t, True)}
    raise KeyError(name)


_R1 = {"D2K": {3: (1, 2)}, "D2K4": {3: (1, 2)}, "DK4": {2: (1,)}, "D42K4": {3: (1, 2)}, "D4K4": {2: (1,)}}

# The table conclusions, for checking the decomposition above.
_TABLES = {
    "D2K": {1: {("1", "φ")}, 2: {("2", "φ")}, 3: {("1", "φ"), ("2", "φ")}},
    "D2K4": {1: {("1", "φ")}, 2: {("2", "φ")}, 3: {("1", "φ"), ("2", "φ"), ("1", "□3φ"), ("2", "□3φ")}},
    "DK4": {1: {("1", "φ")}, 2: {("1", "φ"), ("1", "□2φ")}},
    "D42K4": {1: {("n1", "φ")}, 2: {("n2", "φ")},
              3: {("n1", "φ"), ("n2", "φ"), ("n1", "□3φ"), ("n2", "□3φ")}},
    "D4K4": {1: {("n1", "φ")}, 2: {("n1", "φ"), ("n1", "□2φ")}},
}
_REDUNDANT = {"D42K4": {("n1", "□1φ"), ("n2", "□2φ")}, "D4K4": {("n1", "□1φ")}}


def _composite(name, a, sigma, body):
    out = set()
    for b in (a,) + _R1[name].get(a, ()):
        for target, carry in _direct(name, b, sigma):
            out.add((target, Box(b, body) if carry else body))
    return out


def _symbolic(name, a):
    sigma = (5,)
    out = set()
    for target, f in _composite(name, a, sigma, Top()):
        tag = ("n" if name in ("D42K4", "D4K4") else "") + str(target[-1])
        out.add((tag, "φ" if isinstance(f, Top) else f"□{f.agent}φ"))
    return out


TRACE_PRESETS = ("D2K", "D2K4", "DK4", "D42K4", "D4K4")


def _check_trace(name, spec, f):
    problems = []
    recs = trace(spec, f)
    for r in recs:
        if r.rule not in ("R1", "R2", "R3", "R4"):
            continue
        sigma = parse_prefix(r.source)
        box = r.formula
        if r.rule == "R1":
            if not (isinstance(r.result, Box) and r.result.sub == box.sub and r.targets == (r.source,)
                    and r.result.agent in _R1[name].get(box.agent, ())):
                problems.append(f"R1 shape {r}")
            continue
        allowed = {(t, box.sub if not carry else box) for t, carry in _direct(name, box.agent, sigma)}
        if (parse_prefix(r.targets[0]), r.result) not in allowed:
            problems.append(f"{r.rule} shape {r}")
    verdict = solve(spec, f)
    if verdict:
        entries = verdict.branch.entries
        for sigma, fs in entries.items():
            if sigma in verdict.branch.back_edges:
                continue
            for g in fs:
                if isinstance(g, Box):
                    for target, h in _composite(name, g.agent, sigma, g.sub):
                        if h not in entries.get(target, ()):
                            problems.append(f"missing {h} at {target} from {g} at {sigma}")
        if name == "D4K4" and not set(entries) <= {(), (1,)}:
            problems.append(f"D4K4 prefixes {sorted(entries)}")
    return problems, bool(verdict)


def test_criterion_9_trace_correspondence():
    for name, table in _TABLES.items():
        for a, expected in table.items():
            assert _symbolic(name, a) == expected | {x for x in _REDUNDANT.get(name, ()) if _within(name, a, x)}, (name, a)
    golden_d2k = [
        ("R1", "0", "[3]p", "[1]p", ("0",)), ("R1", "0", "[3]p", "[2]p", ("0",)),
        ("R2", "0", "[1]p", "p", ("0.1",)), ("R2", "0", "[2]p", "p", ("0.2",)),
    ]
    from modalinc.formula import parse
    got = [(r.rule, r.source, str(r.formula), str(r.result), r.targets) for r in trace(preset("D2K"), parse("[3]p"))]
    golden_ok = got == golden_d2k
    d2k4 = [(r.rule, r.source, str(r.formula), str(r.result), r.targets) for r in trace(preset("D2K4"), parse("[3]p"))]
    golden_ok &= {("R4", "0", "[3]p", "[3]p", ("0.1",)), ("R4", "0", "[3]p", "[3]p", ("0.2",)),
                  ("R2", "0", "[1]p", "p", ("0.1",)), ("R2", "0", "[2]p", "p", ("0.2",))} <= set(d2k4)
    rows, problems = [], []
    for k, name in enumerate(TRACE_PRESETS):
        spec = preset(name)
        corpus = sample(900 + k, 20, (2, 8), 2, tuple(spec.agents), leaves(2), and_bias=0.8)
        sat = 0
        for f in corpus:
            p, v = _check_trace(name, spec, f)
            sat += v
            problems += [f"{name}: {f}: {x}" for x in p]
        rows.append(f"{name} {len(corpus)} ({sat} sat)")
    ok = golden_ok and not problems
    line("9", ok, f"golden traces {'match' if golden_ok else 'DIFFER'}; table rule shapes hold on {', '.join(rows)}")
    assert golden_ok, (got, d2k4)
    assert not problems, problems[:5]


def _within(name, a, item):
    """Whether a redundant self-carry (for agent ``k``) is reached from agent ``a`` through R1."""
    k = int(item[1][1])
    return k == a or k in _R1[name].get(a, ())
