"""Command-line interface: ``modalinc <command> ...``.

Exit status 0 means satisfiable or success, 1 unsatisfiable or no model,
2 a usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import classifier, logic, oracle, tableau, transform
from .formula import FormulaSyntaxError, parse, to_nnf, to_text
from .models import KripkeModel, ModelError, check, verify_frame

EXIT_OK, EXIT_NO, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _formula(args):
    if args.formula is not None and args.formula_file is not None:
        raise UsageError("give either --formula or --formula-file, not both")
    if args.formula_file is not None:
        try:
            text = Path(args.formula_file).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read formula file: {exc}") from None
    elif args.formula is not None:
        text = args.formula
    else:
        raise UsageError("a formula is required (--formula or --formula-file)")
    return parse(text)


def _logic(args):
    if not args.logic:
        raise UsageError("--logic is required")
    return logic.load(args.logic)


def _emit(args, payload: dict, human: list):
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=False))
    else:
        for line in human:
            print(line)


def _model_lines(model: KripkeModel, root) -> list:
    lines = [f"worlds: {', '.join(model.worlds)} (root {root})"]
    for a, pairs in sorted(model.relations.items()):
        shown = " ".join(f"{u}->{v}" for u, v in sorted(pairs))
        lines.append(f"R{a}: {shown or '(empty)'}")
    for v, ws in sorted(model.valuation.items()):
        lines.append(f"V({v}) = {{{', '.join(sorted(ws, key=model.worlds.index))}}}")
    return lines


def _trace_json(records) -> list:
    return [
        {
            "rule": r.rule,
            "source": r.source,
            "formula": to_text(r.formula),
            "result": None if r.result is None else to_text(r.result),
            "targets": list(r.targets),
        }
        for r in records
    ]


def cmd_solve(args) -> int:
    spec = _logic(args)
    phi = _formula(args)
    verdict = tableau.solve(spec, phi)
    payload = {"verdict": "SAT" if verdict else "UNSAT"}
    human = [payload["verdict"]]
    if verdict:
        payload["model"] = verdict.model.to_json(verdict.world)
        human += _model_lines(verdict.model, verdict.world)
    if args.trace:
        records = tableau.trace(spec, phi)
        payload["trace"] = _trace_json(records)
        human += ["trace:"] + [f"  {r}" for r in records]
    _emit(args, payload, human)
    return EXIT_OK if verdict else EXIT_NO


def cmd_solve_k(args) -> int:
    phi = _formula(args)
    verdict = tableau.solve_k(phi)
    payload = {"verdict": "SAT" if verdict else "UNSAT"}
    human = [payload["verdict"]]
    if verdict:
        payload["model"] = verdict.model.to_json(verdict.world)
        human += _model_lines(verdict.model, verdict.world)
    _emit(args, payload, human)
    return EXIT_OK if verdict else EXIT_NO


def cmd_classify(args) -> int:
    spec = _logic(args)
    verdict = classifier.classify(spec)
    _emit(args, verdict.to_json(), [verdict.multi_var_class, str(verdict)])
    return EXIT_OK


def _embedding(args, target):
    if args.mode:
        try:
            ags = [int(a) for a in (args.agents or "").split(",") if a]
        except ValueError:
            raise UsageError("--agents must be a comma-separated list of agent indices") from None
        mode = transform.Mode(args.mode)
        if mode is transform.Mode.TRIPLE and len(ags) == 4:
            return transform.Embedding(mode, ags[0], ags[1], ags[3], z=ags[2])
        if mode is transform.Mode.PAIR_WITH_J and len(ags) == 4:
            return transform.Embedding(mode, ags[0], ags[1], ags[2], j=ags[3])
        if mode is transform.Mode.PAIR_SIMPLE and len(ags) == 3:
            return transform.Embedding(mode, ags[0], ags[1], ags[2])
        raise UsageError("--agents: pair_simple takes x,y,i; triple takes x,y,z,i; pair_with_j takes x,y,i,j")
    v = classifier.classify(target)
    if v.witness_set is None:
        raise UsageError(f"the target logic falls in {v.case.name}; no embedding applies")
    a = sorted(v.witness_set)
    if len(a) == 3:
        return transform.Embedding(transform.Mode.TRIPLE, a[0], a[1], v.witness_agent, z=a[2])
    if v.case is classifier.Case.Case1_EXP:
        x, y = sorted(a, key=lambda k: (target.frame[k].transitive, k))
        return transform.Embedding(transform.Mode.PAIR_SIMPLE, x, y, v.witness_agent)
    if v.case is classifier.Case.Case2_PSPACE:
        return transform.Embedding(transform.Mode.PAIR_WITH_J, a[0], a[1], v.witness_agent, j=v.witness_j)
    raise UsageError(f"no embedding is defined for {v.case.name}; pass --mode and --agents")


def cmd_translate(args) -> int:
    phi = to_nnf(_formula(args))
    which = args.which
    if which == "k2d2k":
        out = transform.k_to_d2k(phi)
    elif which == "onevar-d2k4":
        out = transform.one_var_d2k4(phi)
    elif which == "onevar-dk4":
        out = transform.one_var_dk4(phi, verbatim=args.verbatim)
    elif which == "dk4-d4k4":
        out = transform.dk4_to_d4k4(phi)
    else:
        target = _logic(args)
        out = transform.embed_general(phi, target, _embedding(args, target))
    _emit(args, {"which": which, "formula": to_text(out)}, [to_text(out)])
    return EXIT_OK


def cmd_atm(args) -> int:
    machine = transform.ATMSpec.load(args.machine)
    phi = transform.atm_to_formula(machine, deterministic=args.deterministic)
    if not args.solve:
        _emit(args, {"formula": to_text(phi)}, [to_text(phi)])
        return EXIT_OK
    spec = logic.preset("DK4" if args.deterministic else "D2K4")
    verdict = tableau.solve(spec, phi)
    accepted = transform.accepts(machine)
    payload = {"logic": spec.name, "verdict": "SAT" if verdict else "UNSAT", "machine_accepts": accepted}
    _emit(args, payload, [payload["verdict"], f"machine accepts: {accepted}"])
    return EXIT_OK if verdict else EXIT_NO


def cmd_oracle(args) -> int:
    spec = _logic(args)
    phi = _formula(args)
    result = oracle.brute_sat(spec, phi, args.bound)
    if result:
        payload = {"verdict": "SAT", "model": result.model.to_json(result.world)}
        human = ["SAT"] + _model_lines(result.model, result.world)
    else:
        payload = {"verdict": "NO_MODEL", "bound": result.bound}
        human = [f"NO MODEL with at most {result.bound} worlds"]
    _emit(args, payload, human)
    return EXIT_OK if result else EXIT_NO


def cmd_check_model(args) -> int:
    spec = _logic(args)
    phi = _formula(args)
    try:
        data = json.loads(Path(args.model).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read model file: {exc}") from None
    if isinstance(data, dict) and "model" in data:
        data = data["model"]
    model, root = KripkeModel.from_json(data)
    world = args.world or root
    if world is None:
        raise UsageError("the model has no root; pass --world")
    problems = verify_frame(model, spec)
    holds = check(model, world, phi)
    payload = {"frame_ok": not problems, "violations": [str(p) for p in problems], "holds": holds, "world": world}
    human = [
        "frame: ok" if not problems else "frame: violated",
        *[f"  {p}" for p in problems],
        f"formula at {world}: {'true' if holds else 'false'}",
    ]
    _emit(args, payload, human)
    return EXIT_OK if holds and not problems else EXIT_NO


def cmd_trace(args) -> int:
    spec = _logic(args)
    phi = _formula(args)
    records = tableau.trace(spec, phi)
    verdict = tableau.solve(spec, phi)
    payload = {"verdict": "SAT" if verdict else "UNSAT", "trace": _trace_json(records)}
    _emit(args, payload, [payload["verdict"]] + [str(r) for r in records])
    return EXIT_OK if verdict else EXIT_NO


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modalinc", description="Satisfiability for multimodal logics with inclusion axioms.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, logic_arg=True, formula_arg=True):
        if logic_arg:
            p.add_argument("--logic", help=f"preset ({', '.join(logic.PRESET_NAMES)}) or logic file")
        if formula_arg:
            p.add_argument("--formula", help="formula text")
            p.add_argument("--formula-file", help="file holding the formula text")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("solve", help="decide a diamond-free formula in a logic")
    common(p)
    p.add_argument("--trace", action="store_true", help="also print the rule trace")
    p.set_defaults(run=cmd_solve)

    p = sub.add_parser("solve-k", help="decide a unimodal formula in K (diamonds allowed)")
    common(p, logic_arg=False)
    p.set_defaults(run=cmd_solve_k)

    p = sub.add_parser("classify", help="complexity of the diamond-free fragment")
    common(p, formula_arg=False)
    p.set_defaults(run=cmd_classify)

    p = sub.add_parser("translate", help="apply a formula translation")
    common(p)
    p.add_argument("--which", required=True, choices=["k2d2k", "onevar-d2k4", "onevar-dk4", "dk4-d4k4", "embed"])
    p.add_argument("--mode", choices=[m.value for m in transform.Mode], help="embedding mode (embed only)")
    p.add_argument("--agents", help="embedding agents, comma-separated (embed only)")
    p.add_argument("--verbatim", action="store_true", help="onevar-dk4: use the unrepaired box-2 clause")
    p.set_defaults(run=cmd_translate)

    p = sub.add_parser("atm", help="build (and optionally solve) the formula of a machine file")
    p.add_argument("machine", help="machine description file")
    p.add_argument("--deterministic", action="store_true", help="bimodal encoding for DK4")
    p.add_argument("--solve", action="store_true", help="solve the formula and compare with the machine")
    p.add_argument("--json", action="store_true")
    p.set_defaults(run=cmd_atm)

    p = sub.add_parser("oracle", help="bounded brute-force model search")
    common(p)
    p.add_argument("--bound", type=int, default=4, help="maximum number of worlds (default 4)")
    p.set_defaults(run=cmd_oracle)

    p = sub.add_parser("check-model", help="check a model file against a logic and a formula")
    common(p)
    p.add_argument("--model", required=True, help="model file (as printed by solve --json)")
    p.add_argument("--world", help="world to evaluate at (default: the model's root)")
    p.set_defaults(run=cmd_check_model)

    p = sub.add_parser("trace", help="print the tableau rule trace")
    common(p)
    p.set_defaults(run=cmd_trace)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except (UsageError, FormulaSyntaxError, logic.LogicError, tableau.TableauError,
            transform.TransformError, ModelError, oracle.OracleBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
