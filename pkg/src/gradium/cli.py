"""Command-line driver: ``gradium check|run|translate|soundness``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import coeffect_eval, effect_eval
from .coeffect_system import check_declared, elaborate, parse_grade_assignment
from .effect_system import EffectChecker, check_program as effect_check
from .errors import Defect, GradiumError, RefusedAlgebra, TypeCheckError, UserError
from .generate import GenConfig
from .grading import GradeVec, coeffect_algebra, effect_algebra
from .harness import SUITES, run_suite
from .lam import DIALECTS, parse_source, show_source_program
from .syntax import MODES, is_value, parse, parse_term, print_program, print_type, split_top
from .translate import PreservationFailure, check_preservation, translate

EFFECT_SUITES = {"eff-sound", "subeff"}
SCHEMA_PATH = Path(__file__).with_name("report_schema.json")


class PropertyFailed(GradiumError):
    def __init__(self, message: str, report: dict):
        super().__init__(message, rule=report["suite"])
        self.report = report


def exit_code(err: BaseException) -> int:
    match err:
        case PropertyFailed() | PreservationFailure():
            return 2
        case UserError():
            return 1
        case Defect():
            return 3
    return 3


def read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as err:
        raise UserError(f"cannot read {path}: {err.strerror}", rule="io") from None


def load(args) -> tuple:
    """Parse a ``.cbpv`` file and settle its mode and algebra."""
    headers_mode = None if args.system is None else ("effect" if args.system == "effect" else "coeffect")
    prog = parse(read(args.file), headers_mode)
    algebra = args.algebra or ("nat-cost" if prog.mode == "effect" else "nat-usage")
    try:
        alg = effect_algebra(algebra) if prog.mode == "effect" else coeffect_algebra(algebra)
    except ValueError as err:
        raise RefusedAlgebra(str(err), rule="algebra") from None
    return prog, alg


def grades_json(names: list[str], vec: GradeVec) -> dict[str, str]:
    return {n: str(g) for n, g in zip(names, vec)}


# --- subcommands ----------------------------------------------------------


def cmd_check(args) -> dict:
    prog, alg = load(args)
    report = {"command": "check", "file": args.file, "mode": prog.mode, "algebra": alg.name}
    if prog.mode == "effect":
        if args.expect_grades is not None:
            raise TypeCheckError("--expect-grades needs a coeffect program", rule="cli")
        r = effect_check(prog, alg, bound=args.expect_effect)
        report.update(type=print_type(r.type), effect=alg.format(r.effect))
    else:
        if args.expect_effect is not None:
            raise TypeCheckError("--expect-effect needs an effect program", rule="cli")
        e = elaborate([t for _, t in prog.context], prog.term, alg)
        if args.expect_grades is not None:
            check_declared(parse_grade_assignment(args.expect_grades, prog.names, alg), e.vec, prog.names)
        report.update(type=print_type(e.type), grades=grades_json(prog.names, e.vec))
    return report


def parse_env(text: str | None, prog, alg) -> tuple:
    """Closed runtime values for ``x=V,y=<junk>``; each value is checked at its declared type."""
    given: dict[str, object] = {}
    if text:
        for part in split_top(text):
            if "=" not in part:
                raise UserError(f"expected name=value, got {part!r}", rule="env")
            name, src = (s.strip() for s in part.split("=", 1))
            given[name] = src
    unknown = set(given) - set(prog.names)
    if unknown:
        raise UserError(f"{', '.join(sorted(unknown))} not in the context", rule="env")
    env = []
    for name, ty in prog.context:
        if name not in given:
            raise UserError(f"no value given for {name}", rule="env")
        src = given[name]
        if src == "<junk>":
            if prog.mode == "effect":
                raise UserError("junk values exist only in the resource semantics", rule="env")
            env.append(coeffect_eval.JUNK)
            continue
        v = parse_term(src, prog.mode, [])
        if not is_value(v):
            raise UserError(f"{name}: {src!r} is not a value", rule="env")
        if prog.mode == "effect":
            EffectChecker(alg).check_value([], v, ty)
            env.append(effect_eval.eval_value([], v, alg))
        else:
            e = elaborate([], v, alg, ty)
            env.append(coeffect_eval.ceval(GradeVec.zeros(alg, 0), (), e, alg).terminal)
    return tuple(env)


def cmd_run(args) -> dict:
    prog, alg = load(args)
    start = time.perf_counter()
    report = {"command": "run", "file": args.file, "mode": prog.mode, "algebra": alg.name}
    if prog.mode == "effect":
        if args.system == "resource" or args.usage or args.grades:
            raise TypeCheckError("--grades/--usage/resource need a coeffect program", rule="cli")
        static = effect_check(prog, alg)
        env = parse_env(args.env, prog, alg)
        terminal, eff = effect_eval.eval_comp(env, prog.term, alg)
        report.update(
            type=print_type(static.type),
            static_effect=alg.format(static.effect),
            terminal=effect_eval.show_terminal(terminal),
            effect=alg.format(eff),
        )
    else:
        resource = args.system == "resource"
        if (resource or args.usage) and not alg.supports_resources:
            raise RefusedAlgebra(f"{alg.name} has no resource interpretation", rule="resource")
        e = elaborate([t for _, t in prog.context], prog.term, alg)
        gv = parse_grade_assignment(args.grades, prog.names, alg) if args.grades else e.vec
        check_declared(gv, e.vec, prog.names)
        env = parse_env(args.env, prog, alg)
        for name, g, w in zip(prog.names, gv, env):
            if w is coeffect_eval.JUNK and not (resource and g == alg.zero):
                raise UserError(f"{name} may hold <junk> only at grade 0 under the resource semantics", rule="env")
        run = (coeffect_eval.leval if resource else coeffect_eval.ceval)(gv, env, e, alg, usage=args.usage)
        report.update(
            semantics="resource" if resource else "coeffect",
            type=print_type(e.type),
            grades=grades_json(prog.names, gv),
            inferred=grades_json(prog.names, e.vec),
            terminal=coeffect_eval.show_gterminal(run.terminal),
        )
        if run.usage is not None:
            report["usage"] = dict(zip(prog.names, run.usage))
    report["seconds"] = round(time.perf_counter() - start, 6)
    return report


def cmd_translate(args) -> dict:
    src = parse_source(read(args.file), args.dialect)
    report = {"command": "translate", "file": args.file, "dialect": src.dialect, "source": show_source_program(src)}
    if args.check:
        tr, pres = check_preservation(src, args.algebra)
        report["preserved"] = True
        if pres.effect is not None:
            report["effect"] = str(pres.effect)
        if pres.vec is not None:
            names = tr.program.names
            report["grades"] = grades_json(names, pres.vec)
            report["declared"] = grades_json(names, pres.declared)
    else:
        tr = translate(src, args.algebra)
    report.update(target=print_program(tr.program), target_type=print_type(tr.target_type))
    return report


def cmd_soundness(args) -> dict:
    suite = args.suite
    coeffect_suite = suite not in EFFECT_SUITES and not suite.startswith("preserve-") and not (
        suite == "determinism" and args.system in (None, "effect")
    )
    algebra = args.algebra or ("nat-usage" if coeffect_suite else "nat-cost")
    mode = "coeffect" if coeffect_suite else "effect"
    cfg = GenConfig(seed=args.seed, trials=args.trials, algebra=algebra, mode=mode, max_depth=args.depth)
    result = run_suite(suite, cfg)
    report = {"command": "soundness", **result.to_json()}
    if not result.ok:
        raise PropertyFailed(f"{len(result.failures)} of {result.trials} trials failed", report)
    return report


# --- output -----------------------------------------------------------------


def human(report: dict) -> str:
    match report["command"]:
        case "check":
            grading = f"effect {report['effect']}" if "effect" in report else _show_grades(report["grades"])
            return f"{report['type']}  [{grading}]"
        case "run":
            lines = [f"{report['terminal']}"]
            if "effect" in report:
                lines.append(f"effect {report['effect']} (static bound {report['static_effect']})")
            else:
                lines.append(f"grades {_show_grades(report['grades'])} (demand {_show_grades(report['inferred'])})")
            if "usage" in report:
                lines.append("usage " + ", ".join(f"{k}={v}" for k, v in report["usage"].items()))
            return "\n".join(lines)
        case "translate":
            lines = [report["target"].rstrip(), f"-- target type: {report['target_type']}"]
            if report.get("preserved"):
                extra = f" at effect {report['effect']}" if "effect" in report else ""
                if "grades" in report:
                    extra = f" with demand {_show_grades(report['grades'])} under {_show_grades(report['declared'])}"
                lines.append(f"-- preserved{extra}")
            return "\n".join(lines)
        case "soundness":
            status = "ok" if report["ok"] else "FAILED"
            lines = [f"{report['suite']} [{report['algebra']}]: {report['passed']}/{report['trials']} {status} in {report['seconds']}s"]
            if report["stats"]:
                lines.append("stats: " + json.dumps(report["stats"], sort_keys=True))
            for c in report["counterexamples"][:5]:
                lines.append(f"seed {c['seed']}: {c['message']}\n  shrunk: {c['shrunk']}")
            return "\n".join(lines)
    return json.dumps(report)


def _show_grades(g: dict) -> str:
    return ", ".join(f"{k}={v}" for k, v in g.items()) or "empty context"


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gradium", description="Graded call-by-push-value checker and interpreter.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="type-check a .cbpv program")
    c.add_argument("file")
    c.add_argument("--system", choices=MODES)
    c.add_argument("--algebra")
    c.add_argument("--expect-effect")
    c.add_argument("--expect-grades")

    r = sub.add_parser("run", help="check, then evaluate a .cbpv program")
    r.add_argument("file")
    r.add_argument("--system", choices=("effect", "coeffect", "resource"))
    r.add_argument("--algebra")
    r.add_argument("--env")
    r.add_argument("--grades")
    r.add_argument("--usage", action="store_true")

    t = sub.add_parser("translate", help="translate a .lam source program")
    t.add_argument("file")
    t.add_argument("--dialect", choices=tuple(DIALECTS))
    t.add_argument("--algebra")
    t.add_argument("--check", action="store_true")

    s = sub.add_parser("soundness", help="run a property suite")
    s.add_argument("--suite", required=True, choices=SUITES)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--algebra")
    s.add_argument("--system", choices=MODES, help="mode for the determinism suite")
    s.add_argument("--depth", type=int, default=4, help="maximum term depth")

    for sp in (c, r, t, s):
        sp.add_argument("--json", action="store_true")
    return p


COMMANDS = {"check": cmd_check, "run": cmd_run, "translate": cmd_translate, "soundness": cmd_soundness}


def main(argv: list[str] | None = None) -> int:
    args = parser().parse_args(argv)
    try:
        report = COMMANDS[args.command](args)
        status = 0
    except (GradiumError, RecursionError) as err:
        status = exit_code(err)
        report = getattr(err, "report", None)
        if report is None:
            report = {
                "command": args.command,
                "ok": False,
                "error": {"kind": type(err).__name__, "rule": getattr(err, "rule", None), "message": str(err)},
            }
    if args.json:
        print(json.dumps({**report, "exit": status}, indent=2, sort_keys=True))
    elif "error" in report:
        print(f"error: {report['error']['message']}", file=sys.stderr)
    else:
        print(human(report))
    return status


if __name__ == "__main__":
    sys.exit(main())
