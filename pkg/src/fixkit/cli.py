"""Command-line front end: ``fixkit {check,fix,eval,test,gen,visit}``.

Exit codes: 0 success, 1 validation failure or failed law, 2 usage, IO or
value-parse error.  Law checks run sequentially, so output is deterministic
for a fixed ``--seed`` (default taken from ``FIXKIT_SEED``, else 0).
"""

from __future__ import annotations

import argparse
import os
import random
import sys
import time
from typing import Sequence

from fixkit.lang import MODES, EvalError, call
from fixkit.laws import (
    LawReport,
    check_constant_normalization,
    check_congruence,
    check_fix_laws,
    check_guard_violations,
    check_hypothesis_elimination,
    check_mode_agreement,
    check_returns,
    check_transparency,
    derived_subjects,
    fn_subject,
    is_thm1_candidate,
    sort_reports,
)
from fixkit.program import Program, load_file
from fixkit.schema import SchemaError
from fixkit.values import NIL, ParseError, Pair, Sym, Value, list_items, print_value, read_value
from fixkit.visitor import VisitorError, check_visitor_laws, run_visitor

LAW_SETS = ("fixlaws", "fixequiv", "thm1", "visitor", "all")


class UsageError(Exception):
    pass


def _env_seed() -> int:
    raw = os.environ.get("FIXKIT_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"FIXKIT_SEED must be an integer, got {raw!r}") from None


def _nonneg(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return n


def _value_arg(text: str) -> Value:
    """``-`` reads stdin, ``@path`` reads a file, anything else is the value text."""
    if text == "-":
        text = sys.stdin.read()
    elif text.startswith("@"):
        try:
            with open(text[1:], encoding="latin-1") as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(str(exc)) from None
    return read_value(text)


def _load(path: str) -> Program:
    try:
        program = load_file(path)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from None
    for w in program.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return program


def _resolve(program: Program, name: str) -> str:
    t = program.schema.resolve(name)
    if t is None:
        raise SchemaError(f"unknown type {name}")
    return t


# ---------------------------------------------------------------------------
# Subcommands


def cmd_check(args) -> int:
    program = _load(args.file)
    for name in program.schema.names:
        td = program.schema[name]
        print(f"{name}\t{td.kind}\t{program.schema.rank(name)}\t{print_value(program.schema.default(name))}")
    for fn in program.functions.values():
        sig = " ".join(f.type or "?" for f in fn.formals)
        print(f"define\t{fn.name}\t({sig})\t{fn.returns or '?'}")
    for spec in program.visitors.values():
        print(f"visitor\t{spec.name}\t{spec.mode}\t{spec.root}")
    return _emit(program.hook_reports) if program.hook_reports else 0


def cmd_fix(args) -> int:
    program = _load(args.file)
    t = _resolve(program, args.type)
    v = _value_arg(args.value)
    print(print_value(program.defs.kernel.fix(t, v)))
    return 0


def cmd_eval(args) -> int:
    program = _load(args.file)
    form = _value_arg(args.call)
    if not isinstance(form, Pair):
        raise UsageError("CALL must be a list (function arg ...)")
    items, tail = list_items(form)
    if tail is not NIL:
        raise UsageError("CALL must be a proper list")
    head = items[0]
    if type(head) is not Sym:
        raise UsageError("CALL must start with a function name")
    name = head.name
    if name not in program.functions and name not in program.defs.derived:
        print(f"error: unknown function {name}", file=sys.stderr)
        return 1
    try:
        result = call(program.defs, name, items[1:], mode=args.mode)
    except EvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(print_value(result))
    return 0


def collect_reports(program: Program, laws: str, runs: int, seed: int, depth: int) -> list[LawReport]:
    defs, kernel = program.defs, program.defs.kernel
    wanted = set(LAW_SETS[:-1]) if laws == "all" else {laws}
    reports: list[LawReport] = []
    if "fixlaws" in wanted:
        for t in program.schema.names:
            reports.extend(check_fix_laws(kernel, t, runs, seed))
    if "fixequiv" in wanted:
        subjects = [(s, None) for s in derived_subjects(kernel)]
        subjects += [(fn_subject(defs, fn), fn) for fn in defs.functions.values()]
        for subject, fn in subjects:
            for i, t in enumerate(subject.types):
                if t is None:
                    continue
                reports.append(check_transparency(kernel, subject, i, runs, seed))
                reports.append(check_congruence(kernel, subject, i, runs, seed))
                reports.append(check_constant_normalization(
                    kernel, subject, i, constants=[] if runs == 0 else None, seed=seed))
            if fn is None:
                continue
            if fn.returns is not None:
                reports.append(check_returns(kernel, subject, fn.returns, runs, seed))
            if all(f.type is not None for f in fn.formals):
                reports.append(check_mode_agreement(defs, fn, runs, seed))
                if fn.formals:
                    reports.append(check_guard_violations(defs, fn, runs, seed))
    if "thm1" in wanted:
        for fn in defs.functions.values():
            if is_thm1_candidate(fn):
                if runs == 0:
                    reports.append(LawReport("thm1", fn.name, seed, 0, True, None, "vacuous"))
                else:
                    reports.append(check_hypothesis_elimination(
                        defs, fn, depth=depth, seed=seed, gate_runs=min(runs, 200)))
    if "visitor" in wanted:
        for spec in program.visitors.values():
            reports.extend(check_visitor_laws(defs, spec, runs, seed))
    return sort_reports(reports)


def _emit(reports: Sequence[LawReport]) -> int:
    failed = 0
    for r in sort_reports(reports):
        print(r.line())
        failed += not r.passed
    print(f"{len(reports)} checks, {failed} failed", file=sys.stderr)
    return 1 if failed else 0


def cmd_test(args) -> int:
    program = _load(args.file)
    start = time.perf_counter()
    reports = collect_reports(program, args.laws, args.runs, args.seed, args.depth)
    status = _emit(reports)
    print(f"elapsed {time.perf_counter() - start:.2f}s", file=sys.stderr)
    return status


def cmd_gen(args) -> int:
    program = _load(args.file)
    t = _resolve(program, args.type)
    rng = random.Random(args.seed)
    kernel = program.defs.kernel
    for _ in range(args.n):
        print(print_value(kernel.generate_typed(t, args.size, rng)))
    return 0


def cmd_visit(args) -> int:
    program = _load(args.file)
    spec = program.visitors.get(args.name)
    if spec is None:
        print(f"error: unknown visitor {args.name}", file=sys.stderr)
        return 1
    v = _value_arg(args.value)
    try:
        result = run_visitor(program.defs, spec, v)
    except (EvalError, VisitorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(print_value(result))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fixkit", description="Fixing-function types over S-expressions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate a source file and summarize its types")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("fix", help="print the fixed form of a value")
    p.add_argument("file")
    p.add_argument("type")
    p.add_argument("value", help="value text, '-' for stdin or @path")
    p.set_defaults(func=cmd_fix)

    p = sub.add_parser("eval", help="call a function on literal arguments")
    p.add_argument("file")
    p.add_argument("call", help="(fn arg ...), '-' for stdin or @path")
    p.add_argument("--mode", choices=MODES, default="logic")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("test", help="run law checks and print one TSV line per check")
    p.add_argument("file")
    p.add_argument("--laws", choices=LAW_SETS, default="all")
    p.add_argument("--runs", type=_nonneg, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--depth", type=_nonneg, default=2, help="pair-nesting depth for exhaustive enumeration")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("gen", help="generate typed values")
    p.add_argument("file")
    p.add_argument("type")
    p.add_argument("-n", type=_nonneg, default=1)
    p.add_argument("--size", type=_nonneg, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("visit", help="run a named visitor on a value")
    p.add_argument("file")
    p.add_argument("name")
    p.add_argument("value", help="value text, '-' for stdin or @path")
    p.set_defaults(func=cmd_visit)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _env_seed()
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
