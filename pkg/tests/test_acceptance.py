"""Acceptance criteria 1-9, one PASS/FAIL line each in the terminal summary."""

import random
import subprocess
import sys
import time

from conftest import ACCEPTANCE_LINES
from fixkit.kernel import generate_raw
from fixkit.lang import DepthExhausted, call, evaluate
from fixkit.laws import (
    MAX_SIZE,
    check_congruence,
    check_constant_normalization,
    check_fix_laws,
    check_guard_violations,
    check_hypothesis_elimination,
    check_mode_agreement,
    check_transparency,
    derived_subjects,
    fn_subject,
)
from fixkit.program import corpus_path
from fixkit.values import print_value, read_value, values_equal
from fixkit.visitor import check_visitor_laws, run_visitor

SAMPLES = 10_000
RUNS = 1_000


def record(n, title, failures, detail=""):
    status = "PASS" if not failures else "FAIL"
    shown = detail if not failures else "; ".join(failures[:3])
    ACCEPTANCE_LINES[n] = f"criterion {n} {status}: {title}" + (f" ({shown})" if shown else "")
    assert not failures, failures


def corpus_types(programs):
    """Every (program, type) pair, each type name counted once."""
    seen, out = set(), []
    for prog in programs.values():
        for t in prog.schema.names:
            if t not in seen:
                seen.add(t)
                out.append((prog, t))
    return out


def test_criterion_1_fixing_functions(programs):
    start = time.perf_counter()
    failures = []
    pairs = corpus_types(programs)
    for prog, t in pairs:
        k = prog.defs.kernel
        rng = random.Random(f"c1/{t}")
        for _ in range(SAMPLES):
            v = generate_raw(rng.randint(0, MAX_SIZE), rng, k.symbols)
            if not k.recognize(t, k.fix(t, v)):
                failures.append(f"{t}: fix({print_value(v)}) not recognized")
                break
        for _ in range(SAMPLES):
            v = k.generate_typed(t, rng.randint(0, MAX_SIZE), rng)
            if not values_equal(k.fix(t, v), v):
                failures.append(f"{t}: fix moved typed {print_value(v)}")
                break
    elapsed = time.perf_counter() - start
    if elapsed >= 60:
        failures.append(f"took {elapsed:.1f}s")
    record(1, "fix recognized on raw values, identity on typed values", failures,
           f"{len(pairs)} types x {SAMPLES} raw + {SAMPLES} typed in {elapsed:.1f}s")


def test_criterion_2_equivalence_laws(programs):
    wanted = {"equiv-reflexive", "equiv-symmetric", "equiv-transitive", "fix-canonical"}
    failures = []
    pairs = corpus_types(programs)
    for prog, t in pairs:
        for r in check_fix_laws(prog.defs.kernel, t, SAMPLES, "c2", only=wanted):
            if not r.passed:
                failures.append(f"{r.law} {t}: {r.counterexample}")
    record(2, "equiv is an equivalence and fix is its canonical form", failures,
           f"{len(pairs)} types x {SAMPLES} samples")


def test_criterion_3_congruence(programs, bad):
    failures = []
    checked = 0
    for prog in programs.values():
        k = prog.defs.kernel
        subjects = derived_subjects(k)
        if "aterm-eval" in prog.functions:
            subjects += [fn_subject(prog.defs, "aterm-eval"), fn_subject(prog.defs, "atermlist-sum")]
        for s in subjects:
            for i, t in enumerate(s.types):
                if t is None:
                    continue
                for r in (check_transparency(k, s, i, RUNS, 7), check_congruence(k, s, i, RUNS, 7),
                          check_constant_normalization(k, s, i, seed=7)):
                    checked += 1
                    if not r.passed:
                        failures.append(f"{r.law} {r.subject}: {r.counterexample}")
    s = fn_subject(bad.defs, "bad-id")
    first = check_congruence(bad.defs.kernel, s, 0, RUNS, 7)
    again = check_congruence(bad.defs.kernel, s, 0, RUNS, 7)
    if first.passed:
        failures.append("bad-id passed congruence")
    elif first.counterexample != again.counterexample:
        failures.append("bad-id counterexample not reproducible")
    record(3, "derived ops and aterm-eval group are congruent; bad-id fails", failures,
           f"{checked} checks at {RUNS} runs; bad-id seed 7: {first.counterexample}")


def test_criterion_4_hypothesis_elimination(aterm):
    failures, sizes = [], []
    for name in ("nat-plus-zero", "aterm-eval-integer", "minus-minus-cancels", "singleton-sum-same"):
        r = check_hypothesis_elimination(aterm.defs, aterm.functions[name], depth=2, seed=0, gate_runs=200)
        sizes.append(f"{name}={r.runs}")
        if not r.passed:
            failures.append(f"{name}: {r.counterexample}")
        elif r.runs < 10_000:
            failures.append(f"{name}: only {r.runs} values")
    record(4, "C(x) = C(fix x) on exhaustive bounded enumeration", failures, ", ".join(sizes))


def test_criterion_5_worked_examples(aterm, student):
    cases = [
        (call(aterm.defs, "aterm-eval", [read_value("(:sum ((:num 1) (:num 2)))")]), 3),
        (call(aterm.defs, "aterm-eval", [read_value("(:minus (:num 5))")]), -5),
        (evaluate(student.defs, read_value('(student->name (make-student :name 6 :age "Calista"))')), ""),
    ]
    failures = [f"got {print_value(got)}, want {print_value(want)}"
                for got, want in cases if not values_equal(got, want)]
    record(5, "aterm-eval and student->name examples", failures, "3, -5, \"\"")


def recursive_group(prog, fn):
    """True when some member of fn's group calls a member of that group."""
    members = prog.defs.group_members(fn.name)
    names = [g.name for g in members]
    calls = [print_value(g.source.tail.tail) for g in members]
    return any(f"({n} " in text for n in names for text in calls)


def test_criterion_6_measure(programs):
    failures = []
    types = fns = 0
    for prog in programs.values():
        k = prog.defs.kernel
        for t in prog.schema.names:
            if prog.schema.is_base(t):
                continue
            types += 1
            for r in check_fix_laws(k, t, RUNS, "c6", only={"count-decreases"}):
                if not r.passed:
                    failures.append(f"{t}: {r.counterexample}")
        for fn in prog.functions.values():
            if not recursive_group(prog, fn) or any(f.type is None for f in fn.formals):
                continue
            fns += 1
            rng = random.Random(f"c6/{fn.name}")
            for _ in range(RUNS):
                args = [k.generate_typed(f.type, rng.randint(0, 40), rng) for f in fn.formals]
                try:
                    call(prog.defs, fn.name, args)
                except DepthExhausted as exc:
                    failures.append(f"{fn.name}: {exc}")
                    break
    if fns == 0:
        failures.append("no recursive corpus functions found")
    record(6, "count decreases to children; recursion stays within depth limit", failures,
           f"{types} compound types and {fns} recursive functions x {RUNS} values")


def test_criterion_7_mode_agreement(programs):
    failures = []
    fns = 0
    for prog in programs.values():
        for fn in prog.functions.values():
            fns += 1
            r = check_mode_agreement(prog.defs, fn, RUNS, 7)
            if not r.passed:
                failures.append(f"{fn.name}: {r.counterexample}")
            if fn.formals:
                g = check_guard_violations(prog.defs, fn, 100, 7)
                if not g.passed:
                    failures.append(f"{fn.name}: {g.counterexample}")
    record(7, "guarded and logic modes agree; planted violations name the formal", failures,
           f"{fns} functions x {RUNS} typed inputs, 100 planted each")


def test_criterion_8_visitors(programs, aterm):
    failures = []
    count = 0
    for prog in programs.values():
        for spec in prog.visitors.values():
            for r in check_visitor_laws(prog.defs, spec, RUNS, 7):
                count += 1
                if not r.passed:
                    failures.append(f"{r.law} {spec.name}: {r.counterexample}")
    sample = read_value("(:sum ((:num 1) (:minus (:num 2))))")
    golden = [
        ("collect-nums", "(1 2)"),
        ("negate-nums", "(:sum ((:num -1) (:minus (:num -2))))"),
    ]
    for name, want in golden:
        got = print_value(run_visitor(aterm.defs, aterm.visitors[name], sample))
        if got != want:
            failures.append(f"{name}: {got}")
    record(8, "visitor laws and golden outputs", failures, f"{count} law checks at {RUNS} runs")


def fixkit(*argv):
    return subprocess.run([sys.executable, "-m", "fixkit", *argv], capture_output=True)


def test_criterion_9_determinism():
    failures = []
    aterm = str(corpus_path("aterm.fty"))
    a = fixkit("test", aterm, "--seed", "7")
    b = fixkit("test", aterm, "--seed", "7")
    if a.returncode != 0 or not a.stdout:
        failures.append(f"test exited {a.returncode}")
    if a.stdout != b.stdout:
        failures.append("test reports differ")
    g1 = fixkit("gen", aterm, "aterm", "-n", "20", "--seed", "1")
    g2 = fixkit("gen", aterm, "aterm", "-n", "20", "--seed", "1")
    if g1.returncode != 0 or g1.stdout != g2.stdout:
        failures.append("gen output differs")
    lines, values = a.stdout.count(b"\n"), g1.stdout.count(b"\n")
    record(9, "fixkit test and gen are byte-identical across runs", failures,
           f"{lines} report lines, {values} values")
