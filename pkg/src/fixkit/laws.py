"""Randomized and enumerative law checking.

Every check returns a :class:`LawReport`.  Each check draws from its own
``random.Random`` seeded by ``(seed, law, subject)``, so a reported
counterexample is reproduced by re-running the same check with the same
seed.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Callable, Collection, Iterator, Sequence

from fixkit.kernel import Kernel, generate_raw
from fixkit.lang import (
    Definitions,
    EvalError,
    Evaluator,
    FnDef,
    GuardViolation,
)
from fixkit.schema import Alist, Base, ListOf, Option, Prod, TagSum
from fixkit.values import NIL, T, Char, Pair, Sym, Value, from_list, iter_list, kw, print_value, values_equal

MAX_SIZE = 12
DEFAULT_ENUM_CAP = 1_000_000
ENUM_ATOMS: tuple[Value, ...] = (-2, -1, 0, 1, 2, "", "a", NIL, T, kw("k"), Char(0))


class EnumerationOverflow(ValueError):
    pass


@dataclass
class LawReport:
    law: str
    subject: str
    seed: int | str
    runs: int
    passed: bool
    counterexample: str | None = None
    detail: str | None = None
    mode: str = "logic"
    elapsed: float = 0.0

    @property
    def outcome(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def line(self) -> str:
        """Tab-separated: law, subject, runs, PASS/FAIL, seed, counterexample or detail."""
        last = self.counterexample or self.detail or "-"
        last = last.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")
        return "\t".join([self.law, self.subject, str(self.runs), self.outcome, str(self.seed), last])


def law_rng(seed: int | str, law: str, subject: str) -> random.Random:
    return random.Random(f"{seed}/{law}/{subject}")


@dataclass(frozen=True)
class Subject:
    """A function under test: a name, per-argument types, and a callable."""
    name: str
    types: tuple[str | None, ...]
    fn: Callable[[list[Value]], Value]


def fn_subject(defs: Definitions, fn: FnDef | str, mode: str = "logic") -> Subject:
    if isinstance(fn, str):
        fn = defs.functions[fn]
    evaluator = Evaluator(defs, mode)
    name = fn.name
    return Subject(name, tuple(f.type for f in fn.formals), lambda args: evaluator.apply(name, args))


def derived_subjects(kernel: Kernel) -> list[Subject]:
    """Constructors, accessors, kind and count functions of every non-base type."""
    out = []
    for name, td in kernel.schema.types.items():
        body = td.body
        if isinstance(body, Base):
            continue
        if isinstance(body, Prod):
            shapes = [(name, None, body.fields)]
        elif isinstance(body, TagSum):
            shapes = [(f"{name}-{v.tag[1:]}", v.tag, v.fields) for v in body.variants]
            out.append(Subject(f"{name}-kind", (name,), lambda a, n=name: kernel.kind_of(n, a[0])))
        else:
            shapes = []
        for stem, tag, fields in shapes:
            out.append(Subject(stem, tuple(f.type for f in fields),
                               lambda a, n=name, t=tag: kernel.construct(n, t, a)))
            for f in fields:
                out.append(Subject(f"{stem}->{f.name}", (name,),
                                   lambda a, n=name, t=tag, fl=f.name: kernel.access(n, t, fl, a[0])))
        out.append(Subject(f"{name}-count", (name,), lambda a, n=name: kernel.count(n, a[0])))
    return out


def _run(subject: Subject, args: list[Value]) -> tuple[bool, Value | str]:
    try:
        return True, subject.fn(list(args))
    except EvalError as exc:
        return False, f"{type(exc).__name__}: {exc}"


def _same(a: tuple[bool, Value | str], b: tuple[bool, Value | str]) -> bool:
    return a[0] and b[0] and values_equal(a[1], b[1])


def _show_out(r: tuple[bool, Value | str]) -> str:
    return print_value(r[1]) if r[0] else f"<error {r[1]}>"


def _show_args(args: Sequence[Value]) -> str:
    return print_value(from_list(args))


def draw_value(kernel: Kernel, t: str | None, rng: random.Random) -> Value:
    size = rng.randint(0, MAX_SIZE)
    if t is None:
        return generate_raw(size, rng, kernel.symbols)
    return kernel.generate_fuzz(t, size, rng)


def draw_args(kernel: Kernel, types: Sequence[str | None], rng: random.Random) -> list[Value]:
    return [draw_value(kernel, t, rng) for t in types]


def _timed(report_fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        report = report_fn(*args, **kwargs)
        report.elapsed = time.perf_counter() - start
        return report
    wrapper.__name__ = report_fn.__name__
    wrapper.__doc__ = report_fn.__doc__
    return wrapper


def _arg_type(subject: Subject, index: int) -> str:
    if not 0 <= index < len(subject.types):
        raise IndexError(f"{subject.name} has no argument {index}")
    t = subject.types[index]
    if t is None:
        raise ValueError(f"argument {index} of {subject.name} is untyped")
    return t


@_timed
def check_transparency(kernel: Kernel, subject: Subject, index: int, runs: int, seed: int | str) -> LawReport:
    """``f(..., fix(x), ...) = f(..., x, ...)`` on raw argument tuples."""
    t = _arg_type(subject, index)
    label = f"{subject.name}:{index}"
    rng = law_rng(seed, "transparency", label)
    for run in range(runs):
        args = draw_args(kernel, subject.types, rng)
        fixed = list(args)
        fixed[index] = kernel.fix(t, args[index])
        out_raw, out_fixed = _run(subject, args), _run(subject, fixed)
        if not _same(out_raw, out_fixed):
            return LawReport("transparency", label, seed, runs, False,
                             f"run {run}: args={_show_args(args)} fixed={_show_args(fixed)} "
                             f"outputs {_show_out(out_raw)} vs {_show_out(out_fixed)}")
    return LawReport("transparency", label, seed, runs, True)


@_timed
def check_congruence(kernel: Kernel, subject: Subject, index: int, runs: int, seed: int | str) -> LawReport:
    """Equivalent arguments give equal results.

    For each raw ``x`` the check also uses ``x' = fix(x)`` and a perturbed
    ``x''`` built to be equivalent to ``x`` but (usually) ill-typed.
    """
    t = _arg_type(subject, index)
    label = f"{subject.name}:{index}"
    rng = law_rng(seed, "congruence", label)
    for run in range(runs):
        args = draw_args(kernel, subject.types, rng)
        x = args[index]
        variants = [("x'", kernel.fix(t, x)), ("x''", kernel.perturb(t, x, rng))]
        base = _run(subject, args)
        for tag, alt in variants:
            if not kernel.equiv(t, x, alt):  # pragma: no cover - perturb is equivalence-preserving
                raise AssertionError(f"non-equivalent {tag} generated for {t}")
            other = list(args)
            other[index] = alt
            out = _run(subject, other)
            if not _same(base, out):
                return LawReport("congruence", label, seed, runs, False,
                                 f"run {run}: x={print_value(x)} {tag}={print_value(alt)} "
                                 f"args={_show_args(args)} outputs {_show_out(base)} vs {_show_out(out)}")
    return LawReport("congruence", label, seed, runs, True)


def default_constants(kernel: Kernel, t: str) -> list[Value]:
    rng = random.Random(f"constants/{t}")
    consts: list[Value] = [0, -1, 5, "", "junk", NIL, T, kw("k"), Char(0), Pair(1, 2), kernel.default(t)]
    for _ in range(4):
        consts.append(kernel.perturb(t, kernel.generate_typed(t, 4, rng), rng))
    return consts


@_timed
def check_constant_normalization(kernel: Kernel, subject: Subject, index: int,
                                 constants: Sequence[Value] | None = None, seed: int | str = 0) -> LawReport:
    """``f(..., c, ...) = f(..., fix(c), ...)`` for each constant ``c``."""
    t = _arg_type(subject, index)
    label = f"{subject.name}:{index}"
    if constants is None:
        constants = default_constants(kernel, t)
    rng = law_rng(seed, "const-norm", label)
    others = draw_args(kernel, subject.types, rng)
    for c in constants:
        args, fixed = list(others), list(others)
        args[index], fixed[index] = c, kernel.fix(t, c)
        a, b = _run(subject, args), _run(subject, fixed)
        if not _same(a, b):
            return LawReport("const-norm", label, seed, len(constants), False,
                             f"constant {print_value(c)} vs {print_value(fixed[index])}: "
                             f"outputs {_show_out(a)} vs {_show_out(b)}")
    return LawReport("const-norm", label, seed, len(constants), True)


@_timed
def check_returns(kernel: Kernel, subject: Subject, returns: str, runs: int, seed: int | str) -> LawReport:
    """Outputs are always recognized at the declared return type."""
    rng = law_rng(seed, "returns", subject.name)
    for run in range(runs):
        args = draw_args(kernel, subject.types, rng)
        ok, out = _run(subject, args)
        if not ok or not kernel.recognize(returns, out):
            shown = print_value(out) if ok else f"<error {out}>"
            return LawReport("returns", subject.name, seed, runs, False,
                             f"run {run}: args={_show_args(args)} output {shown} is not {returns}")
    return LawReport("returns", subject.name, seed, runs, True)


def _ill_typed(kernel: Kernel, t: str, rng: random.Random) -> Value:
    for _ in range(1000):
        size = rng.randint(0, MAX_SIZE)
        pick = rng.random()
        if pick < 0.4:
            v = generate_raw(size, rng, kernel.symbols)
        else:
            v = kernel.perturb(t, kernel.generate_typed(t, size, rng), rng)
        if not kernel.recognize(t, v):
            return v
    raise ValueError(f"could not draw an ill-typed {t}")  # pragma: no cover


@_timed
def check_mode_agreement(defs: Definitions, fn: FnDef, runs: int, seed: int | str) -> LawReport:
    """On well-typed actuals, guarded and logic evaluation agree exactly."""
    kernel = defs.kernel
    if any(f.type is None for f in fn.formals):
        return LawReport("mode-agreement", fn.name, seed, 0, True, detail="skipped: untyped formal")
    rng = law_rng(seed, "mode-agreement", fn.name)
    logic, guarded = Evaluator(defs, "logic"), Evaluator(defs, "guarded")
    for run in range(runs):
        args = [kernel.generate_typed(f.type, rng.randint(0, MAX_SIZE), rng) for f in fn.formals]
        outs = []
        for ev in (logic, guarded):
            try:
                outs.append((True, ev.apply(fn.name, args)))
            except EvalError as exc:
                outs.append((False, f"{type(exc).__name__}: {exc}"))
        if not _same(outs[0], outs[1]):
            return LawReport("mode-agreement", fn.name, seed, runs, False,
                             f"run {run}: args={_show_args(args)} logic {_show_out(outs[0])} "
                             f"guarded {_show_out(outs[1])}")
    return LawReport("mode-agreement", fn.name, seed, runs, True)


@_timed
def check_guard_violations(defs: Definitions, fn: FnDef, runs: int, seed: int | str) -> LawReport:
    """Planting one ill-typed actual makes guarded mode name that formal."""
    kernel = defs.kernel
    typed = [i for i, f in enumerate(fn.formals) if f.type is not None]
    if not typed or any(f.type is None for f in fn.formals):
        return LawReport("guard-violation", fn.name, seed, 0, True, detail="skipped: untyped formal")
    rng = law_rng(seed, "guard-violation", fn.name)
    guarded = Evaluator(defs, "guarded")
    for run in range(runs):
        bad = rng.choice(typed)
        args = [kernel.generate_typed(f.type, rng.randint(0, MAX_SIZE), rng) for f in fn.formals]
        args[bad] = _ill_typed(kernel, fn.formals[bad].type, rng)
        try:
            guarded.apply(fn.name, args)
            problem = "no guard violation"
        except GuardViolation as exc:
            if exc.where == fn.name and exc.formal == fn.formals[bad].name:
                continue
            problem = f"violation named {exc.where}/{exc.formal}"
        except EvalError as exc:
            problem = f"{type(exc).__name__}: {exc}"
        return LawReport("guard-violation", fn.name, seed, runs, False,
                         f"run {run}: args={_show_args(args)} planted at {fn.formals[bad].name}: {problem}")
    return LawReport("guard-violation", fn.name, seed, runs, True)


# ---------------------------------------------------------------------------
# Hypothesis elimination on a bounded universe


def enumeration_size(atoms: int, depth: int) -> int:
    size = atoms
    for _ in range(depth):
        size = atoms + size * size
    return size


def enumerate_values(atoms: Sequence[Value], depth: int) -> list[Value]:
    """All values with pair-nesting depth at most ``depth`` over ``atoms``."""
    level = list(atoms)
    for _ in range(depth):
        level = list(atoms) + [Pair(h, t) for h in level for t in level]
    return level


def enum_alphabet(kernel: Kernel, t: str) -> list[Value]:
    atoms = list(ENUM_ATOMS)
    for name in kernel.schema.reachable(t):
        body = kernel.schema[name].body
        if isinstance(body, TagSum):
            atoms.extend(Sym(v.tag) for v in body.variants if Sym(v.tag) not in atoms)
    return atoms


@_timed
def check_hypothesis_elimination(defs: Definitions, fn: FnDef, depth: int = 2, seed: int | str = 0,
                                 gate_runs: int = 200, cap: int = DEFAULT_ENUM_CAP) -> LawReport:
    """Check ``(forall x. C(x)) <=> (forall x. typep(x) => C(x))`` by enumeration.

    The congruence premise is checked first by random testing; if it fails
    the report is a FAIL carrying the precondition counterexample.  Then
    ``C(x) = C(fix(x))`` is confirmed pointwise over every enumerated value
    and both sides of the biconditional are compared.
    """
    kernel = defs.kernel
    if len(fn.formals) != 1 or fn.formals[0].type is None:
        raise ValueError(f"{fn.name} must take exactly one typed formal")
    t = fn.formals[0].type
    subject = fn_subject(defs, fn)
    gate = check_congruence(kernel, subject, 0, gate_runs, seed)
    if not gate.passed:
        return LawReport("thm1", fn.name, seed, 0, False,
                         f"precondition rejected (congruence fails): {gate.counterexample}")
    atoms = enum_alphabet(kernel, t)
    size = enumeration_size(len(atoms), depth)
    if size > cap:
        raise EnumerationOverflow(f"{size} values at depth {depth} exceeds the cap of {cap}")
    unconditional = hypothesized = True
    typed = 0
    # fixed inputs collapse onto few distinct values
    on_fixed: dict[Value, tuple[bool, Value | str]] = {}
    for x in enumerate_values(atoms, depth):
        out = _run(subject, [x])
        fx = kernel.fix(t, x)
        out_fixed = on_fixed.get(fx)
        if out_fixed is None:
            out_fixed = on_fixed[fx] = _run(subject, [fx])
        if not _same(out, out_fixed):
            return LawReport("thm1", fn.name, seed, size, False,
                             f"x={print_value(x)}: C(x)={_show_out(out)} C(fix x)={_show_out(out_fixed)}")
        holds = out[1] is not NIL
        unconditional &= holds
        if kernel.recognize(t, x):
            typed += 1
            hypothesized &= holds
    detail = (f"enumerated={size} typed={typed} forall={'t' if unconditional else 'nil'} "
              f"forall-typed={'t' if hypothesized else 'nil'}")
    if unconditional != hypothesized:
        return LawReport("thm1", fn.name, seed, size, False, "biconditional fails: " + detail)
    return LawReport("thm1", fn.name, seed, size, True, detail=detail)


def is_thm1_candidate(fn: FnDef) -> bool:
    return len(fn.formals) == 1 and fn.formals[0].type is not None and fn.returns == "bool"


# ---------------------------------------------------------------------------
# Per-type laws


def _children(kernel: Kernel, t: str, v: Value) -> Iterator[tuple[str, Value]]:
    """Non-base typed children of a well-typed ``v``."""
    body = kernel.schema[t].body
    schema = kernel.schema
    if isinstance(body, Prod):
        pairs = zip(body.fields, iter_list(v))
    elif isinstance(body, TagSum):
        pairs = zip(body.variant(v.head.name).fields, iter_list(v.tail))
    elif isinstance(body, ListOf):
        for x in iter_list(v):
            if not schema.is_base(body.elem):
                yield body.elem, x
        if v is not NIL:
            yield t, v.tail
        return
    elif isinstance(body, Alist):
        for e in iter_list(v):
            if not schema.is_base(body.key):
                yield body.key, e.head
            if not schema.is_base(body.val):
                yield body.val, e.tail
        if v is not NIL:
            yield t, v.tail
        return
    elif isinstance(body, Option):
        if v is not NIL:
            yield body.some, v
        return
    else:
        return
    for f, x in pairs:
        if not schema.is_base(f.type):
            yield f.type, x


def check_fix_laws(kernel: Kernel, t: str, runs: int, seed: int | str,
                   only: Collection[str] | None = None) -> list[LawReport]:
    """Fixing-function, equivalence and count laws for one type, optionally restricted to ``only``."""
    reports = []
    ops = kernel.ops[t]
    count_fixed = kernel.count_direct(t)

    def law(name: str, body: Callable[[random.Random], str | None]) -> None:
        if only is not None and name not in only:
            return
        start = time.perf_counter()
        rng = law_rng(seed, name, t)
        report = LawReport(name, t, seed, runs, True)
        for run in range(runs):
            problem = body(rng)
            if problem:
                report = LawReport(name, t, seed, runs, False, f"run {run}: {problem}")
                break
        report.elapsed = time.perf_counter() - start
        reports.append(report)

    def fuzz(rng):
        return kernel.generate_fuzz(t, rng.randint(0, MAX_SIZE), rng)

    def typed(rng):
        return kernel.generate_typed(t, rng.randint(0, MAX_SIZE), rng)

    def related(rng, a):
        return kernel.perturb(t, a, rng) if rng.random() < 0.5 else fuzz(rng)

    def fix_recognized(rng):
        v = fuzz(rng)
        if not ops.recognize(ops.fix(v)):
            return f"fix({print_value(v)}) = {print_value(ops.fix(v))} not recognized"

    def fix_identity(rng):
        v = typed(rng)
        if not ops.recognize(v):
            return f"generated {print_value(v)} is not recognized"
        if not values_equal(ops.fix(v), v):
            return f"fix({print_value(v)}) = {print_value(ops.fix(v))}"

    def fix_idempotent(rng):
        v = fuzz(rng)
        once = ops.fix(v)
        if not values_equal(ops.fix(once), once):
            return f"v={print_value(v)}"

    def reflexive(rng):
        v = fuzz(rng)
        if not ops.equiv(v, v):
            return f"v={print_value(v)}"

    def symmetric(rng):
        a = fuzz(rng)
        b = related(rng, a)
        if ops.equiv(a, b) != ops.equiv(b, a):
            return f"a={print_value(a)} b={print_value(b)}"

    def transitive(rng):
        a = fuzz(rng)
        b = related(rng, a)
        c = related(rng, b)
        if ops.equiv(a, b) and ops.equiv(b, c) and not ops.equiv(a, c):
            return f"a={print_value(a)} b={print_value(b)} c={print_value(c)}"

    def canonical(rng):
        a = fuzz(rng)
        b = related(rng, a)
        if not ops.equiv(a, ops.fix(a)):
            return f"a={print_value(a)} not equivalent to its fix"
        if ops.equiv(a, b) != values_equal(ops.fix(a), ops.fix(b)):
            return f"a={print_value(a)} b={print_value(b)}"

    def measure(rng):
        v = typed(rng)
        total = count_fixed(v)
        for child_t, child in _children(kernel, t, v):
            if not kernel.count(child_t, child) < total:
                return f"child {print_value(child)} : {child_t} of {print_value(v)} does not decrease count"

    def count_transparent(rng):
        v = fuzz(rng)
        if ops.count(v) != ops.count(ops.fix(v)):
            return f"v={print_value(v)}"
        w = typed(rng)
        if count_fixed(w) != ops.count(w):
            return f"direct count differs on {print_value(w)}"

    law("fix-recognized", fix_recognized)
    law("fix-identity", fix_identity)
    law("fix-idempotent", fix_idempotent)
    law("equiv-reflexive", reflexive)
    law("equiv-symmetric", symmetric)
    law("equiv-transitive", transitive)
    law("fix-canonical", canonical)
    law("count-transparent", count_transparent)
    if not isinstance(kernel.schema[t].body, Base):
        law("count-decreases", measure)
    return reports


def deffixequiv(defs: Definitions, name: str, runs: int = 100, seed: int | str = 0,
                mutual: bool = False) -> list[LawReport]:
    """Transparency, congruence and constant normalization for every typed formal.

    With ``mutual`` the whole ``defines`` clique containing ``name`` is
    checked together.
    """
    fns = defs.group_members(name) if mutual else (defs.functions[name],)
    reports = []
    for fn in fns:
        subject = fn_subject(defs, fn)
        for i, formal in enumerate(fn.formals):
            if formal.type is None:
                continue
            reports.append(check_transparency(defs.kernel, subject, i, runs, seed))
            reports.append(check_congruence(defs.kernel, subject, i, runs, seed))
            reports.append(check_constant_normalization(defs.kernel, subject, i, seed=seed))
    return reports


def deffixequiv_mutual(defs: Definitions, name: str, runs: int = 100, seed: int | str = 0) -> list[LawReport]:
    return deffixequiv(defs, name, runs, seed, mutual=True)


def sort_reports(reports: Sequence[LawReport]) -> list[LawReport]:
    return sorted(reports, key=lambda r: (r.law, r.subject))
