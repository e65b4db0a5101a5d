"""A small first-order functional language over values.

Function definitions look like::

    (define aterm-eval ((x aterm))
      :returns int
      :measure (aterm-count x)
      (aterm-case x
        :num x.val
        :sum (atermlist-sum x.args)
        :minus (- (aterm-eval x.arg))))

and may be grouped into mutually recursive cliques with ``defines``.
Formals are ``(x type)``, ``(x type :raw)`` or ``(x :raw)``.

Two execution modes mirror ``mbe``:

``logic``
    every typed formal is fixed on entry (unless marked ``:raw``) and
    primitives apply the usual fixing conventions, so evaluation is total
    up to the recursion depth limit.
``guarded``
    nothing is fixed; every typed actual is checked by its recognizer at
    each call boundary, primitives check their own guards, and any
    failure raises :class:`GuardViolation`.
"""

from __future__ import annotations

import sys
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence, Union

from fixkit.kernel import Kernel, derive
from fixkit.schema import (
    BUILTIN_BY_FIXER,
    BUILTIN_BY_PRED,
    Prod,
    Schema,
    TagSum,
)
from fixkit.values import (
    NIL,
    T,
    Char,
    Pair,
    Sym,
    Value,
    is_keyword,
    list_items,
    print_value,
    values_equal,
)

MODES = ("logic", "guarded")
DEFAULT_DEPTH_LIMIT = 400


class LangError(Exception):
    """Base class for definition and evaluation errors."""


class DefinitionError(LangError):
    """A ``define`` form is malformed or refers to unknown names."""


class EvalError(LangError):
    pass


class GuardViolation(EvalError):
    def __init__(self, where: str, formal: str, value: Value, expected: str):
        super().__init__(f"guard violation in {where}: {formal} = {print_value(value)} is not {expected}")
        self.where = where
        self.formal = formal
        self.value = value
        self.expected = expected


class DepthExhausted(EvalError):
    pass


class ArityError(EvalError):
    pass


# ---------------------------------------------------------------------------
# Syntax


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lit:
    value: Value


@dataclass(frozen=True)
class If:
    test: "Expr"
    then: "Expr"
    orelse: "Expr"


@dataclass(frozen=True)
class Let:
    bindings: tuple[tuple[str, "Expr"], ...]
    body: "Expr"
    sequential: bool = False


@dataclass(frozen=True)
class And:
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Prim:
    op: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class DerivedRef:
    """A kernel operation reachable by name from the language."""
    op: str  # recognize fix equiv count kind construct access
    type: str
    tag: str | None = None
    field: str | None = None
    arity: int = 1


@dataclass(frozen=True)
class Derived:
    ref: DerivedRef
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class CaseOf:
    type: str
    var: str
    arms: tuple[tuple[Sym, tuple[str, ...], "Expr"], ...]


Expr = Union[Var, Lit, If, Let, And, Or, Call, Prim, Derived, CaseOf]


@dataclass(frozen=True)
class Formal:
    name: str
    type: str | None
    raw: bool = False


@dataclass
class FnDef:
    name: str
    formals: tuple[Formal, ...]
    returns: str | None
    body: Expr
    group: str
    measure: Value | None = None
    source: Value = NIL

    def formal_index(self, name: str) -> int:
        for i, f in enumerate(self.formals):
            if f.name == name:
                return i
        raise KeyError(name)


# name -> (min arity, max arity or None)
PRIMITIVES: dict[str, tuple[int, int | None]] = {
    "+": (0, None),
    "*": (0, None),
    "-": (1, 2),
    "<": (2, 2),
    "equal": (2, 2),
    "cons": (2, 2),
    "car": (1, 1),
    "cdr": (1, 1),
    "atom?": (1, 1),
    "atom": (1, 1),
    "consp": (1, 1),
    "not": (1, 1),
}
SPECIAL_FORMS = frozenset({"if", "let", "let*", "quote", "and", "or", "case-of"})


def derived_names(schema: Schema) -> dict[str, DerivedRef]:
    """Every kernel operation name the language exposes for ``schema``."""
    out: dict[str, DerivedRef] = {}

    def add(name: str, ref: DerivedRef):
        out.setdefault(name, ref)

    for name, td in schema.types.items():
        add(f"{name}-p", DerivedRef("recognize", name))
        add(f"{name}-fix", DerivedRef("fix", name))
        add(f"{name}-equiv", DerivedRef("equiv", name, arity=2))
        add(f"{name}-count", DerivedRef("count", name))
        body = td.body
        if isinstance(body, Prod):
            add(name, DerivedRef("construct", name, arity=len(body.fields)))
            for f in body.fields:
                add(f"{name}->{f.name}", DerivedRef("access", name, field=f.name))
        elif isinstance(body, TagSum):
            add(f"{name}-kind", DerivedRef("kind", name))
            for v in body.variants:
                stem = f"{name}-{v.tag[1:]}"
                add(stem, DerivedRef("construct", name, tag=v.tag, arity=len(v.fields)))
                for f in v.fields:
                    add(f"{stem}->{f.name}", DerivedRef("access", name, tag=v.tag, field=f.name))
    for pred, base in BUILTIN_BY_PRED.items():
        add(pred, DerivedRef("recognize", base.type_name))
    for fixer, base in BUILTIN_BY_FIXER.items():
        add(fixer, DerivedRef("fix", base.type_name))
    return out


# ---------------------------------------------------------------------------
# Definitions table and compiler


class Definitions:
    """Schema plus the function definitions loaded so far (append-only)."""

    def __init__(self, schema: Schema):
        self.schema = schema
        self.kernel: Kernel = derive(schema)
        self.derived = derived_names(schema)
        self.functions: dict[str, FnDef] = {}
        self.groups: dict[str, tuple[str, ...]] = {}
        self.mutual: dict[str, bool] = {}

    def group_members(self, name: str) -> tuple[FnDef, ...]:
        """Functions of the group named ``name``, or of the group containing function ``name``."""
        if name in self.groups:
            return tuple(self.functions[n] for n in self.groups[name])
        if name in self.functions:
            group = self.functions[name].group
            return tuple(self.functions[n] for n in self.groups[group])
        raise DefinitionError(f"unknown function or group {name}")

    def name_taken(self, name: str) -> bool:
        return (name in self.functions or name in self.derived or name in PRIMITIVES
                or name in SPECIAL_FORMS or name in self.groups)

    def add_group(self, name: str, forms: Sequence[Value], mutual: bool = True) -> list[FnDef]:
        """Compile and register one ``define`` or a ``defines`` clique."""
        if name in self.groups or (name in self.functions and mutual):
            raise DefinitionError(f"redefinition of {name}")
        headers = [_parse_header(form, self.schema) for form in forms]
        seen = set()
        for h in headers:
            if self.name_taken(h.name) or h.name in seen:
                raise DefinitionError(f"redefinition of {h.name}")
            seen.add(h.name)
        signatures = {n: len(f.formals) for n, f in self.functions.items()}
        signatures.update({h.name: len(h.formals) for h in headers})
        compiler = _Compiler(self, signatures)
        fns = []
        for h in headers:
            scope = frozenset(f.name for f in h.formals)
            body = compiler.compile(h.body_form, scope, h.name)
            fns.append(FnDef(h.name, h.formals, h.returns, body, name, h.measure, h.source))
        for fn in fns:
            self.functions[fn.name] = fn
        self.groups[name] = tuple(fn.name for fn in fns)
        self.mutual[name] = mutual
        return fns

    def compile_expr(self, form: Value, scope: frozenset[str] = frozenset()) -> Expr:
        signatures = {n: len(f.formals) for n, f in self.functions.items()}
        return _Compiler(self, signatures).compile(form, scope, "<toplevel>")


@dataclass
class _Header:
    name: str
    formals: tuple[Formal, ...]
    returns: str | None
    measure: Value | None
    body_form: Value
    source: Value


_DEFINE_OPTIONS = ("returns", "measure", "verify-guards", "guard-hints", "hints")


def _sym_name(v: Value) -> str | None:
    return v.name if type(v) is Sym and not is_keyword(v) and v not in (NIL, T) else None


def _resolve_type(schema: Schema, v: Value, where: str) -> str:
    name = v.name if type(v) is Sym else None
    resolved = schema.resolve(name) if name else None
    if resolved is None:
        raise DefinitionError(f"unknown type {print_value(v)} in {where}")
    return resolved


def _parse_header(form: Value, schema: Schema) -> _Header:
    items, tail = list_items(form)
    if tail is not NIL or len(items) < 4 or items[0] is not Sym("define"):
        raise DefinitionError(f"malformed define: {print_value(form)}")
    name = _sym_name(items[1])
    if name is None:
        raise DefinitionError(f"bad function name {print_value(items[1])}")
    formal_items, ftail = list_items(items[2])
    if ftail is not NIL:
        raise DefinitionError(f"formals of {name} must be a proper list")
    formals = []
    for spec in formal_items:
        parts, ptail = list_items(spec)
        fname = _sym_name(parts[0]) if parts and ptail is NIL else None
        if fname is None:
            raise DefinitionError(f"malformed formal {print_value(spec)} in {name}")
        rest = parts[1:]
        raw = bool(rest) and rest[-1] is Sym(":raw")
        if raw:
            rest = rest[:-1]
        if len(rest) > 1 or (not rest and not raw):
            raise DefinitionError(f"malformed formal {print_value(spec)} in {name}")
        ftype = _resolve_type(schema, rest[0], f"formal {fname} of {name}") if rest else None
        formals.append(Formal(fname, ftype, raw))
    if len({f.name for f in formals}) != len(formals):
        raise DefinitionError(f"duplicate formal in {name}")
    opts = items[3:-1]
    if len(opts) % 2:
        raise DefinitionError(f"options of {name} must be keyword/value pairs")
    returns = measure = None
    for k, v in zip(opts[::2], opts[1::2]):
        if not is_keyword(k) or k.name[1:] not in _DEFINE_OPTIONS:
            raise DefinitionError(f"unknown option {print_value(k)} in {name}")
        if k.name == ":returns":
            # :returns int  or  :returns (val int)
            parts, _ = list_items(v)
            returns = _resolve_type(schema, parts[-1] if parts else v, f":returns of {name}")
        elif k.name == ":measure":
            measure = v
    return _Header(name, tuple(formals), returns, measure, items[-1], form)


class _Compiler:
    def __init__(self, defs: Definitions, signatures: Mapping[str, int]):
        self.defs = defs
        self.schema = defs.schema
        self.signatures = signatures

    def fail(self, where: str, msg: str):
        raise DefinitionError(f"in {where}: {msg}")

    def compile(self, form: Value, scope: frozenset[str], where: str) -> Expr:
        t = type(form)
        if t is int or t is str or t is Char:
            return Lit(form)
        if t is Sym:
            if form is NIL or form is T or is_keyword(form):
                return Lit(form)
            if form.name not in scope:
                self.fail(where, f"unbound name {form.name}")
            return Var(form.name)
        items, tail = list_items(form)
        if tail is not NIL:
            self.fail(where, f"improper call form {print_value(form)}")
        head = items[0]
        if type(head) is not Sym:
            self.fail(where, f"call head must be a symbol: {print_value(form)}")
        op, args = head.name, items[1:]
        rec = lambda f: self.compile(f, scope, where)

        if op == "quote":
            if len(args) != 1:
                self.fail(where, "quote takes one argument")
            return Lit(args[0])
        if op == "if":
            if len(args) != 3:
                self.fail(where, "if takes three arguments")
            return If(rec(args[0]), rec(args[1]), rec(args[2]))
        if op in ("let", "let*"):
            return self.compile_let(op, args, scope, where)
        if op == "and":
            return And(tuple(map(rec, args)))
        if op == "or":
            return Or(tuple(map(rec, args)))
        if op == "case-of":
            if not args:
                self.fail(where, "case-of needs a type")
            return self.compile_case(_resolve_type(self.schema, args[0], where), args[1:], scope, where)
        if op.endswith("-case") and op[:-5] in self.schema and isinstance(self.schema[op[:-5]].body, TagSum):
            return self.compile_case(op[:-5], args, scope, where)
        if op.startswith("make-"):
            ref = self.defs.derived.get(op[5:])
            if ref is not None and ref.op == "construct":
                return self.compile_make(ref, args, scope, where)
        if op in PRIMITIVES:
            lo, hi = PRIMITIVES[op]
            if len(args) < lo or (hi is not None and len(args) > hi):
                self.fail(where, f"wrong number of arguments to {op}")
            return Prim(op, tuple(map(rec, args)))
        if op in self.signatures:
            if len(args) != self.signatures[op]:
                self.fail(where, f"{op} takes {self.signatures[op]} arguments, got {len(args)}")
            return Call(op, tuple(map(rec, args)))
        ref = self.defs.derived.get(op)
        if ref is not None:
            if len(args) != ref.arity:
                self.fail(where, f"{op} takes {ref.arity} arguments, got {len(args)}")
            return Derived(ref, tuple(map(rec, args)))
        self.fail(where, f"unbound function {op}")

    def compile_let(self, op, args, scope, where) -> Let:
        if len(args) != 2:
            self.fail(where, f"{op} takes a binding list and a body")
        bindings = []
        inner = scope
        for b in list_items(args[0])[0]:
            parts, tail = list_items(b)
            name = _sym_name(parts[0]) if len(parts) == 2 and tail is NIL else None
            if name is None:
                self.fail(where, f"malformed binding {print_value(b)}")
            bindings.append((name, self.compile(parts[1], inner if op == "let*" else scope, where)))
            if op == "let*":
                inner = inner | {name}
        body_scope = scope | {n for n, _ in bindings}
        return Let(tuple(bindings), self.compile(args[1], body_scope, where), op == "let*")

    def compile_case(self, type_name: str, args, scope, where) -> CaseOf:
        body = self.schema[type_name].body
        if not isinstance(body, TagSum):
            self.fail(where, f"{type_name} is not a tagged sum")
        if not args or _sym_name(args[0]) is None or args[0].name not in scope:
            self.fail(where, "case scrutinee must be a bound variable")
        var = args[0].name
        arm_forms = args[1:]
        if len(arm_forms) % 2:
            self.fail(where, "case arms must be tag/expression pairs")
        given = {}
        for tag, expr in zip(arm_forms[::2], arm_forms[1::2]):
            if not is_keyword(tag) or body.variant(tag.name) is None:
                self.fail(where, f"{print_value(tag)} is not a tag of {type_name}")
            if tag in given:
                self.fail(where, f"duplicate case arm {tag.name}")
            given[tag] = expr
        missing = [v.tag for v in body.variants if Sym(v.tag) not in given]
        if missing:
            self.fail(where, f"non-covering case on {type_name}: missing {' '.join(missing)}")
        arms = []
        for v in body.variants:
            names = tuple(f"{var}.{f.name}" for f in v.fields)
            arms.append((Sym(v.tag), names, self.compile(given[Sym(v.tag)], scope | set(names), where)))
        return CaseOf(type_name, var, tuple(arms))

    def compile_make(self, ref: DerivedRef, args, scope, where) -> Derived:
        fields = self.defs.kernel.field_list(ref.type, ref.tag)
        if len(args) % 2:
            self.fail(where, "make- arguments must be keyword/value pairs")
        given = {}
        for k, v in zip(args[::2], args[1::2]):
            if not is_keyword(k) or k.name[1:] not in {f.name for f in fields}:
                self.fail(where, f"unknown field {print_value(k)}")
            given[k.name[1:]] = self.compile(v, scope, where)
        exprs = tuple(given.get(f.name, Lit(self.schema.default(f.type))) for f in fields)
        return Derived(ref, exprs)


# ---------------------------------------------------------------------------
# Evaluation


@contextmanager
def recursion_headroom(frames: int) -> Iterator[None]:
    old = sys.getrecursionlimit()
    if frames > old:
        sys.setrecursionlimit(frames)
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


def _truthy(v: Value) -> bool:
    return v is not NIL


def _bool(b: bool) -> Sym:
    return T if b else NIL


class Evaluator:
    def __init__(self, defs: Definitions, mode: str = "logic", depth_limit: int = DEFAULT_DEPTH_LIMIT):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.defs = defs
        self.kernel = defs.kernel
        self.mode = mode
        self.guarded = mode == "guarded"
        self.depth_limit = depth_limit
        self._dispatch = {
            Var: self._var, Lit: self._lit, If: self._if, Let: self._let, And: self._and, Or: self._or,
            Call: self._call, Prim: self._prim, Derived: self._derived, CaseOf: self._case,
        }

    def run(self, expr: Expr, env: Mapping[str, Value] | None = None) -> Value:
        with recursion_headroom(self.depth_limit * 12 + 2000):
            try:
                return self.eval(expr, dict(env or {}), 0)
            except RecursionError:
                raise DepthExhausted("host recursion limit reached") from None

    def apply(self, name: str, args: Sequence[Value]) -> Value:
        """Call a user function or derived operation on already-evaluated values."""
        with recursion_headroom(self.depth_limit * 12 + 2000):
            try:
                if name in self.defs.functions:
                    return self.call_fn(self.defs.functions[name], list(args), 0)
                ref = self.defs.derived.get(name)
                if ref is None:
                    raise EvalError(f"unbound function {name}")
                if len(args) != ref.arity:
                    raise ArityError(f"{name} takes {ref.arity} arguments, got {len(args)}")
                return self.derived(ref, name, list(args))
            except RecursionError:
                raise DepthExhausted("host recursion limit reached") from None

    def eval(self, expr: Expr, env: dict[str, Value], depth: int) -> Value:
        return self._dispatch[type(expr)](expr, env, depth)

    def _var(self, e: Var, env, depth):
        return env[e.name]

    def _lit(self, e: Lit, env, depth):
        return e.value

    def _if(self, e: If, env, depth):
        branch = e.then if _truthy(self.eval(e.test, env, depth)) else e.orelse
        return self.eval(branch, env, depth)

    def _let(self, e: Let, env, depth):
        inner = dict(env)
        for name, sub in e.bindings:
            inner[name] = self.eval(sub, inner if e.sequential else env, depth)
        return self.eval(e.body, inner, depth)

    def _and(self, e: And, env, depth):
        result: Value = T
        for sub in e.args:
            result = self.eval(sub, env, depth)
            if result is NIL:
                return NIL
        return result

    def _or(self, e: Or, env, depth):
        for sub in e.args:
            result = self.eval(sub, env, depth)
            if result is not NIL:
                return result
        return NIL

    def _call(self, e: Call, env, depth):
        args = [self.eval(a, env, depth) for a in e.args]
        return self.call_fn(self.defs.functions[e.fn], args, depth + 1)

    def call_fn(self, fn: FnDef, args: list[Value], depth: int) -> Value:
        if depth > self.depth_limit:
            raise DepthExhausted(f"recursion depth limit {self.depth_limit} exceeded in {fn.name}")
        if len(args) != len(fn.formals):
            raise ArityError(f"{fn.name} takes {len(fn.formals)} arguments, got {len(args)}")
        env = {}
        for formal, value in zip(fn.formals, args):
            if formal.type is not None:
                if self.guarded:
                    if not self.kernel.recognize(formal.type, value):
                        raise GuardViolation(fn.name, formal.name, value, formal.type)
                elif not formal.raw:
                    value = self.kernel.fix(formal.type, value)
            env[formal.name] = value
        return self.eval(fn.body, env, depth)

    def _case(self, e: CaseOf, env, depth):
        v = env[e.var]
        if self.guarded:
            if not self.kernel.recognize(e.type, v):
                raise GuardViolation(f"{e.type}-case", e.var, v, e.type)
        else:
            v = self.kernel.fix(e.type, v)
        for tag, names, arm in e.arms:
            if v.head is tag:
                inner = dict(env)
                fields = v.tail
                for n in names:
                    inner[n] = fields.head
                    fields = fields.tail
                return self.eval(arm, inner, depth)
        raise EvalError(f"non-covering case on {e.type}")  # pragma: no cover

    def _derived(self, e: Derived, env, depth):
        args = [self.eval(a, env, depth) for a in e.args]
        return self.derived(e.ref, None, args)

    def derived(self, ref: DerivedRef, name: str | None, args: list[Value]) -> Value:
        k = self.kernel
        t = ref.type
        label = name or f"{t}-{ref.op}"
        if ref.op == "recognize":
            return _bool(k.recognize(t, args[0]))
        if ref.op == "equiv":
            return _bool(k.equiv(t, args[0], args[1]))
        if ref.op == "construct":
            if self.guarded:
                for f, x in zip(k.field_list(t, ref.tag), args):
                    if not k.recognize(f.type, x):
                        raise GuardViolation(label, f.name, x, f.type)
            return k.construct(t, ref.tag, args)
        if self.guarded:
            x = args[0]
            if not k.recognize(t, x):
                raise GuardViolation(label, "x", x, t)
            if ref.op == "access" and ref.tag is not None and x.head is not Sym(ref.tag):
                raise GuardViolation(label, "x", x, f"a {t} of kind {ref.tag}")
        if ref.op == "fix":
            return k.fix(t, args[0])
        if ref.op == "count":
            return k.count(t, args[0])
        if ref.op == "kind":
            return k.kind_of(t, args[0])
        return k.access(t, ref.tag, ref.field, args[0])

    def _int_arg(self, op: str, i: int, v: Value) -> int:
        if type(v) is int:
            return v
        if self.guarded:
            raise GuardViolation(op, f"argument {i + 1}", v, "an integer")
        return 0

    def _prim(self, e: Prim, env, depth):
        op = e.op
        args = [self.eval(a, env, depth) for a in e.args]
        if op == "+":
            return sum(self._int_arg(op, i, a) for i, a in enumerate(args))
        if op == "*":
            out = 1
            for i, a in enumerate(args):
                out *= self._int_arg(op, i, a)
            return out
        if op == "-":
            nums = [self._int_arg(op, i, a) for i, a in enumerate(args)]
            return -nums[0] if len(nums) == 1 else nums[0] - nums[1]
        if op == "<":
            return _bool(self._int_arg(op, 0, args[0]) < self._int_arg(op, 1, args[1]))
        if op == "equal":
            return _bool(values_equal(args[0], args[1]))
        if op == "cons":
            return Pair(args[0], args[1])
        if op in ("car", "cdr"):
            x = args[0]
            if type(x) is Pair:
                return x.head if op == "car" else x.tail
            if self.guarded and x is not NIL:
                raise GuardViolation(op, "argument 1", x, "a pair or nil")
            return NIL
        if op in ("atom?", "atom"):
            return _bool(type(args[0]) is not Pair)
        if op == "consp":
            return _bool(type(args[0]) is Pair)
        if op == "not":
            return _bool(args[0] is NIL)
        raise EvalError(f"unknown primitive {op}")  # pragma: no cover


def evaluate(defs: Definitions, expr: Expr | Value, env: Mapping[str, Value] | None = None,
             mode: str = "logic", depth_limit: int = DEFAULT_DEPTH_LIMIT) -> Value:
    """Evaluate an expression (compiled, or as a source form) in ``env``."""
    env = dict(env or {})
    if not isinstance(expr, (Var, Lit, If, Let, And, Or, Call, Prim, Derived, CaseOf)):
        expr = defs.compile_expr(expr, frozenset(env))
    return Evaluator(defs, mode, depth_limit).run(expr, env)


def call(defs: Definitions, name: str, args: Sequence[Value], mode: str = "logic",
         depth_limit: int = DEFAULT_DEPTH_LIMIT) -> Value:
    """Apply a defined or derived function to argument values."""
    return Evaluator(defs, mode, depth_limit).apply(name, args)
