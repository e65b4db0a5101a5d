"""Derived traversals that collect from, or rewrite, typed values.

A visitor names a root type, a mode, and an action per target type::

    (defvisitor collect-nums :type aterm :collect (:target aterm num-vals))
    (defvisitor negate-nums :type aterm :transform (:target aterm negate-num))

Traversal is depth-first in field declaration order and list order, and
always runs over ``fix(root, v)``.  ``collect`` applies the action
before descending (so targets nested in targets are visited too) and
concatenates the returned lists.  ``transform`` rebuilds bottom-up:
children first, then the action at target nodes, fixing each result at
its node's type.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from fixkit.kernel import Kernel
from fixkit.lang import Definitions, EvalError, Evaluator
from fixkit.laws import MAX_SIZE, LawReport, law_rng
from fixkit.schema import Alist, ListOf, Option, Prod, Schema, TagSum
from fixkit.values import NIL, Pair, Sym, Value, from_list, is_keyword, list_items, print_value, values_equal

Action = Callable[[Value], Value]


class VisitorError(Exception):
    """Malformed visitor, or an action failed at ``path``."""

    def __init__(self, message: str, path: str | None = None):
        super().__init__(f"at {path}: {message}" if path else message)
        self.path = path


@dataclass
class VisitorSpec:
    name: str
    root: str
    mode: str  # "collect" or "transform"
    targets: dict[str, str | Action]
    warnings: list[str] = field(default_factory=list)


def reachable_types(schema: Schema, root: str) -> list[str]:
    """Least set containing ``root`` and closed under type references, in discovery order."""
    return schema.reachable(root)


def parse_visitor(form: Value, defs: Definitions) -> VisitorSpec:
    items, tail = list_items(form)
    if tail is not NIL or len(items) < 5 or type(items[1]) is not Sym:
        raise VisitorError(f"malformed defvisitor: {print_value(form)}")
    name = items[1].name
    if items[2] is not Sym(":type") or type(items[3]) is not Sym:
        raise VisitorError(f"defvisitor {name}: expected :type <root>")
    root = defs.schema.resolve(items[3].name)
    if root is None:
        raise VisitorError(f"defvisitor {name}: unknown type {items[3].name}")
    mode_kw = items[4]
    if mode_kw not in (Sym(":collect"), Sym(":transform")):
        raise VisitorError(f"defvisitor {name}: expected :collect or :transform")
    targets: dict[str, str | Action] = {}
    for entry in items[5:]:
        parts, ptail = list_items(entry)
        if ptail is not NIL or len(parts) != 3 or parts[0] is not Sym(":target") \
                or type(parts[1]) is not Sym or type(parts[2]) is not Sym or is_keyword(parts[2]):
            raise VisitorError(f"defvisitor {name}: malformed target {print_value(entry)}")
        target = defs.schema.resolve(parts[1].name)
        if target is None:
            raise VisitorError(f"defvisitor {name}: unknown target type {parts[1].name}")
        if target in targets:
            raise VisitorError(f"defvisitor {name}: duplicate target {target}")
        targets[target] = parts[2].name
    if not targets:
        raise VisitorError(f"defvisitor {name}: no targets")
    spec = VisitorSpec(name, root, mode_kw.name[1:], targets)
    check_visitor(spec, defs)
    return spec


def check_visitor(spec: VisitorSpec, defs: Definitions) -> None:
    """Validate action signatures; record unreachable targets as warnings."""
    reachable = reachable_types(defs.schema, spec.root)
    for target, action in spec.targets.items():
        if target not in reachable:
            spec.warnings.append(f"visitor {spec.name}: target {target} is not reachable from {spec.root}")
        if isinstance(action, str):
            fn = defs.functions.get(action)
            if fn is None:
                raise VisitorError(f"visitor {spec.name}: unknown action {action}")
            if len(fn.formals) != 1 or fn.formals[0].type != target:
                raise VisitorError(f"visitor {spec.name}: action {action} must take one formal of type {target}")


class _Walker:
    def __init__(self, defs: Definitions, spec: VisitorSpec):
        self.kernel: Kernel = defs.kernel
        self.schema = defs.schema
        self.spec = spec
        evaluator = Evaluator(defs, "logic")
        self.actions: dict[str, Action] = {}
        for t, action in spec.targets.items():
            if isinstance(action, str):
                self.actions[t] = lambda v, fn=action: evaluator.apply(fn, [v])
            else:
                self.actions[t] = action
        # types from which some target can be reached; others are skipped
        self.live = {t for t in self.schema.names
                     if any(x in spec.targets for x in reachable_types(self.schema, t))}

    def act(self, t: str, v: Value, path: str) -> Value:
        try:
            return self.actions[t](v)
        except EvalError as exc:
            raise VisitorError(str(exc), path) from exc

    def children(self, t: str, v: Value):
        """(type, value, path-label) for each direct typed child of well-typed ``v``."""
        body = self.schema[t].body
        if isinstance(body, Prod):
            for f, x in zip(body.fields, list_items(v)[0]):
                yield f.type, x, f".{f.name}"
        elif isinstance(body, TagSum):
            variant = body.variant(v.head.name)
            for f, x in zip(variant.fields, list_items(v.tail)[0]):
                yield f.type, x, f".{f.name}"
        elif isinstance(body, ListOf):
            for i, x in enumerate(list_items(v)[0]):
                yield body.elem, x, f"[{i}]"
        elif isinstance(body, Alist):
            for i, e in enumerate(list_items(v)[0]):
                yield body.key, e.head, f"[{i}].key"
                yield body.val, e.tail, f"[{i}].val"
        elif isinstance(body, Option):
            if v is not NIL:
                yield body.some, v, ".some"

    def collect(self, v: Value) -> list[Value]:
        out: list[Value] = []

        def walk(t: str, x: Value, path: str) -> None:
            if t in self.actions:
                out.extend(list_items(self.act(t, x, path))[0])
            if t not in self.live:
                return
            for ct, cx, label in self.children(t, x):
                walk(ct, cx, path + label)

        root = self.spec.root
        walk(root, self.kernel.fix(root, v), root)
        return out

    def transform(self, v: Value) -> Value:
        k = self.kernel

        def rebuild(t: str, x: Value, path: str) -> Value:
            if t not in self.live:
                return x
            body = self.schema[t].body
            if isinstance(body, (Prod, TagSum)):
                new = [rebuild(ct, cx, path + label) for ct, cx, label in self.children(t, x)]
                node = from_list(new) if isinstance(body, Prod) else Pair(x.head, from_list(new))
            elif isinstance(body, ListOf):
                node = from_list(rebuild(ct, cx, path + label) for ct, cx, label in self.children(t, x))
            elif isinstance(body, Alist):
                kids = list(self.children(t, x))
                node = from_list(Pair(rebuild(*kids[i][:2], path + kids[i][2]),
                                      rebuild(*kids[i + 1][:2], path + kids[i + 1][2]))
                                 for i in range(0, len(kids), 2))
            elif isinstance(body, Option):
                node = x if x is NIL else rebuild(body.some, x, path + ".some")
            else:
                node = x
            node = k.fix(t, node)
            if t in self.actions:
                node = k.fix(t, self.act(t, node, path))
            return node

        root = self.spec.root
        return rebuild(root, k.fix(root, v), root)


def visit_collect(defs: Definitions, spec: VisitorSpec, v: Value) -> Value:
    """Concatenated action outputs over every target occurrence, as a list value."""
    if spec.mode != "collect":
        raise VisitorError(f"visitor {spec.name} is not a collect visitor")
    return from_list(_Walker(defs, spec).collect(v))


def visit_transform(defs: Definitions, spec: VisitorSpec, v: Value) -> Value:
    if spec.mode != "transform":
        raise VisitorError(f"visitor {spec.name} is not a transform visitor")
    return _Walker(defs, spec).transform(v)


def run_visitor(defs: Definitions, spec: VisitorSpec, v: Value) -> Value:
    if spec.mode == "collect":
        return visit_collect(defs, spec, v)
    return visit_transform(defs, spec, v)


def identity_transform(spec: VisitorSpec) -> VisitorSpec:
    """Transform over the same root and targets whose actions change nothing."""
    return VisitorSpec(f"{spec.name}/identity", spec.root, "transform",
                       {t: (lambda x: x) for t in spec.targets})


def check_visitor_laws(defs: Definitions, spec: VisitorSpec, runs: int, seed: int | str) -> list[LawReport]:
    """Visitor invariants over raw and typed inputs."""
    kernel = defs.kernel
    root = spec.root
    ident = identity_transform(spec)
    reports = []

    def law(name: str, body: Callable[[random.Random], str | None]) -> None:
        rng = law_rng(seed, name, spec.name)
        for run in range(runs):
            v = kernel.generate_fuzz(root, rng.randint(0, MAX_SIZE), rng)
            try:
                problem = body(v)
            except VisitorError as exc:
                problem = f"error {exc}"
            if problem:
                reports.append(LawReport(name, spec.name, seed, runs, False,
                                         f"run {run}: v={print_value(v)}: {problem}"))
                return
        reports.append(LawReport(name, spec.name, seed, runs, True))

    def fix_invariant(v):
        a, b = run_visitor(defs, spec, v), run_visitor(defs, spec, kernel.fix(root, v))
        if not values_equal(a, b):
            return f"{print_value(a)} vs {print_value(b)} on the fixed input"

    def identity_is_fix(v):
        out = visit_transform(defs, ident, v)
        if not values_equal(out, kernel.fix(root, v)):
            return f"identity transform gave {print_value(out)}"

    law("visit-fix-invariant", fix_invariant)
    law("visit-identity-fix", identity_is_fix)
    if spec.mode == "transform":
        def recognized(v):
            out = visit_transform(defs, spec, v)
            if not kernel.recognize(root, out):
                return f"result {print_value(out)} is not a {root}"
        law("visit-recognized", recognized)
    else:
        def stable(v):
            a = visit_collect(defs, spec, v)
            b = visit_collect(defs, spec, visit_transform(defs, ident, v))
            if not values_equal(a, b):
                return f"{print_value(a)} vs {print_value(b)} after identity transform"
        law("visit-collect-stable", stable)
    return reports
