"""Derived operations for every type of a :class:`~fixkit.schema.Schema`.

For each type the kernel provides a recognizer, a fixing function, the
induced equivalence, a structural count, constructors and accessors for
products and sums, the kind function for sums, and seeded generators.

Operations are compiled once per schema into closures; use
:func:`derive` to get the (cached) :class:`Kernel`, or the module-level
wrappers that take the schema as first argument.
"""

from __future__ import annotations

import random
import weakref
from dataclasses import dataclass
from typing import Callable, Sequence

from fixkit.schema import (
    Alist,
    Base,
    ListOf,
    Option,
    Prod,
    Schema,
    SchemaError,
    TagSum,
    UnknownType,
    Variant,
)
from fixkit.values import (
    NIL,
    T,
    Char,
    Pair,
    Sym,
    Value,
    deep_call,
    from_list,
    iter_list,
    kw,
    list_items,
    values_equal,
)

Seed = int | str | random.Random


PERTURB_ATTEMPTS = 4


class KernelError(ValueError):
    """Bad request to a derived operation (wrong tag, field, or arity)."""


@dataclass(frozen=True)
class DerivedOps:
    name: str
    recognize: Callable[[Value], bool]
    fix: Callable[[Value], Value]
    count: Callable[[Value], int]
    default: Value

    def equiv(self, a: Value, b: Value) -> bool:
        return values_equal(self.fix(a), self.fix(b))


def _rng(seed: Seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


# Atom pools for random generation.  Printable-heavy, with every code
# reachable.
_LETTERS = "abcxyzAZ019 _-\"\\"
_SYMBOLS = (NIL, T, kw("k"), Sym("a"), Sym("foo"), Sym("x.y"), Sym("-"))
_JUNK = (7, -4, "junk", kw("zz"), Char(1), Sym("qq"))


def random_string(rng: random.Random) -> str:
    n = rng.choice((0, 0, 1, 2, 3, 5))
    if rng.random() < 0.8:
        return "".join(rng.choice(_LETTERS) for _ in range(n))
    return "".join(chr(rng.randrange(256)) for _ in range(n))


def random_int(rng: random.Random, natural: bool = False) -> int:
    r = rng.random()
    if r < 0.7:
        n = rng.randrange(10)
    elif r < 0.9:
        n = rng.randrange(1001)
    else:
        n = rng.randrange(2 ** 70)
    return n if natural or rng.random() < 0.5 else -n


def random_char(rng: random.Random) -> Char:
    if rng.random() < 0.7:
        return Char(rng.randrange(32, 127))
    return Char(rng.randrange(256))


def random_symbol(rng: random.Random, extra: Sequence[Sym] = ()) -> Sym:
    if extra and rng.random() < 0.5:
        return rng.choice(extra)
    if rng.random() < 0.8:
        return rng.choice(_SYMBOLS)
    return Sym("s" + "".join(rng.choice("abc-?") for _ in range(rng.randrange(3))))


def random_atom(rng: random.Random, symbols: Sequence[Sym] = ()) -> Value:
    r = rng.random()
    if r < 0.35:
        return random_int(rng)
    if r < 0.55:
        return random_string(rng)
    if r < 0.65:
        return random_char(rng)
    return random_symbol(rng, symbols)


def _random_base(pred: str, rng: random.Random) -> Value:
    if pred == "natp":
        return random_int(rng, natural=True)
    if pred == "integerp":
        return random_int(rng)
    if pred == "stringp":
        return random_string(rng)
    if pred == "characterp":
        return random_char(rng)
    if pred == "booleanp":
        return T if rng.random() < 0.5 else NIL
    return random_symbol(rng)


def _split(total: int, parts: int, rng: random.Random) -> list[int]:
    """Random composition of ``total`` into ``parts`` naturals."""
    if parts == 0:
        return []
    cuts = sorted(rng.randint(0, total) for _ in range(parts - 1))
    bounds = [0, *cuts, total]
    return [bounds[i + 1] - bounds[i] for i in range(parts)]


def generate_raw(size: int, seed: Seed, symbols: Sequence[Sym] = ()) -> Value:
    """Arbitrary value with at most ``size`` pairs; ``size`` 0 gives an atom."""
    rng = _rng(seed)

    def raw(budget: int) -> Value:
        if budget <= 0 or rng.random() < 0.25:
            return random_atom(rng, symbols)
        budget -= 1
        if rng.random() < 0.3:
            head_budget = rng.randint(0, budget)
            return Pair(raw(head_budget), raw(budget - head_budget))
        n = rng.randint(0, budget)
        items = [raw(b) for b in _split(budget - n, n, rng)]
        tail = NIL if rng.random() < 0.75 else random_atom(rng, symbols)
        return Pair(random_atom(rng, symbols), from_list(items, tail))

    return raw(size)


def mutate(v: Value, seed: Seed, symbols: Sequence[Sym] = ()) -> Value:
    """Replace one randomly chosen subterm of ``v`` with a small raw value."""
    rng = _rng(seed)
    path = []
    while type(v) is Pair and rng.random() >= 0.3:
        go_head = rng.random() < 0.5
        path.append((v, go_head))
        v = v.head if go_head else v.tail
    out = generate_raw(rng.choice((0, 0, 1, 2)), rng, symbols)
    for parent, went_head in reversed(path):
        out = Pair(out, parent.tail) if went_head else Pair(parent.head, out)
    return out


class Kernel:
    """Compiled derived operations for one schema."""

    def __init__(self, schema: Schema):
        self.schema = schema
        self._rec: dict[str, Callable[[Value], bool]] = {}
        self._fix: dict[str, Callable[[Value], Value]] = {}
        self._count_fixed: dict[str, Callable[[Value], int]] = {}
        self._variant_default: dict[tuple[str, str], Value] = {}
        self.symbols = tuple(schema.tags())
        for name, td in schema.types.items():
            self._compile(name, td.body)
        self.min_count = self._min_counts()
        self.ops = {
            name: DerivedOps(name, self._rec[name], self._fix[name], self._count_of(name), schema.default(name))
            for name in schema.names
        }

    # -- compilation -----------------------------------------------------

    def _compile(self, name: str, body) -> None:
        rec, fix, count = self._rec, self._fix, self._count_fixed
        schema = self.schema

        def spine_ok(ftypes, v):
            for t in ftypes:
                if type(v) is not Pair or not rec[t](v.head):
                    return False
                v = v.tail
            return v is NIL

        def spine_shape(n, v):
            for _ in range(n):
                if type(v) is not Pair:
                    return False
                v = v.tail
            return v is NIL

        def spine_fix(ftypes, v):
            # v already has the right shape
            out, same, cur = [], True, v
            for t in ftypes:
                h = fix[t](cur.head)
                same = same and h is cur.head
                out.append(h)
                cur = cur.tail
            return v if same else from_list(out)

        def spine_count(ftypes, v):
            total = 1
            for t in ftypes:
                total += count[t](v.head)
                v = v.tail
            return total

        if isinstance(body, Base):
            builtin = schema.builtin(name)
            rec[name] = builtin.recognize
            fix[name] = builtin.fix
            count[name] = lambda v: 0

        elif isinstance(body, Prod):
            ftypes = tuple(f.type for f in body.fields)
            default = schema.default(name)
            n = len(ftypes)
            rec[name] = lambda v: spine_ok(ftypes, v)
            fix[name] = lambda v: spine_fix(ftypes, v) if spine_shape(n, v) else default
            count[name] = lambda v: spine_count(ftypes, v)

        elif isinstance(body, TagSum):
            variants: dict[Sym, tuple[str, ...]] = {}
            for variant in body.variants:
                variants[Sym(variant.tag)] = tuple(f.type for f in variant.fields)
            default = schema.default(name)

            def rec_sum(v):
                if type(v) is not Pair:
                    return False
                ftypes = variants.get(v.head) if type(v.head) is Sym else None
                return ftypes is not None and spine_ok(ftypes, v.tail)

            def fix_sum(v):
                if type(v) is not Pair or type(v.head) is not Sym:
                    return default
                ftypes = variants.get(v.head)
                if ftypes is None:
                    return default
                if not spine_shape(len(ftypes), v.tail):
                    return self._variant_default[(name, v.head.name)]
                fields = spine_fix(ftypes, v.tail)
                return v if fields is v.tail else Pair(v.head, fields)

            rec[name] = rec_sum
            fix[name] = fix_sum
            count[name] = lambda v: spine_count(variants[v.head], v.tail)

        elif isinstance(body, ListOf):
            elem = body.elem

            def rec_list(v):
                r = rec[elem]
                while type(v) is Pair:
                    if not r(v.head):
                        return False
                    v = v.tail
                return v is NIL

            def fix_list(v):
                f = fix[elem]
                out, same, cur = [], True, v
                while type(cur) is Pair:
                    h = f(cur.head)
                    same = same and h is cur.head
                    out.append(h)
                    cur = cur.tail
                if same and cur is NIL:
                    return v
                return from_list(out)

            def count_list(v):
                c = count[elem]
                return 1 + sum(1 + c(x) for x in iter_list(v))

            rec[name], fix[name], count[name] = rec_list, fix_list, count_list

        elif isinstance(body, Alist):
            key_t, val_t = body.key, body.val

            def rec_alist(v):
                rk, rv = rec[key_t], rec[val_t]
                while type(v) is Pair:
                    e = v.head
                    if type(e) is not Pair or not rk(e.head) or not rv(e.tail):
                        return False
                    v = v.tail
                return v is NIL

            def fix_alist(v):
                fk, fv = fix[key_t], fix[val_t]
                out, same, cur = [], True, v
                while type(cur) is Pair:
                    e = cur.head
                    cur = cur.tail
                    if type(e) is not Pair:
                        same = False
                        continue
                    k, x = fk(e.head), fv(e.tail)
                    if k is e.head and x is e.tail:
                        out.append(e)
                    else:
                        same = False
                        out.append(Pair(k, x))
                if same and cur is NIL:
                    return v
                return from_list(out)

            def count_alist(v):
                ck, cv = count[key_t], count[val_t]
                return 1 + sum(1 + ck(e.head) + cv(e.tail) for e in iter_list(v))

            rec[name], fix[name], count[name] = rec_alist, fix_alist, count_alist

        elif isinstance(body, Option):
            some = body.some
            rec[name] = lambda v: v is NIL or rec[some](v)
            fix[name] = lambda v: NIL if v is NIL else fix[some](v)
            count[name] = lambda v: 0 if v is NIL else 1 + count[some](v)

        else:  # pragma: no cover
            raise SchemaError(f"unsupported type body for {name}")

        if isinstance(body, TagSum):
            for variant in body.variants:
                self._variant_default[(name, variant.tag)] = Pair(
                    Sym(variant.tag), from_list(schema.default(f.type) for f in variant.fields))

    def _count_of(self, name: str) -> Callable[[Value], int]:
        fix, count = self._fix[name], self._count_fixed[name]
        return lambda v: count(fix(v))

    def _min_counts(self) -> dict[str, int]:
        """Smallest count of any well-typed value, per type (least fixed point)."""
        inf = float("inf")
        best: dict[str, float] = {}
        for name, td in self.schema.types.items():
            b = td.body
            best[name] = 0 if isinstance(b, (Base, Option)) else 1 if isinstance(b, (ListOf, Alist)) else inf
        changed = True
        while changed:
            changed = False
            for name, td in self.schema.types.items():
                b = td.body
                if isinstance(b, Prod):
                    new = 1 + sum(best[f.type] for f in b.fields)
                elif isinstance(b, TagSum):
                    new = 1 + min(sum(best[f.type] for f in v.fields) for v in b.variants)
                else:
                    continue
                if new < best[name]:
                    best[name] = new
                    changed = True
        return {k: int(v) for k, v in best.items()}

    # -- lookups ---------------------------------------------------------

    def _ops(self, name: str) -> DerivedOps:
        try:
            return self.ops[name]
        except KeyError:
            raise UnknownType(f"unknown type {name}") from None

    def _sum(self, name: str) -> TagSum:
        body = self.schema[name].body
        if not isinstance(body, TagSum):
            raise KernelError(f"{name} is not a tagged sum")
        return body

    def _variant(self, name: str, tag: str | Sym) -> Variant:
        tag_name = tag.name if isinstance(tag, Sym) else tag
        if not tag_name.startswith(":"):
            tag_name = ":" + tag_name
        variant = self._sum(name).variant(tag_name)
        if variant is None:
            raise KernelError(f"{name} has no variant {tag_name}")
        return variant

    def field_list(self, name: str, tag: str | Sym | None = None):
        body = self.schema[name].body
        if isinstance(body, Prod):
            if tag is not None:
                raise KernelError(f"{name} is a product; no tag expected")
            return body.fields
        if isinstance(body, TagSum):
            if tag is None:
                raise KernelError(f"{name} is a tagged sum; a tag is required")
            return self._variant(name, tag).fields
        raise KernelError(f"{name} has no constructor")

    # -- operations ------------------------------------------------------

    # Deeply nested inputs fall back to a large-stack worker thread.

    def recognize(self, name: str, v: Value) -> bool:
        fn = self._ops(name).recognize
        try:
            return fn(v)
        except RecursionError:
            return deep_call(fn, v)

    def fix(self, name: str, v: Value) -> Value:
        fn = self._ops(name).fix
        try:
            return fn(v)
        except RecursionError:
            return deep_call(fn, v)

    def equiv(self, name: str, a: Value, b: Value) -> bool:
        fn = self._ops(name).equiv
        try:
            return fn(a, b)
        except RecursionError:
            return deep_call(fn, a, b)

    def count(self, name: str, v: Value) -> int:
        fn = self._ops(name).count
        try:
            return fn(v)
        except RecursionError:
            return deep_call(fn, v)

    def default(self, name: str) -> Value:
        return self._ops(name).default

    def count_direct(self, name: str) -> Callable[[Value], int]:
        """Count function that skips fixing; only meaningful on well-typed values."""
        self._ops(name)
        return self._count_fixed[name]

    def variant_default(self, name: str, tag: str | Sym) -> Value:
        variant = self._variant(name, tag)
        return self._variant_default[(name, variant.tag)]

    def construct(self, name: str, tag: str | Sym | None, fields: Sequence[Value]) -> Value:
        self._ops(name)
        decl = self.field_list(name, tag)
        if len(fields) != len(decl):
            raise KernelError(f"{name}{' ' + str(tag) if tag else ''} takes {len(decl)} fields, got {len(fields)}")
        fixed = from_list(self._fix[f.type](x) for f, x in zip(decl, fields))
        if tag is None:
            return fixed
        return Pair(Sym(self._variant(name, tag).tag), fixed)

    def access(self, name: str, tag: str | Sym | None, field: str, v: Value) -> Value:
        self._ops(name)
        decl = self.field_list(name, tag)
        for index, f in enumerate(decl):
            if f.name == field:
                break
        else:
            raise KernelError(f"{name} has no field {field}")
        fv = self._fix[name](v)
        if tag is not None:
            variant = self._variant(name, tag)
            if fv.head is not Sym(variant.tag):
                fv = self._variant_default[(name, variant.tag)]
            fv = fv.tail
        for _ in range(index):
            fv = fv.tail
        return fv.head

    def fields_of(self, name: str, v: Value) -> tuple[Sym | None, list[Value]]:
        """Kind (for sums) and field values of ``fix(name, v)``."""
        body = self.schema[name].body
        fv = self._fix[name](v)
        if isinstance(body, Prod):
            return None, list_items(fv)[0]
        if isinstance(body, TagSum):
            return fv.head, list_items(fv.tail)[0]
        raise KernelError(f"{name} has no fields")

    def kind_of(self, name: str, v: Value) -> Sym:
        self._ops(name)
        self._sum(name)
        return self._fix[name](v).head

    # -- generation ------------------------------------------------------

    def generate_typed(self, name: str, size: int, seed: Seed) -> Value:
        """Well-typed value whose count is at most ``min_count(name) + size``.

        Sum variants are chosen uniformly among those whose extra minimal
        count fits the remaining budget, so size 0 only yields minimal shapes.
        """
        self._ops(name)
        rng = _rng(seed)
        types, minc = self.schema.types, self.min_count

        def gen(t: str, budget: int) -> Value:
            body = types[t].body
            if isinstance(body, Base):
                return _random_base(body.pred, rng)
            if isinstance(body, Option):
                cost = 1 + minc[body.some]
                if budget >= cost and rng.random() < 0.6:
                    return gen(body.some, budget - cost)
                return NIL
            if isinstance(body, Prod):
                return gen_fields(body.fields, budget)
            if isinstance(body, TagSum):
                base = min(sum(minc[f.type] for f in v.fields) for v in body.variants)
                fits = []
                for v in body.variants:
                    extra = sum(minc[f.type] for f in v.fields) - base
                    if extra <= budget:
                        fits.append((v, extra))
                variant, extra = rng.choice(fits)
                return Pair(Sym(variant.tag), gen_fields(variant.fields, budget - extra))
            if isinstance(body, ListOf):
                cost = 1 + minc[body.elem]
                items = []
                while budget >= cost and rng.random() < 0.7:
                    budget -= cost
                    spend = rng.randint(0, budget)
                    budget -= spend
                    items.append(gen(body.elem, spend))
                return from_list(items)
            # Alist
            cost = 1 + minc[body.key] + minc[body.val]
            items = []
            while budget >= cost and rng.random() < 0.7:
                budget -= cost
                spend = rng.randint(0, budget)
                budget -= spend
                kb, vb = _split(spend, 2, rng)
                items.append(Pair(gen(body.key, kb), gen(body.val, vb)))
            return from_list(items)

        def gen_fields(fields, budget: int) -> Value:
            spend = rng.randint(0, budget)
            shares = _split(spend, len(fields), rng)
            return from_list(gen(f.type, b) for f, b in zip(fields, shares))

        return gen(name, size)

    def generate_fuzz(self, name: str, size: int, seed: Seed) -> Value:
        """Mixed-quality input for law checks: raw, typed, equivalent-but-ill-typed, or mutated."""
        rng = _rng(seed)
        r = rng.random()
        if r < 0.25:
            return generate_raw(size, rng, self.symbols)
        typed = self.generate_typed(name, size, rng)
        if r < 0.5:
            return typed
        if r < 0.75:
            return self.perturb(name, typed, rng)
        return mutate(typed, rng, self.symbols)

    def perturb(self, name: str, v: Value, seed: Seed) -> Value:
        """A value equivalent to ``v`` at ``name``, usually not well-typed.

        Ill-typed regions are introduced only where fixing maps them back:
        junk in place of base defaults, junk spines in place of default
        witnesses, improper list tails and non-pair alist entries.
        """
        self._ops(name)
        rng = _rng(seed)
        types = self.schema.types

        def junk() -> Value:
            return rng.choice(_JUNK)

        def go(t: str, fv: Value) -> Value:
            body = types[t].body
            if isinstance(body, Base):
                return perturb_base(body.pred, fv)
            if isinstance(body, Option):
                if fv is NIL:
                    return fv
                out = go(body.some, fv)
                # nil would read back as the none-case
                return fv if out is NIL else out
            if isinstance(body, Prod):
                if values_equal(fv, self.ops[t].default) and rng.random() < 0.3:
                    return junk()
                return from_list(go(f.type, x) for f, x in zip(body.fields, iter_list(fv)))
            if isinstance(body, TagSum):
                if values_equal(fv, self.ops[t].default) and rng.random() < 0.3:
                    return junk()
                variant = body.variant(fv.head.name)
                if values_equal(fv, self._variant_default[(t, variant.tag)]) and rng.random() < 0.3:
                    return Pair(fv.head, junk())
                return Pair(fv.head, from_list(go(f.type, x) for f, x in zip(variant.fields, iter_list(fv.tail))))
            items = []
            for x in iter_list(fv):
                if isinstance(body, Alist):
                    if rng.random() < 0.2:
                        items.append(random_atom(rng))
                    items.append(Pair(go(body.key, x.head), go(body.val, x.tail)))
                else:
                    items.append(go(body.elem, x))
            tail = junk() if rng.random() < 0.3 else NIL
            return from_list(items, tail)

        def perturb_base(pred: str, fv: Value) -> Value:
            if rng.random() < 0.5:
                return fv
            if pred in ("natp", "integerp") and fv == 0 and type(fv) is int:
                return rng.choice(("s", NIL, Char(65), Pair(1, 2), kw("k")) + ((-3, -1) if pred == "natp" else ()))
            if pred == "stringp" and fv == "":
                return rng.choice((7, NIL, Char(0), Pair("a", NIL)))
            if pred == "characterp" and fv is Char(0):
                return rng.choice((0, "\x00", NIL))
            if pred == "symbolp" and fv is NIL:
                return rng.choice((0, "nil", Pair(NIL, NIL)))
            if pred == "booleanp" and fv is T:
                return rng.choice((5, "x", kw("k"), Pair(T, T)))
            return fv

        fv = self._fix[name](v)
        rec = self._rec[name]
        out = fv
        for _ in range(PERTURB_ATTEMPTS):
            out = go(name, fv)
            if not rec(out):
                break
        return out


_KERNELS: "weakref.WeakKeyDictionary[Schema, Kernel]" = weakref.WeakKeyDictionary()


def derive(schema: Schema) -> Kernel:
    """Kernel for ``schema``, compiled on first use and cached."""
    kernel = _KERNELS.get(schema)
    if kernel is None:
        kernel = _KERNELS[schema] = Kernel(schema)
    return kernel


def recognize(schema: Schema, name: str, v: Value) -> bool:
    return derive(schema).recognize(name, v)


def fix(schema: Schema, name: str, v: Value) -> Value:
    return derive(schema).fix(name, v)


def equiv(schema: Schema, name: str, a: Value, b: Value) -> bool:
    return derive(schema).equiv(name, a, b)


def count(schema: Schema, name: str, v: Value) -> int:
    return derive(schema).count(name, v)


def construct(schema: Schema, name: str, tag: str | Sym | None, fields: Sequence[Value]) -> Value:
    return derive(schema).construct(name, tag, fields)


def access(schema: Schema, name: str, tag: str | Sym | None, field: str, v: Value) -> Value:
    return derive(schema).access(name, tag, field, v)


def kind_of(schema: Schema, name: str, v: Value) -> Sym:
    return derive(schema).kind_of(name, v)


def generate_typed(schema: Schema, name: str, size: int, seed: Seed) -> Value:
    return derive(schema).generate_typed(name, size, seed)
