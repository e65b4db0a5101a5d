"""Type definitions, the ``.fty`` event parser, and the validated registry.

A ``.fty`` file is a sequence of S-expression events::

    (deffixtype natural :pred natp :fix nfix)
    (defprod student ((name string) (age nat)))
    (deftagsum shape (:circle ((r nat))) (:square ((side nat))))
    (deflist natlist :elt-type nat)
    (defalist ages :key-type string :val-type nat)
    (defoption maybe-nat nat)
    (deftypes name <type forms>...)
    (define ...) (defines ...) (defvisitor ...)
    (set-fixequiv-hook t) (deffixequiv f) (deffixequiv-mutual f)

Type-level events are validated into an immutable :class:`Schema`.  The
other events are carried through untouched for :mod:`fixkit.lang` and
:mod:`fixkit.visitor` to interpret.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Mapping, Union

from fixkit.values import (
    NIL,
    T,
    Char,
    Pair,
    ParseError,
    Sym,
    Value,
    from_list,
    is_keyword,
    is_proper_list,
    list_items,
    print_value,
    read_all,
)


class SchemaError(Exception):
    """Invalid event or type definition. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = f"{line}:{column}: " if line is not None and column is not None else (
            f"line {line}: " if line is not None else "")
        super().__init__(loc + message)
        self.message = message
        self.line = line
        self.column = column


class UnknownType(SchemaError):
    pass


# ---------------------------------------------------------------------------
# Builtin base catalog


def _natp(x: Value) -> bool:
    return type(x) is int and x >= 0


def _integerp(x: Value) -> bool:
    return type(x) is int


def _stringp(x: Value) -> bool:
    return type(x) is str


def _booleanp(x: Value) -> bool:
    return x is T or x is NIL


def _characterp(x: Value) -> bool:
    return type(x) is Char


def _symbolp(x: Value) -> bool:
    return type(x) is Sym


@dataclass(frozen=True)
class BuiltinBase:
    type_name: str
    pred: str
    fixer: str
    recognize: Callable[[Value], bool]
    fix: Callable[[Value], Value]
    default: Value


BUILTINS: dict[str, BuiltinBase] = {
    b.type_name: b
    for b in [
        BuiltinBase("nat", "natp", "nfix", _natp, lambda x: x if _natp(x) else 0, 0),
        BuiltinBase("int", "integerp", "ifix", _integerp, lambda x: x if _integerp(x) else 0, 0),
        BuiltinBase("string", "stringp", "str-fix", _stringp, lambda x: x if _stringp(x) else "", ""),
        # bool-fix maps every non-nil value to t
        BuiltinBase("bool", "booleanp", "bool-fix", _booleanp, lambda x: NIL if x is NIL else T, NIL),
        BuiltinBase("char", "characterp", "char-fix", _characterp,
                    lambda x: x if _characterp(x) else Char(0), Char(0)),
        BuiltinBase("sym", "symbolp", "symbol-fix", _symbolp, lambda x: x if _symbolp(x) else NIL, NIL),
    ]
}
BUILTIN_BY_PRED = {b.pred: b for b in BUILTINS.values()}
BUILTIN_BY_FIXER = {b.fixer: b for b in BUILTINS.values()}


# ---------------------------------------------------------------------------
# Type definitions


@dataclass(frozen=True)
class Field:
    name: str
    type: str


@dataclass(frozen=True)
class Base:
    pred: str
    fixer: str


@dataclass(frozen=True)
class Prod:
    fields: tuple[Field, ...]


@dataclass(frozen=True)
class Variant:
    tag: str
    fields: tuple[Field, ...]


@dataclass(frozen=True)
class TagSum:
    variants: tuple[Variant, ...]

    def variant(self, tag: str) -> Variant | None:
        for v in self.variants:
            if v.tag == tag:
                return v
        return None


@dataclass(frozen=True)
class ListOf:
    elem: str


@dataclass(frozen=True)
class Alist:
    key: str
    val: str


@dataclass(frozen=True)
class Option:
    some: str


Body = Union[Base, Prod, TagSum, ListOf, Alist, Option]

KIND_NAMES = {Base: "base", Prod: "prod", TagSum: "tagsum", ListOf: "list", Alist: "alist", Option: "option"}


@dataclass(frozen=True)
class TypeDef:
    name: str
    body: Body

    @property
    def kind(self) -> str:
        return KIND_NAMES[type(self.body)]

    def references(self) -> tuple[str, ...]:
        """Type names this definition mentions, in declaration order."""
        b = self.body
        if isinstance(b, Prod):
            return tuple(f.type for f in b.fields)
        if isinstance(b, TagSum):
            return tuple(f.type for v in b.variants for f in v.fields)
        if isinstance(b, ListOf):
            return (b.elem,)
        if isinstance(b, Alist):
            return (b.key, b.val)
        if isinstance(b, Option):
            return (b.some,)
        return ()


def _fields_text(fields: tuple[Field, ...]) -> str:
    return "(" + " ".join(f"({f.name} {f.type})" for f in fields) + ")"


def describe(td: TypeDef) -> str:
    """Canonical event text for a definition."""
    b = td.body
    if isinstance(b, Base):
        return f"(deffixtype {td.name} :pred {b.pred} :fix {b.fixer})"
    if isinstance(b, Prod):
        return f"(defprod {td.name} {_fields_text(b.fields)})"
    if isinstance(b, TagSum):
        arms = " ".join(f"({v.tag} {_fields_text(v.fields)})" for v in b.variants)
        return f"(deftagsum {td.name} {arms})"
    if isinstance(b, ListOf):
        return f"(deflist {td.name} :elt-type {b.elem})"
    if isinstance(b, Alist):
        return f"(defalist {td.name} :key-type {b.key} :val-type {b.val})"
    return f"(defoption {td.name} {b.some})"


@dataclass(frozen=True)
class Clique:
    name: str
    members: tuple[TypeDef, ...]


# ---------------------------------------------------------------------------
# Events


@dataclass(frozen=True)
class CliqueEvent:
    clique: Clique
    line: int
    column: int


@dataclass(frozen=True)
class DefineEvent:
    name: str
    forms: tuple[Value, ...]
    mutual: bool
    line: int
    column: int


@dataclass(frozen=True)
class VisitorEvent:
    name: str
    form: Value
    line: int
    column: int


@dataclass(frozen=True)
class HookEvent:
    enabled: bool
    line: int
    column: int


@dataclass(frozen=True)
class FixequivEvent:
    target: str
    mutual: bool
    options: tuple[tuple[str, Value], ...]
    line: int
    column: int


Event = Union[CliqueEvent, DefineEvent, VisitorEvent, HookEvent, FixequivEvent]

_TYPE_FORMS = ("defprod", "deftagsum", "deflist", "defalist", "defoption")


class _Form:
    """Cursor over the elements of one event form, for error locations."""

    def __init__(self, value: Value, line: int, column: int):
        self.line = line
        self.column = column
        items, tail = list_items(value)
        if tail is not NIL:
            self.fail("event form must be a proper list")
        self.items = items

    def fail(self, message: str):
        raise SchemaError(message, self.line, self.column)

    def name_at(self, i: int, what: str) -> str:
        if i >= len(self.items) or type(self.items[i]) is not Sym or is_keyword(self.items[i]) \
                or self.items[i] in (NIL, T):
            self.fail(f"expected {what}")
        return self.items[i].name

    def options(self, start: int, allowed: tuple[str, ...]) -> dict[str, Value]:
        rest = self.items[start:]
        if len(rest) % 2:
            self.fail("keyword options must come in pairs")
        out: dict[str, Value] = {}
        for k, v in zip(rest[::2], rest[1::2]):
            if not is_keyword(k) or k.name[1:] not in allowed:
                self.fail(f"unknown option {print_value(k)}")
            if k.name[1:] in out:
                self.fail(f"duplicate option {k.name}")
            out[k.name[1:]] = v
        return out


def _type_ref(form: _Form, v: Value, what: str) -> str:
    if type(v) is not Sym or is_keyword(v) or v in (NIL, T):
        form.fail(f"expected a type name for {what}, got {print_value(v)}")
    return v.name


def _parse_fields(form: _Form, spec: Value, owner: str) -> tuple[Field, ...]:
    if not is_proper_list(spec):
        form.fail(f"field list of {owner} must be a proper list")
    fields = []
    for entry in list_items(spec)[0]:
        items, tail = list_items(entry)
        if tail is not NIL or len(items) != 2 or type(items[0]) is not Sym or is_keyword(items[0]):
            form.fail(f"malformed field {print_value(entry)} in {owner}")
        fields.append(Field(items[0].name, _type_ref(form, items[1], f"field {items[0].name}")))
    return tuple(fields)


def _parse_type_form(form: _Form, head: str) -> TypeDef:
    name = form.name_at(1, f"a type name after {head}")
    items = form.items
    if head == "defprod":
        if len(items) != 3:
            form.fail("defprod takes a name and a field list")
        return TypeDef(name, Prod(_parse_fields(form, items[2], name)))
    if head == "deftagsum":
        variants = []
        for arm in items[2:]:
            arm_items, tail = list_items(arm)
            if tail is not NIL or not arm_items or not is_keyword(arm_items[0]) or len(arm_items) > 2:
                form.fail(f"malformed variant {print_value(arm)} in {name}")
            fields = _parse_fields(form, arm_items[1], name) if len(arm_items) == 2 else ()
            variants.append(Variant(arm_items[0].name, fields))
        return TypeDef(name, TagSum(tuple(variants)))
    if head == "deflist":
        opts = form.options(2, ("elt-type",))
        if "elt-type" not in opts:
            form.fail("deflist requires :elt-type")
        return TypeDef(name, ListOf(_type_ref(form, opts["elt-type"], ":elt-type")))
    if head == "defalist":
        opts = form.options(2, ("key-type", "val-type"))
        if set(opts) != {"key-type", "val-type"}:
            form.fail("defalist requires :key-type and :val-type")
        return TypeDef(name, Alist(_type_ref(form, opts["key-type"], ":key-type"),
                                   _type_ref(form, opts["val-type"], ":val-type")))
    if head == "defoption":
        if len(items) != 3:
            form.fail("defoption takes a name and a type")
        return TypeDef(name, Option(_type_ref(form, items[2], "the option's type")))
    raise AssertionError(head)


def _parse_fixtype(form: _Form) -> TypeDef:
    name = form.name_at(1, "a type name after deffixtype")
    opts = form.options(2, ("pred", "fix", "equiv"))
    pred, fixer = opts.get("pred"), opts.get("fix")
    if type(pred) is not Sym or type(fixer) is not Sym:
        form.fail("deffixtype requires :pred and :fix")
    base = BUILTIN_BY_PRED.get(pred.name)
    if base is None:
        form.fail(f"unknown builtin predicate {pred.name}; choose from "
                  + ", ".join(sorted(BUILTIN_BY_PRED)))
    if base.fixer != fixer.name:
        form.fail(f"fixing function {fixer.name} does not belong to {pred.name} (expected {base.fixer})")
    return TypeDef(name, Base(base.pred, base.fixer))


def parse_event(value: Value, line: int = 0, column: int = 0) -> Event:
    form = _Form(value, line, column)
    if not form.items or type(form.items[0]) is not Sym:
        form.fail("event must start with a symbol")
    head = form.items[0].name
    if head in _TYPE_FORMS:
        td = _parse_type_form(form, head)
        return CliqueEvent(Clique(td.name, (td,)), line, column)
    if head == "deffixtype":
        td = _parse_fixtype(form)
        return CliqueEvent(Clique(td.name, (td,)), line, column)
    if head == "deftypes":
        name = form.name_at(1, "a clique name after deftypes")
        members = []
        for sub in form.items[2:]:
            sub_form = _Form(sub, line, column)
            sub_head = sub_form.items[0].name if sub_form.items and type(sub_form.items[0]) is Sym else None
            if sub_head not in _TYPE_FORMS:
                form.fail(f"deftypes member must be one of {', '.join(_TYPE_FORMS)}")
            members.append(_parse_type_form(sub_form, sub_head))
        if not members:
            form.fail("deftypes needs at least one member")
        return CliqueEvent(Clique(name, tuple(members)), line, column)
    if head == "define":
        return DefineEvent(form.name_at(1, "a function name after define"), (value,), False, line, column)
    if head == "defines":
        name = form.name_at(1, "a group name after defines")
        forms = []
        for sub in form.items[2:]:
            if sub is Sym("///"):
                break
            forms.append(sub)
        if not forms:
            form.fail("defines needs at least one define")
        return DefineEvent(name, tuple(forms), True, line, column)
    if head == "defvisitor":
        return VisitorEvent(form.name_at(1, "a visitor name after defvisitor"), value, line, column)
    if head == "set-fixequiv-hook":
        if len(form.items) != 2 or form.items[1] not in (T, NIL):
            form.fail("set-fixequiv-hook takes t or nil")
        return HookEvent(form.items[1] is T, line, column)
    if head in ("deffixequiv", "deffixequiv-mutual"):
        target = form.name_at(1, f"a function name after {head}")
        opts = form.options(2, ("runs", "seed"))
        return FixequivEvent(target, head == "deffixequiv-mutual", tuple(opts.items()), line, column)
    form.fail(f"unknown event {head}")


def parse_events(text: str) -> list[Event]:
    """Parse ``.fty`` text into events, preserving source order."""
    try:
        forms = read_all(text)
    except ParseError as exc:
        raise SchemaError(exc.reason, exc.line, exc.column) from exc
    return [parse_event(v, line, col) for v, line, col in forms]


# ---------------------------------------------------------------------------
# Registry


@dataclass(frozen=True)
class TypeInfo:
    rank: int
    default: Value


class Schema:
    """Validated, immutable registry of type definitions."""

    def __init__(self, types: dict[str, TypeDef], info: dict[str, TypeInfo],
                 cliques: list[tuple[str, ...]]):
        self.types: Mapping[str, TypeDef] = MappingProxyType(dict(types))
        self.info: Mapping[str, TypeInfo] = MappingProxyType(dict(info))
        self.cliques: tuple[tuple[str, ...], ...] = tuple(cliques)
        self._clique_of = {n: c for c in self.cliques for n in c}

    def __contains__(self, name: str) -> bool:
        return name in self.types

    def __getitem__(self, name: str) -> TypeDef:
        try:
            return self.types[name]
        except KeyError:
            raise UnknownType(f"unknown type {name}") from None

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.types)

    def default(self, name: str) -> Value:
        self[name]
        return self.info[name].default

    def rank(self, name: str) -> int:
        self[name]
        return self.info[name].rank

    def clique_of(self, name: str) -> tuple[str, ...]:
        self[name]
        return self._clique_of[name]

    def is_base(self, name: str) -> bool:
        return isinstance(self[name].body, Base)

    def builtin(self, name: str) -> BuiltinBase:
        body = self[name].body
        if not isinstance(body, Base):
            raise SchemaError(f"{name} is not a base type")
        return BUILTIN_BY_PRED[body.pred]

    def tags(self) -> list[Sym]:
        out = []
        for td in self.types.values():
            if isinstance(td.body, TagSum):
                out.extend(Sym(v.tag) for v in td.body.variants)
        return out

    def reachable(self, root: str) -> list[str]:
        """``root`` and every type it references, transitively, in discovery order."""
        self[root]
        seen = [root]
        i = 0
        while i < len(seen):
            for ref in self.types[seen[i]].references():
                if ref not in seen:
                    seen.append(ref)
            i += 1
        return seen

    def resolve(self, name: str) -> str | None:
        return _resolve_name(name, self.types)

    def dump(self) -> str:
        lines = []
        for name, td in self.types.items():
            info = self.info[name]
            lines.append(f"{name}\t{td.kind}\t{info.rank}\t{print_value(info.default)}\t{describe(td)}")
        return "\n".join(lines) + "\n"


def _resolve_name(name: str, known: Mapping[str, TypeDef]) -> str | None:
    """Map a type reference to a registered type name.

    Accepts the type name itself, a builtin predicate (``natp``), or the
    ``-p`` recognizer spelling (``aterm-p``).
    """
    if name in known:
        return name
    base = BUILTIN_BY_PRED.get(name)
    if base is not None and base.type_name in known:
        return base.type_name
    if name.endswith("-p") and name[:-2] in known:
        return name[:-2]
    return None


def _admits_nil(td: TypeDef) -> bool:
    b = td.body
    if isinstance(b, Base):
        return BUILTIN_BY_PRED[b.pred].recognize(NIL)
    if isinstance(b, Prod):
        return not b.fields
    return not isinstance(b, TagSum)


def compute_groundedness(clique: Clique, known: Mapping[str, TypeInfo]) -> dict[str, TypeInfo]:
    """Least fixed point of the "has a finite default" relation for a clique.

    Members are grounded in stages.  At each stage only information from
    earlier stages is used, so the result does not depend on member order
    and a default never refers back to a not-yet-grounded type.
    """
    grounded: dict[str, TypeInfo] = {}

    def lookup(name: str) -> TypeInfo | None:
        return known.get(name) or grounded.get(name)

    def fields_ready(fields: tuple[Field, ...]) -> list[TypeInfo] | None:
        infos = [lookup(f.type) for f in fields]
        return None if any(i is None for i in infos) else infos

    pending = list(clique.members)
    while pending:
        stage: dict[str, TypeInfo] = {}
        for td in pending:
            b = td.body
            if isinstance(b, Base):
                stage[td.name] = TypeInfo(0, BUILTIN_BY_PRED[b.pred].default)
            elif isinstance(b, (ListOf, Alist, Option)):
                stage[td.name] = TypeInfo(0, NIL)
            elif isinstance(b, Prod):
                infos = fields_ready(b.fields)
                if infos is not None:
                    stage[td.name] = TypeInfo(1 + max((i.rank for i in infos), default=0),
                                              from_list(i.default for i in infos))
            else:
                for variant in b.variants:
                    infos = fields_ready(variant.fields)
                    if infos is not None:
                        stage[td.name] = TypeInfo(
                            1 + max((i.rank for i in infos), default=0),
                            Pair(Sym(variant.tag), from_list(i.default for i in infos)))
                        break
        if not stage:
            names = ", ".join(td.name for td in pending)
            raise SchemaError(f"ungrounded clique {clique.name}: no base case for {names}")
        grounded.update(stage)
        pending = [td for td in pending if td.name not in stage]
    return grounded


def _builtin_defs() -> list[TypeDef]:
    return [TypeDef(b.type_name, Base(b.pred, b.fixer)) for b in BUILTINS.values()]


def validate(events: list[Event]) -> Schema:
    """Check type-level events in order and build the registry.

    Non-type events are ignored here.
    """
    types: dict[str, TypeDef] = {}
    info: dict[str, TypeInfo] = {}
    cliques: list[tuple[str, ...]] = []
    for td in _builtin_defs():
        types[td.name] = td
        info[td.name] = TypeInfo(0, BUILTINS[td.name].default)
        cliques.append((td.name,))

    for ev in events:
        if not isinstance(ev, CliqueEvent):
            continue
        clique = _check_clique(ev, types)
        info.update(_grounded_or_fail(clique, info, ev))
        for td in clique.members:
            types[td.name] = td
        cliques.append(tuple(td.name for td in clique.members))
    return Schema(types, info, cliques)


def _grounded_or_fail(clique: Clique, info: Mapping[str, TypeInfo], ev: CliqueEvent) -> dict[str, TypeInfo]:
    try:
        return compute_groundedness(clique, info)
    except SchemaError as exc:
        raise SchemaError(exc.message, ev.line, ev.column) from None


def _check_clique(ev: CliqueEvent, types: Mapping[str, TypeDef]) -> Clique:
    def fail(msg: str):
        raise SchemaError(msg, ev.line, ev.column)

    members = ev.clique.members
    local: dict[str, TypeDef] = {}
    for td in members:
        if td.name in types:
            fail(f"redefinition of type {td.name}")
        if td.name in local:
            fail(f"duplicate type {td.name} in clique {ev.clique.name}")
        local[td.name] = td
    visible = {**types, **local}

    def resolve(ref: str, owner: str) -> str:
        out = _resolve_name(ref, visible)
        if out is None:
            fail(f"unresolved type name {ref} in {owner}")
        return out

    def resolve_fields(fields: tuple[Field, ...], owner: str) -> tuple[Field, ...]:
        seen = set()
        for f in fields:
            if f.name in seen:
                fail(f"duplicate field {f.name} in {owner}")
            seen.add(f.name)
        return tuple(Field(f.name, resolve(f.type, owner)) for f in fields)

    resolved = []
    for td in members:
        b = td.body
        if isinstance(b, Prod):
            body = Prod(resolve_fields(b.fields, td.name))
        elif isinstance(b, TagSum):
            if not b.variants:
                fail(f"tagged sum {td.name} has no variants")
            tags = set()
            variants = []
            for v in b.variants:
                if v.tag in tags:
                    fail(f"duplicate tag {v.tag} in {td.name}")
                tags.add(v.tag)
                variants.append(Variant(v.tag, resolve_fields(v.fields, f"{td.name} {v.tag}")))
            body = TagSum(tuple(variants))
        elif isinstance(b, ListOf):
            body = ListOf(resolve(b.elem, td.name))
        elif isinstance(b, Alist):
            body = Alist(resolve(b.key, td.name), resolve(b.val, td.name))
        elif isinstance(b, Option):
            body = Option(resolve(b.some, td.name))
        else:
            body = b
        resolved.append(TypeDef(td.name, body))

    final = {**types, **{td.name: td for td in resolved}}
    for td in resolved:
        if isinstance(td.body, Option) and _admits_nil(final[td.body.some]):
            fail(f"option {td.name} is ambiguous: nil is already a valid {td.body.some}")
    return Clique(ev.clique.name, tuple(resolved))


def load_schema(text: str) -> Schema:
    return validate(parse_events(text))
