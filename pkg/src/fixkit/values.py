"""Untyped value universe and its S-expression text encoding.

A value is one of:

* ``int``  -- arbitrary precision integer (never ``bool``)
* :class:`Char` -- a character with code 0..255
* ``str``  -- a string whose characters all have codes 0..255
* :class:`Sym` -- a symbol; ``nil`` and ``t`` are distinguished, names
  starting with ``:`` are keywords
* :class:`Pair` -- an immutable cons cell

Symbols and characters are interned, so atoms compare by identity or by
ordinary Python equality.  Pairs compare structurally through
:func:`values_equal`, which is iterative and safe on long lists.
"""

from __future__ import annotations

import re
import sys
import threading
from typing import Any, Callable, Iterable, Iterator, Union

__all__ = [
    "Char",
    "NIL",
    "Pair",
    "ParseError",
    "Sym",
    "T",
    "Value",
    "deep_call",
    "from_list",
    "is_keyword",
    "is_proper_list",
    "is_value",
    "iter_list",
    "kw",
    "list_items",
    "print_value",
    "read_all",
    "read_value",
    "values_equal",
]

MAX_CHAR_CODE = 255

_INT_RE = re.compile(r"-?[0-9]+\Z")
_WHITESPACE = " \t\n\r\f\v"
_DELIMITERS = frozenset(_WHITESPACE + "()\";")
_FORBIDDEN_IN_SYMBOL = frozenset(_WHITESPACE + "()\";'`,\\")

_CHAR_NAMES = {
    "Nul": 0,
    "Tab": 9,
    "Newline": 10,
    "Page": 12,
    "Return": 13,
    "Space": 32,
    "Rubout": 127,
}
_CHAR_NAME_OF = {code: name for name, code in _CHAR_NAMES.items()}
_CHAR_NAME_LOOKUP = {name.lower(): code for name, code in _CHAR_NAMES.items()}


class ParseError(ValueError):
    """Malformed S-expression text, located at a 1-based line and column."""

    def __init__(self, reason: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {reason}")
        self.reason = reason
        self.line = line
        self.column = column


def _symbol_name_problem(name: str) -> str | None:
    if not name:
        return "empty symbol name"
    if name == ".":
        return "'.' is not a symbol"
    if name[0] == "#":
        return "symbol names may not start with '#'"
    if _INT_RE.match(name):
        return "symbol name reads as an integer"
    for ch in name:
        if ch in _FORBIDDEN_IN_SYMBOL:
            return f"character {ch!r} not allowed in a symbol"
        if ord(ch) > MAX_CHAR_CODE:
            return f"character {ch!r} outside the 8-bit character set"
    return None


class Sym:
    """An interned symbol. ``Sym("x") is Sym("x")`` always holds."""

    __slots__ = ("name",)
    _table: dict[str, "Sym"] = {}

    def __new__(cls, name: str) -> "Sym":
        found = cls._table.get(name)
        if found is not None:
            return found
        problem = _symbol_name_problem(name)
        if problem:
            raise ValueError(f"invalid symbol name {name!r}: {problem}")
        self = object.__new__(cls)
        object.__setattr__(self, "name", name)
        cls._table[name] = self
        return self

    def __setattr__(self, key, value):
        raise AttributeError("Sym is immutable")

    def __reduce__(self):
        return (Sym, (self.name,))

    @property
    def is_keyword(self) -> bool:
        return self.name.startswith(":")

    def __repr__(self) -> str:
        return f"Sym({self.name!r})"

    def __str__(self) -> str:
        return self.name


class Char:
    """An interned 8-bit character."""

    __slots__ = ("code",)
    _table: dict[int, "Char"] = {}

    def __new__(cls, code: int) -> "Char":
        found = cls._table.get(code)
        if found is not None:
            return found
        if type(code) is not int or not 0 <= code <= MAX_CHAR_CODE:
            raise ValueError(f"character code out of range: {code!r}")
        self = object.__new__(cls)
        object.__setattr__(self, "code", code)
        cls._table[code] = self
        return self

    def __setattr__(self, key, value):
        raise AttributeError("Char is immutable")

    def __reduce__(self):
        return (Char, (self.code,))

    def __repr__(self) -> str:
        return f"Char({self.code})"


class Pair:
    """Immutable cons cell. Hashes are computed once, at construction."""

    __slots__ = ("head", "tail", "_hash")

    def __init__(self, head: "Value", tail: "Value"):
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "tail", tail)
        object.__setattr__(self, "_hash", hash((0x5EED, hash(head), hash(tail))))

    def __setattr__(self, key, value):
        raise AttributeError("Pair is immutable")

    def __reduce__(self):
        return (Pair, (self.head, self.tail))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pair):
            return NotImplemented
        return values_equal(self, other)

    def __ne__(self, other) -> bool:
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __repr__(self) -> str:
        return f"Pair<{print_value(self)}>"


Value = Union[int, str, Char, Sym, Pair]

NIL = Sym("nil")
T = Sym("t")


def kw(name: str) -> Sym:
    """Keyword symbol; ``kw("num")`` and ``kw(":num")`` are the same."""
    return Sym(name if name.startswith(":") else ":" + name)


def is_keyword(v: Value) -> bool:
    return type(v) is Sym and v.name.startswith(":")


def is_value(v) -> bool:
    """True iff ``v`` belongs to the value universe (checked deeply)."""
    stack = [v]
    while stack:
        x = stack.pop()
        tx = type(x)
        if tx is Pair:
            stack.append(x.head)
            stack.append(x.tail)
        elif tx is str:
            if any(ord(c) > MAX_CHAR_CODE for c in x):
                return False
        elif tx not in (int, Sym, Char):
            return False
    return True


def values_equal(a: Value, b: Value) -> bool:
    """Structural equality: same variant and recursively equal parts."""
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x is y:
            continue
        tx = type(x)
        if tx is not type(y):
            return False
        if tx is Pair:
            if x._hash != y._hash:
                return False
            stack.append((x.tail, y.tail))
            stack.append((x.head, y.head))
        elif tx is Sym or tx is Char:
            # interned
            return False
        elif x != y:
            return False
    return True


DEEP_STACK_BYTES = 512 * 1024 * 1024
DEEP_RECURSION_LIMIT = 400_000


def deep_call(fn: Callable[..., Any], *args: Any) -> Any:
    """Call ``fn(*args)`` on a worker thread with a large stack.

    Structural recursion over deeply nested values outgrows the default
    interpreter limit; callers retry here after a ``RecursionError``.  Only
    pure functions should be retried this way.
    """
    box: dict[str, Any] = {}

    def target() -> None:
        try:
            box["value"] = fn(*args)
        except BaseException as exc:  # re-raised on the calling thread
            box["error"] = exc

    old_stack = threading.stack_size(DEEP_STACK_BYTES)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, DEEP_RECURSION_LIMIT))
    try:
        worker = threading.Thread(target=target, name="fixkit-deep")
        worker.start()
        worker.join()
    finally:
        threading.stack_size(old_stack)
        sys.setrecursionlimit(old_limit)
    if "error" in box:
        raise box["error"]
    return box["value"]


def from_list(items: Iterable[Value], tail: Value = NIL) -> Value:
    out = tail
    for item in reversed(list(items)):
        out = Pair(item, out)
    return out


def iter_list(v: Value) -> Iterator[Value]:
    """Elements along the Pair spine of ``v``; the final tail is ignored."""
    while type(v) is Pair:
        yield v.head
        v = v.tail


def list_items(v: Value) -> tuple[list[Value], Value]:
    """Split ``v`` into its spine elements and the terminating atom."""
    items = []
    while type(v) is Pair:
        items.append(v.head)
        v = v.tail
    return items, v


def is_proper_list(v: Value) -> bool:
    while type(v) is Pair:
        v = v.tail
    return v is NIL


# ---------------------------------------------------------------------------
# Printer


def _print_char(c: Char) -> str:
    name = _CHAR_NAME_OF.get(c.code)
    if name is not None:
        return "#\\" + name
    if 33 <= c.code <= 126:
        return "#\\" + chr(c.code)
    return f"#\\Code{c.code}"


def _print_string(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _print_into(v: Value, out: list[str]) -> None:
    tv = type(v)
    if tv is Pair:
        out.append("(")
        first = True
        while type(v) is Pair:
            if not first:
                out.append(" ")
            _print_into(v.head, out)
            first = False
            v = v.tail
        if v is not NIL:
            out.append(" . ")
            _print_into(v, out)
        out.append(")")
    elif tv is int:
        out.append(str(v))
    elif tv is Sym:
        out.append(v.name)
    elif tv is str:
        out.append(_print_string(v))
    elif tv is Char:
        out.append(_print_char(v))
    else:
        raise TypeError(f"not a value: {v!r}")


def print_value(v: Value) -> str:
    """Canonical text for ``v``; ``read_value(print_value(v))`` equals ``v``."""
    out: list[str] = []
    try:
        _print_into(v, out)
    except RecursionError:
        out.clear()
        deep_call(_print_into, v, out)
    return "".join(out)


# ---------------------------------------------------------------------------
# Reader


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def where(self, pos: int | None = None) -> tuple[int, int]:
        pos = self.pos if pos is None else pos
        line = self.text.count("\n", 0, pos) + 1
        start = self.text.rfind("\n", 0, pos) + 1
        return line, pos - start + 1

    def error(self, reason: str, pos: int | None = None) -> ParseError:
        line, col = self.where(pos)
        return ParseError(reason, line, col)

    def skip_blank(self) -> None:
        text, n = self.text, len(self.text)
        while self.pos < n:
            ch = text[self.pos]
            if ch in _WHITESPACE:
                self.pos += 1
            elif ch == ";":
                end = text.find("\n", self.pos)
                self.pos = n if end < 0 else end + 1
            else:
                break

    def at_end(self) -> bool:
        self.skip_blank()
        return self.pos >= len(self.text)

    def token(self) -> str:
        text, n, start = self.text, len(self.text), self.pos
        while self.pos < n and text[self.pos] not in _DELIMITERS:
            self.pos += 1
        return text[start:self.pos]

    def read(self) -> Value:
        self.skip_blank()
        if self.pos >= len(self.text):
            raise self.error("unexpected end of input")
        ch = self.text[self.pos]
        if ch == "(":
            return self.read_list()
        if ch == ")":
            raise self.error("unbalanced ')'")
        if ch == '"':
            return self.read_string()
        if ch in "'`,":
            raise self.error("quote syntax is not supported")
        if ch == "#":
            return self.read_char()
        start = self.pos
        tok = self.token()
        if _INT_RE.match(tok):
            return int(tok)
        if tok == ".":
            raise self.error("unexpected '.'", start)
        problem = _symbol_name_problem(tok)
        if problem:
            raise self.error(problem, start)
        return Sym(tok)

    def read_list(self) -> Value:
        open_pos = self.pos
        self.pos += 1
        items: list[Value] = []
        tail: Value = NIL
        while True:
            self.skip_blank()
            if self.pos >= len(self.text):
                raise self.error("unclosed '('", open_pos)
            ch = self.text[self.pos]
            if ch == ")":
                self.pos += 1
                break
            if ch == "." and self._lone_dot():
                dot_pos = self.pos
                if not items:
                    raise self.error("'.' with no preceding element", dot_pos)
                self.pos += 1
                tail = self.read()
                self.skip_blank()
                if self.pos >= len(self.text):
                    raise self.error("unclosed '('", open_pos)
                if self.text[self.pos] != ")":
                    raise self.error("expected ')' after dotted tail")
                self.pos += 1
                break
            items.append(self.read())
        return from_list(items, tail)

    def _lone_dot(self) -> bool:
        nxt = self.pos + 1
        return nxt >= len(self.text) or self.text[nxt] in _DELIMITERS

    def read_string(self) -> str:
        open_pos = self.pos
        self.pos += 1
        text, n = self.text, len(self.text)
        chars: list[str] = []
        while True:
            if self.pos >= n:
                raise self.error("unterminated string", open_pos)
            ch = text[self.pos]
            if ch == '"':
                self.pos += 1
                break
            if ch == "\\":
                self.pos += 1
                if self.pos >= n:
                    raise self.error("unterminated string", open_pos)
                ch = text[self.pos]
            if ord(ch) > MAX_CHAR_CODE:
                raise self.error(f"character {ch!r} outside the 8-bit character set")
            chars.append(ch)
            self.pos += 1
        return "".join(chars)

    def read_char(self) -> Char:
        start = self.pos
        text, n = self.text, len(self.text)
        if self.pos + 2 > n or text[self.pos + 1] != "\\":
            raise self.error("unsupported '#' syntax")
        self.pos += 2
        if self.pos >= n:
            raise self.error("character literal missing its character", start)
        # The first character is taken literally, even a delimiter.
        first = text[self.pos]
        self.pos += 1
        rest = self.token()
        if not rest:
            if ord(first) > MAX_CHAR_CODE:
                raise self.error(f"character {first!r} outside the 8-bit character set", start)
            return Char(ord(first))
        name = first + rest
        code = _CHAR_NAME_LOOKUP.get(name.lower())
        if code is not None:
            return Char(code)
        if name.lower().startswith("code") and name[4:].isdigit():
            code = int(name[4:])
            if code <= MAX_CHAR_CODE:
                return Char(code)
        raise self.error(f"unknown character name {name!r}", start)


def read_value(text: str) -> Value:
    """Read exactly one S-expression; only whitespace may follow it."""
    reader = _Reader(text)
    value = reader.read()
    if not reader.at_end():
        raise reader.error("unexpected text after value")
    return value


def read_all(text: str) -> list[tuple[Value, int, int]]:
    """Read every top-level form, returning ``(value, line, column)`` triples."""
    reader = _Reader(text)
    forms = []
    while not reader.at_end():
        line, col = reader.where()
        forms.append((reader.read(), line, col))
    return forms
