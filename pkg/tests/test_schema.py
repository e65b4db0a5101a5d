import pytest
from hypothesis import given, strategies as st

from fixkit.schema import (
    BUILTINS,
    CliqueEvent,
    DefineEvent,
    FixequivEvent,
    HookEvent,
    ListOf,
    Prod,
    SchemaError,
    TagSum,
    UnknownType,
    VisitorEvent,
    load_schema,
    parse_event,
    parse_events,
)
from fixkit.values import NIL, Char, print_value, read_value

ATERM = """
(deftypes arithmetic-terms
  (deftagsum aterm (:num ((val int))) (:sum ((args atermlist))) (:minus ((arg aterm))))
  (deflist atermlist :elt-type aterm))
"""


def test_parse_defprod():
    ev = parse_event(read_value("(defprod student ((name string) (age nat)))"))
    assert isinstance(ev, CliqueEvent)
    (td,) = ev.clique.members
    assert isinstance(td.body, Prod) and len(td.body.fields) == 2


def test_parse_clique():
    (ev,) = parse_events(ATERM)
    aterm, atermlist = ev.clique.members
    assert isinstance(aterm.body, TagSum) and len(aterm.body.variants) == 3
    assert isinstance(atermlist.body, ListOf)


def test_parser_does_not_resolve():
    ev = parse_event(read_value("(defprod p ((x x)))"))
    assert ev.clique.members[0].references() == ("x",)
    with pytest.raises(SchemaError, match="unresolved"):
        load_schema("(defprod p ((x x)))")


def test_other_events():
    evs = parse_events("""
        (define f ((x nat)) x)
        (defines g (define g ((x nat)) x) /// (verify-guards g))
        (defvisitor v :type nat :collect (:target nat f))
        (set-fixequiv-hook t)
        (deffixequiv f :runs 5)
        (deffixequiv-mutual g)
    """)
    kinds = [type(e) for e in evs]
    assert kinds == [DefineEvent, DefineEvent, VisitorEvent, HookEvent, FixequivEvent, FixequivEvent]
    assert evs[1].mutual and len(evs[1].forms) == 1
    assert evs[3].enabled
    assert dict(evs[4].options) == {"runs": 5}


def test_aterm_groundedness():
    s = load_schema(ATERM)
    assert (s.rank("atermlist"), s.default("atermlist")) == (0, NIL)
    assert s.rank("aterm") == 1
    assert print_value(s.default("aterm")) == "(:num 0)"


def test_student_default():
    s = load_schema("(defprod student ((name string) (age nat)))")
    assert s.rank("student") == 1
    assert print_value(s.default("student")) == '("" 0)'


def test_builtin_catalog():
    s = load_schema("")
    assert (s.rank("nat"), s.default("nat")) == (0, 0)
    assert s.default("string") == ""
    assert s.default("char") is Char(0)
    assert s.default("bool") is NIL and s.default("sym") is NIL
    assert set(BUILTINS) <= set(s.names)


def test_default_skips_ungrounded_first_variant():
    s = load_schema("(deftagsum tree (:node ((l tree) (r tree))) (:leaf ((v nat))))")
    assert print_value(s.default("tree")) == "(:leaf 0)"


def test_rank_grows_with_nesting():
    s = load_schema("""
        (defprod a ((x nat)))
        (defprod b ((y a)))
        (deftagsum c (:deep ((z b))) (:shallow ((w a))))
    """)
    assert [s.rank(n) for n in "abc"] == [1, 2, 3]
    assert print_value(s.default("c")) == "(:deep ((0)))"


@pytest.mark.parametrize("text, needle", [
    ("(deftypes bad (deftagsum loop (:a ((x loop)))))", "ungrounded"),
    ("(defoption maybe-sym sym)", "ambiguous"),
    ("(defoption maybe-bool bool)", "ambiguous"),
    ("(defoption mm maybe-nat) (defoption maybe-nat nat)", "unresolved"),
    ("(defprod p ((x nat))) (defprod p ((y nat)))", "redefinition"),
    ("(defprod nat ((x int)))", "redefinition"),
    ("(defprod p ((x nat) (x int)))", "duplicate field"),
    ("(deftagsum s (:a) (:a))", "duplicate tag"),
    ("(deftagsum s)", "no variants"),
    ("(deftypes c (defprod p ((x nat))) (defprod p ((y nat))))", "duplicate type"),
    ("(deffixtype n2 :pred natp :fix ifix)", "does not belong"),
    ("(frobnicate x)", "unknown event"),
])
def test_validation_errors(text, needle):
    with pytest.raises(SchemaError, match=needle) as info:
        load_schema(text)
    assert info.value.line is not None


def test_error_location():
    with pytest.raises(SchemaError) as info:
        load_schema("(defprod ok ((x nat)))\n\n  (deftypes bad (deftagsum loop (:a ((x loop)))))")
    assert (info.value.line, info.value.column) == (3, 3)


def test_option_of_mutual_sum_is_fine():
    s = load_schema("""
        (deftypes t2 (deftagsum e (:leaf ((n nat))) (:opt ((o maybe-e)))) (defoption maybe-e e))
    """)
    assert s.clique_of("e") == ("e", "maybe-e")
    assert s.default("maybe-e") is NIL


def test_aliases_resolve():
    s = load_schema(ATERM + "(defprod box ((a aterm-p) (n natp)))")
    assert [f.type for f in s["box"].body.fields] == ["aterm", "nat"]
    assert s.resolve("stringp") == "string"
    with pytest.raises(UnknownType):
        s["nope"]


def test_reachable():
    s = load_schema(ATERM + "(defprod student ((name string) (age nat)))")
    assert set(s.reachable("aterm")) == {"aterm", "atermlist", "int"}
    assert s.reachable("nat") == ["nat"]
    assert set(s.reachable("student")) == {"student", "string", "nat"}


def test_dump_is_deterministic():
    assert load_schema(ATERM).dump() == load_schema(ATERM).dump()


MUTUAL = [
    "(deftagsum e (:call ((args elist))) (:let ((b binds) (body e))) (:lit ((v int))) (:o ((x me))))",
    "(deflist elist :elt-type e)",
    "(defalist binds :key-type string :val-type e)",
    "(defoption me e)",
    "(defprod pair-e ((l e) (r e)))",
]


@given(st.permutations(MUTUAL))
def test_groundedness_ignores_member_order(members):
    s = load_schema("(deftypes m " + " ".join(members) + ")")
    ref = load_schema("(deftypes m " + " ".join(MUTUAL) + ")")
    for name in ("e", "elist", "binds", "me", "pair-e"):
        assert s.info[name] == ref.info[name]


@given(st.permutations(MUTUAL))
def test_defaults_are_recognized(members):
    from fixkit.kernel import derive

    s = load_schema("(deftypes m " + " ".join(members) + ")")
    k = derive(s)
    for name in s.names:
        assert k.recognize(name, s.default(name))
