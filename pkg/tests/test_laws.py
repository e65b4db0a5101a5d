import pytest
from hypothesis import given, strategies as st

from fixkit.laws import (
    ENUM_ATOMS,
    EnumerationOverflow,
    LawReport,
    check_constant_normalization,
    check_congruence,
    check_fix_laws,
    check_guard_violations,
    check_hypothesis_elimination,
    check_mode_agreement,
    check_returns,
    check_transparency,
    deffixequiv,
    deffixequiv_mutual,
    derived_subjects,
    enum_alphabet,
    enumerate_values,
    enumeration_size,
    fn_subject,
    is_thm1_candidate,
    sort_reports,
)
from fixkit.program import corpus_path, load_file, load_program
from fixkit.values import print_value, read_value


def test_transparency_and_congruence_pass(aterm):
    s = fn_subject(aterm.defs, "aterm-eval")
    assert check_transparency(aterm.defs.kernel, s, 0, 300, 1).passed
    assert check_congruence(aterm.defs.kernel, s, 0, 300, 1).passed


def test_bad_id_fails_reproducibly(bad):
    s = fn_subject(bad.defs, "bad-id")
    first = check_congruence(bad.defs.kernel, s, 0, 200, 11)
    again = check_congruence(bad.defs.kernel, s, 0, 200, 11)
    assert not first.passed
    assert first.counterexample == again.counterexample
    assert not check_transparency(bad.defs.kernel, s, 0, 200, 11).passed


def test_runs_zero_is_vacuous(bad):
    s = fn_subject(bad.defs, "bad-id")
    r = check_congruence(bad.defs.kernel, s, 0, 0, 0)
    assert r.passed and r.runs == 0
    assert check_transparency(bad.defs.kernel, s, 0, 0, 0).passed


def test_constant_normalization(aterm, bad):
    k = aterm.defs.kernel
    s = fn_subject(aterm.defs, "aterm-eval")
    assert check_constant_normalization(k, s, 0, [read_value('"junk"')]).passed
    assert check_constant_normalization(k, s, 0, [read_value("(:num 4)")]).passed
    assert check_constant_normalization(k, s, 0).passed
    r = check_constant_normalization(bad.defs.kernel, fn_subject(bad.defs, "bad-id"), 0, ["s"])
    assert not r.passed and '"s"' in r.counterexample


def test_derived_subjects_pass(programs):
    for prog in programs.values():
        k = prog.defs.kernel
        for s in derived_subjects(k):
            for i, t in enumerate(s.types):
                if t is None:
                    continue
                assert check_transparency(k, s, i, 60, 3).passed, s.name
                assert check_congruence(k, s, i, 60, 3).passed, s.name
                assert check_constant_normalization(k, s, i, seed=3).passed, s.name


def test_returns(aterm):
    s = fn_subject(aterm.defs, "aterm-eval")
    assert check_returns(aterm.defs.kernel, s, "int", 200, 0).passed
    assert not check_returns(aterm.defs.kernel, s, "nat", 200, 0).passed


def test_mode_agreement_and_guards(programs):
    for prog in programs.values():
        for fn in prog.functions.values():
            assert check_mode_agreement(prog.defs, fn, 100, 5).passed, fn.name
            if fn.formals:
                r = check_guard_violations(prog.defs, fn, 50, 5)
                assert r.passed, (fn.name, r.counterexample)


def test_mode_disagreement_detected():
    p = load_program("""
        (defprod student ((name string) (age nat)))
        (define sneaky () (student->name (make-student :name 6 :age "Calista")))
    """)
    r = check_mode_agreement(p.defs, p.functions["sneaky"], 5, 0)
    assert not r.passed and "GuardViolation" in r.counterexample


@pytest.mark.parametrize("atoms, depth", [(3, 0), (3, 1), (3, 2), (4, 2), (2, 3)])
def test_enumeration_size_matches_brute_force(atoms, depth):
    assert len(enumerate_values(list(range(atoms)), depth)) == enumeration_size(atoms, depth)


def test_enumeration_sizes(aterm):
    k = aterm.defs.kernel
    assert len(enum_alphabet(k, "nat")) == len(ENUM_ATOMS) == 11
    assert len(enum_alphabet(k, "aterm")) == 14
    assert enumeration_size(11, 2) == 17_435
    assert enumeration_size(14, 2) == 44_114
    assert enumeration_size(14, 3) > 10**9


def test_enumeration_is_duplicate_free():
    vals = enumerate_values(list(range(3)), 2)
    assert len({print_value(v) for v in vals}) == len(vals)


def test_hypothesis_elimination(aterm):
    for name in ("nat-plus-zero", "aterm-eval-integer", "minus-minus-cancels", "singleton-sum-same"):
        fn = aterm.functions[name]
        assert is_thm1_candidate(fn)
        r = check_hypothesis_elimination(aterm.defs, fn, depth=2, seed=0, gate_runs=50)
        assert r.passed, r.counterexample
        assert r.runs >= 10_000
        assert "forall=t forall-typed=t" in r.detail


def test_constant_predicate():
    p = load_program("(define always ((x nat)) :returns bool t)")
    r = check_hypothesis_elimination(p.defs, p.functions["always"], depth=1, gate_runs=20)
    assert r.passed and r.runs == enumeration_size(11, 1)


def test_non_congruent_predicate_is_rejected(bad):
    r = check_hypothesis_elimination(bad.defs, bad.functions["raw-atom"], depth=2, gate_runs=100)
    assert not r.passed and "precondition" in r.counterexample


def test_enumeration_cap(aterm):
    with pytest.raises(EnumerationOverflow):
        check_hypothesis_elimination(aterm.defs, aterm.functions["nat-plus-zero"], depth=3, gate_runs=5)


def test_false_predicate_still_congruent():
    # both sides of the biconditional fail together
    p = load_program("(define small ((n nat)) :returns bool (< n 1))")
    r = check_hypothesis_elimination(p.defs, p.functions["small"], depth=1, gate_runs=50)
    assert r.passed and "forall=nil forall-typed=nil" in r.detail


def test_fix_laws_on_corpus(programs):
    for prog in programs.values():
        for t in prog.schema.names:
            for r in check_fix_laws(prog.defs.kernel, t, 150, 2):
                assert r.passed, (t, r.law, r.counterexample)


def test_deffixequiv_mutual(aterm, bad):
    reports = deffixequiv_mutual(aterm.defs, "aterm-eval", 100, 0)
    assert {r.subject for r in reports} == {"aterm-eval:0", "atermlist-sum:0"}
    assert len(reports) == 6 and all(r.passed for r in reports)
    failing = deffixequiv(bad.defs, "bad-id", 100, 0)
    assert not all(r.passed for r in failing)


def test_hook_runs_after_each_define():
    p = load_file(corpus_path("hook.fty"))
    subjects = {r.subject for r in p.hook_reports}
    assert subjects == {"natlist-len:0", "bad-head:0"}
    assert any(not r.passed for r in p.hook_reports if r.subject == "bad-head:0")
    assert any(r.runs == 50 and r.seed == 3 for r in p.hook_reports)


def test_report_line_and_sorting():
    a = LawReport("b-law", "x", 7, 10, True)
    b = LawReport("a-law", "y", 7, 10, False, counterexample="x=\t1")
    assert [r.law for r in sort_reports([a, b])] == ["a-law", "b-law"]
    assert b.line() == "a-law\ty\t10\tFAIL\t7\tx=\\t1"
    assert a.line().endswith("\tPASS\t7\t-")


@given(st.integers(0, 10_000))
def test_seeded_checks_are_deterministic(seed):
    bad = load_file(corpus_path("bad.fty"))
    s = fn_subject(bad.defs, "bad-id")
    a = check_congruence(bad.defs.kernel, s, 0, 20, seed)
    b = check_congruence(bad.defs.kernel, s, 0, 20, seed)
    assert (a.passed, a.counterexample) == (b.passed, b.counterexample)
