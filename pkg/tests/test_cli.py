import subprocess
import sys

import pytest

from fixkit.cli import main
from fixkit.program import corpus_path

ATERM = str(corpus_path("aterm.fty"))
BASE = str(corpus_path("base.fty"))
BAD = str(corpus_path("bad.fty"))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def fixkit(*argv, env=None):
    return subprocess.run([sys.executable, "-m", "fixkit", *argv], capture_output=True, text=True, env=env)


def test_check(capsys):
    code, out, _ = run(capsys, "check", ATERM)
    assert code == 0
    assert "aterm\ttagsum\t1\t(:num 0)" in out.splitlines()
    assert "atermlist\tlist\t0\tnil" in out.splitlines()


def test_check_errors(capsys):
    code, _, err = run(capsys, "check", str(corpus_path("loop.fty")))
    assert code == 1 and "ungrounded" in err and "2:1" in err
    code, _, err = run(capsys, "check", str(corpus_path("maybe-sym.fty")))
    assert code == 1 and "ambiguous" in err
    code, _, _ = run(capsys, "check", "/nonexistent/file.fty")
    assert code == 2


def test_check_reports_parse_errors_with_location(tmp_path, capsys):
    f = tmp_path / "broken.fty"
    f.write_text("(defprod p ((x nat))\n")
    code, _, err = run(capsys, "check", str(f))
    assert code == 1 and "1:1" in err


@pytest.mark.parametrize("path, t, value, expected", [
    (ATERM, "aterm", '"junk"', "(:num 0)"),
    (BASE, "string", "7", '""'),
    (BASE, "nat", "5", "5"),
    (BASE, "name-ages", '(("a" . 1) 7 ("b" . x))', '(("a" . 1) ("b" . 0))'),
    (BASE, "natp", "-1", "0"),
])
def test_fix(capsys, path, t, value, expected):
    code, out, _ = run(capsys, "fix", path, t, value)
    assert (code, out) == (0, expected + "\n")


def test_fix_errors(capsys):
    assert run(capsys, "fix", ATERM, "nope", "1")[0] == 1
    assert run(capsys, "fix", ATERM, "aterm", "(1 2")[0] == 2


def test_fix_reads_value_file(tmp_path, capsys):
    f = tmp_path / "v.txt"
    f.write_text("(:minus . 4)\n")
    assert run(capsys, "fix", ATERM, "aterm", "@" + str(f))[1] == "(:minus (:num 0))\n"


def test_eval(capsys):
    assert run(capsys, "eval", ATERM, "(aterm-eval (:sum ((:num 1) (:num 2))))") == (0, "3\n", "")
    assert run(capsys, "eval", ATERM, "(aterm-eval (:sum ((:num 1) (:num 2))))", "--mode", "guarded")[:2] == (0, "3\n")
    code, _, err = run(capsys, "eval", ATERM, '(aterm-eval "junk")', "--mode", "guarded")
    assert code == 1 and "x" in err and '"junk"' in err
    assert run(capsys, "eval", ATERM, '(aterm-eval "junk")')[:2] == (0, "0\n")


def test_eval_errors(capsys, tmp_path):
    assert run(capsys, "eval", ATERM, "(no-such-fn 1)")[0] == 1
    assert run(capsys, "eval", ATERM, "(aterm-eval")[0] == 2
    assert run(capsys, "eval", ATERM, "5")[0] == 2
    f = tmp_path / "spin.fty"
    f.write_text("(define spin ((n nat)) (spin (+ n 1)))")
    code, _, err = run(capsys, "eval", str(f), "(spin 0)")
    assert code == 1 and "depth" in err


def test_test_pass_and_fail(capsys):
    code, out, _ = run(capsys, "test", ATERM, "--laws", "fixequiv", "--runs", "50", "--seed", "7")
    assert code == 0 and out
    for line in out.splitlines():
        cols = line.split("\t")
        assert len(cols) == 6 and cols[3] == "PASS" and cols[4] == "7"
    code, out, _ = run(capsys, "test", BAD, "--laws", "fixequiv", "--runs", "50")
    assert code == 1
    assert any(line.startswith("congruence\tbad-id:0\t50\tFAIL") for line in out.splitlines())


def test_runs_zero_is_vacuous(capsys):
    code, out, _ = run(capsys, "test", BAD, "--laws", "all", "--runs", "0")
    assert code == 0
    assert all(line.split("\t")[2:4] == ["0", "PASS"] for line in out.splitlines())


SMALL = """
(deflist natlist :elt-type nat)
(define zero-plus ((n nat)) :returns bool (equal (+ 0 n) n))
(define wrap ((n nat)) (cons n nil))
(defvisitor nats :type natlist :collect (:target nat wrap))
"""


def test_report_lines_are_sorted(capsys, tmp_path):
    f = tmp_path / "small.fty"
    f.write_text(SMALL)
    _, out, _ = run(capsys, "test", str(f), "--laws", "all", "--runs", "5", "--depth", "1")
    keys = [tuple(line.split("\t")[:2]) for line in out.splitlines()]
    assert keys == sorted(keys)
    assert {k[0] for k in keys} >= {"fix-identity", "congruence", "thm1", "visit-fix-invariant", "mode-agreement"}


def test_gen(capsys):
    code, out, _ = run(capsys, "gen", ATERM, "aterm", "-n", "3", "--seed", "1")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 3
    for line in lines:
        assert run(capsys, "fix", ATERM, "aterm", line)[1] == line + "\n"
    _, out, _ = run(capsys, "gen", ATERM, "aterm", "-n", "3", "--size", "0", "--seed", "1")
    assert all(line.startswith("(:num ") for line in out.splitlines())
    assert run(capsys, "gen", ATERM, "nope")[0] == 1


def test_visit(capsys):
    v = "(:sum ((:num 1) (:minus (:num 2))))"
    assert run(capsys, "visit", ATERM, "collect-nums", v)[1] == "(1 2)\n"
    assert run(capsys, "visit", ATERM, "negate-nums", v)[1] == "(:sum ((:num -1) (:minus (:num -2))))\n"
    assert run(capsys, "visit", ATERM, "identity-aterm", "(:minus 7)")[1] == "(:minus (:num 0))\n"
    assert run(capsys, "visit", ATERM, "nope", v)[0] == 1


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["test", ATERM, "--laws", "everything"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


def test_env_seed(capsys, monkeypatch):
    monkeypatch.setenv("FIXKIT_SEED", "5")
    a = run(capsys, "gen", ATERM, "aterm", "-n", "4")[1]
    b = run(capsys, "gen", ATERM, "aterm", "-n", "4", "--seed", "5")[1]
    assert a == b
    monkeypatch.setenv("FIXKIT_SEED", "five")
    assert run(capsys, "gen", ATERM, "aterm")[0] == 2


def test_hook_file(capsys):
    code, out, _ = run(capsys, "check", str(corpus_path("hook.fty")))
    assert code == 1
    assert "congruence\tbad-head:0\t100\tFAIL" in out


def test_subprocess_determinism():
    a = fixkit("test", ATERM, "--laws", "fixequiv", "--runs", "30", "--seed", "7")
    b = fixkit("test", ATERM, "--laws", "fixequiv", "--runs", "30", "--seed", "7")
    assert a.returncode == 0 and a.stdout == b.stdout
    g1 = fixkit("gen", ATERM, "aterm", "-n", "5", "--seed", "1")
    g2 = fixkit("gen", ATERM, "aterm", "-n", "5", "--seed", "1")
    assert g1.stdout == g2.stdout and g1.stdout.count("\n") == 5
