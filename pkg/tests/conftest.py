import pytest
from hypothesis import strategies as st

from fixkit.program import corpus_path, load_file
from fixkit.values import Char, Pair, Sym

GOOD_CORPUS = ("base.fty", "student.fty", "aterm.fty", "stress.fty")

_sym_names = st.sampled_from(["nil", "t", "foo", "x.y", ":num", ":k", "a-b", "+", "<=", "-", "1+"])

atoms = st.one_of(
    st.integers(min_value=-(10**30), max_value=10**30),
    st.text(alphabet=st.characters(max_codepoint=255), max_size=8),
    st.builds(Char, st.integers(0, 255)),
    _sym_names.map(Sym),
)

values = st.recursive(atoms, lambda inner: st.builds(Pair, inner, inner), max_leaves=20)


@pytest.fixture(scope="session")
def programs():
    return {name: load_file(corpus_path(name)) for name in GOOD_CORPUS}


@pytest.fixture(scope="session")
def aterm(programs):
    return programs["aterm.fty"]


@pytest.fixture(scope="session")
def student(programs):
    return programs["student.fty"]


@pytest.fixture(scope="session")
def bad():
    return load_file(corpus_path("bad.fty"))


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
