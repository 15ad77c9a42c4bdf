import pytest

from support import make_corpus


@pytest.fixture(scope="session")
def small_separable(tmp_path_factory):
    root = tmp_path_factory.mktemp("small_separable")
    return make_corpus("separable", 40, 40, 5, root), root


@pytest.fixture(scope="session")
def small_null(tmp_path_factory):
    root = tmp_path_factory.mktemp("small_null")
    return make_corpus("null", 40, 40, 6, root), root


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    lines = getattr(module, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
