import pytest

from nlguard import fixtures
from nlguard.agents import AgentBundle


@pytest.fixture(scope="session")
def uca():
    return fixtures.load_model("uca")


@pytest.fixture(scope="session")
def uca_case():
    return fixtures.load_suite("uca")[0]


@pytest.fixture(scope="session")
def shop():
    return fixtures.load_model("shop")


@pytest.fixture(scope="session")
def shop_suite():
    return fixtures.load_suite("shop")


@pytest.fixture
def oracle(uca):
    return AgentBundle.oracle(uca)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
