import pytest

from sqgmodes.spectral import make_domain


@pytest.fixture(scope="session")
def d64():
    return make_domain(1.0, 64)


@pytest.fixture(scope="session")
def d128():
    return make_domain(1.0, 128)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance verdict lines after the run, passed or failed."""
    lines = [
        value
        for key in ("passed", "failed")
        for rep in terminalreporter.stats.get(key, [])
        if rep.when == "call"
        for name, value in rep.user_properties
        if name == "acceptance"
    ]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":").split("-")[0])):
            terminalreporter.write_line(line)
