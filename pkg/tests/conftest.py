import pytest

from chebreg.problems import PROBLEMS_1D, make_problem


@pytest.fixture(scope="session", params=PROBLEMS_1D)
def problem(request):
    return make_problem(request.param)


@pytest.fixture(scope="session")
def baart():
    return make_problem("baart")


@pytest.fixture(scope="session")
def baart_sve(baart):
    return baart.sve()


_ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def report():
    """Record the one-line verdict for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(_ACCEPTANCE_LINES[k])
