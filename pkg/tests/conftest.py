import pytest

from coloedr import MandatoryScenario, QuadraticCost, VoluntaryScenario

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
    print(line)
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def quad_mandatory():
    """Two tenants with cost 2s^2, target 1 kWh, diesel at 1 $/kWh."""
    return MandatoryScenario(1.0, 1.0, [QuadraticCost(2.0), QuadraticCost(2.0)])


@pytest.fixture
def quad_voluntary():
    return VoluntaryScenario(1.0, [QuadraticCost(2.0), QuadraticCost(2.0)], [1.0, 1.0])
