from __future__ import annotations

from pathlib import Path

import pytest

from preproj.adapted import Diagram, setup_from_diagram

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

EXAMPLE1 = (Diagram(9, ((9, 1), (4, 3), (7, 5)), (2, 6, 8), frozenset({1, 2, 3, 5})), frozenset({2, 3, 7, 9}))
EXAMPLE2 = (Diagram(8, ((7, 1), (8, 2), (5, 3), (6, 4)), (), frozenset({1, 2, 3, 4})), frozenset({3, 4, 5, 6}))

_acceptance: list[str] = []


def record(criterion: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'} [{criterion}] {title}" + (f" ({detail})" if detail else "")
    print(line)
    _acceptance.append(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def example1():
    d, J = EXAMPLE1
    return setup_from_diagram(d, J)


@pytest.fixture
def example2():
    d, J = EXAMPLE2
    return setup_from_diagram(d, J)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
