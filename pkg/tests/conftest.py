import numpy as np
import pytest

from pxeig import DomainSpec, ExponentField, FESpace, generate_mesh

ACCEPTANCE_LINES = []


def record_acceptance(number, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance():
    return record_acceptance


@pytest.fixture(scope="session")
def p2():
    return ExponentField.constant(2.0)


@pytest.fixture(scope="session")
def p_square():
    return ExponentField(lambda x: 5 + 3 * np.sin(3 * np.pi * x[:, 0]), 2.0, 8.0)


@pytest.fixture(scope="session")
def square_space_coarse():
    return FESpace(generate_mesh(DomainSpec.rectangle(), 0.25, 1))


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)
