import itertools

import numpy as np
import pytest


def brute_models(n, clauses):
    """All satisfying assignments of a CNF given as lists of signed ints."""
    out = []
    for bits in itertools.product((0, 1), repeat=n):
        if all(any((bits[abs(v) - 1] == 1) != (v < 0) for v in c) for c in clauses):
            out.append(bits)
    return out


def clause_value(clause, bits, kind="cnf"):
    vals = [(bits[abs(v) - 1] == 1) != (v < 0) for v in clause]
    return int(any(vals) if kind == "cnf" else all(vals))


def kron_all(mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
