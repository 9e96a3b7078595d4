import numpy as np
import pytest

from easer_sim.fock import StateVector, enumerate_basis

ACCEPTANCE_RESULTS: list[tuple[int, bool, str]] = []


def random_state(rng: np.random.Generator, cutoff: int, nnz: int = 6, max_total=None) -> StateVector:
    """Random sparse state whose kets sit strictly inside the truncation."""
    limit = 2 * cutoff if max_total is None else max_total
    basis = [k for k in enumerate_basis(cutoff) if k.total <= limit]
    picks = rng.choice(len(basis), size=min(nnz, len(basis)), replace=False)
    amps = rng.standard_normal(len(picks)) + 1j * rng.standard_normal(len(picks))
    return StateVector(cutoff, {basis[i]: a for i, a in zip(picks, amps)})


@pytest.fixture
def rng():
    return np.random.default_rng(20011)


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(number: int, ok: bool, detail: str):
        ACCEPTANCE_RESULTS.append((number, bool(ok), detail))
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}")
