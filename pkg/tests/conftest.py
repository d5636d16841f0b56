import pytest

from cavtele.params import SystemParams


@pytest.fixture
def p_iv():
    """Parameter set of the single-photon discussion, gamma = 0."""
    return SystemParams.from_mhz(100.0, 16.0, 16.0, 3.8)


@pytest.fixture
def p_v():
    """Parameter set of the numerical section without spontaneous emission."""
    return SystemParams.from_mhz(62.5, 16.0, 16.0, 4.0)


@pytest.fixture
def p_v_gamma():
    return SystemParams.from_mhz(62.5, 16.0, 16.0, 4.0, 2.6)


_ACCEPTANCE = {}


@pytest.fixture
def report():
    """Record one acceptance line; returns the verdict so tests can assert on it."""

    def record(n, ok, detail):
        _ACCEPTANCE[n] = (bool(ok), detail)
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
