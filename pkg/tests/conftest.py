import numpy as np
import pytest

_ACCEPTANCE = {}


@pytest.fixture
def record():
    """Record one acceptance criterion outcome for the terminal summary."""
    def _record(key, title, passed, detail=""):
        _ACCEPTANCE[key] = (title, bool(passed), detail)
        return passed
    return _record


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in range(1, 12):
        _ACCEPTANCE.setdefault(key, ("(not evaluated)", False, "test errored before recording"))
    for key in sorted(_ACCEPTANCE):
        title, passed, detail = _ACCEPTANCE[key]
        tr.write_line(f"{'PASS' if passed else 'FAIL'}  {key:>3}  {title}: {detail}")
    n_pass = sum(p for _, p, _ in _ACCEPTANCE.values())
    tr.write_line(f"{n_pass}/{len(_ACCEPTANCE)} criteria passed")
