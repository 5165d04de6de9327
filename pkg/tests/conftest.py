import numpy as np
import pytest

# criterion number -> (passed, summary); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    crit = getattr(item.function, "criterion", None)
    if crit is None or rep.when != "call":
        return
    detail = ACCEPTANCE.get(crit, (None, ""))[1]
    ACCEPTANCE[crit] = (rep.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k:2d}: {detail}")
