import functools

import pytest

from econokin.exchange import SimConfig, run_ensemble

# lines recorded by the acceptance suite, printed in the terminal summary
ACCEPTANCE_LINES = []


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append((criterion, "PASS" if passed else "FAIL", detail))


@functools.lru_cache(maxsize=None)
def ensemble(**kw):
    return run_ensemble(SimConfig(**kw))


@pytest.fixture(scope="session")
def small_config():
    return SimConfig(n_agents=200, n_trades=20_000, n_realizations=4, seed=3)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for crit, status, detail in sorted(ACCEPTANCE_LINES, key=lambda t: t[0]):
        terminalreporter.write_line(f"{status} criterion {crit}: {detail}")
