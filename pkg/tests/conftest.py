"""Shared fixtures and the acceptance-line reporter.

The two fictitious-play tables at p = 3 and p = 4 take ~15 s each to solve,
so they are session-scoped and shared by every test that needs a p > 2
risk table.
"""

from __future__ import annotations

import pytest

from pmflab import LossExponent, SearchConfig
from pmflab.game import geometric_sizes, solve_risk_table

# one "criterion NN PASS/FAIL ..." line per acceptance criterion, printed in
# the terminal summary so they survive pytest's output capture
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, text: str) -> None:
    status = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES.append(f"criterion {number:02d} {status}  {text}")


# cheap search settings: the chained warm starts do the heavy lifting, the
# per-iteration reply search only needs to find nature's next atom
_LIGHT_SEARCH = SearchConfig(
    restarts=3, grid_divisions=16, initial_step=0.05, min_improvement=1e-10, min_step=1e-8
)


def _solve_table(p: float):
    return solve_risk_table(
        2,
        512,
        LossExponent(p),
        sizes=geometric_sizes(512, dense_upto=16, ratio=1.12),
        max_iters=150,
        rel_tol=0.08,
        search=_LIGHT_SEARCH,
    )


@pytest.fixture(scope="session")
def solved_table_p3():
    return _solve_table(3.0)


@pytest.fixture(scope="session")
def solved_table_p4():
    return _solve_table(4.0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
