import random

import pytest

from macsched import CellConfig, default_profiles, make_metrics
from macsched.policies import PolicyState, SchedContext


def make_ctx(rntis=(), r_ave=None, cell=None, profiles=None, seed=0, max_buff=10_000_000):
    cell = cell or CellConfig()
    st = PolicyState()
    for r in rntis:
        st.add_ue(r)
    for r, v in (r_ave or {}).items():
        st.r_ave[r] = v
    return SchedContext(cell, st, profiles or default_profiles(), 0, random.Random(seed), max_buff)


def ue(rnti, tbs=100, buf=10_000, **kw):
    return make_metrics(rnti, tbs, buf, **kw)


@pytest.fixture
def cell():
    return CellConfig()


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
