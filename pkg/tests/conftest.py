import itertools

import pytest

from vmplace.model import ResourceVector, ServerState, VmSpec, utilization


def rv(*xs):
    return ResourceVector(*map(float, xs))


def vm(i, demand, priority=50, dominant=None, **kw):
    return VmSpec(i, priority, rv(*demand), dominant, **kw)


def server(i, capacity, hosted=()):
    return ServerState(i, rv(*capacity), list(hosted))


def brute_force_min_peak(vms, servers):
    """Plain enumeration of every assignment; returns (objective, assignment tuple) or None."""
    best = None
    for combo in itertools.product(range(len(servers)), repeat=len(vms)):
        states = [ServerState(s.id, s.capacity) for s in servers]
        for v, j in zip(vms, combo):
            states[j].hosted.append(v.id)
        peak = 0.0
        ok = True
        for s in states:
            u = utilization(s, vms)
            total = [sum(v.demand[k] for v in vms if v.id in s.hosted) for k in range(1, 5)]
            if any(t > c for t, c in zip(total, s.capacity)):
                ok = False
                break
            peak = max(peak, max(u))
        if ok and (best is None or peak < best[0]):
            best = (peak, combo)
    return best


@pytest.fixture
def square_servers():
    return [server(0, (10, 10, 10, 10)), server(1, (10, 10, 10, 10))]


# One line per acceptance criterion, printed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
