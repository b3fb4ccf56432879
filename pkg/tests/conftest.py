import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fracstefan.gridfield import Grid1D, Riemann, sample_initial
from fracstefan.operator import build_stencil
from fracstefan.stepper import RunConfig, run

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_line():
    """Record the one-line verdict of an acceptance criterion."""

    def record(label, ok, detail):
        line = f"{label} {'PASS' if ok else 'FAIL'}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)


def riemann_run(graph, s, b1, b2, dx, X, T, times=None, theta=0.9):
    grid = Grid1D.from_window(-X, X, dx)
    st = build_stencil(s, dx, n=grid.n)
    d = Riemann(b1, b2)
    cfg = RunConfig(graph, st, grid, d.farfield(), T, theta, list(times or [T]))
    return run(cfg, sample_initial(grid, d)), st


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
