import numpy as np
import pytest

from cht_fvm.boundary import resolve_flow_bc
from cht_fvm.fluid import FluidProps, FluidSolver
from cht_fvm.grid import build_grid


def cavity_solver(n=4, lid=1.0, mu=0.1, dt=0.05, rho=1.0, length=1.0, **kw):
    grid = build_grid(fluid=(((0, length), (0, length)), (n, n)))
    table = {"west": [{"flow": "no-slip"}], "east": [{"flow": "no-slip"}],
             "south": [{"flow": "no-slip"}], "north": [{"flow": "lid", "u": lid}]}
    bcs = resolve_flow_bc(grid.fluid, table, grid)
    return FluidSolver(grid.fluid, bcs, FluidProps(rho=rho, mu=mu), dt, **kw)


def channel_solver(nx=6, ny=4, u_in=1.0, mu=0.05, dt=0.02):
    grid = build_grid(fluid=(((0, 1.5), (0, 1)), (nx, ny)))
    table = {"west": [{"flow": "inlet", "u": u_in}], "east": [{"flow": "outlet"}],
             "south": [{"flow": "slip"}], "north": [{"flow": "slip"}]}
    bcs = resolve_flow_bc(grid.fluid, table, grid)
    return FluidSolver(grid.fluid, bcs, FluidProps(rho=1.0, mu=mu), dt)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance results, printed as one line per criterion at the end of the session
ACCEPTANCE = {}


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE, key=int):
        checks = ACCEPTANCE[crit]
        failed = [c for c in checks if not c.passed]
        status = "PASS" if not failed else "FAIL"
        terminalreporter.write_line(f"{status} criterion {crit}: {len(checks) - len(failed)}/{len(checks)} checks passed")
        for c in checks:
            terminalreporter.write_line(f"    {c.line()}")
