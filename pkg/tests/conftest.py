import numpy as np
import pytest

from patchdipole.grid import make_graded_grid
from patchdipole.seeds import SEEDS, make_seed, random_m0_profiles, semicircle, tent
from patchdipole.solver import SolveConfig, solve_fixed_point


@pytest.fixture(scope="session")
def grid():
    return make_graded_grid()


@pytest.fixture(scope="session")
def semi(grid):
    return semicircle(grid)


@pytest.fixture(scope="session")
def tent_profile(grid):
    return tent(grid)


@pytest.fixture(scope="session")
def cos_seed(grid):
    return make_seed("fig2b", grid)


@pytest.fixture(scope="session")
def m0_samples(grid):
    return random_m0_profiles(20, grid, seed=0)


@pytest.fixture(scope="session")
def fig2_reports(grid):
    """Plain explicit iteration (θ = 1) from the four named seeds."""
    cfg = SolveConfig(scheme="explicit_P", tol=1e-8, max_iter=2000, damping=1.0, quad_tol=1e-10)
    return {name: solve_fixed_point(make_seed(name, grid), cfg) for name in sorted(SEEDS)}


@pytest.fixture(scope="session")
def terminal(fig2_reports):
    rep = fig2_reports["fig2b"]
    assert rep.converged
    return rep.final_profile


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = config.stash.get(ACCEPTANCE_KEY, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, ok, detail in sorted(rows):
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
