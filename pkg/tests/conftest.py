import numpy as np
import pytest

from dotsaa.fdm import build_grid, place_sources_detectors
from dotsaa.objective import DOTProblem
from dotsaa.pals import PalsModel, pack


def make_problem(nx=21, ny=21, n_s=4, n_d=4, m0=2, D=0.05, **model_kw):
    """Small PaLS/DOT problem; bases sit in the middle of the slab."""
    grid = build_grid(nx, ny, 1.0, 1.0)
    layout = place_sources_detectors(grid, n_s, n_d)
    kw = dict(eps=0.1, tau=0.15, heaviside_kind="atan")
    kw.update(model_kw)
    model = PalsModel(m0, **kw)
    return DOTProblem(grid, layout, model, D)


def random_params(model, rng):
    m0 = model.m0
    alpha = rng.uniform(0.4, 1.0, m0) * rng.choice([-1.0, 1.0], m0)
    alpha[0] = abs(alpha[0])
    beta = rng.uniform(2.5, 4.0, m0)
    chi = np.column_stack([rng.uniform(-0.4, 0.4, m0), rng.uniform(0.35, 0.65, m0)])
    return pack(alpha, beta, chi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tiny():
    return make_problem()


ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
