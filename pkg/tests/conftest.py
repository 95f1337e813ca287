import numpy as np
import pytest

from atgj import kernels
from atgj.kinetic import GasModel, Macroscopics
from atgj.quadrature import VelocitySet, WeightParams, build_velocity_set
from atgj.solver import SIDES, BoundaryCondition, Mesh2D

BACKENDS = kernels.available()


@pytest.fixture(scope="session")
def small_vs():
    return build_velocity_set(4, 8, WeightParams.matched(5))


@pytest.fixture(scope="session")
def cavity_vs():
    return build_velocity_set(8, 16, WeightParams.matched(500))


def closed_box(n=8, T_top=1.0, T_wall=1.0):
    bcs = {s: BoundaryCondition.diffuse(T_wall) for s in SIDES}
    bcs["north"] = BoundaryCondition.diffuse(T_top)
    return Mesh2D.uniform(n, n, 1.0, 1.0, bcs)


def open_box(state, nx=6, ny=5, obstacle=None, kind="freestream"):
    bc = BoundaryCondition.freestream(state) if kind == "freestream" else BoundaryCondition.outflow()
    bcs = {s: bc for s in SIDES}
    if obstacle is not None:
        bcs["solid"] = BoundaryCondition.diffuse(1.0)
    return Mesh2D.uniform(nx, ny, 1.0, 1.0, bcs, obstacle=obstacle)


def mixed_mesh(state):
    """Every boundary kind plus an embedded obstacle."""
    bcs = {
        "west": BoundaryCondition.freestream(state),
        "east": BoundaryCondition.outflow(),
        "south": BoundaryCondition.symmetry(),
        "north": BoundaryCondition.diffuse(1.2, (0.1, 0.0)),
        "solid": BoundaryCondition.diffuse(1.5),
    }
    return Mesh2D.uniform(10, 8, 2.0, 1.6, bcs, obstacle=(0.6, 1.0, 0.4, 0.8))


def point_set(xi_x, xi_y, w=None):
    xi_x = np.asarray(xi_x, float)
    xi_y = np.asarray(xi_y, float)
    w = np.ones_like(xi_x) if w is None else np.asarray(w, float)
    return VelocitySet(xi_x=xi_x, xi_y=xi_y, w_raw=w, w_eff=w)


GAS = GasModel(Kn=0.1)
REST = Macroscopics(1.0, (0.0, 0.0), 1.0)


# -- acceptance report ----------------------------------------------------------

ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record ``criterion(n, ok, detail)``; printed as one line per criterion at the end."""

    def record(n, ok, detail):
        ACCEPTANCE[n] = (bool(ok), detail)
        print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
