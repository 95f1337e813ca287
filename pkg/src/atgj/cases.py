"""Benchmark configurations (heated cavity, Ma 5 square cylinder), the
continuum heat-conduction oracle and centerline / field exports.

All temperatures are in code units, i.e. divided by the 300 K reference, so
the weight-function temperature is ``T0 = 1``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kinetic import GasModel, Macroscopics
from .quadrature import ParameterError, WeightParams, build_velocity_set, newton_cotes_set
from .solver import BoundaryCondition, Mesh2D, SolverConfig

__all__ = [
    "GeometryError",
    "VelocitySpec",
    "CavityCase",
    "CylinderCase",
    "CenterlineProfile",
    "PRESETS",
    "preset",
    "table1_case",
    "laplace_oracle",
    "laplace_relaxation",
    "extract_centerline",
    "node_budget_ratio",
    "write_profile_csv",
    "write_field_csv",
    "read_field_csv",
]

T_REF_KELVIN = 300.0
SCALES = ("desk", "full")


class GeometryError(ValueError):
    """A sampling line leaves the fluid region."""


@dataclass(frozen=True)
class VelocitySpec:
    """ATGJ ``n x N_theta`` rule with weight parameters, or an NC ``M x M`` grid."""

    n: int = 8
    n_theta: int = 16
    alpha: float = math.pi / 2 * 5
    lam: float = 5.0
    theta0: float = 0.0
    kind: str = "atgj"
    M: int = 0
    U: float = 0.0

    def build(self):
        if self.kind == "nc":
            return newton_cotes_set(self.M, self.U)
        if self.kind != "atgj":
            raise ParameterError(f"unknown velocity rule {self.kind!r}; use 'atgj' or 'nc'")
        return build_velocity_set(self.n, self.n_theta, WeightParams(self.alpha, self.lam), self.theta0)

    @property
    def K(self):
        return self.M * self.M if self.kind == "nc" else self.n * self.n_theta

    @classmethod
    def matched(cls, n, n_theta, lam, **kw):
        return cls(n=n, n_theta=n_theta, alpha=math.pi / 2 * lam, lam=lam, **kw)


@dataclass(frozen=True)
class CavityCase:
    """Square cavity, hot top wall and three cold walls, all diffuse and at rest."""

    name: str
    Kn: float
    T_h: float
    T_c: float
    velocity: VelocitySpec
    L: float = 1.0
    T_ref: float = 1.0
    mesh_desk: int = 30
    mesh_full: int = 60
    analytic: bool = False

    kind = "cavity"

    def gas(self):
        return GasModel(Kn=self.Kn, T_ref=self.T_ref, L_ref=self.L)

    def boundaries(self):
        cold = BoundaryCondition.diffuse(self.T_c)
        return {"west": cold, "east": cold, "south": cold,
                "north": BoundaryCondition.diffuse(self.T_h)}

    def mesh(self, scale="desk", cells=None):
        n = cells or _pick_scale(scale, self.mesh_desk, self.mesh_full)
        return Mesh2D.uniform(n, n, self.L, self.L, self.boundaries())

    def initial_state(self):
        return Macroscopics(1.0, (0.0, 0.0), self.T_ref)

    def solver_config(self, scale="desk", **kw):
        # smooth flow: unlimited slopes; a limiter clipping at temperature
        # extrema adds numerical conduction far above the physical one at small Kn
        return SolverConfig(**{"cfl": 0.9, "steady_tol": 1e-6, "max_steps": 200000,
                               "limiter": "none", **kw})

    def oracle(self, x, y, terms=200):
        """Continuum conduction solution in the cavity's coordinates."""
        return laplace_oracle(np.asarray(x) / self.L, np.asarray(y) / self.L, self.T_h, self.T_c, terms)


@dataclass(frozen=True)
class CylinderCase:
    """Supersonic flow past a square cylinder centred at the origin.

    The domain spans ``upstream`` diameters ahead of the centre, ``downstream``
    behind it and ``lateral`` to each side.  Only the velocity-space and flow
    settings are published; the geometry defaults are artifact choices.
    """

    name: str = "cylinder-ma5"
    Ma: float = 5.0
    Kn: float = 0.1
    T_inf: float = 1.0
    rho_inf: float = 1.0
    u_inf: float = 4.56
    T_W: float = 1.0
    D: float = 1.0
    velocity: VelocitySpec = VelocitySpec(
        n=20, n_theta=60, alpha=20.0, lam=2 * 20.0 / math.pi + 20.0
    )
    upstream: float = 7.5
    downstream: float = 15.0
    lateral: float = 10.0
    cells_per_D_desk: int = 2
    cells_per_D_full: int = 8
    steps_desk: int = 200
    steps_full: int = 100000

    kind = "cylinder"

    def gas(self):
        return GasModel(Kn=self.Kn, T_ref=self.T_inf, rho_ref=self.rho_inf, L_ref=self.D)

    def freestream(self):
        return Macroscopics(self.rho_inf, (self.u_inf, 0.0), self.T_inf)

    def boundaries(self):
        fs = BoundaryCondition.freestream(self.freestream())
        return {"west": fs, "south": fs, "north": fs, "east": BoundaryCondition.outflow(),
                "solid": BoundaryCondition.diffuse(self.T_W)}

    def mesh(self, scale="desk", cells_per_D=None, obstacle=True):
        c = cells_per_D or _pick_scale(scale, self.cells_per_D_desk, self.cells_per_D_full)
        D = self.D
        nx = int(round((self.upstream + self.downstream) * c))
        ny = int(round(2 * self.lateral * c))
        box = (-0.5 * D, 0.5 * D, -0.5 * D, 0.5 * D) if obstacle else None
        return Mesh2D.uniform(nx, ny, nx * D / c, ny * D / c, self.boundaries(),
                              origin=(-self.upstream * D, -self.lateral * D), obstacle=box)

    def initial_state(self):
        return self.freestream()

    def solver_config(self, scale="desk", **kw):
        steps = _pick_scale(scale, self.steps_desk, self.steps_full)
        return SolverConfig(**{"cfl": 0.8, "steady_tol": 1e-6, "max_steps": steps,
                               "report_every": 50, **kw})


def _pick_scale(scale, desk, full):
    if scale not in SCALES:
        raise ParameterError(f"unknown scale {scale!r}; choose from {SCALES}")
    return desk if scale == "desk" else full


def _cavity(name, Kn, n_theta, lam, analytic=False):
    if analytic:
        T_h, T_c = 301.0 / T_REF_KELVIN, 300.0 / T_REF_KELVIN
    else:
        T_h, T_c = 400.0 / T_REF_KELVIN, 200.0 / T_REF_KELVIN
    return CavityCase(name, Kn, T_h, T_c, VelocitySpec.matched(8, n_theta, lam), analytic=analytic)


# velocity settings per Knudsen number for the heated cavity
CAVITY_SETS = {
    0.001: (16, 500.0),
    0.1: (45, 5.0),
    1.0: (60, 5.0),
    10.0: (90, 5.0),
}

# reference rules the ATGJ sets are compared against
REFERENCE_RULES = {
    0.001: ("HGH", 12),
    0.1: ("HGH", 28),
    1.0: ("NC", 161),
    10.0: ("NC", 201),
}

PRESETS = {
    "cavity-kn0.001": _cavity("cavity-kn0.001", 0.001, 16, 500.0),
    "cavity-kn0.1": _cavity("cavity-kn0.1", 0.1, 45, 5.0),
    "cavity-kn1": _cavity("cavity-kn1", 1.0, 60, 5.0),
    "cavity-kn10": _cavity("cavity-kn10", 10.0, 90, 5.0),
    "cavity-kn0.001-analytic": _cavity("cavity-kn0.001-analytic", 0.001, 16, 500.0, True),
    "cavity-kn0.0001-analytic": _cavity("cavity-kn0.0001-analytic", 0.0001, 16, 500.0, True),
    "cylinder-ma5": CylinderCase(),
}


def preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ParameterError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


def table1_case(kn) -> CavityCase:
    """Cavity settings for one of the tabulated Knudsen numbers."""
    for key in CAVITY_SETS:
        if math.isclose(float(kn), key, rel_tol=1e-12):
            return preset("cavity-kn" + _fmt_kn(key))
    raise ParameterError(
        f"no tabulated cavity case for Kn = {kn!r}; available: {', '.join(PRESETS)}"
    )


def _fmt_kn(kn):
    return f"{kn:g}"


def node_budget_ratio(kn):
    """Reference node count over ATGJ node count for a tabulated Kn."""
    rule, m = REFERENCE_RULES[float(kn)]
    case = table1_case(kn)
    return m * m / case.velocity.K


# -- continuum oracle ----------------------------------------------------------


def laplace_oracle(x, y, T_h, T_c, terms=200):
    """Steady conduction in the unit square, ``T_h`` on ``y = 1``, ``T_c`` elsewhere.

    The sine series sum_k 4/(k pi) sin(k pi x) sinh(k pi y)/sinh(k pi), k odd,
    is split as e^{-k pi (1-y)} plus a remainder.  The first part sums in
    closed form to (4/pi) Im artanh(z), z = exp(i pi (x + i(1-y))), which is
    exact up to the hot wall; the remainder decays like e^{-k pi} everywhere,
    so ``terms`` only needs to be ~12 for full precision.
    """
    if terms < 1:
        raise ParameterError("terms must be >= 1")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = 1.0 - y
    # Im artanh z = (arg(1 + z) - arg(1 - z)) / 2, both factors via expm1 so
    # the corners (z -> +-1) keep full precision
    s = 2.0 / math.pi * (_arg_one_minus_exp(-math.pi * d, math.pi * (x - 1.0))
                         - _arg_one_minus_exp(-math.pi * d, math.pi * x))
    k = np.arange(1, int(terms) + 1, 2, dtype=float).reshape((-1,) + (1,) * np.broadcast(x, y).ndim)
    a = k * math.pi
    rem = np.exp(-a * d) * (np.exp(-2.0 * a) - np.exp(-2.0 * a * y)) / (-np.expm1(-2.0 * a))
    s = s + np.sum(4.0 / a * np.sin(a * x) * rem, axis=0)
    out = T_c + (T_h - T_c) * s
    return float(out) if out.ndim == 0 else out


def _arg_one_minus_exp(a, b):
    """arg(1 - exp(a + ib)) with 1 - exp formed without cancellation."""
    re = -(np.expm1(a) * np.cos(b) - 2.0 * np.sin(0.5 * b) ** 2)
    im = -np.exp(a) * np.sin(b)
    return np.arctan2(im, re)


def laplace_relaxation(n, T_h, T_c):
    """Five-point Laplace solution on an ``n x n`` interior grid (spacing 1/(n+1)).

    Solves the linear system that Jacobi relaxation converges to, directly.
    Returns ``(x, y, T)`` with ``T[i, j]`` at ``(x[i], y[j])``.
    """
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    h = 1.0 / (n + 1)
    x = h * np.arange(1, n + 1)
    one = np.ones(n)
    lap1 = sp.diags([one[:-1], -2 * one, one[:-1]], [-1, 0, 1])
    eye = sp.identity(n)
    A = (sp.kron(lap1, eye) + sp.kron(eye, lap1)).tocsr()
    b = np.zeros((n, n))
    b[0, :] -= T_c
    b[-1, :] -= T_c
    b[:, 0] -= T_c
    b[:, -1] -= T_h
    T = spla.spsolve(A.tocsc(), b.ravel()).reshape(n, n)
    return x, x.copy(), T


# -- centerlines -------------------------------------------------------------


@dataclass
class CenterlineProfile:
    axis: str
    s: np.ndarray
    values: dict = field(default_factory=dict)

    @property
    def columns(self):
        return ["s", *self.values]


def _line_values(arr, coords, pos):
    """Linear interpolation of cell-centred ``arr`` (n_line, n_across) at ``pos``."""
    n = len(coords)
    if pos < coords[0] or pos > coords[-1]:
        # half a cell of slack at the edges: use the nearest row
        j = 0 if pos < coords[0] else n - 1
        return arr[:, j]
    j = int(np.searchsorted(coords, pos, side="right")) - 1
    j = min(max(j, 0), n - 2) if n > 1 else 0
    if n == 1:
        return arr[:, 0]
    t = (pos - coords[j]) / (coords[j + 1] - coords[j])
    if t == 0.0:
        return arr[:, j]
    if t == 1.0:
        return arr[:, j + 1]
    return (1.0 - t) * arr[:, j] + t * arr[:, j + 1]


def extract_centerline(fields, mesh, axis, position=None):
    """Sample macroscopic fields along a straight line through the domain.

    ``fields`` maps names (``rho, ux, uy, T``...) to cell arrays ``(nx, ny)``.
    ``horizontal`` runs along x at ``y = position`` (default: mid-height),
    ``vertical`` along y at ``x = position`` (default: mid-width), and
    ``upstream`` along x at mid-height from the inflow edge to the first
    solid face, returning ``T``, ``u`` and the density flux ``rho * ux``.
    Samples sit at the cell-centre coordinates along the line.
    """
    xc, yc = mesh.cell_centers()
    x0, x1, y0, y1 = mesh.extent
    solid = np.asarray(mesh.solid, bool)
    if axis in ("horizontal", "upstream"):
        pos = 0.5 * (y0 + y1) if position is None else float(position)
        if not y0 <= pos <= y1:
            raise GeometryError(f"line y = {pos} lies outside the domain")
        sample = lambda a: _line_values(np.asarray(a, float), yc, pos)
        s = xc.copy()
        blocked = _line_values(solid.astype(float), yc, pos) > 0
    elif axis == "vertical":
        pos = 0.5 * (x0 + x1) if position is None else float(position)
        if not x0 <= pos <= x1:
            raise GeometryError(f"line x = {pos} lies outside the domain")
        sample = lambda a: _line_values(np.asarray(a, float).T, xc, pos)
        s = yc.copy()
        blocked = _line_values(solid.T.astype(float), xc, pos) > 0
    else:
        raise ParameterError(f"unknown centerline axis {axis!r}")

    if axis == "upstream":
        hit = np.flatnonzero(blocked)
        if hit.size == 0:
            raise GeometryError("no obstacle on the upstream line")
        keep = slice(0, hit[0])
        if hit[0] == 0:
            raise GeometryError("obstacle touches the inflow edge")
        rho = sample(fields["rho"])[keep]
        ux = sample(fields["ux"])[keep]
        values = {"T": sample(fields["T"])[keep], "u": ux, "rho_flux": rho * ux}
        prof = CenterlineProfile(axis, s[keep], values)
    else:
        if blocked.any():
            raise GeometryError(f"{axis} line crosses solid cells")
        values = {k: sample(fields[k]) for k in ("T", "ux", "uy")}
        prof = CenterlineProfile(axis, s, values)
    for v in prof.values.values():
        if not np.all(np.isfinite(v)):
            raise GeometryError(f"{axis} line samples a non-fluid cell")
    return prof


# -- exports -----------------------------------------------------------------

FIELD_COLUMNS = ("x", "y", "rho", "ux", "uy", "T", "qx", "qy")


def write_profile_csv(path, profile: CenterlineProfile):
    cols = profile.columns
    data = np.column_stack([profile.s] + [profile.values[c] for c in cols[1:]])
    np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")


def write_field_csv(path, fields, mesh):
    """Cell-centred dump, x-major; solid cells are written as ``nan``."""
    xc, yc = mesh.cell_centers()
    X, Y = np.meshgrid(xc, yc, indexing="ij")
    cols = [X, Y] + [np.asarray(fields[c], float) for c in FIELD_COLUMNS[2:]]
    data = np.column_stack([c.ravel() for c in cols])
    np.savetxt(path, data, delimiter=",", header=",".join(FIELD_COLUMNS), comments="", fmt="%.17g")


def read_field_csv(path):
    """Inverse of :func:`write_field_csv`; returns ``(fields, mesh)``.

    The mesh carries placeholder outflow boundaries since a dump does not
    record them; it is meant for sampling only.
    """
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    if tuple(h.strip() for h in header) != FIELD_COLUMNS:
        raise ParameterError(f"{path}: expected columns {','.join(FIELD_COLUMNS)}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    nx, ny = len(xs), len(ys)
    if nx * ny != len(data):
        raise ParameterError(f"{path}: rows do not form a structured grid")
    dx = (xs[-1] - xs[0]) / (nx - 1) if nx > 1 else 1.0
    dy = (ys[-1] - ys[0]) / (ny - 1) if ny > 1 else 1.0
    fields = {c: data[:, i].reshape(nx, ny) for i, c in enumerate(FIELD_COLUMNS) if i >= 2}
    solid = ~np.isfinite(fields["rho"])
    bcs = {s: BoundaryCondition.outflow() for s in ("west", "east", "south", "north", "solid")}
    mesh = Mesh2D(nx, ny, dx, dy, bcs, (xs[0] - 0.5 * dx, ys[0] - 0.5 * dy), solid)
    return fields, mesh
