"""Structured 2D finite-volume discrete-velocity solver (DUGKS) for the reduced
Shakhov equations.

Field layout
------------
``DistributionField.values`` has shape ``(nx, ny, K, 2)``: cell ``(i, j)``
(``i`` along x), velocity node ``k`` in the velocity set's own order
(radial-major for ATGJ sets), then ``(g, h)``.  Under the default ``dugks``
scheme the stored quantity is the auxiliary distribution
``f~ = f - dt/2 * Omega(f)``; its conserved moments equal those of ``f``.
Solid cells hold zeros and are skipped by every reduction.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from . import _kernels_py as _kp
from . import kernels
from .kinetic import GasModel, Macroscopics, StateError
from .kinetic import discrete_shakhov_pair, shakhov_pair
from .quadrature import VelocitySet

log = logging.getLogger(__name__)

__all__ = [
    "BoundaryCondition",
    "Mesh2D",
    "DistributionField",
    "SolverConfig",
    "LIMITERS",
    "Solver",
    "DivergenceError",
    "ConfigurationError",
    "initialize",
    "time_step_size",
    "save_checkpoint",
    "load_checkpoint",
]

DIFFUSE_WALL = "diffuse_wall"
FREESTREAM = "freestream"
OUTFLOW = "outflow"
# slope options; the index is the kernel flag (0 central, 1 van Leer)
LIMITERS = ("none", "vanleer")
SYMMETRY = "symmetry"
BC_KINDS = (DIFFUSE_WALL, FREESTREAM, OUTFLOW, SYMMETRY)
SIDES = ("west", "east", "south", "north")


class DivergenceError(RuntimeError):
    def __init__(self, msg, step=None):
        super().__init__(msg if step is None else f"{msg} (step {step})")
        self.step = step


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str
    wall_T: float = 1.0
    wall_u: tuple = (0.0, 0.0)
    freestream_state: Optional[Macroscopics] = None

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise ConfigurationError(f"unknown boundary kind {self.kind!r}")
        if self.kind == DIFFUSE_WALL and not self.wall_T > 0:
            raise ConfigurationError("wall temperature must be > 0")
        if self.kind == FREESTREAM and self.freestream_state is None:
            raise ConfigurationError("freestream boundary needs a state")

    @classmethod
    def diffuse(cls, T, u=(0.0, 0.0)):
        return cls(DIFFUSE_WALL, wall_T=float(T), wall_u=tuple(u))

    @classmethod
    def freestream(cls, state):
        return cls(FREESTREAM, freestream_state=state)

    @classmethod
    def outflow(cls):
        return cls(OUTFLOW)

    @classmethod
    def symmetry(cls):
        return cls(SYMMETRY)


@dataclass
class Mesh2D:
    """Uniform Cartesian mesh with an optional solid-cell mask.

    ``boundaries`` maps ``west/east/south/north`` (domain edges) and
    ``solid`` (faces of solid cells exposed to fluid) to boundary conditions.
    """

    nx: int
    ny: int
    dx: float
    dy: float
    boundaries: dict
    origin: tuple = (0.0, 0.0)
    solid: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1 or not (self.dx > 0 and self.dy > 0):
            raise ConfigurationError("mesh needs positive sizes")
        solid = np.zeros((self.nx, self.ny), bool) if self.solid is None else np.array(self.solid, bool)
        if solid.shape != (self.nx, self.ny):
            raise ConfigurationError("solid mask shape does not match the mesh")
        if solid.all():
            raise ConfigurationError("mesh has no fluid cell")
        solid.setflags(write=False)
        self.solid = solid
        missing = [s for s in SIDES if s not in self.boundaries]
        if missing:
            raise ConfigurationError(f"no boundary condition for {missing}")
        if solid.any() and "solid" not in self.boundaries:
            raise ConfigurationError("solid cells present but no 'solid' boundary condition")

    @classmethod
    def uniform(cls, nx, ny, Lx, Ly, boundaries, origin=(0.0, 0.0), obstacle=None):
        """Mesh on ``[x0, x0+Lx] x [y0, y0+Ly]``; ``obstacle`` is ``(xa, xb, ya, yb)``."""
        mesh = cls(nx, ny, Lx / nx, Ly / ny, dict(boundaries), tuple(origin))
        if obstacle is not None:
            xc, yc = mesh.cell_centers()
            xa, xb, ya, yb = obstacle
            solid = (xc[:, None] > xa) & (xc[:, None] < xb) & (yc[None, :] > ya) & (yc[None, :] < yb)
            mesh = cls(nx, ny, mesh.dx, mesh.dy, dict(boundaries), tuple(origin), solid)
        return mesh

    @property
    def fluid(self):
        return ~self.solid

    def cell_centers(self):
        x0, y0 = self.origin
        return x0 + (np.arange(self.nx) + 0.5) * self.dx, y0 + (np.arange(self.ny) + 0.5) * self.dy

    @property
    def extent(self):
        x0, y0 = self.origin
        return x0, x0 + self.nx * self.dx, y0, y0 + self.ny * self.dy


@dataclass
class DistributionField:
    values: np.ndarray
    step: int = 0
    time: float = 0.0
    dt: float = 0.0

    def copy(self):
        return DistributionField(self.values.copy(), self.step, self.time, self.dt)


@dataclass
class SolverConfig:
    cfl: float = 0.8
    steady_tol: float = 1e-6
    max_steps: int = 100000
    report_every: int = 1000
    scheme: str = "dugks"
    limiter: str = "vanleer"
    conservative: bool = True
    threads: int = 1
    max_retries: int = 4

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise ConfigurationError(f"cfl must lie in (0, 1], got {self.cfl!r}")
        if not self.steady_tol > 0:
            raise ConfigurationError("steady_tol must be > 0")
        if self.max_steps < 0 or self.report_every < 1:
            raise ConfigurationError("max_steps must be >= 0 and report_every >= 1")
        if self.scheme not in ("dugks", "upwind"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.limiter not in LIMITERS:
            raise ConfigurationError(f"unknown limiter {self.limiter!r}; choose from {LIMITERS}")


@dataclass
class _FaceGroup:
    axis: int
    bc: BoundaryCondition
    fi: np.ndarray
    fj: np.ndarray
    ci: np.ndarray
    cj: np.ndarray
    sign: np.ndarray
    inflow: np.ndarray  # (B, K) bool, node moves into the fluid
    extra: dict = dc_field(default_factory=dict)


@dataclass
class RunResult:
    field: DistributionField
    steps: int
    residual: float
    converged: bool
    history: list


def _mirror_map(vs: VelocitySet, axis):
    """Index of the node reflected across a face normal to ``axis``."""
    sx = -1.0 if axis == 0 else 1.0
    tx = sx * vs.xi_x
    ty = -vs.xi_y if axis == 1 else vs.xi_y
    scale = max(vs.max_radius, 1.0)
    d = (vs.xi_x[None, :] - tx[:, None]) ** 2 + (vs.xi_y[None, :] - ty[:, None]) ** 2
    m = np.argmin(d, axis=1)
    if np.sqrt(d[np.arange(vs.K), m]).max() > 1e-9 * scale:
        raise ConfigurationError(
            "symmetry boundary needs a velocity set that is mirror-symmetric "
            "(use an even angular count)"
        )
    return m


class Solver:
    """DUGKS driver binding a mesh, velocity set, gas model and boundaries."""

    def __init__(self, mesh: Mesh2D, vs: VelocitySet, gas: GasModel,
                 config: Optional[SolverConfig] = None, backend=None):
        self.mesh = mesh
        self.vs = vs
        self.gas = gas
        self.config = config or SolverConfig()
        self.kern = kernels.get_backend(backend) if not hasattr(backend, "cell_stage") else backend
        self.kern.set_num_threads(self.config.threads)
        self.xi = np.ascontiguousarray(vs.xi_x, dtype=float)
        self.yi = np.ascontiguousarray(vs.xi_y, dtype=float)
        self.w = np.ascontiguousarray(vs.w_eff, dtype=float)
        self.gas_tuple = (gas.Pr, float(gas.N), gas.mu_ref, gas.T_ref, gas.omega_v, gas.q_retention)
        self.fluid = np.ascontiguousarray(mesh.fluid, dtype=np.uint8)
        self._build_topology()
        self._res0 = None
        self.last_raw_residual = math.nan
        # faces of the last step that fell back to the collisionless limit
        self.vacuum_faces = 0
        nx, ny, K = mesh.nx, mesh.ny, vs.K
        self._fbp = np.zeros((nx, ny, K, 2))
        self._ftp = np.zeros_like(self._fbp)
        self._feq = np.zeros_like(self._fbp)
        self._sx = np.zeros_like(self._fbp)
        self._sy = np.zeros_like(self._fbp)
        self._macro = np.zeros((nx, ny, 7))
        self._Fx = np.zeros((nx + 1, ny, K, 2))
        self._Fy = np.zeros((nx, ny + 1, K, 2))

    # -- setup -------------------------------------------------------------

    def _equilibrium_pair(self, state: Macroscopics):
        if self.config.conservative:
            d = discrete_shakhov_pair(state, self.gas, self.vs)
        else:
            d = shakhov_pair(state, self.gas, self.vs)
        return np.stack([d.g, d.h], axis=-1)

    def _build_topology(self):
        m = self.mesh
        nx, ny = m.nx, m.ny
        fl = m.fluid
        nbr = np.zeros((nx, ny, 4), np.int8)
        code = {DIFFUSE_WALL: 1, FREESTREAM: 2, OUTFLOW: 2, SYMMETRY: 2}
        solid_code = code[m.boundaries["solid"].kind] if "solid" in m.boundaries else 1
        pad = np.zeros((nx + 2, ny + 2), bool)
        pad[1:-1, 1:-1] = fl
        for side, (di, dj) in enumerate(((-1, 0), (1, 0), (0, -1), (0, 1))):
            nb = pad[1 + di: nx + 1 + di, 1 + dj: ny + 1 + dj]
            c = np.where(nb, 0, solid_code).astype(np.int8)
            if di == -1:
                c[0, :] = code[m.boundaries["west"].kind]
            elif di == 1:
                c[-1, :] = code[m.boundaries["east"].kind]
            elif dj == -1:
                c[:, 0] = code[m.boundaries["south"].kind]
            else:
                c[:, -1] = code[m.boundaries["north"].kind]
            nbr[..., side] = c
        self.nbr = nbr

        # face flags: 0 interior, 1 boundary, 2 inactive
        facex = np.full((nx + 1, ny), 2, np.int8)
        facey = np.full((nx, ny + 1), 2, np.int8)
        left = np.zeros((nx + 1, ny), bool)
        right = np.zeros((nx + 1, ny), bool)
        left[1:] = fl
        right[:-1] = fl
        facex[left & right] = 0
        facex[left ^ right] = 1
        down = np.zeros((nx, ny + 1), bool)
        up = np.zeros((nx, ny + 1), bool)
        down[:, 1:] = fl
        up[:, :-1] = fl
        facey[down & up] = 0
        facey[down ^ up] = 1
        self.facex, self.facey = facex, facey

        groups = {}
        for axis, flags, lo, hi in ((0, facex, left, right), (1, facey, down, up)):
            fi, fj = np.nonzero(flags == 1)
            for a, b in zip(fi, fj):
                plus = hi[a, b]  # fluid cell on the + side
                if axis == 0:
                    cell = (a, b) if plus else (a - 1, b)
                    name = "west" if a == 0 else "east" if a == nx else "solid"
                else:
                    cell = (a, b) if plus else (a, b - 1)
                    name = "south" if b == 0 else "north" if b == ny else "solid"
                groups.setdefault((axis, name), []).append((a, b, cell[0], cell[1], 1 if plus else -1))

        xn_all = (self.xi, self.yi)
        self.face_groups = []
        for (axis, name), rows in sorted(groups.items()):
            arr = np.array(rows)
            bc = m.boundaries[name]
            sign = arr[:, 4].astype(float)
            xn = xn_all[axis]
            inflow = sign[:, None] * xn[None, :] > 0
            if not np.all(inflow.any(axis=1)):
                raise ConfigurationError(
                    f"boundary '{name}' has faces with no incoming velocity node; increase N_theta"
                )
            grp = _FaceGroup(axis, bc, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], sign, inflow)
            if bc.kind == DIFFUSE_WALL:
                wm = Macroscopics(1.0, tuple(bc.wall_u), bc.wall_T, (0.0, 0.0), self.gas.N)
                grp.extra["wall"] = self._equilibrium_pair(wm)
            elif bc.kind == FREESTREAM:
                st = bc.freestream_state
                st = Macroscopics(st.rho, tuple(st.u), st.T, (0.0, 0.0), self.gas.N)
                grp.extra["state"] = self._equilibrium_pair(st)
            elif bc.kind == SYMMETRY:
                grp.extra["mirror"] = _mirror_map(self.vs, axis)
            self.face_groups.append(grp)

    # -- public operations -------------------------------------------------

    @property
    def residual_reference(self):
        """Raw first-step residual used for normalisation (None before any step)."""
        return self._res0

    @residual_reference.setter
    def residual_reference(self, value):
        self._res0 = None if value is None else float(value)

    def initialize(self, state: Macroscopics) -> DistributionField:
        """Every fluid cell set to the equilibrium pair of ``state`` with ``q = 0``."""
        if not (state.rho > 0 and state.T > 0):
            raise ConfigurationError(f"initial state needs rho, T > 0, got {state.rho!r}, {state.T!r}")
        st = Macroscopics(state.rho, tuple(state.u), state.T, (0.0, 0.0), self.gas.N)
        eq = self._equilibrium_pair(st)
        values = np.zeros((self.mesh.nx, self.mesh.ny, self.vs.K, 2))
        values[self.mesh.fluid] = eq
        self._res0 = None
        return DistributionField(values)

    def initialize_from(self, rho, ux, uy, T) -> DistributionField:
        """Cell-wise equilibrium initialisation from arrays of shape ``(nx, ny)``."""
        fl = self.mesh.fluid
        st = Macroscopics(rho[fl], (ux[fl], uy[fl]), T[fl], (np.zeros(fl.sum()),) * 2, self.gas.N)
        st.validate()
        eq = self._equilibrium_pair(st)
        values = np.zeros((self.mesh.nx, self.mesh.ny, self.vs.K, 2))
        values[fl] = eq
        self._res0 = None
        return DistributionField(values)

    def time_step_size(self, cfl=None):
        cfl = self.config.cfl if cfl is None else cfl
        smax = np.max(np.abs(self.xi) + np.abs(self.yi))
        return cfl * min(self.mesh.dx, self.mesh.dy) / smax

    def _boundary_fbar(self, grp, xn, fbar, ext):
        """Fill the incoming nodes of boundary half-step values ``fbar``.

        ``ext`` is the zero-gradient extension used by outflow faces.
        """
        inflow = grp.inflow[..., None]
        kind = grp.bc.kind
        if kind == DIFFUSE_WALL:
            wn = self.w * xn * grp.sign[:, None]  # weight * (xi . n_into_fluid)
            wall = grp.extra["wall"]
            out_flux = np.sum(np.where(grp.inflow, 0.0, wn * fbar[..., 0]), axis=1)
            in_unit = np.sum(np.where(grp.inflow, wn, 0.0) * wall[None, :, 0], axis=1)
            rho_w = -out_flux / in_unit
            return np.where(inflow, rho_w[:, None, None] * wall[None], fbar)
        if kind == FREESTREAM:
            return np.where(inflow, grp.extra["state"][None], fbar)
        if kind == SYMMETRY:
            return np.where(inflow, fbar[:, grp.extra["mirror"]], fbar)
        if kind == OUTFLOW:
            return np.where(inflow, ext, fbar)
        return fbar

    def apply_boundaries(self, fbp, sx, sy, dt, Fx, Fy):
        """Fill boundary-face fluxes in ``Fx``/``Fy``; returns the face distributions.

        Each face gets a half-step distribution ``f_bar``: outgoing nodes are
        reconstructed from the fluid cell, incoming nodes come from the
        boundary (wall Maxwellian scaled to zero net mass flux, freestream
        ghost state, zero-gradient copy, or mirror image).  ``f_bar`` is then
        turned into the face distribution exactly as on interior faces.
        """
        hh = 0.5 * dt
        mesh = self.mesh
        out = []
        for grp in self.face_groups:
            if grp.axis == 0:
                xn, xt, sn, st, d, F = self.xi, self.yi, sx, sy, mesh.dx, Fx
            else:
                xn, xt, sn, st, d, F = self.yi, self.xi, sy, sx, mesh.dy, Fy
            c = (grp.ci, grp.cj)
            off = (-0.5 * d * grp.sign)[:, None, None] - (xn * hh)[None, :, None]
            fbar = fbp[c] + off * sn[c] + (-xt * hh)[None, :, None] * st[c]
            ext = fbp[c] + (-xt * hh)[None, :, None] * st[c]
            fbar = self._boundary_fbar(grp, xn, fbar, ext)
            kind = grp.bc.kind
            if hh > 0:
                # first-order variant, used where the reconstruction overshoots
                first = self._boundary_fbar(grp, xn, fbp[c], fbp[c])
                fbar = np.ascontiguousarray(fbar)
                f = np.empty_like(fbar)
                self.vacuum_faces += self.kern.face_batch(
                    fbar, np.ascontiguousarray(first), self.xi, self.yi, self.w,
                    self.gas_tuple, hh, self.config.conservative, f)
            else:
                f = fbar
            F[grp.fi, grp.fj] = xn[None, :, None] * f
            out.append(f)
        return out

    def _step(self, values, dt):
        k = self.kern
        cfg = self.config
        if cfg.scheme == "upwind":
            return self._step_upwind(values, dt)
        code = k.cell_stage(values, self.fluid, self.xi, self.yi, self.w, self.gas_tuple, dt,
                            cfg.conservative, self._fbp, self._ftp, self._feq, self._macro)
        if code:
            raise StateError(f"non-physical cell state (cell code {code})")
        k.slopes(self._fbp, self.nbr, self.xi, self.yi, self.mesh.dx, self.mesh.dy,
                 self._sx, self._sy, LIMITERS.index(cfg.limiter))
        # every active face is rewritten below; inactive ones stay zero.
        # Faces use the same (corrected) equilibrium as cells and walls, so a
        # uniform rest state inside walls is an exact discrete steady state.
        self.vacuum_faces = k.interior_fluxes(
            self._fbp, self._sx, self._sy, self.facex, self.facey, self.xi, self.yi, self.w,
            self.gas_tuple, dt, self.mesh.dx, self.mesh.dy, cfg.conservative, self._Fx, self._Fy)
        self.apply_boundaries(self._fbp, self._sx, self._sy, dt, self._Fx, self._Fy)
        new = np.empty_like(values)
        k.update(self._ftp, self._Fx, self._Fy, self.fluid, dt, self.mesh.dx, self.mesh.dy, new)
        return new

    def _step_upwind(self, values, dt):
        """First-order upwind transport followed by an implicit collision."""
        kp = _kp
        zero = np.zeros_like(values)
        self._Fx.fill(0.0)
        self._Fy.fill(0.0)
        kp.interior_fluxes(values, zero, zero, self.facex, self.facey, self.xi, self.yi, self.w,
                           self.gas_tuple, 0.0, self.mesh.dx, self.mesh.dy, False, self._Fx, self._Fy)
        self.apply_boundaries(values, zero, zero, 0.0, self._Fx, self._Fy)
        star = np.empty_like(values)
        kp.update(values, self._Fx, self._Fy, self.mesh.fluid, dt, self.mesh.dx, self.mesh.dy, star)
        fl = self.mesh.fluid
        fs = star[fl]
        rho, ux, uy, T, qx, qy = kp._moments(fs[..., 0], fs[..., 1], self.xi, self.yi, self.w, self.gas.N)
        if kp._bad(rho, T).size:
            raise StateError("non-physical cell state in upwind step")
        tau = kp._tau(rho, T, self.gas_tuple)
        r = dt / tau
        fac = 1.0 / (1.0 + r * (1.0 - self.gas.q_retention))
        gS, hS = kp._equilibrium(rho, ux, uy, T, qx * fac, qy * fac, self.xi, self.yi, self.w,
                                 self.gas_tuple, self.config.conservative)
        eq = np.stack([gS, hS], axis=-1)
        r = r[:, None, None]
        star[fl] = (fs + r * eq) / (1.0 + r)
        return star

    def conserved(self, values):
        out = np.zeros((self.mesh.nx, self.mesh.ny, 4))
        self.kern.conserved(values, self.fluid, self.xi, self.yi, self.w, out)
        return out

    def advance(self, field: DistributionField, dt=None):
        """One time step; returns the new field and the normalised residual.

        The residual is the L2 norm over fluid cells of the change in
        ``(rho, rho u, rho E)`` divided by ``dt``, relative to the first call's
        value (floored at ``1e-8 |U| / dt`` so a field that starts steady is
        reported as converged).  The unnormalised value is kept in
        ``last_raw_residual``.
        """
        dt = self.time_step_size() if dt is None else dt
        before = self.conserved(field.values)
        for attempt in range(self.config.max_retries + 1):
            try:
                new = self._step(field.values, dt)
                after = self.conserved(new)
                fl = self.mesh.fluid
                rho = after[fl][:, 0]
                if not np.all(np.isfinite(new)) or np.any(rho <= 0):
                    raise StateError("non-finite or negative density after update")
                ux = after[fl][:, 1] / rho
                uy = after[fl][:, 2] / rho
                T = (after[fl][:, 3] / rho - 0.5 * (ux * ux + uy * uy)) / self.gas.energy_factor
                if np.any(~(T > 0)):
                    raise StateError("non-positive temperature after update")
                break
            except StateError as exc:
                if attempt == self.config.max_retries:
                    raise DivergenceError(str(exc), field.step + 1) from exc
                log.warning("step %d: %s; retrying with dt/2", field.step + 1, exc)
                dt *= 0.5
        raw = float(np.sqrt(np.sum((after - before)[self.mesh.fluid] ** 2))) / dt
        self.last_raw_residual = raw
        if self._res0 is None:
            # floor keeps an already-steady start from normalising by round-off
            floor = 1e-8 * float(np.sqrt(np.sum(before[self.mesh.fluid] ** 2))) / dt
            self._res0 = max(raw, floor, np.finfo(float).tiny)
        return DistributionField(new, field.step + 1, field.time + dt, dt), raw / self._res0

    def run_to_steady(self, field: DistributionField, config: Optional[SolverConfig] = None,
                      callback: Optional[Callable] = None) -> RunResult:
        """Advance until the residual drops below ``steady_tol`` or the step budget ends."""
        cfg = config or self.config
        history = []
        residual = math.inf
        steps = 0
        converged = False
        while steps < cfg.max_steps:
            field, residual = self.advance(field)
            steps += 1
            history.append(residual)
            if steps % cfg.report_every == 0:
                log.info("step %d  t=%.6g  residual=%.3e", field.step, field.time, residual)
                if callback is not None:
                    callback(field, steps, residual)
            if residual < cfg.steady_tol:
                converged = True
                break
        return RunResult(field, steps, residual, converged, history)

    # -- diagnostics -------------------------------------------------------

    def macroscopics(self, field: DistributionField):
        """Cell arrays ``rho, ux, uy, T, qx, qy`` (NaN in solid cells)."""
        U = self.conserved(field.values)
        fl = self.mesh.fluid
        v = field.values
        with np.errstate(invalid="ignore", divide="ignore"):
            rho = U[..., 0]
            ux = U[..., 1] / rho
            uy = U[..., 2] / rho
            T = (U[..., 3] / rho - 0.5 * (ux * ux + uy * uy)) / self.gas.energy_factor
            cx = self.xi - ux[..., None]
            cy = self.yi - uy[..., None]
            e = (cx * cx + cy * cy) * v[..., 0] + v[..., 1]
            qx = 0.5 * np.sum(self.w * cx * e, axis=-1)
            qy = 0.5 * np.sum(self.w * cy * e, axis=-1)
            if self.config.scheme == "dugks" and field.dt > 0:
                tau = self.gas.mu_ref * (T / self.gas.T_ref) ** self.gas.omega_v / (rho * T)
                fac = 2.0 * tau / (2.0 * tau + field.dt * (1.0 - self.gas.q_retention))
                qx = qx * fac
                qy = qy * fac
        out = {"rho": rho, "ux": ux, "uy": uy, "T": T, "qx": qx, "qy": qy}
        for a in out.values():
            a[~fl] = np.nan
        return out

    def checkpoint(self, path, field: DistributionField, **meta):
        """:func:`save_checkpoint` with mesh size and velocity-set parameters attached."""
        m = self.mesh
        meta = {
            "mesh": {"nx": m.nx, "ny": m.ny, "dx": m.dx, "dy": m.dy, "origin": list(m.origin)},
            "velocity_set": self.vs.describe(),
            "layout": "(nx, ny, K, 2) C order; nodes radial-major; last axis (g, h)",
            "residual_reference": self._res0,
            **meta,
        }
        return save_checkpoint(path, field, **meta)

    def total_mass(self, field: DistributionField):
        U = self.conserved(field.values)
        return float(np.sum(U[..., 0][self.mesh.fluid])) * self.mesh.dx * self.mesh.dy


def save_checkpoint(path, field: DistributionField, **meta):
    """Write ``field`` (and JSON-serialisable ``meta``) to an ``.npz`` file."""
    np.savez(path, values=field.values, step=field.step, time=field.time, dt=field.dt,
             meta=json.dumps(meta, sort_keys=True))
    return path


def load_checkpoint(path):
    """Inverse of :func:`save_checkpoint`; returns ``(field, meta)``."""
    with np.load(path, allow_pickle=False) as z:
        field = DistributionField(z["values"].copy(), int(z["step"]), float(z["time"]), float(z["dt"]))
        meta = json.loads(str(z["meta"]))
    return field, meta


def initialize(mesh, vs, gas, init_state, config=None):
    """Equilibrium initialisation; returns ``(solver, field)``."""
    s = Solver(mesh, vs, gas, config)
    return s, s.initialize(init_state)


def time_step_size(mesh, vs, cfl):
    smax = np.max(np.abs(vs.xi_x) + np.abs(vs.xi_y))
    return cfl * min(mesh.dx, mesh.dy) / smax
