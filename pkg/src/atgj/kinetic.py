"""Reduced BGK-Shakhov gas model on a discrete velocity set.

Units: Maxwellian ``rho/(pi T) exp(-|c|^2/T)`` (gas constant 1/2), pressure
``p = rho T``, energy ``rho E = rho |u|^2 / 2 + (3 + N)/4 rho T``.

Every routine works on a single state or on a batch: macroscopic arrays of
shape ``(...)`` broadcast against nodes on a trailing axis ``(..., K)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .quadrature import VelocitySet

__all__ = [
    "StateError",
    "GasModel",
    "Macroscopics",
    "DistPair",
    "equilibrium_g",
    "shakhov_pair",
    "discrete_shakhov_pair",
    "moments",
    "relaxation_time",
    "collision",
    "temperature_from_energy",
    "energy_from_temperature",
]

GAS_CONSTANT = 0.5


class StateError(ArithmeticError):
    """Non-physical macroscopic state recovered from a distribution."""


@dataclass(frozen=True)
class GasModel:
    Kn: float
    Pr: float = 2.0 / 3.0
    N: int = 0
    omega_v: float = 0.81
    T_ref: float = 1.0
    rho_ref: float = 1.0
    L_ref: float = 1.0

    def __post_init__(self):
        if not self.Pr > 0:
            raise ValueError(f"Prandtl number must be > 0, got {self.Pr!r}")
        if not self.Kn > 0:
            raise ValueError(f"Knudsen number must be > 0, got {self.Kn!r}")
        if int(self.N) != self.N or self.N < 0:
            raise ValueError(f"internal_dof must be a non-negative integer, got {self.N!r}")
        if not 0.5 <= self.omega_v <= 1.0:
            raise ValueError(f"viscosity exponent must lie in [0.5, 1], got {self.omega_v!r}")

    @property
    def mu_ref(self):
        # hard-sphere mean free path: l = (mu/p) sqrt(pi R T / 2)
        p_ref = self.rho_ref * self.T_ref
        return self.Kn * self.L_ref * p_ref / math.sqrt(0.5 * math.pi * GAS_CONSTANT * self.T_ref)

    @property
    def energy_factor(self):
        return 0.25 * (3 + self.N)

    @property
    def q_retention(self):
        """Fraction of the heat flux ``q`` carried by the Shakhov pair built from ``q``.

        For the pair as written (``p = rho T``) this is ``(1 - Pr) / 2``, so the
        heat flux relaxes at rate ``(1 - q_retention) / tau``.
        """
        return 0.5 * (1.0 - self.Pr)


@dataclass
class Macroscopics:
    rho: float
    u: tuple = (0.0, 0.0)
    T: float = 1.0
    q: tuple = (0.0, 0.0)
    N: int = 0

    @property
    def p(self):
        return self.rho * self.T

    @property
    def E(self):
        """Specific total energy (``rho E / rho``)."""
        ux, uy = self.u
        return 0.5 * (ux * ux + uy * uy) + 0.25 * (3 + self.N) * self.T

    def validate(self):
        if not (np.all(np.isfinite(self.rho)) and np.all(np.asarray(self.rho) > 0)):
            raise StateError(f"density must be positive, got {self.rho!r}")
        if not (np.all(np.isfinite(self.T)) and np.all(np.asarray(self.T) > 0)):
            raise StateError(f"temperature must be positive, got {self.T!r}")
        return self


class DistPair(NamedTuple):
    g: np.ndarray
    h: np.ndarray


def energy_from_temperature(rho, u, T, N=0):
    ux, uy = u
    return rho * (0.5 * (ux * ux + uy * uy) + 0.25 * (3 + N) * T)


def temperature_from_energy(rho, u, rhoE, N=0):
    ux, uy = u
    return (rhoE / rho - 0.5 * (ux * ux + uy * uy)) / (0.25 * (3 + N))


def _ex(a):
    return np.asarray(a, dtype=float)[..., None]


def _maxwellian(rho, ux, uy, T, xi_x, xi_y):
    cx = xi_x - _ex(ux)
    cy = xi_y - _ex(uy)
    c2 = cx * cx + cy * cy
    T_ = _ex(T)
    return _ex(rho) / (np.pi * T_) * np.exp(-c2 / T_), cx, cy, c2


def _shakhov_arrays(rho, ux, uy, T, qx, qy, Pr, N, xi_x, xi_y):
    geq, cx, cy, c2 = _maxwellian(rho, ux, uy, T, xi_x, xi_y)
    T_ = _ex(T)
    cq = (cx * _ex(qx) + cy * _ex(qy)) / (5.0 * _ex(rho) * T_ * T_)
    g = geq * (1.0 + (1.0 - Pr) * 4.0 * cq * (c2 / T_ - 2.0))
    h = (0.5 * (1 + N)) * T_ * geq * (
        1.0 + (1.0 - Pr) * 2.0 * cq * (2.0 * c2 / T_ - 2.0 - 2.0 * N / (1.0 + N))
    )
    return g, h, geq, cx, cy, c2


def equilibrium_g(m: Macroscopics, vs: VelocitySet):
    """Maxwellian ``g^eq`` at every node."""
    return _maxwellian(m.rho, m.u[0], m.u[1], m.T, vs.xi_x, vs.xi_y)[0]


def shakhov_pair(m: Macroscopics, gm: GasModel, vs: VelocitySet) -> DistPair:
    """Shakhov-corrected pair ``(g^S, h^S)`` evaluated pointwise at the nodes."""
    g, h = _shakhov_arrays(
        m.rho, m.u[0], m.u[1], m.T, m.q[0], m.q[1], gm.Pr, gm.N, vs.xi_x, vs.xi_y
    )[:2]
    return DistPair(g, h)


def conservative_correction(g, h, geq, cx, cy, c2, rho, T, qx, qy, gm: GasModel, w):
    """Add a small ``geq * poly(c)`` term so the discrete moments come out exact.

    The corrected pair reproduces, under the weights ``w``, the density, zero
    peculiar momentum, internal energy and the heat flux ``q_retention * q``
    that the continuous pair carries.  Works on batches ``(..., K)``.
    """
    T_ = np.asarray(T, dtype=float)
    kappa = (0.5 * (1 + gm.N)) * T_[..., None]
    s = 1.0 / np.sqrt(T_)[..., None]
    chx, chy, ch2 = cx * s, cy * s, c2 * s * s
    basis = (np.ones_like(chx), chx, chy, ch2, chx * ch2, chy * ch2)
    e = c2 + kappa
    tests = (np.ones_like(cx), cx, cy, e, cx * e, cy * e)

    wg = w * geq
    A = np.empty(geq.shape[:-1] + (6, 6))
    for i, psi in enumerate(tests):
        pw = psi * wg
        for j, phi in enumerate(basis):
            A[..., i, j] = np.sum(pw * phi, axis=-1)

    rho = np.asarray(rho, dtype=float)
    target = np.zeros(geq.shape[:-1] + (6,))
    target[..., 0] = rho
    target[..., 3] = 0.5 * (3 + gm.N) * rho * T_
    target[..., 4] = 2.0 * gm.q_retention * np.asarray(qx, dtype=float)
    target[..., 5] = 2.0 * gm.q_retention * np.asarray(qy, dtype=float)
    have = np.stack(
        [
            np.sum(w * g, axis=-1),
            np.sum(w * cx * g, axis=-1),
            np.sum(w * cy * g, axis=-1),
            np.sum(w * (c2 * g + h), axis=-1),
            np.sum(w * cx * (c2 * g + h), axis=-1),
            np.sum(w * cy * (c2 * g + h), axis=-1),
        ],
        axis=-1,
    )
    beta = np.linalg.solve(A, (target - have)[..., None])[..., 0]
    corr = geq * sum(beta[..., j, None] * basis[j] for j in range(6))
    return g + corr, h + kappa * corr


def discrete_shakhov_pair(m: Macroscopics, gm: GasModel, vs: VelocitySet) -> DistPair:
    """Shakhov pair whose discrete moments match ``m`` exactly.

    Plain :func:`shakhov_pair` reproduces ``rho, u, E`` only up to the
    quadrature error; this variant is the fixed point used by the solver.
    """
    g, h, geq, cx, cy, c2 = _shakhov_arrays(
        m.rho, m.u[0], m.u[1], m.T, m.q[0], m.q[1], gm.Pr, gm.N, vs.xi_x, vs.xi_y
    )
    g, h = conservative_correction(
        g, h, geq, cx, cy, c2, m.rho, m.T, m.q[0], m.q[1], gm, vs.w_eff
    )
    return DistPair(g, h)


def raw_moments(g, h, vs: VelocitySet, N=0):
    """Batched moments ``(rho, ux, uy, T, qx, qy)`` without validation."""
    w = vs.w_eff
    rho = np.sum(w * g, axis=-1)
    mx = np.sum(w * vs.xi_x * g, axis=-1)
    my = np.sum(w * vs.xi_y * g, axis=-1)
    rhoE = 0.5 * np.sum(w * ((vs.xi_x ** 2 + vs.xi_y ** 2) * g + h), axis=-1)
    ux = mx / rho
    uy = my / rho
    T = temperature_from_energy(rho, (ux, uy), rhoE, N)
    cx = vs.xi_x - _ex(ux)
    cy = vs.xi_y - _ex(uy)
    e = (cx * cx + cy * cy) * g + h
    qx = 0.5 * np.sum(w * cx * e, axis=-1)
    qy = 0.5 * np.sum(w * cy * e, axis=-1)
    return rho, ux, uy, T, qx, qy


def moments(d: DistPair, vs: VelocitySet, gm: GasModel) -> Macroscopics:
    """Density, velocity, temperature and heat flux of a distribution pair."""
    rho, ux, uy, T, qx, qy = raw_moments(np.asarray(d.g), np.asarray(d.h), vs, gm.N)
    m = Macroscopics(rho=rho, u=(ux, uy), T=T, q=(qx, qy), N=gm.N)
    m.validate()
    if np.ndim(rho) == 0:
        m = Macroscopics(
            rho=float(rho), u=(float(ux), float(uy)), T=float(T), q=(float(qx), float(qy)), N=gm.N
        )
    return m


def viscosity(T, gm: GasModel):
    return gm.mu_ref * (np.asarray(T) / gm.T_ref) ** gm.omega_v


def relaxation_time(m: Macroscopics, gm: GasModel):
    """``tau = mu / p`` with a power-law viscosity."""
    tau = viscosity(m.T, gm) / (np.asarray(m.rho) * np.asarray(m.T))
    return float(tau) if np.ndim(tau) == 0 else tau


def collision(d: DistPair, m: Macroscopics, gm: GasModel, vs: VelocitySet) -> DistPair:
    """BGK-Shakhov relaxation terms ``-(g - g^S)/tau`` and ``-(h - h^S)/tau``."""
    tau = relaxation_time(m, gm)
    gS, hS = shakhov_pair(m, gm, vs)
    return DistPair(-(np.asarray(d.g) - gS) / tau, -(np.asarray(d.h) - hS) / tau)
