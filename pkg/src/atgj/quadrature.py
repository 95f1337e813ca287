"""Arctangent Gauss-Jacobi velocity-space quadrature.

The plane is mapped to ``(r, theta) in (0, 1) x (0, 2*pi]`` through
``R(r) = sqrt(lam * T0 * tan(pi * r / 2))``.  The radial integral is done by
Gauss-Jacobi quadrature for the weight ``(1 - r)**alpha`` and the angular one
by the periodic trapezoidal rule, so that

    sum_k w_k f(xi_k)  ~  integral of omega(xi) f(xi) over the plane

with the bell-shaped weight ``omega`` returned by :func:`weight_function`.
Node ordering is radial-major: node ``k = i * n_theta + j`` sits at radius
``R_i`` and angle ``theta_j``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import poch

from .eigen import EigenError, tridiagonal_eigh

__all__ = [
    "ParameterError",
    "QuadratureNumericalError",
    "EvaluationError",
    "WeightParams",
    "RecurrenceCoeffs",
    "RadialRule",
    "AngularRule",
    "VelocitySet",
    "weight_function",
    "jacobi_recurrence",
    "golub_welsch",
    "radial_map",
    "angular_rule",
    "build_velocity_set",
    "newton_cotes_set",
    "integrate_weighted",
    "integrate_plain",
    "total_weight",
    "write_csv",
    "read_csv",
]

# tan(pi r / 2) blows up at r = 1
R_MAX_NODE = 1.0 - 1e-15


class ParameterError(ValueError):
    pass


class QuadratureNumericalError(ArithmeticError):
    pass


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class WeightParams:
    """Parameters ``(alpha, lam, T0)`` of the arctangent weight function."""

    alpha: float
    lam: float
    T0: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "lam", "T0"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be > 0, got {v!r}")

    @classmethod
    def matched(cls, lam, T0=1.0):
        """Parameters with ``alpha = pi/2 * lam`` (Maxwellian-matched)."""
        return cls(alpha=0.5 * math.pi * lam, lam=lam, T0=T0)

    @property
    def maxwellian_matched(self):
        target = 0.5 * math.pi * self.lam
        return abs(self.alpha - target) <= 1e-12 * target


@dataclass(frozen=True)
class RecurrenceCoeffs:
    a: np.ndarray
    b: np.ndarray
    alpha: float
    beta: float

    @property
    def n(self):
        return self.a.size


@dataclass(frozen=True)
class RadialRule:
    r: np.ndarray
    R: np.ndarray
    w: np.ndarray
    alpha: float

    @property
    def n(self):
        return self.r.size


@dataclass(frozen=True)
class AngularRule:
    theta: np.ndarray
    weight: float
    theta0: float

    @property
    def n(self):
        return self.theta.size


@dataclass(frozen=True)
class VelocitySet:
    """Discrete velocities with raw and effective (plain-integration) weights.

    ``w_raw`` integrates against the weight function, ``w_eff`` integrates
    plain functions.  For Newton-Cotes sets both are the same array and
    ``params`` is ``None``.
    """

    xi_x: np.ndarray
    xi_y: np.ndarray
    w_raw: np.ndarray
    w_eff: np.ndarray
    params: Optional[WeightParams] = None
    kind: str = "atgj"
    n_radial: int = 0
    n_theta: int = 0
    theta0: float = 0.0
    radial: Optional[RadialRule] = field(default=None, repr=False, compare=False)
    nc_points: int = 0
    nc_halfwidth: float = 0.0

    @property
    def K(self):
        return self.xi_x.size

    @property
    def speed(self):
        return np.hypot(self.xi_x, self.xi_y)

    @property
    def max_radius(self):
        return float(self.speed.max())

    def describe(self):
        """Flat dict of the parameters that define this set."""
        if self.kind == "nc":
            return {"rule": "nc", "m": self.nc_points, "u": self.nc_halfwidth}
        return {
            "rule": "atgj",
            "n": self.n_radial,
            "ntheta": self.n_theta,
            "theta0": self.theta0,
            "alpha": self.params.alpha,
            "lambda": self.params.lam,
            "T0": self.params.T0,
        }


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def weight_function(xi_x, xi_y, p: WeightParams):
    """``[1 - (2/pi) atan(chi)]**alpha / (1 + chi**2)``, ``chi = |xi|^2/(lam T0)``."""
    chi = (np.square(xi_x) + np.square(xi_y)) / (p.lam * p.T0)
    return (1.0 - (2.0 / np.pi) * np.arctan(chi)) ** p.alpha / (1.0 + chi * chi)


def jacobi_recurrence(n, alpha, beta=0.0):
    """Three-term recurrence coefficients of the monic-normalised Jacobi family.

    Returns the diagonal ``a`` and the off-diagonal ``b`` (``b[0]`` unused) of
    the Jacobi matrix for the weight ``(1-x)**alpha (1+x)**beta`` on [-1, 1].
    """
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n!r}")
    if not (alpha > -1 and beta > -1):
        raise ParameterError(f"need alpha, beta > -1, got {alpha!r}, {beta!r}")
    n = int(n)
    ab = alpha + beta
    a = np.zeros(n)
    b = np.zeros(n)
    a[0] = (beta - alpha) / (ab + 2.0)
    for k in range(1, n):
        s = 2.0 * k + ab
        a[k] = (beta * beta - alpha * alpha) / (s * (s + 2.0))
        num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab)
        den = s * s * (s + 1.0) * (s - 1.0)
        b[k] = math.sqrt(num / den)
    return RecurrenceCoeffs(a=a, b=b, alpha=float(alpha), beta=float(beta))


def radial_map(r, lam, T0=1.0):
    """Map ``r in (0, 1)`` to the speed ``sqrt(lam T0 tan(pi r / 2))``."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0.0)) or np.any(~(r < 1.0)):
        raise ParameterError("radial coordinate must lie in the open interval (0, 1)")
    out = np.sqrt(lam * T0 * np.tan(0.5 * np.pi * r))
    return float(out) if out.ndim == 0 else out


def golub_welsch(coeffs: RecurrenceCoeffs, p: WeightParams) -> RadialRule:
    """Radial Gauss-Jacobi rule for ``(1 - r)**alpha`` on [0, 1]."""
    if coeffs.beta != 0.0:
        raise ParameterError("radial rule needs beta = 0")
    if coeffs.alpha != p.alpha:
        raise ParameterError(
            f"recurrence alpha {coeffs.alpha!r} does not match weight alpha {p.alpha!r}"
        )
    try:
        x, v = tridiagonal_eigh(coeffs.a, coeffs.b)
    except EigenError as exc:
        raise QuadratureNumericalError(
            f"eigensolver failed for matrix order {coeffs.n}, alpha={p.alpha!r}"
        ) from exc

    r = 0.5 * (x + 1.0)
    if np.any(r <= 0.0) or np.any(r > R_MAX_NODE):
        raise QuadratureNumericalError(
            f"radial node left (0, 1) (order {coeffs.n}, alpha={p.alpha!r})"
        )
    # mu0 = Gamma(a+1)/Gamma(a+2) via the Pochhammer symbol: the difference of
    # two log-gammas near 4e3 (alpha ~ 800) would cost ~1e-12 relative
    w = v[0, :] ** 2 / poch(p.alpha + 1.0, 1.0)
    R = radial_map(r, p.lam, p.T0)
    return RadialRule(r=_frozen(r), R=_frozen(np.atleast_1d(R)), w=_frozen(w), alpha=p.alpha)


def angular_rule(n_theta, theta0=0.0) -> AngularRule:
    """Periodic trapezoid: ``theta_j = theta0 + 2 pi j / n_theta``, j = 1..n_theta."""
    if int(n_theta) != n_theta or n_theta < 3:
        raise ParameterError(f"need at least 3 angular nodes, got {n_theta!r}")
    n_theta = int(n_theta)
    j = np.arange(1, n_theta + 1)
    theta = theta0 + 2.0 * np.pi * j / n_theta
    return AngularRule(theta=_frozen(theta), weight=2.0 * np.pi / n_theta, theta0=float(theta0))


def build_velocity_set(n, n_theta, p: WeightParams, theta0=0.0) -> VelocitySet:
    """Tensor the radial and angular rules into ``n * n_theta`` plane nodes."""
    rad = golub_welsch(jacobi_recurrence(n, p.alpha, 0.0), p)
    ang = angular_rule(n_theta, theta0)

    R = np.repeat(rad.R, ang.n)
    th = np.tile(ang.theta, rad.n)
    # axis-aligned directions get exact zeros (cos(pi/2) is 6e-17 in floating
    # point, which would make grazing nodes look like inflow on one wall only)
    cos, sin = np.cos(th), np.sin(th)
    cos[np.abs(cos) < 1e-14] = 0.0
    sin[np.abs(sin) < 1e-14] = 0.0
    xi_x = R * cos
    xi_y = R * sin
    w = (0.25 * np.pi * p.lam * p.T0 * ang.weight) * np.repeat(rad.w, ang.n)
    w_eff = w / weight_function(xi_x, xi_y, p)
    return VelocitySet(
        xi_x=_frozen(xi_x),
        xi_y=_frozen(xi_y),
        w_raw=_frozen(w),
        w_eff=_frozen(w_eff),
        params=p,
        kind="atgj",
        n_radial=rad.n,
        n_theta=ang.n,
        theta0=float(theta0),
        radial=rad,
    )


def total_weight(p: WeightParams):
    """Closed-form plane integral of the weight function."""
    return np.pi ** 2 * p.lam * p.T0 / (2.0 * (p.alpha + 1.0))


def _simpson_1d(M, U):
    if int(M) != M or M < 3 or M % 2 == 0:
        raise ParameterError(f"composite Simpson needs an odd point count >= 3, got {M!r}")
    if not U > 0:
        raise ParameterError(f"half-width must be > 0, got {U!r}")
    M = int(M)
    x = np.linspace(-U, U, M)
    h = 2.0 * U / (M - 1)
    w = np.full(M, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * h / 3.0


def newton_cotes_set(M, U) -> VelocitySet:
    """``M x M`` composite-Simpson tensor grid on ``[-U, U]^2``."""
    x, w1 = _simpson_1d(M, U)
    X, Y = np.meshgrid(x, x, indexing="ij")
    w = np.outer(w1, w1).ravel()
    w = _frozen(w)
    return VelocitySet(
        xi_x=_frozen(X.ravel()),
        xi_y=_frozen(Y.ravel()),
        w_raw=w,
        w_eff=w,
        params=None,
        kind="nc",
        nc_points=int(M),
        nc_halfwidth=float(U),
    )


def _evaluate(f: Callable, vs: VelocitySet):
    vals = np.broadcast_to(np.asarray(f(vs.xi_x, vs.xi_y), dtype=float), (vs.K,))
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        k = int(bad[0])
        raise EvaluationError(
            f"non-finite integrand at node {k} (xi=({vs.xi_x[k]!r}, {vs.xi_y[k]!r}))"
        )
    return vals


def integrate_weighted(f: Callable, vs: VelocitySet):
    """``sum_k w_k f(xi_k)``, the rule for ``integral omega f``."""
    return float(np.sum(vs.w_raw * _evaluate(f, vs)))


def integrate_plain(F: Callable, vs: VelocitySet):
    """``sum_k W_k F(xi_k)``, the rule for ``integral F``."""
    return float(np.sum(vs.w_eff * _evaluate(F, vs)))


def write_csv(vs: VelocitySet, path):
    """Write ``k,xi_x,xi_y,w_raw,w_eff`` rows at 17 significant digits."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["k", "xi_x", "xi_y", "w_raw", "w_eff"])
        for k in range(vs.K):
            out.writerow(
                [k]
                + [
                    f"{v:.17g}"
                    for v in (vs.xi_x[k], vs.xi_y[k], vs.w_raw[k], vs.w_eff[k])
                ]
            )


def read_csv(path):
    """Read a node file back as ``(xi_x, xi_y, w_raw, w_eff)`` arrays."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 1], data[:, 2], data[:, 3], data[:, 4]
