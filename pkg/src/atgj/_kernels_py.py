"""Pure-numpy DUGKS kernels (fallback when the compiled core is unavailable).

Array conventions shared with ``_kernels.pyx``:

* ``f`` and friends: ``(nx, ny, K, 2)`` C-contiguous, last axis ``(g, h)``.
* ``macro``: ``(nx, ny, 7)`` holding ``rho, ux, uy, T, qx, qy, tau``.
* ``nbr``: ``(nx, ny, 4)`` int8 codes for the west/east/south/north sides,
  0 = fluid neighbour, 1 = wall (one-sided upwind slope), 2 = open (no slope).
* ``gas``: ``(Pr, N, mu_ref, T_ref, omega_v, q_retention)``.

``cell_stage`` returns 0 on success, or ``1 + flat cell index`` of the first
non-physical cell.  Face kernels never fail: they return the number of faces
that fell back to the collisionless (vacuum) limit.
"""

import numpy as np

from .kinetic import GasModel, _shakhov_arrays, conservative_correction

BACKEND = "numpy"


def set_num_threads(n):
    pass


def _gm(gas):
    Pr, N, mu_ref, T_ref, omega_v, _ = gas
    return GasModel(Kn=1.0, Pr=Pr, N=int(N), omega_v=omega_v, T_ref=T_ref)


def _moments(g, h, xi, yi, w, N):
    rho = g @ w
    ux = (g @ (w * xi)) / rho
    uy = (g @ (w * yi)) / rho
    rhoE = 0.5 * (g @ (w * (xi * xi + yi * yi)) + h @ w)
    T = (rhoE / rho - 0.5 * (ux * ux + uy * uy)) / (0.25 * (3 + N))
    cx = xi - ux[:, None]
    cy = yi - uy[:, None]
    e = (cx * cx + cy * cy) * g + h
    qx = 0.5 * np.sum(w * cx * e, axis=-1)
    qy = 0.5 * np.sum(w * cy * e, axis=-1)
    return rho, ux, uy, T, qx, qy


def _bad(rho, T):
    ok = np.isfinite(rho) & np.isfinite(T) & (rho > 0) & (T > 0)
    return np.flatnonzero(~ok)


def _equilibrium(rho, ux, uy, T, qx, qy, xi, yi, w, gas, conservative):
    Pr, N, *_ = gas
    g, h, geq, cx, cy, c2 = _shakhov_arrays(rho, ux, uy, T, qx, qy, Pr, int(N), xi, yi)
    if conservative:
        g, h = conservative_correction(g, h, geq, cx, cy, c2, rho, T, qx, qy, _gm(gas), w)
    return g, h


def _tau(rho, T, gas):
    _, _, mu_ref, T_ref, omega_v, _ = gas
    return mu_ref * (T / T_ref) ** omega_v / (rho * T)


def cell_stage(f, fluid, xi, yi, w, gas, dt, conservative, fbp, ftp, feq, macro):
    """Cell moments, Shakhov equilibria and the DUGKS auxiliary distributions."""
    N = int(gas[1])
    s = gas[5]
    idx = np.nonzero(fluid)
    ft = f[idx]
    rho, ux, uy, T, qx, qy = _moments(ft[..., 0], ft[..., 1], xi, yi, w, N)
    bad = _bad(rho, T)
    if bad.size:
        return 1 + int(np.ravel_multi_index((idx[0][bad[0]], idx[1][bad[0]]), fluid.shape))
    tau = _tau(rho, T, gas)
    fac = 2.0 * tau / (2.0 * tau + dt * (1.0 - s))
    qx = qx * fac
    qy = qy * fac
    gS, hS = _equilibrium(rho, ux, uy, T, qx, qy, xi, yi, w, gas, conservative)
    eq = np.stack([gS, hS], axis=-1)
    hh = 0.5 * dt
    a = ((2.0 * tau - hh) / (2.0 * tau + dt))[:, None, None]
    b = (3.0 * hh / (2.0 * tau + dt))[:, None, None]
    bp = a * ft + b * eq
    feq[idx] = eq
    fbp[idx] = bp
    ftp[idx] = (4.0 / 3.0) * bp - (1.0 / 3.0) * ft
    macro[idx] = np.stack([rho, ux, uy, T, qx, qy, tau], axis=-1)
    return 0


def _van_leer(a, b):
    ab = a * b
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(ab > 0.0, 2.0 * ab / (a + b), 0.0)
    return out


def slopes(fbp, nbr, xi, yi, dx, dy, sx, sy, limiter=1):
    """Gradients of ``fbp``: van Leer limited (``limiter=1``) or central (0).

    Van Leer: next to a wall only nodes moving toward it get a one-sided
    (upwind) slope; other boundary cells are first order.  Central: one-sided
    from the fluid side next to any boundary.
    """
    for axis, d, out, lo, hi, xn in ((0, dx, sx, 0, 1, xi), (1, dy, sy, 2, 3, yi)):
        dm = np.zeros_like(fbp)
        dp = np.zeros_like(fbp)
        if axis == 0:
            dm[1:] = fbp[1:] - fbp[:-1]
            dp[:-1] = fbp[1:] - fbp[:-1]
        else:
            dm[:, 1:] = fbp[:, 1:] - fbp[:, :-1]
            dp[:, :-1] = fbp[:, 1:] - fbp[:, :-1]
        cm = nbr[..., lo][..., None, None]
        cp = nbr[..., hi][..., None, None]
        v = xn[None, None, :, None]
        if limiter:
            s = np.where((cm == 0) & (cp == 0), _van_leer(dm, dp), 0.0)
            s = np.where((cm == 0) & (cp == 1) & (v > 0), dm, s)
            s = np.where((cm == 1) & (cp == 0) & (v < 0), dp, s)
        else:
            s = np.where((cm == 0) & (cp == 0), 0.5 * (dm + dp), 0.0)
            s = np.where((cm == 0) & (cp != 0), dm, s)
            s = np.where((cm != 0) & (cp == 0), dp, s)
        out[...] = s / d
    return 0


def face_states(fbar, xi, yi, w, gas, hh, conservative, fallback):
    """Turn half-step face distributions ``fbar`` (B, K, 2) into ``f``.

    Faces whose ``fbar`` has no valid moments use ``fallback``; if that fails
    as well the face is collisionless (``f = fallback``, the vacuum limit).
    Returns ``(f, number of collisionless faces)``.
    """
    N = int(gas[1])
    s = gas[5]
    rho, ux, uy, T, qx, qy = _moments(fbar[..., 0], fbar[..., 1], xi, yi, w, N)
    bad = _bad(rho, T)
    free = bad[:0]
    if bad.size:
        fbar = fbar.copy()
        fbar[bad] = fallback[bad]
        mom = _moments(fbar[bad, :, 0], fbar[bad, :, 1], xi, yi, w, N)
        free = bad[_bad(mom[0], mom[3])]
        for a, b in zip((rho, ux, uy, T, qx, qy), mom):
            a[bad] = b
        # placeholder state for collisionless faces; overwritten below
        rho[free], ux[free], uy[free], T[free], qx[free], qy[free] = 1.0, 0.0, 0.0, 1.0, 0.0, 0.0
    tau = _tau(rho, T, gas)
    fac = 2.0 * tau / (2.0 * tau + hh * (1.0 - s))
    gS, hS = _equilibrium(rho, ux, uy, T, qx * fac, qy * fac, xi, yi, w, gas, conservative)
    eq = np.stack([gS, hS], axis=-1)
    t2 = (2.0 * tau)[:, None, None]
    f = (t2 * fbar + hh * eq) / (t2 + hh)
    f[free] = fbar[free]
    return f, int(free.size)


def face_batch(fbar, fallback, xi, yi, w, gas, hh, conservative, out):
    """Array form of :func:`face_states`; returns the number of collisionless faces."""
    f, n = face_states(np.asarray(fbar), xi, yi, w, gas, hh, conservative, np.asarray(fallback))
    out[...] = f
    return n


def _pick(xn, fL, fR):
    up = xn[None, :, None]
    return np.where(up > 0, fL, np.where(up < 0, fR, 0.5 * (fL + fR)))


def interior_fluxes(fbp, sx, sy, facex, facey, xi, yi, w, gas, dt, dx, dy, conservative, Fx, Fy):
    """Fluxes ``xi_n f`` on fluid-fluid faces flagged 0 in ``facex``/``facey``.

    A face whose reconstruction overshoots to a non-physical state is
    recomputed first-order (upwind cell values, no slopes), and failing that
    treated as collisionless.  Returns the number of collisionless faces.
    """
    hh = 0.5 * dt
    free = 0
    for axis in (0, 1):
        mask = facex if axis == 0 else facey
        fi, fj = np.nonzero(mask == 0)
        if fi.size == 0:
            continue
        if axis == 0:
            L, R, d, xn, xt, F = (fi - 1, fj), (fi, fj), dx, xi, yi, Fx
            sn, st = sx, sy
        else:
            L, R, d, xn, xt, F = (fi, fj - 1), (fi, fj), dy, yi, xi, Fy
            sn, st = sy, sx
        offL = (0.5 * d - xn * hh)[None, :, None]
        offR = (-0.5 * d - xn * hh)[None, :, None]
        tt = (-xt * hh)[None, :, None]
        fbar = _pick(xn, fbp[L] + offL * sn[L] + tt * st[L], fbp[R] + offR * sn[R] + tt * st[R])
        fface, n = face_states(fbar, xi, yi, w, gas, hh, conservative, _pick(xn, fbp[L], fbp[R]))
        F[fi, fj] = xn[None, :, None] * fface
        free += n
    return free


def update(ftp, Fx, Fy, fluid, dt, dx, dy, out):
    new = ftp - (dt / dx) * (Fx[1:] - Fx[:-1]) - (dt / dy) * (Fy[:, 1:] - Fy[:, :-1])
    out[...] = np.where(fluid[..., None, None], new, 0.0)
    return 0


def conserved(f, fluid, xi, yi, w, out):
    """``(rho, rho ux, rho uy, rho E)`` per cell into ``out`` (nx, ny, 4)."""
    g = f[..., 0]
    h = f[..., 1]
    out[..., 0] = g @ w
    out[..., 1] = g @ (w * xi)
    out[..., 2] = g @ (w * yi)
    out[..., 3] = 0.5 * (g @ (w * (xi * xi + yi * yi)) + h @ w)
    out[np.asarray(fluid) == 0] = 0.0
    return 0
