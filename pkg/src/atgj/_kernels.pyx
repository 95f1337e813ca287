# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled DUGKS kernels; same signatures and conventions as ``_kernels_py``."""

from cython.parallel cimport prange
from libc.math cimport exp, pow, sqrt, fabs, isfinite
from libc.stdlib cimport malloc, calloc, free

import numpy as np

BACKEND = "cython"

cdef double PI = 3.141592653589793

cdef int num_threads = 1


def set_num_threads(int n):
    global num_threads
    num_threads = n if n > 0 else 1


cdef struct Gas:
    double Pr
    int N
    double mu_ref
    double T_ref
    double omega_v
    double s


cdef Gas _unpack(gas):
    cdef Gas G
    G.Pr = gas[0]
    G.N = <int>gas[1]
    G.mu_ref = gas[2]
    G.T_ref = gas[3]
    G.omega_v = gas[4]
    G.s = gas[5]
    return G


cdef int _first(int[::1] err, int stride):
    cdef int i
    for i in range(err.shape[0]):
        if err[i]:
            return i * stride + err[i]
    return 0


cdef int _sum(int[::1] a):
    cdef int i, t = 0
    for i in range(a.shape[0]):
        t += a[i]
    return t


cdef inline void _free(const double* xn, const double* fbar, int K, double* F) noexcept nogil:
    """Collisionless face flux (the tau -> infinity limit of a vacuum face)."""
    cdef int k
    for k in range(K):
        F[2 * k] = xn[k] * fbar[2 * k]
        F[2 * k + 1] = xn[k] * fbar[2 * k + 1]


cdef inline double _tau(double rho, double T, Gas* G) noexcept nogil:
    return G.mu_ref * pow(T / G.T_ref, G.omega_v) / (rho * T)


cdef int _moments(const double* f, const double* xi, const double* yi, const double* w,
                  int K, int N, double* m) noexcept nogil:
    """m = rho, ux, uy, T, qx, qy from interleaved (g, h) node values."""
    cdef int k
    cdef double rho = 0.0, mx = 0.0, my = 0.0, e = 0.0, g, h, wk
    for k in range(K):
        g = f[2 * k]
        h = f[2 * k + 1]
        wk = w[k]
        rho += wk * g
        mx += wk * xi[k] * g
        my += wk * yi[k] * g
        e += wk * ((xi[k] * xi[k] + yi[k] * yi[k]) * g + h)
    if not (isfinite(rho) and rho > 0.0):
        return 1
    cdef double ux = mx / rho, uy = my / rho
    cdef double T = (0.5 * e / rho - 0.5 * (ux * ux + uy * uy)) / (0.25 * (3 + N))
    if not (isfinite(T) and T > 0.0):
        return 1
    cdef double qx = 0.0, qy = 0.0, cx, cy, en
    for k in range(K):
        cx = xi[k] - ux
        cy = yi[k] - uy
        en = w[k] * ((cx * cx + cy * cy) * f[2 * k] + f[2 * k + 1])
        qx += cx * en
        qy += cy * en
    m[0] = rho
    m[1] = ux
    m[2] = uy
    m[3] = T
    m[4] = 0.5 * qx
    m[5] = 0.5 * qy
    return 0


cdef int _solve6(double* A, double* b) noexcept nogil:
    """Gaussian elimination with partial pivoting, A row-major 6x6, b overwritten."""
    cdef int i, j, r, p
    cdef double t, piv
    for i in range(6):
        p = i
        for r in range(i + 1, 6):
            if fabs(A[6 * r + i]) > fabs(A[6 * p + i]):
                p = r
        if A[6 * p + i] == 0.0:
            return 1
        if p != i:
            for j in range(6):
                t = A[6 * i + j]
                A[6 * i + j] = A[6 * p + j]
                A[6 * p + j] = t
            t = b[i]
            b[i] = b[p]
            b[p] = t
        piv = A[6 * i + i]
        for r in range(i + 1, 6):
            t = A[6 * r + i] / piv
            if t != 0.0:
                for j in range(i, 6):
                    A[6 * r + j] -= t * A[6 * i + j]
                b[r] -= t * b[i]
    for i in range(5, -1, -1):
        t = b[i]
        for j in range(i + 1, 6):
            t -= A[6 * i + j] * b[j]
        b[i] = t / A[6 * i + i]
    return 0


cdef int _equilibrium(const double* m, Gas* G, const double* xi, const double* yi,
                      const double* w, int K, bint conservative,
                      double* eq, double* geq) noexcept nogil:
    """Shakhov pair (interleaved) for the state m, optionally moment-corrected.

    The correction adds ``geq * sum_j beta_j b_j(c)`` to g (times kappa for h)
    with basis b = (1, cx, cy, c2, cx c2, cy c2) in units of sqrt(T), chosen so
    that density, peculiar momentum, internal energy and the retained heat
    flux come out exact under the weights w.
    """
    cdef double rho = m[0], ux = m[1], uy = m[2], T = m[3], qx = m[4], qy = m[5]
    cdef double N = G.N
    cdef double pref = rho / (PI * T)
    cdef double kappa = 0.5 * (1.0 + N) * T
    cdef double kh = 0.5 * (1.0 + N)
    cdef double cqs = 1.0 / (5.0 * rho * T * T)
    cdef double om = 1.0 - G.Pr
    cdef double nterm = 2.0 * N / (1.0 + N)
    cdef double iT = 1.0 / T
    cdef double isT = sqrt(iT)
    cdef double cx, cy, c2, cq, ge, g, h, wk, wg, e, ax, ay, a2, a22
    # weighted monomial sums of geq in scaled peculiar velocity
    cdef double S1 = 0, Sx = 0, Sy = 0, S2 = 0, Sxx = 0, Sxy = 0, Sx2 = 0, Sy2 = 0
    cdef double S22 = 0, Sxx2 = 0, Sxy2 = 0, Sx22 = 0, Sy22 = 0, Sxx22 = 0, Sxy22 = 0, S222 = 0
    cdef double r0 = 0, r1 = 0, r2 = 0, r3 = 0, r4 = 0, r5 = 0
    cdef double A[36]
    cdef double r[6]
    cdef double M[36]
    cdef int k, i, j
    for k in range(K):
        cx = xi[k] - ux
        cy = yi[k] - uy
        c2 = cx * cx + cy * cy
        ge = pref * exp(-c2 * iT)
        cq = (cx * qx + cy * qy) * cqs
        g = ge * (1.0 + om * 4.0 * cq * (c2 * iT - 2.0))
        h = kappa * ge * (1.0 + om * 2.0 * cq * (2.0 * c2 * iT - 2.0 - nterm))
        eq[2 * k] = g
        eq[2 * k + 1] = h
        geq[k] = ge
        if conservative:
            wk = w[k]
            wg = wk * ge
            ax = cx * isT
            ay = cy * isT
            a2 = c2 * iT
            a22 = a2 * a2
            S1 += wg
            Sx += wg * ax
            Sy += wg * ay
            S2 += wg * a2
            Sxx += wg * ax * ax
            Sxy += wg * ax * ay
            Sx2 += wg * ax * a2
            Sy2 += wg * ay * a2
            S22 += wg * a22
            Sxx2 += wg * ax * ax * a2
            Sxy2 += wg * ax * ay * a2
            Sx22 += wg * ax * a22
            Sy22 += wg * ay * a22
            Sxx22 += wg * ax * ax * a22
            Sxy22 += wg * ax * ay * a22
            S222 += wg * a22 * a2
            e = wk * (a2 * g + h * iT)
            r0 += wk * g
            r1 += wk * ax * g
            r2 += wk * ay * g
            r3 += e
            r4 += ax * e
            r5 += ay * e
    if not conservative:
        return 0
    M[0] = S1; M[1] = Sx; M[2] = Sy; M[3] = S2; M[4] = Sx2; M[5] = Sy2
    M[7] = Sxx; M[8] = Sxy; M[9] = Sx2; M[10] = Sxx2; M[11] = Sxy2
    M[14] = S2 - Sxx; M[15] = Sy2; M[16] = Sxy2; M[17] = S22 - Sxx2
    M[21] = S22; M[22] = Sx22; M[23] = Sy22
    M[28] = Sxx22; M[29] = Sxy22
    M[35] = S222 - Sxx22
    for i in range(6):
        for j in range(i):
            M[6 * i + j] = M[6 * j + i]
    for j in range(6):
        for i in range(3):
            A[6 * i + j] = M[6 * i + j]
            A[6 * (i + 3) + j] = M[6 * (i + 3) + j] + kh * M[6 * i + j]
    r[0] = rho - r0
    r[1] = -r1
    r[2] = -r2
    r[3] = 0.5 * (3.0 + N) * rho - r3
    r[4] = 2.0 * G.s * qx * iT * isT - r4
    r[5] = 2.0 * G.s * qy * iT * isT - r5
    if _solve6(A, r):
        return 1
    for k in range(K):
        ax = (xi[k] - ux) * isT
        ay = (yi[k] - uy) * isT
        a2 = ax * ax + ay * ay
        g = geq[k] * (r[0] + r[1] * ax + r[2] * ay + a2 * (r[3] + r[4] * ax + r[5] * ay))
        eq[2 * k] += g
        eq[2 * k + 1] += kappa * g
    return 0


def cell_stage(double[:, :, :, ::1] f, const unsigned char[:, ::1] fluid,
               const double[::1] xi, const double[::1] yi, const double[::1] w,
               gas, double dt, bint conservative,
               double[:, :, :, ::1] fbp, double[:, :, :, ::1] ftp,
               double[:, :, :, ::1] feq, double[:, :, ::1] macro):
    cdef Gas G = _unpack(gas)
    cdef int nx = f.shape[0], ny = f.shape[1], K = f.shape[2]
    cdef int i, j, k, c
    cdef int[::1] err = np.zeros(nx, dtype=np.intc)
    cdef double hh = 0.5 * dt
    cdef double* buf
    cdef double* m
    cdef double tau, a, b, fac, x
    for i in prange(nx, nogil=True, num_threads=num_threads, schedule="static"):
        buf = <double*>malloc((K + 6) * sizeof(double))
        m = buf + K
        for j in range(ny):
            if not fluid[i, j]:
                continue
            if _moments(&f[i, j, 0, 0], &xi[0], &yi[0], &w[0], K, G.N, m):
                if err[i] == 0:
                    err[i] = j + 1
                continue
            tau = _tau(m[0], m[3], &G)
            fac = 2.0 * tau / (2.0 * tau + dt * (1.0 - G.s))
            m[4] = m[4] * fac
            m[5] = m[5] * fac
            if _equilibrium(m, &G, &xi[0], &yi[0], &w[0], K, conservative, &feq[i, j, 0, 0], buf):
                if err[i] == 0:
                    err[i] = j + 1
                continue
            a = (2.0 * tau - hh) / (2.0 * tau + dt)
            b = 3.0 * hh / (2.0 * tau + dt)
            for k in range(K):
                for c in range(2):
                    x = a * f[i, j, k, c] + b * feq[i, j, k, c]
                    fbp[i, j, k, c] = x
                    ftp[i, j, k, c] = (4.0 / 3.0) * x - (1.0 / 3.0) * f[i, j, k, c]
            for c in range(6):
                macro[i, j, c] = m[c]
            macro[i, j, 6] = tau
        free(buf)
    return _first(err, ny)


cdef inline double _vl(double a, double b) noexcept nogil:
    cdef double ab = a * b
    if ab > 0.0:
        return 2.0 * ab / (a + b)
    return 0.0


cdef inline void _slope_line(const double* fc, const double* fm, const double* fp,
                             int cm, int cp, int n, double inv, const double* xn,
                             int limiter, double* out) noexcept nogil:
    """Slope along one axis; fm/fp are used only when the side is fluid.

    limiter 1 (van Leer): next to a wall only nodes moving toward the wall get
    a one-sided slope, nodes leaving it are first order.  limiter 0: central
    difference, one-sided from the fluid side next to any boundary.
    """
    cdef int q
    if cm == 0 and cp == 0:
        if limiter:
            for q in range(n):
                out[q] = _vl(fc[q] - fm[q], fp[q] - fc[q]) * inv
        else:
            for q in range(n):
                out[q] = 0.5 * (fp[q] - fm[q]) * inv
    elif cm == 0 and (cp == 1 or (cp == 2 and not limiter)):
        for q in range(0, n, 2):
            if xn[q >> 1] > 0.0 or not limiter:
                out[q] = (fc[q] - fm[q]) * inv
                out[q + 1] = (fc[q + 1] - fm[q + 1]) * inv
            else:
                out[q] = 0.0
                out[q + 1] = 0.0
    elif cp == 0 and (cm == 1 or (cm == 2 and not limiter)):
        for q in range(0, n, 2):
            if xn[q >> 1] < 0.0 or not limiter:
                out[q] = (fp[q] - fc[q]) * inv
                out[q + 1] = (fp[q + 1] - fc[q + 1]) * inv
            else:
                out[q] = 0.0
                out[q + 1] = 0.0
    else:
        for q in range(n):
            out[q] = 0.0


def slopes(const double[:, :, :, ::1] fbp, const signed char[:, :, ::1] nbr,
           const double[::1] xi, const double[::1] yi,
           double dx, double dy, double[:, :, :, ::1] sx, double[:, :, :, ::1] sy,
           int limiter=1):
    cdef int nx = fbp.shape[0], ny = fbp.shape[1], K = fbp.shape[2]
    cdef int i, j, cm, cp
    cdef const double* fc
    cdef const double* fm
    cdef const double* fp
    for i in prange(nx, nogil=True, num_threads=num_threads, schedule="static"):
        for j in range(ny):
            fc = &fbp[i, j, 0, 0]
            cm = nbr[i, j, 0]
            cp = nbr[i, j, 1]
            fm = &fbp[i - 1, j, 0, 0] if cm == 0 else fc
            fp = &fbp[i + 1, j, 0, 0] if cp == 0 else fc
            _slope_line(fc, fm, fp, cm, cp, 2 * K, 1.0 / dx, &xi[0], limiter, &sx[i, j, 0, 0])
            cm = nbr[i, j, 2]
            cp = nbr[i, j, 3]
            fm = &fbp[i, j - 1, 0, 0] if cm == 0 else fc
            fp = &fbp[i, j + 1, 0, 0] if cp == 0 else fc
            _slope_line(fc, fm, fp, cm, cp, 2 * K, 1.0 / dy, &yi[0], limiter, &sy[i, j, 0, 0])
    return 0


cdef int _face(const double* fbar, const double* xi, const double* yi, const double* w,
               int K, Gas* G, double hh, bint conservative, const double* xn,
               double* eq, double* geq, double* m, double* F) noexcept nogil:
    """Flux xn * f on one face from its half-step distribution fbar."""
    cdef int k, c
    cdef double tau, fac, t2
    if _moments(fbar, xi, yi, w, K, G.N, m):
        return 1
    tau = _tau(m[0], m[3], G)
    fac = 2.0 * tau / (2.0 * tau + hh * (1.0 - G.s))
    m[4] = m[4] * fac
    m[5] = m[5] * fac
    if _equilibrium(m, G, xi, yi, w, K, conservative, eq, geq):
        return 1
    t2 = 2.0 * tau
    for k in range(K):
        for c in range(2):
            F[2 * k + c] = xn[k] * (t2 * fbar[2 * k + c] + hh * eq[2 * k + c]) / (t2 + hh)
    return 0


cdef inline void _upwind(const double* pL, const double* nL, const double* tL,
                         const double* pR, const double* nR, const double* tR,
                         const double* xn, const double* xt, int K, double d, double hh,
                         double* fbar) noexcept nogil:
    """Half-step face values from the upwind cell's reconstruction."""
    cdef int k, c
    cdef double off, tt
    for k in range(K):
        tt = -xt[k] * hh
        c = 2 * k
        if xn[k] > 0.0:
            off = 0.5 * d - xn[k] * hh
            fbar[c] = pL[c] + off * nL[c] + tt * tL[c]
            fbar[c + 1] = pL[c + 1] + off * nL[c + 1] + tt * tL[c + 1]
        elif xn[k] < 0.0:
            off = -0.5 * d - xn[k] * hh
            fbar[c] = pR[c] + off * nR[c] + tt * tR[c]
            fbar[c + 1] = pR[c + 1] + off * nR[c + 1] + tt * tR[c + 1]
        else:
            off = 0.5 * d
            fbar[c] = 0.5 * (pL[c] + off * nL[c] + tt * tL[c] + pR[c] - off * nR[c] + tt * tR[c])
            fbar[c + 1] = 0.5 * (pL[c + 1] + off * nL[c + 1] + tt * tL[c + 1]
                                 + pR[c + 1] - off * nR[c + 1] + tt * tR[c + 1])


def interior_fluxes(const double[:, :, :, ::1] fbp, const double[:, :, :, ::1] sx,
                    const double[:, :, :, ::1] sy,
                    const signed char[:, ::1] facex, const signed char[:, ::1] facey,
                    const double[::1] xi, const double[::1] yi, const double[::1] w,
                    gas, double dt, double dx, double dy, bint conservative,
                    double[:, :, :, ::1] Fx, double[:, :, :, ::1] Fy):
    """Fluxes on fluid-fluid faces; returns the number of collisionless faces."""
    cdef Gas G = _unpack(gas)
    cdef int nx = fbp.shape[0], ny = fbp.shape[1], K = fbp.shape[2]
    cdef int i, j
    cdef int[::1] nfx = np.zeros(nx + 1, dtype=np.intc)
    cdef int[::1] nfy = np.zeros(nx, dtype=np.intc)
    cdef double hh = 0.5 * dt
    cdef double* buf
    cdef double* fbar
    cdef double* eq
    cdef double* geq
    cdef double* m
    cdef double* zero
    # x faces: face (i, j) sits between cells (i-1, j) and (i, j)
    for i in prange(nx + 1, nogil=True, num_threads=num_threads, schedule="static"):
        buf = <double*>calloc(7 * K + 6, sizeof(double))
        fbar = buf
        eq = buf + 2 * K
        geq = buf + 4 * K
        m = buf + 5 * K
        zero = buf + 5 * K + 6
        for j in range(ny):
            if facex[i, j] != 0:
                continue
            _upwind(&fbp[i - 1, j, 0, 0], &sx[i - 1, j, 0, 0], &sy[i - 1, j, 0, 0],
                    &fbp[i, j, 0, 0], &sx[i, j, 0, 0], &sy[i, j, 0, 0],
                    &xi[0], &yi[0], K, dx, hh, fbar)
            if _face(fbar, &xi[0], &yi[0], &w[0], K, &G, hh, conservative, &xi[0],
                     eq, geq, m, &Fx[i, j, 0, 0]):
                # overshooting reconstruction: retry this face first-order
                _upwind(&fbp[i - 1, j, 0, 0], zero, zero, &fbp[i, j, 0, 0], zero, zero,
                        &xi[0], &yi[0], K, dx, hh, fbar)
                if _face(fbar, &xi[0], &yi[0], &w[0], K, &G, hh, conservative, &xi[0],
                         eq, geq, m, &Fx[i, j, 0, 0]):
                    _free(&xi[0], fbar, K, &Fx[i, j, 0, 0])
                    nfx[i] += 1
        free(buf)
    # y faces: face (i, j) sits between cells (i, j-1) and (i, j)
    for i in prange(nx, nogil=True, num_threads=num_threads, schedule="static"):
        buf = <double*>calloc(7 * K + 6, sizeof(double))
        fbar = buf
        eq = buf + 2 * K
        geq = buf + 4 * K
        m = buf + 5 * K
        zero = buf + 5 * K + 6
        for j in range(ny + 1):
            if facey[i, j] != 0:
                continue
            _upwind(&fbp[i, j - 1, 0, 0], &sy[i, j - 1, 0, 0], &sx[i, j - 1, 0, 0],
                    &fbp[i, j, 0, 0], &sy[i, j, 0, 0], &sx[i, j, 0, 0],
                    &yi[0], &xi[0], K, dy, hh, fbar)
            if _face(fbar, &xi[0], &yi[0], &w[0], K, &G, hh, conservative, &yi[0],
                     eq, geq, m, &Fy[i, j, 0, 0]):
                # overshooting reconstruction: retry this face first-order
                _upwind(&fbp[i, j - 1, 0, 0], zero, zero, &fbp[i, j, 0, 0], zero, zero,
                        &yi[0], &xi[0], K, dy, hh, fbar)
                if _face(fbar, &xi[0], &yi[0], &w[0], K, &G, hh, conservative, &yi[0],
                         eq, geq, m, &Fy[i, j, 0, 0]):
                    _free(&yi[0], fbar, K, &Fy[i, j, 0, 0])
                    nfy[i] += 1
        free(buf)
    return _sum(nfx) + _sum(nfy)


def face_batch(const double[:, :, ::1] fbar, const double[:, :, ::1] fallback,
               const double[::1] xi, const double[::1] yi,
               const double[::1] w, gas, double hh, bint conservative,
               double[:, :, ::1] out):
    """Face distributions ``f`` from half-step values ``fbar`` of shape (B, K, 2).

    A face whose ``fbar`` has no valid moments is retried with ``fallback``;
    if that fails too the face is treated as collisionless (``f = fallback``).
    Returns the number of collisionless faces.
    """
    cdef Gas G = _unpack(gas)
    cdef int B = fbar.shape[0], K = fbar.shape[1]
    cdef int b, n = 0
    cdef double[::1] ones = np.ones(K)
    cdef double[::1] buf = np.empty(3 * K + 6)
    for b in range(B):
        if _face(&fbar[b, 0, 0], &xi[0], &yi[0], &w[0], K, &G, hh, conservative, &ones[0],
                 &buf[0], &buf[2 * K], &buf[3 * K], &out[b, 0, 0]):
            if _face(&fallback[b, 0, 0], &xi[0], &yi[0], &w[0], K, &G, hh, conservative,
                     &ones[0], &buf[0], &buf[2 * K], &buf[3 * K], &out[b, 0, 0]):
                _free(&ones[0], &fallback[b, 0, 0], K, &out[b, 0, 0])
                n += 1
    return n


def update(const double[:, :, :, ::1] ftp, const double[:, :, :, ::1] Fx,
           const double[:, :, :, ::1] Fy, const unsigned char[:, ::1] fluid,
           double dt, double dx, double dy, double[:, :, :, ::1] out):
    cdef int nx = ftp.shape[0], ny = ftp.shape[1], K = ftp.shape[2]
    cdef int i, j, k, c
    cdef double ax = dt / dx, ay = dt / dy
    for i in prange(nx, nogil=True, num_threads=num_threads, schedule="static"):
        for j in range(ny):
            if not fluid[i, j]:
                for k in range(K):
                    out[i, j, k, 0] = 0.0
                    out[i, j, k, 1] = 0.0
                continue
            for k in range(K):
                for c in range(2):
                    out[i, j, k, c] = (ftp[i, j, k, c]
                                       - ax * (Fx[i + 1, j, k, c] - Fx[i, j, k, c])
                                       - ay * (Fy[i, j + 1, k, c] - Fy[i, j, k, c]))
    return 0


def conserved(const double[:, :, :, ::1] f, const unsigned char[:, ::1] fluid,
              const double[::1] xi, const double[::1] yi, const double[::1] w,
              double[:, :, ::1] out):
    cdef int nx = f.shape[0], ny = f.shape[1], K = f.shape[2]
    cdef int i, j, k
    cdef double r, mx, my, e, g
    for i in prange(nx, nogil=True, num_threads=num_threads, schedule="static"):
        for j in range(ny):
            r = 0.0
            mx = 0.0
            my = 0.0
            e = 0.0
            if fluid[i, j]:
                for k in range(K):
                    g = f[i, j, k, 0]
                    r = r + w[k] * g
                    mx = mx + w[k] * xi[k] * g
                    my = my + w[k] * yi[k] * g
                    e = e + w[k] * ((xi[k] * xi[k] + yi[k] * yi[k]) * g + f[i, j, k, 1])
            out[i, j, 0] = r
            out[i, j, 1] = mx
            out[i, j, 2] = my
            out[i, j, 3] = 0.5 * e
    return 0
