"""Symmetric tridiagonal eigensolver (implicit-shift QL)."""

import math

import numpy as np


class EigenError(ArithmeticError):
    """Raised when the QL iteration fails to converge."""


def tridiagonal_eigh(diag, offdiag, max_iter=60):
    """Eigen-decomposition of a real symmetric tridiagonal matrix.

    Parameters
    ----------
    diag : array_like, shape (n,)
        Main diagonal.
    offdiag : array_like, shape (n,)
        Sub-diagonal stored in ``offdiag[1:]``; ``offdiag[0]`` is ignored.
    max_iter : int
        Iteration budget per eigenvalue.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Sorted ascending.
    eigenvectors : ndarray, shape (n, n)
        Column ``i`` is the unit eigenvector for ``eigenvalues[i]``.
    """
    d = np.array(diag, dtype=float)
    n = d.size
    e = np.zeros(n)
    e[: n - 1] = np.asarray(offdiag, dtype=float)[1:n]
    z = np.eye(n)

    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= np.finfo(float).eps * dd:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                raise EigenError(
                    f"tridiagonal QL did not converge (order {n}, eigenvalue {l})"
                )
            it += 1
            # Wilkinson-type shift from the leading 2x2 block
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                zi1 = z[:, i + 1].copy()
                z[:, i + 1] = s * z[:, i] + c * zi1
                z[:, i] = c * z[:, i] - s * zi1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0

    order = np.argsort(d, kind="stable")
    return d[order], z[:, order]
