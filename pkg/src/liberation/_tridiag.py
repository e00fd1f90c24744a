"""Symmetric tridiagonal eigenproblem by implicit-shift QL (jitted)."""
import numpy as np
from numba import njit


@njit(cache=True)
def tql2(d, e, ZT, max_iter):
    """Diagonalize the symmetric tridiagonal (d, e) in place.

    ``e[i]`` couples rows i and i+1 (e[-1] is scratch).  Rotations are applied
    to the rows of ``ZT`` (the transposed eigenvector matrix), so pass an
    (n, 0) array to skip vectors.  Returns the number of QL
    iterations used, or -1 if ``max_iter`` was exhausted.
    """
    n = d.size
    nz = ZT.shape[1]
    if n == 1:
        return 0
    e[n - 1] = 0.0
    f = 0.0
    tst1 = 0.0
    eps = 2.220446049250313e-16
    total = 0
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n:
            if abs(e[m]) <= eps * tst1:
                break
            m += 1
        if m > l:
            while True:
                total += 1
                if total > max_iter:
                    return -1
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = np.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f += h
                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = np.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    for k in range(nz):
                        h = ZT[i + 1, k]
                        ZT[i + 1, k] = s * ZT[i, k] + c * h
                        ZT[i, k] = c * ZT[i, k] - s * h
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= eps * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0
    return total


@njit(cache=True)
def householder_tridiagonal(A, Q, want_q):
    """Reduce Hermitian ``A`` (overwritten) to tridiagonal form.

    On return ``A``'s diagonal and first subdiagonal hold T = Q* A Q; ``Q``
    (identity on entry) accumulates the reflections when ``want_q``.
    """
    n = A.shape[0]
    v = np.empty(n, dtype=np.complex128)
    p = np.empty(n, dtype=np.complex128)
    for k in range(n - 2):
        s = 0.0
        for i in range(k + 2, n):
            s += A[i, k].real ** 2 + A[i, k].imag ** 2
        if s == 0.0:
            continue
        x0 = A[k + 1, k]
        nx = np.sqrt(s + x0.real**2 + x0.imag**2)
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 > 0 else 1.0 + 0j
        m0 = k + 1
        nv2 = 0.0
        for i in range(m0, n):
            v[i] = A[i, k]
        v[m0] += phase * nx
        for i in range(m0, n):
            nv2 += v[i].real ** 2 + v[i].imag ** 2
        inv = 1.0 / np.sqrt(nv2)
        for i in range(m0, n):
            v[i] *= inv
        # p = B v over the trailing block
        for i in range(m0, n):
            acc = 0j
            for j in range(m0, n):
                acc += A[i, j] * v[j]
            p[i] = acc
        K = 0.0
        for i in range(m0, n):
            K += (v[i].conjugate() * p[i]).real
        for i in range(m0, n):
            p[i] -= K * v[i]
        for i in range(m0, n):
            vi = v[i]
            pi = p[i]
            for j in range(m0, n):
                A[i, j] -= 2.0 * (vi * p[j].conjugate() + pi * v[j].conjugate())
        for i in range(m0, n):
            A[i, k] = 0j
            A[k, i] = 0j
        A[m0, k] = -phase * nx
        A[k, m0] = (-phase * nx).conjugate()
        if want_q:
            for r in range(n):
                acc = 0j
                for j in range(m0, n):
                    acc += Q[r, j] * v[j]
                for j in range(m0, n):
                    Q[r, j] -= 2.0 * acc * v[j].conjugate()
