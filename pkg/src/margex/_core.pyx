# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cyclic Jacobi eigensolver for dense complex Hermitian matrices.

Row-cyclic sweeps of 2x2 unitary rotations, each zeroing one
off-diagonal pair, until the off-diagonal Frobenius norm falls below
an absolute threshold.
"""

from libc.math cimport fabs, sqrt

import numpy as np


def jacobi_eigh(a, double off_tol=1e-13, int max_sweeps=100):
    """Diagonalize a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and eigenvector
    columns in ``v``.  The input is assumed Hermitian; only the upper
    triangle and the real diagonal drive the rotations, but updates are
    applied two-sided so the iterate stays Hermitian.  Raises
    ``RuntimeError`` when the off-diagonal mass is still above
    ``off_tol`` after ``max_sweeps`` sweeps.
    """
    A = np.array(a, dtype=np.complex128, order="C", copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("square matrix required")
    cdef Py_ssize_t n = A.shape[0]
    V = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] am = A
    cdef double complex[:, ::1] vm = V
    cdef Py_ssize_t p, q, i, sweep
    cdef bint converged = False
    cdef double off, m, tau, t, c, s, app, aqq
    cdef double complex apq, phase, sig, sigc, xp, xq

    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += 2.0 * (am[p, q].real * am[p, q].real
                              + am[p, q].imag * am[p, q].imag)
        off = sqrt(off)
        if off <= off_tol:
            converged = True
            break
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = am[p, q]
                m = sqrt(apq.real * apq.real + apq.imag * apq.imag)
                if m == 0.0:
                    continue
                phase = apq / m
                app = am[p, p].real
                aqq = am[q, q].real
                if app == aqq:
                    t = 1.0
                else:
                    tau = (app - aqq) / (2.0 * m)
                    t = 1.0 / (fabs(tau) + sqrt(tau * tau + 1.0))
                    if tau < 0.0:
                        t = -t
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                sig = s * phase
                sigc = sig.conjugate()
                for i in range(n):
                    xp = am[i, p]
                    xq = am[i, q]
                    am[i, p] = c * xp + sigc * xq
                    am[i, q] = -sig * xp + c * xq
                for i in range(n):
                    xp = am[p, i]
                    xq = am[q, i]
                    am[p, i] = c * xp + sig * xq
                    am[q, i] = -sigc * xp + c * xq
                for i in range(n):
                    xp = vm[i, p]
                    xq = vm[i, q]
                    vm[i, p] = c * xp + sigc * xq
                    vm[i, q] = -sig * xp + c * xq

    if not converged:
        raise RuntimeError(
            "jacobi sweep limit reached: off-diagonal norm %.3e > %.3e after %d sweeps"
            % (off, off_tol, max_sweeps)
        )

    w = np.diagonal(A).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]
