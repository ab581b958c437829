# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: cyclic complex Jacobi sweeps and Lorentzian sums.

Both functions mirror :mod:`nvcluster._pykernels` exactly; the pure-Python
module is the fallback when this extension is not built.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot

cnp.import_array()


cdef inline double _offdiag_sq(double complex[:, ::1] a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    cdef double complex z
    for i in range(n):
        for j in range(n):
            if i != j:
                z = a[i, j]
                acc += z.real * z.real + z.imag * z.imag
    return acc


def jacobi_hermitian(cnp.ndarray h, double tol, int max_sweeps):
    """Diagonalize a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns ``(diag, vectors, sweeps, converged)`` with unsorted diagonal.
    """
    cdef double complex[:, ::1] a = np.array(h, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t n = a.shape[0]
    v_arr = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, k
    cdef double frob = 0.0, off, mag, tau, t, c, s, app, aqq
    cdef double complex ph, sph, sphc, akp, akq
    cdef int sweep = 0
    cdef bint converged = False

    for p in range(n):
        for q in range(n):
            frob += a[p, q].real * a[p, q].real + a[p, q].imag * a[p, q].imag
    frob = sqrt(frob)
    if frob == 0.0:
        return np.zeros(n), v_arr, 0, True

    with nogil:
        while True:
            off = sqrt(_offdiag_sq(a, n))
            if off <= tol * frob:
                converged = True
                break
            if sweep >= max_sweeps:
                break
            sweep += 1
            for p in range(n - 1):
                for q in range(p + 1, n):
                    mag = hypot(a[p, q].real, a[p, q].imag)
                    if mag == 0.0:
                        continue
                    ph = a[p, q] / mag
                    app = a[p, p].real
                    aqq = a[q, q].real
                    tau = (aqq - app) / (2.0 * mag)
                    if tau >= 0.0:
                        t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    sph = s * ph
                    sphc = s * ph.conjugate()
                    # columns: A <- A J
                    for k in range(n):
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = c * akp - sphc * akq
                        a[k, q] = sph * akp + c * akq
                    # rows: A <- J^H A
                    for k in range(n):
                        akp = a[p, k]
                        akq = a[q, k]
                        a[p, k] = c * akp - sph * akq
                        a[q, k] = sphc * akp + c * akq
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    a[p, p] = a[p, p].real
                    a[q, q] = a[q, q].real
                    for k in range(n):
                        akp = v[k, p]
                        akq = v[k, q]
                        v[k, p] = c * akp - sphc * akq
                        v[k, q] = sph * akp + c * akq

    diag = np.array([a[k, k].real for k in range(n)])
    return diag, v_arr, sweep, bool(converged)


def lorentzian_sum(cnp.ndarray grid, cnp.ndarray centers, cnp.ndarray amps, double hwhm):
    """Sum of unit-peak Lorentzians ``amp * g^2 / ((f - f0)^2 + g^2)``."""
    cdef double[::1] f = np.ascontiguousarray(grid, dtype=np.float64)
    cdef double[::1] f0 = np.ascontiguousarray(centers, dtype=np.float64)
    cdef double[::1] a = np.ascontiguousarray(amps, dtype=np.float64)
    out_arr = np.zeros(f.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k, m = f.shape[0], nl = f0.shape[0]
    cdef double g2 = hwhm * hwhm, d, acc
    with nogil:
        for i in range(m):
            acc = 0.0
            for k in range(nl):
                d = f[i] - f0[k]
                acc = acc + a[k] * g2 / (d * d + g2)
            out[i] = acc
    return out_arr
