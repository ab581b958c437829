"""Pure-numpy implementations of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def jacobi_hermitian(h, tol, max_sweeps):
    a = np.array(h, dtype=np.complex128, copy=True)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    frob = np.linalg.norm(a)
    if frob == 0.0:
        return np.zeros(n), v, 0, True

    offmask = ~np.eye(n, dtype=bool)
    sweep = 0
    converged = False
    while True:
        off = np.sqrt(np.sum(np.abs(a[offmask]) ** 2))
        if off <= tol * frob:
            converged = True
            break
        if sweep >= max_sweeps:
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                ph = apq / mag
                tau = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                sph = s * ph
                sphc = s * np.conj(ph)

                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp - sphc * colq
                a[:, q] = sph * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp - sph * rowq
                a[q, :] = sphc * rowp + c * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real

                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - sphc * vq
                v[:, q] = sph * vp + c * vq

    return np.real(np.diag(a)).copy(), v, sweep, converged


def lorentzian_sum(grid, centers, amps, hwhm):
    f = np.asarray(grid, dtype=np.float64)[:, None]
    f0 = np.asarray(centers, dtype=np.float64)[None, :]
    a = np.asarray(amps, dtype=np.float64)[None, :]
    g2 = hwhm * hwhm
    return np.sum(a * g2 / ((f - f0) ** 2 + g2), axis=1)
