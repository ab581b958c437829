"""Kernel backend selection.

The compiled extension is used when importable. Setting ``NVCLUSTER_PURE=1``
forces the numpy fallback (used by the benchmark and the backend parity
tests).
"""

import os

from . import _pykernels

BACKEND = "python"
jacobi_hermitian = _pykernels.jacobi_hermitian
lorentzian_sum = _pykernels.lorentzian_sum

if os.environ.get("NVCLUSTER_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        jacobi_hermitian = _kernels.jacobi_hermitian
        lorentzian_sum = _kernels.lorentzian_sum


def kernels(name=None):
    """Return the kernel module for ``name`` ("cython", "python" or current)."""
    if name is None:
        name = BACKEND
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
