"""Spin-Hamiltonian simulation of NV-center electron-nuclear spin clusters.

Units throughout: MHz for energies and couplings, Gauss for fields,
microseconds for times, MHz/G for gyromagnetic ratios (hbar = 1).
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .effective import (
    EffectiveH0e, NV0Extraction, N14Frequencies, RotatingFrameParams, delta_e_aligned, delta_e_closed,
    effective_h0e, enhanced_gyromagnetic, extract_nv0_tensor, n14_frequencies_nv0, n14_frequencies_nvm,
    site_splitting,
)
from .hamiltonian import (
    Electron, FieldConfig, NucleusSpec, Species, SpinSystemSpec, build_hamiltonian, build_nv0_n14,
    build_nv_c13, build_nv_c13_pair, build_nv_n14,
)
from .hyperfine import (
    DEFAULT_CATALOG, DEFAULT_CONSTANTS, HyperfineGeometry, HyperfineScalars, HyperfineTensor, PhysicalConstants,
    catalog_lookup, default_catalog, derived_scalars, family_scalars, tensor_from_geometry,
)
from .spin import ConvergenceError, Eigensystem, SpinError, hermitian_eig, kron_compose, spin_operators

__all__ = [name for name in dir() if not name.startswith("_")]
