"""Binomial site occupancy, NMR contrast ratios and the polarization metric."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .effective import enhanced_gyromagnetic
from .hamiltonian import FieldConfig
from .hyperfine import DEFAULT_CATALOG, DEFAULT_CONSTANTS, FamilyCatalog, PhysicalConstants, catalog_lookup

NATURAL_ABUNDANCE = 0.0107
COMPAT_ABUNDANCE = 0.01


@dataclass(frozen=True)
class OccupancyModel:
    """Binomial occupancy of ``n_sites`` lattice sites by 13C.

    ``compat_abundance`` evaluates with p = 0.01, the rounded abundance behind
    the commonly quoted 0.15 / 0.013 figures, instead of ``p``.
    """

    n_sites: int = 18
    p: float = NATURAL_ABUNDANCE
    compat_abundance: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("abundance p must lie in [0, 1]")
        if self.n_sites < 0:
            raise ValueError("n_sites must be >= 0")

    @property
    def effective_p(self) -> float:
        return COMPAT_ABUNDANCE if self.compat_abundance else self.p


def occupancy_probability(model: OccupancyModel, k: int) -> float:
    """P(exactly k of the sites hold a 13C)."""
    if not 0 <= k <= model.n_sites:
        raise ValueError(f"k = {k} outside [0, {model.n_sites}]")
    p = model.effective_p
    return comb(model.n_sites, k) * p**k * (1 - p) ** (model.n_sites - k)


def contrast_ratios(catalog: FamilyCatalog = DEFAULT_CATALOG, field: FieldConfig | None = None,
                    model: str = "quadratic", constants: PhysicalConstants = DEFAULT_CONSTANTS,
                    reference: str | None = None) -> dict:
    """R^i = (p^i / p^ref) (Omega^i / Omega^ref)^m (N^i / N^ref), m = 2 or 1.

    Omega is the enhanced transverse gyromagnetic ratio of each family.
    """
    if model not in ("quadratic", "linear"):
        raise ValueError(f"unknown contrast model {model!r}")
    m = 2 if model == "quadratic" else 1
    field = field or FieldConfig()
    names = catalog.names()
    reference = reference or names[0]
    strength = {}
    for name in names:
        rec = catalog_lookup(name, catalog)
        omega = abs(enhanced_gyromagnetic(rec.scalars, field, constants).gamma_perp_eff)
        strength[name] = rec.polarization * omega**m * rec.n_sites
    ref = strength[reference]
    return {name: s / ref for name, s in strength.items()}


def polarization_metric(amp_plus: float, amp_minus: float) -> float:
    """P = amp_plus / (amp_plus + amp_minus)."""
    if amp_plus < 0 or amp_minus < 0:
        raise ValueError("amplitudes must be >= 0")
    total = amp_plus + amp_minus
    if total == 0:
        raise ValueError("both amplitudes are zero")
    return amp_plus / total
