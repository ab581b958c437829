"""Closed-form second-order results.

Covers the effective two-level Hamiltonian of a 13C in the m_s = 0 manifold,
the 14N transition frequencies in NV- and NV0, the NV0 tensor-extraction
combinations and the hyperfine-enhanced gyromagnetic ratios.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import FieldConfig
from .hyperfine import DEFAULT_CATALOG, DEFAULT_CONSTANTS, FamilyCatalog, HyperfineScalars, PhysicalConstants, catalog_lookup

VALIDITY_FACTOR = 20.0

NVM_LABELS = ("+1N0", "-1N0", "+1N-1", "-1N-1", "+1N+1", "-1N+1")
NV0_LABELS = ("+1N-1/2", "-1N-1/2", "+1N+1/2", "-1N+1/2")


class PerturbationWarning(UserWarning):
    """Second-order formulas used close to a ground-state level anticrossing."""


def _delta_sq(c: PhysicalConstants, bz: float) -> float:
    return c.D**2 - (c.gamma_e * bz) ** 2


def validity_ok(sc: HyperfineScalars, f: FieldConfig, c: PhysicalConstants = DEFAULT_CONSTANTS,
                gamma_n: float | None = None) -> bool:
    """True when both |D +- gamma_e Bz| exceed 20x every coupling scale."""
    gn = c.gamma_n_c13 if gamma_n is None else gamma_n
    scale = max(abs(sc.a_perp), abs(sc.a_par), abs(sc.a_ani), abs(gn * f.bz))
    gap = min(abs(c.D + c.gamma_e * f.bz), abs(c.D - c.gamma_e * f.bz))
    return gap >= VALIDITY_FACTOR * scale


def _guard(sc, f, c, gamma_n=None) -> bool:
    ok = validity_ok(sc, f, c, gamma_n)
    if not ok:
        warnings.warn("second-order expansion near the ground-state anticrossing; "
                      "closed forms may be inaccurate", PerturbationWarning, stacklevel=3)
    return ok


@dataclass(frozen=True)
class EffectiveH0e:
    nu: float
    h_perp: complex
    c_shift: float
    delta_sq: float
    matrix: np.ndarray
    gamma_n_bz: float
    gamma_n_bx: float
    valid: bool = True

    @property
    def splitting(self) -> float:
        """Eigenvalue gap of the 2x2 matrix (MHz)."""
        ev = np.linalg.eigvalsh(self.matrix)
        return float(ev[1] - ev[0])


def _transverse_terms(sc: HyperfineScalars, include_a_perp_prime: bool):
    a_perp = sc.a_perp
    a_perp_sq = sc.a_perp**2
    if include_a_perp_prime:
        a_perp_sq = a_perp_sq - sc.a_perp_prime**2
        a_perp = a_perp - sc.a_perp_prime
    return a_perp, a_perp_sq


def effective_h0e(sc: HyperfineScalars, f: FieldConfig, c: PhysicalConstants = DEFAULT_CONSTANTS,
                  gamma_n: float | None = None, include_a_perp_prime: bool = False) -> EffectiveH0e:
    """Second-order effective Hamiltonian of a 13C within m_s = 0.

    The matrix is written in the {+1/2, -1/2} basis of a frame whose x axis
    is the transverse field; ``phi`` enters only relative to that axis.
    """
    valid = _guard(sc, f, c, gamma_n)
    gn = c.gamma_n_c13 if gamma_n is None else gamma_n
    ge, D = c.gamma_e, c.D
    d2 = _delta_sq(c, f.bz)
    phi = sc.phi - f.field_azimuth
    a_perp, a_perp_sq = _transverse_terms(sc, include_a_perp_prime)

    nu = (-2 * D * sc.a_ani * math.cos(phi) * ge * f.bx + ge * f.bz * a_perp_sq) / d2
    h_perp = -(ge * a_perp / d2) * (sc.a_ani * cmath.exp(1j * phi) * f.bz + 2 * D * f.bx)
    c_shift = -(D / d2) * (2 * ge**2 * f.bx**2 + sc.a_ani**2 / 2 + sc.a_perp**2)

    diag = gn * f.bz + nu
    off = gn * f.bx + h_perp
    m = 0.5 * np.array([[diag, off], [np.conj(off), -diag]], dtype=complex)
    return EffectiveH0e(nu, complex(h_perp), c_shift, d2, m, gn * f.bz, gn * f.bx, valid)


def delta_e_closed(sc: HyperfineScalars, f: FieldConfig, c: PhysicalConstants = DEFAULT_CONSTANTS,
                   gamma_n: float | None = None, include_a_perp_prime: bool = False) -> float:
    """Splitting of the two m_s = 0 nuclear states (MHz)."""
    h = effective_h0e(sc, f, c, gamma_n, include_a_perp_prime)
    return math.sqrt((h.gamma_n_bz + h.nu) ** 2 + abs(h.gamma_n_bx + h.h_perp) ** 2)


def delta_e_aligned(sc: HyperfineScalars, bz: float, c: PhysicalConstants = DEFAULT_CONSTANTS,
                    gamma_n: float | None = None) -> float:
    """Aligned-field (Bx = 0) splitting written as a Zeeman term times a factor."""
    gn = c.gamma_n_c13 if gamma_n is None else gamma_n
    d2 = _delta_sq(c, bz)
    r = c.gamma_e / gn
    return abs(gn * bz) * math.hypot(1 + r * sc.a_perp**2 / d2, r * sc.a_perp * sc.a_ani / d2)


def site_splitting(family: str, f: FieldConfig, c: PhysicalConstants = DEFAULT_CONSTANTS,
                   catalog: FamilyCatalog = DEFAULT_CATALOG) -> list[tuple[float, float]]:
    """(site azimuth, splitting) for every site of a catalog family."""
    rec = catalog_lookup(family, catalog)
    out = []
    for phi in rec.site_phis:
        sc = HyperfineScalars(rec.scalars.a_par, rec.scalars.a_perp, rec.scalars.a_ani, phi)
        out.append((phi, delta_e_closed(sc, f, c)))
    return out


def distinct_values(values, tol: float = 1e-9) -> list[float]:
    """Sorted values merged when closer than ``tol``."""
    out: list[float] = []
    for v in sorted(values):
        if not out or abs(v - out[-1]) > tol:
            out.append(v)
    return out


@dataclass(frozen=True)
class N14Frequencies:
    """Transition frequencies (MHz) keyed by ``<m_I>N<m_s>`` labels."""

    lines: dict
    charge_state: str

    def __getitem__(self, label: str) -> float:
        return self.lines[label]

    def __iter__(self):
        return iter(self.lines)

    def items(self):
        return self.lines.items()


def _gap_guard(gap: float, scale: float, what: str):
    if abs(gap) <= max(abs(scale), 1e-9):
        raise ZeroDivisionError(f"{what} = {gap:.6g} MHz is too close to zero for the expansion")


def n14_frequencies_nvm(c: PhysicalConstants = DEFAULT_CONSTANTS, bz: float = 486.8) -> N14Frequencies:
    """Six NV- 14N transition frequencies to lowest order in A_perp / (D +- gamma_e B)."""
    if bz <= 0:
        raise ValueError("bz must be positive")
    q, apar, aperp, gn = abs(c.Q_n14_nvm), abs(c.A_par_n14_nvm), c.A_perp_n14_nvm, c.gamma_n_n14
    dm = c.D - c.gamma_e * bz
    dp = c.D + c.gamma_e * bz
    _gap_guard(dm, aperp, "D - gamma_e B")
    _gap_guard(dp, aperp, "D + gamma_e B")
    a2 = aperp**2
    lines = {
        "+1N0": q - gn * bz - a2 / dm,
        "-1N0": q + gn * bz - a2 / dp,
        "+1N-1": q - apar - gn * bz,
        "-1N-1": q + apar + gn * bz + a2 / dm,
        "+1N+1": q + apar - gn * bz + a2 / dp,
        "-1N+1": q - apar + gn * bz,
    }
    return N14Frequencies(lines, "NV-")


def n14_frequencies_nv0(q0: float | None = None, a0_par: float | None = None, a0_perp: float | None = None,
                        bz: float = 486.8, c: PhysicalConstants = DEFAULT_CONSTANTS) -> N14Frequencies:
    """Four NV0 (S = 1/2) 14N lines, second order in A0_perp^2 / (2 gamma_e B)."""
    q0 = c.Q0_n14_nv0 if q0 is None else q0
    a0_par = c.A0_par_n14_nv0 if a0_par is None else a0_par
    a0_perp = c.A0_perp_n14_nv0 if a0_perp is None else a0_perp
    if bz <= 0:
        raise ValueError("bz must be positive")
    gn = c.gamma_n_n14
    x = a0_perp**2 / (2 * c.gamma_e * bz)
    q = abs(q0)
    lines = {
        "+1N-1/2": q + a0_par / 2 - gn * bz,
        "-1N-1/2": q - a0_par / 2 + gn * bz - x,
        "+1N+1/2": q - a0_par / 2 - gn * bz + x,
        "-1N+1/2": q + a0_par / 2 + gn * bz,
    }
    return N14Frequencies(lines, "NV0")


@dataclass(frozen=True)
class NV0Extraction:
    q0_abs: float
    a0_par: float
    a0_perp: float
    radicand: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def a0_par_magnitude(self) -> float:
        return abs(self.a0_par)

    @property
    def radicand_negative(self) -> bool:
        return bool(self.diagnostics.get("radicand_negative", False))


def extract_nv0_tensor(freqs, bz: float, c: PhysicalConstants = DEFAULT_CONSTANTS) -> NV0Extraction:
    """Quadrupole and hyperfine constants from the four labeled NV0 lines.

    ``a0_par`` keeps the sign the linear combination produces. When the
    transverse radicand is negative the magnitude of the sign-flipped
    combination is returned and ``diagnostics['radicand_negative']`` is set.
    """
    freqs = dict(freqs.items() if hasattr(freqs, "items") else freqs)
    missing = [lab for lab in NV0_LABELS if lab not in freqs]
    extra = [lab for lab in freqs if lab not in NV0_LABELS]
    if missing or extra:
        raise KeyError(f"inconsistent NV0 labels: missing {missing}, unexpected {extra}")
    f_pm, f_mm, f_pp, f_mp = (float(freqs[k]) for k in NV0_LABELS)

    q0 = (f_pm + f_mm + f_pp + f_mp) / 4
    a0_par = (f_mm - f_pm + f_pp - f_mp) / 2
    radicand = c.gamma_e * bz * (f_pm + f_mm - f_pp - f_mp)
    diag = {
        "radicand_mhz2": radicand,
        "radicand_negative": radicand < 0,
        "a0_par_formula_sign": "negative" if a0_par < 0 else "positive",
        "a0_par_note": "sign follows the linear combination; the physical sign is a convention choice",
    }
    if radicand < 0:
        diag["a0_perp_note"] = "radicand negative; a0_perp taken from the sign-flipped combination"
    a0_perp = math.sqrt(abs(radicand))
    return NV0Extraction(q0, a0_par, a0_perp, radicand, diag)


@dataclass(frozen=True)
class RotatingFrameParams:
    """Hyperfine-enhanced rotating-frame parameters (MHz, ratios in MHz/G)."""

    omega0: float
    omega_prime: float
    omega_rabi: float
    omega_perp: complex
    gamma_par_eff: float
    gamma_perp_eff: float
    valid: bool = True

    @property
    def gamma_par_eff_khz_per_g(self) -> float:
        return self.gamma_par_eff * 1e3

    @property
    def gamma_perp_eff_khz_per_g(self) -> float:
        return self.gamma_perp_eff * 1e3


def enhanced_gyromagnetic(sc: HyperfineScalars, f: FieldConfig, c: PhysicalConstants = DEFAULT_CONSTANTS,
                          b_rf: float = 1.0, gamma_n: float | None = None) -> RotatingFrameParams:
    """Enhanced gyromagnetic ratios and the rotating-frame drive terms.

    ``omega_rabi`` is computed for an RF amplitude ``b_rf`` (Gauss) along x.
    """
    valid = _guard(sc, f, c, gamma_n)
    gn = c.gamma_n_c13 if gamma_n is None else gamma_n
    ge, D = c.gamma_e, c.D
    d2 = _delta_sq(c, f.bz)
    phi = sc.phi - f.field_azimuth
    g_par = gn * (1 + (ge / gn) * sc.a_perp**2 / d2)
    g_perp = gn * (1 - (ge / gn) * 2 * D * sc.a_perp / d2)
    omega0 = 0.5 * g_par * f.bz
    omega_prime = -(2 * D * sc.a_ani * math.cos(phi) / (2 * d2)) * ge * f.bx
    omega_rabi = 0.5 * g_perp * b_rf
    omega_perp = -(sc.a_perp / (2 * d2)) * sc.a_ani * cmath.exp(1j * phi) * ge * f.bz
    return RotatingFrameParams(omega0, omega_prime, omega_rabi, omega_perp, g_par, g_perp, valid)
