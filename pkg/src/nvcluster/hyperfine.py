"""Hyperfine tensors, physical constants and the built-in 13C family catalog.

Couplings are in MHz, fields in Gauss, gyromagnetic ratios in MHz/G.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np


@dataclass(frozen=True)
class PhysicalConstants:
    D: float = 2870.0
    D_ex: float = 1400.0
    gamma_e: float = 2.8025
    gamma_n_c13: float = -1.07e-3
    gamma_n_n14: float = -0.3077e-3
    gamma_n_n15: float = 0.4316e-3
    Q_n14_nvm: float = -4.95
    A_par_n14_nvm: float = -2.16
    A_perp_n14_nvm: float = -2.62
    Q0_n14_nv0: float = -4.655
    A0_par_n14_nv0: float = 6.06
    # not one of the quoted constants; default is the fitted NV0 value
    A0_perp_n14_nv0: float = 3.9

    def override(self, **kwargs) -> "PhysicalConstants":
        known = {f.name for f in fields(self)}
        unknown = set(kwargs) - known
        if unknown:
            raise KeyError(f"unknown constant(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in kwargs.items()})


DEFAULT_CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class HyperfineGeometry:
    """Contact term plus point-dipole geometry of one nuclear site.

    ``a_d`` is the (positive) dipolar magnitude; ``theta`` is the polar angle
    from the NV axis and ``phi`` the azimuth from the transverse field.
    """

    a_c: float
    a_d: float
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if self.a_d < 0:
            raise ValueError("dipolar magnitude a_d must be >= 0")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError("theta must lie in [0, pi]")
        if not 0.0 <= self.phi < 2 * math.pi:
            raise ValueError("phi must lie in [0, 2 pi)")

    @classmethod
    def from_distance(cls, a_c: float, r_nm: float, theta: float, phi: float = 0.0,
                      gamma_e: float = DEFAULT_CONSTANTS.gamma_e,
                      gamma_n: float = DEFAULT_CONSTANTS.gamma_n_c13) -> "HyperfineGeometry":
        """Dipolar magnitude from the electron-nucleus distance ``r_nm``.

        xi(r) = mu0 gamma_e gamma_n h / (4 pi r^3) = -a_d, returned in MHz.
        """
        mu0_over_4pi = 1e-7  # T m / A
        h_planck = 6.62607015e-34
        # MHz/G -> Hz/T: x 1e6 x 1e4
        ge = gamma_e * 1e10
        gn = gamma_n * 1e10
        xi_hz = mu0_over_4pi * h_planck * ge * gn / (r_nm * 1e-9) ** 3
        return cls(a_c=a_c, a_d=abs(-xi_hz * 1e-6), theta=theta, phi=phi)


@dataclass(frozen=True)
class HyperfineScalars:
    """The coupling constants entering the NV-frame spin Hamiltonian."""

    a_par: float
    a_perp: float
    a_ani: float = 0.0
    phi: float = 0.0
    a_perp_prime: float = 0.0
    a_ani_assumed: bool = False

    def rotated(self, dphi: float) -> "HyperfineScalars":
        return replace(self, phi=self.phi + dphi)

    def scaled(self, s: float) -> "HyperfineScalars":
        """Scale the transverse couplings (a_perp, a_ani, a_perp_prime)."""
        return replace(self, a_perp=self.a_perp * s, a_ani=self.a_ani * s,
                       a_perp_prime=self.a_perp_prime * s)


@dataclass(frozen=True)
class HyperfineTensor:
    a: np.ndarray
    a_c: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.a, dtype=float)
        if arr.shape != (3, 3):
            raise ValueError("hyperfine tensor must be 3x3")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "a", arr)

    @property
    def dipolar(self) -> np.ndarray:
        return self.a - self.a_c * np.eye(3)

    def scalars(self) -> HyperfineScalars:
        a_par, a_perp, a_perp_prime, a_ani, phi = derived_scalars(self.a)
        return HyperfineScalars(a_par, a_perp, a_ani, phi, a_perp_prime)

    @property
    def a_par(self) -> float:
        return float(self.a[2, 2])

    @property
    def a_perp(self) -> float:
        return float((self.a[0, 0] + self.a[1, 1]) / 2)

    @property
    def a_perp_prime(self) -> float:
        return float(math.hypot(self.a[0, 0] - self.a[1, 1], 2 * self.a[0, 1]) / 2)

    @property
    def a_ani(self) -> float:
        return float(math.hypot(self.a[0, 2], self.a[1, 2]))

    @property
    def phi(self) -> float:
        return float(math.atan2(self.a[1, 2], self.a[0, 2]) % (2 * math.pi))


def tensor_from_geometry(g: HyperfineGeometry) -> HyperfineTensor:
    """Full 3x3 tensor from contact + dipolar geometry."""
    st, ct = math.sin(g.theta), math.cos(g.theta)
    sp, cp = math.sin(g.phi), math.cos(g.phi)
    ac, ad = g.a_c, g.a_d
    axx = ac - ad * (1 - 3 * st**2 * cp**2)
    ayy = ac - ad * (1 - 3 * st**2 * sp**2)
    azz = ac - ad * (1 - 3 * ct**2)
    axy = 3 * ad * st**2 * cp * sp
    axz = 3 * ad * st * ct * cp
    ayz = 3 * ad * st * ct * sp
    a = np.array([[axx, axy, axz], [axy, ayy, ayz], [axz, ayz, azz]])
    return HyperfineTensor(a, a_c=ac)


def derived_scalars(t, sym_tol: float = 1e-9):
    """(a_par, a_perp, a_perp_prime, a_ani, phi) of a symmetric 3x3 tensor.

    a_ani and phi are the modulus and argument of A_xz + i A_yz, so that
    a_ani = 3 a_d cos(theta) sin(theta) for tensors from geometry with
    theta in [0, pi/2]. a_perp_prime is |A_xx - A_yy + 2i A_xy| / 2, which
    is 3 a_d sin^2(theta) / 2 for any site azimuth and reduces to
    (A_xx - A_yy) / 2 when phi = 0.
    """
    t = np.asarray(t, dtype=float)
    if t.shape != (3, 3):
        raise ValueError("tensor must be 3x3")
    if np.max(np.abs(t - t.T)) > sym_tol * max(1.0, np.max(np.abs(t))):
        raise ValueError("tensor is not symmetric")
    a_par = float(t[2, 2])
    a_perp = float((t[0, 0] + t[1, 1]) / 2)
    a_perp_prime = float(math.hypot(t[0, 0] - t[1, 1], 2 * t[0, 1]) / 2)
    a_ani = float(math.hypot(t[0, 2], t[1, 2]))
    phi = float(math.atan2(t[1, 2], t[0, 2]) % (2 * math.pi))
    return a_par, a_perp, a_perp_prime, a_ani, phi


def contact_from_scalars(a_par: float, a_perp: float) -> float:
    """Invert a_perp = (3 a_c - a_par) / 2."""
    return (2 * a_perp + a_par) / 3


@dataclass(frozen=True)
class FamilyEntry:
    name: str
    n_sites: int
    a_perp: float
    a_ani: float
    a_par: float
    polarization: float
    a_ani_assumed: bool = False


@dataclass(frozen=True)
class FamilyCatalog:
    entries: dict = field(default_factory=dict)
    phi0: float = 0.0

    def __getitem__(self, name: str) -> FamilyEntry:
        try:
            return self.entries[name]
        except KeyError:
            raise KeyError(f"unknown 13C family {name!r}") from None

    def __iter__(self):
        return iter(self.entries)

    def names(self) -> list[str]:
        return list(self.entries)

    def with_d_ani(self, a_ani: float) -> "FamilyCatalog":
        d = self.entries["D"]
        entries = dict(self.entries)
        entries["D"] = replace(d, a_ani=float(a_ani))
        return replace(self, entries=entries)

    def with_phi0(self, phi0: float) -> "FamilyCatalog":
        return replace(self, phi0=float(phi0))


def default_catalog(d_ani: float = 0.5, phi0: float = 0.0) -> FamilyCatalog:
    # family D has no measured anisotropic term; d_ani is an assumption
    entries = {
        "A": FamilyEntry("A", 6, 15.6, 1.56, 13.7496, 0.52),
        "B": FamilyEntry("B", 3, 14.00, 1.8, 12.795, 0.53),
        "C": FamilyEntry("C", 3, -10.4, 0.9, -8.9, 0.56),
        "D": FamilyEntry("D", 6, -5.2, float(d_ani), -6.51, 0.65, a_ani_assumed=True),
    }
    return FamilyCatalog(entries, phi0=float(phi0))


DEFAULT_CATALOG = default_catalog()


@dataclass(frozen=True)
class CatalogRecord:
    scalars: HyperfineScalars
    n_sites: int
    polarization: float
    site_phis: tuple[float, ...]


def catalog_lookup(family: str, catalog: FamilyCatalog = DEFAULT_CATALOG) -> CatalogRecord:
    """Scalars, multiplicity, polarization and equally spaced site azimuths."""
    e = catalog[family]
    phis = tuple((catalog.phi0 + 2 * math.pi * k / e.n_sites) % (2 * math.pi) for k in range(e.n_sites))
    sc = HyperfineScalars(e.a_par, e.a_perp, e.a_ani, 0.0, 0.0, e.a_ani_assumed)
    return CatalogRecord(sc, e.n_sites, e.polarization, phis)


def family_scalars(family: str, phi: float = 0.0, catalog: FamilyCatalog = DEFAULT_CATALOG) -> HyperfineScalars:
    return replace(catalog_lookup(family, catalog).scalars, phi=phi)
