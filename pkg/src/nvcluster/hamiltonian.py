"""Cluster Hamiltonians in the NV frame (MHz, Gauss, hbar = 1).

The electron is the first Kronecker factor, nuclei follow in the order given.
The transverse field points along ``field_azimuth`` in the NV x-y plane and
nuclear azimuths ``phi`` are measured in the same frame, so only their
difference is physical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .hyperfine import DEFAULT_CONSTANTS, HyperfineScalars, HyperfineTensor, PhysicalConstants
from .spin import MAX_DIM, embed, product_basis_labels, spin_operators


class Electron(str, Enum):
    NV_MINUS = "NV_minus"
    NV0 = "NV0"

    @property
    def spin(self) -> float:
        return 1.0 if self is Electron.NV_MINUS else 0.5


class Species(str, Enum):
    C13 = "C13"
    N14 = "N14"

    @property
    def spin(self) -> float:
        return 0.5 if self is Species.C13 else 1.0


class HamiltonianError(ValueError):
    """Spin-system description inconsistent with the requested builder."""


@dataclass(frozen=True)
class FieldConfig:
    bz: float = 486.8
    bx: float = 0.0
    field_azimuth: float = 0.0

    def rotated(self, dphi: float) -> "FieldConfig":
        return replace(self, field_azimuth=self.field_azimuth + dphi)


@dataclass(frozen=True)
class NucleusSpec:
    species: Species
    scalars: HyperfineScalars | None = None
    tensor: HyperfineTensor | None = None
    quadrupole: float | None = None
    gamma_n: float | None = None  # MHz/G; species default when None

    def __post_init__(self):
        object.__setattr__(self, "species", Species(self.species))
        if self.scalars is None and self.tensor is None:
            object.__setattr__(self, "scalars", HyperfineScalars(0.0, 0.0))
        if self.scalars is not None and self.tensor is not None:
            raise HamiltonianError("give either scalars or a full tensor, not both")
        if self.species is Species.N14 and self.quadrupole is None:
            raise HamiltonianError("N14 nuclei need a quadrupole value")
        if self.species is Species.C13 and self.quadrupole is not None:
            raise HamiltonianError("C13 nuclei carry no quadrupole term")

    def gyro(self, c: PhysicalConstants) -> float:
        if self.gamma_n is not None:
            return self.gamma_n
        return c.gamma_n_c13 if self.species is Species.C13 else c.gamma_n_n14

    def rotated(self, dphi: float) -> "NucleusSpec":
        if self.scalars is not None:
            return replace(self, scalars=self.scalars.rotated(dphi))
        ca, sa = math.cos(dphi), math.sin(dphi)
        r = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
        return replace(self, tensor=HyperfineTensor(r @ self.tensor.a @ r.T, self.tensor.a_c))


@dataclass(frozen=True)
class SpinSystemSpec:
    electron: Electron = Electron.NV_MINUS
    nuclei: tuple = ()
    field: FieldConfig = field(default_factory=FieldConfig)
    constants: PhysicalConstants = DEFAULT_CONSTANTS
    include_double_quantum: bool = False

    def __post_init__(self):
        object.__setattr__(self, "electron", Electron(self.electron))
        object.__setattr__(self, "nuclei", tuple(self.nuclei))
        if self.dim > MAX_DIM:
            raise HamiltonianError(f"Hilbert dimension {self.dim} exceeds {MAX_DIM}")

    @property
    def spins(self) -> list[float]:
        return [self.electron.spin] + [n.species.spin for n in self.nuclei]

    @property
    def dims(self) -> list[int]:
        return [int(round(2 * s + 1)) for s in self.spins]

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def basis_labels(self) -> list[str]:
        return product_basis_labels(self.spins, ["e"] + [""] * len(self.nuclei))

    def rotated(self, dphi: float) -> "SpinSystemSpec":
        """Rotate the field azimuth and every nuclear azimuth by ``dphi``."""
        return replace(self, field=self.field.rotated(dphi),
                       nuclei=tuple(n.rotated(dphi) for n in self.nuclei))


def _hyperfine_term(S, I, sc: HyperfineScalars, double_quantum: bool) -> np.ndarray:
    e_m = np.exp(-1j * sc.phi)
    e_p = np.conj(e_m)
    h = sc.a_par * S.sz @ I.sz
    h = h + sc.a_perp / 2 * (S.s_plus @ I.s_minus + S.s_minus @ I.s_plus)
    h = h + sc.a_ani / 2 * ((S.s_plus @ I.sz + S.sz @ I.s_plus) * e_m
                             + (S.s_minus @ I.sz + S.sz @ I.s_minus) * e_p)
    if double_quantum and sc.a_perp_prime:
        h = h + sc.a_perp_prime / 2 * (S.s_plus @ I.s_plus * e_m**2 + S.s_minus @ I.s_minus * e_p**2)
    return h


class _Embedded:
    """Spin operators of one subsystem lifted into the product space."""

    def __init__(self, s, position, dims):
        ops = spin_operators(s)
        self.sx = embed(ops.sx, position, dims)
        self.sy = embed(ops.sy, position, dims)
        self.sz = embed(ops.sz, position, dims)
        self.s_plus = embed(ops.s_plus, position, dims)
        self.s_minus = embed(ops.s_minus, position, dims)


def build_hamiltonian(system: SpinSystemSpec) -> np.ndarray:
    """Hamiltonian of an arbitrary (dimension <= 64) cluster description."""
    c = system.constants
    dims = system.dims
    S = _Embedded(system.electron.spin, 0, dims)
    f = system.field
    ca, sa = math.cos(f.field_azimuth), math.sin(f.field_azimuth)

    h = np.zeros((system.dim, system.dim), dtype=complex)
    if system.electron is Electron.NV_MINUS:
        h += c.D * S.sz @ S.sz
    h += c.gamma_e * (f.bz * S.sz + f.bx * (ca * S.sx + sa * S.sy))
    for k, nuc in enumerate(system.nuclei):
        I = _Embedded(nuc.species.spin, k + 1, dims)
        g = nuc.gyro(c)
        h += g * (f.bz * I.sz + f.bx * (ca * I.sx + sa * I.sy))
        if nuc.quadrupole is not None:
            h += nuc.quadrupole * I.sz @ I.sz
        if nuc.tensor is not None:
            sv = (S.sx, S.sy, S.sz)
            iv = (I.sx, I.sy, I.sz)
            a = nuc.tensor.a
            for i in range(3):
                for j in range(3):
                    if a[i, j]:
                        h += a[i, j] * sv[i] @ iv[j]
        else:
            h += _hyperfine_term(S, I, nuc.scalars, system.include_double_quantum)
    return h


def _check(system, electron, species):
    if system.electron is not electron:
        raise HamiltonianError(f"expected electron {electron.value}, got {system.electron.value}")
    got = [n.species for n in system.nuclei]
    if got != list(species):
        raise HamiltonianError(f"expected nuclei {[s.value for s in species]}, got {[s.value for s in got]}")


def build_nv_c13(system: SpinSystemSpec) -> np.ndarray:
    """6x6 NV- / single 13C Hamiltonian."""
    _check(system, Electron.NV_MINUS, [Species.C13])
    return build_hamiltonian(system)


def build_nv_n14(system: SpinSystemSpec) -> np.ndarray:
    """9x9 NV- / 14N Hamiltonian with quadrupole splitting."""
    _check(system, Electron.NV_MINUS, [Species.N14])
    return build_hamiltonian(system)


def build_nv0_n14(system: SpinSystemSpec) -> np.ndarray:
    """6x6 NV0 (S=1/2) / 14N Hamiltonian."""
    _check(system, Electron.NV0, [Species.N14])
    return build_hamiltonian(system)


def build_nv_c13_pair(system: SpinSystemSpec) -> np.ndarray:
    """12x12 NV- with two 13C; no direct nuclear-nuclear coupling."""
    _check(system, Electron.NV_MINUS, [Species.C13, Species.C13])
    return build_hamiltonian(system)


# convenience constructors -------------------------------------------------

def nv_c13_system(scalars: HyperfineScalars, field: FieldConfig | None = None,
                  constants: PhysicalConstants = DEFAULT_CONSTANTS, **kw) -> SpinSystemSpec:
    return SpinSystemSpec(Electron.NV_MINUS, (NucleusSpec(Species.C13, scalars),),
                          field or FieldConfig(), constants, **kw)


def nv_c13_pair_system(s1: HyperfineScalars, s2: HyperfineScalars, field: FieldConfig | None = None,
                       constants: PhysicalConstants = DEFAULT_CONSTANTS) -> SpinSystemSpec:
    return SpinSystemSpec(Electron.NV_MINUS, (NucleusSpec(Species.C13, s1), NucleusSpec(Species.C13, s2)),
                          field or FieldConfig(), constants)


def nv_n14_system(field: FieldConfig | None = None, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> SpinSystemSpec:
    sc = HyperfineScalars(constants.A_par_n14_nvm, constants.A_perp_n14_nvm)
    nuc = NucleusSpec(Species.N14, sc, quadrupole=constants.Q_n14_nvm)
    return SpinSystemSpec(Electron.NV_MINUS, (nuc,), field or FieldConfig(), constants)


def nv0_n14_system(field: FieldConfig | None = None, constants: PhysicalConstants = DEFAULT_CONSTANTS,
                   q0: float | None = None, a0_par: float | None = None,
                   a0_perp: float | None = None) -> SpinSystemSpec:
    q0 = constants.Q0_n14_nv0 if q0 is None else q0
    a0_par = constants.A0_par_n14_nv0 if a0_par is None else a0_par
    a0_perp = constants.A0_perp_n14_nv0 if a0_perp is None else a0_perp
    nuc = NucleusSpec(Species.N14, HyperfineScalars(a0_par, a0_perp), quadrupole=q0)
    return SpinSystemSpec(Electron.NV0, (nuc,), field or FieldConfig(), constants)
