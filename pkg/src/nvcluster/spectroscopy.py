"""RF transitions, Lorentzian spectra, ODMR lines, pair lines and two-tone response."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .hamiltonian import (
    Electron, FieldConfig, NucleusSpec, Species, SpinSystemSpec, build_hamiltonian, nv_c13_pair_system,
    nv_c13_system,
)
from .hyperfine import DEFAULT_CATALOG, DEFAULT_CONSTANTS, FamilyCatalog, HyperfineScalars, PhysicalConstants, catalog_lookup
from .spin import Eigensystem, embed, hermitian_eig, is_hermitian, spin_operators

AMPLITUDE_FLOOR = 1e-12
MODELS = ("quadratic", "linear")


class SpectroscopyError(ValueError):
    """Inconsistent input to a spectroscopy routine."""


@dataclass(frozen=True)
class TransitionLine:
    f: float
    amplitude: float
    from_label: str
    to_label: str
    manifold: str | None = None
    family: str | None = None

    def __post_init__(self):
        if self.f < 0 or self.amplitude < 0:
            raise SpectroscopyError("line frequency and amplitude must be >= 0")


@dataclass(frozen=True)
class Spectrum:
    freq_grid: np.ndarray
    signal: np.ndarray
    linewidth: float

    def __post_init__(self):
        f = np.asarray(self.freq_grid, dtype=float)
        s = np.asarray(self.signal, dtype=float)
        if f.shape != s.shape or f.ndim != 1:
            raise SpectroscopyError("grid and signal must be 1-D arrays of equal length")
        if f.size > 1 and np.any(np.diff(f) <= 0):
            raise SpectroscopyError("frequency grid must be strictly increasing")
        if not np.all(np.isfinite(s)):
            raise SpectroscopyError("signal contains non-finite values")
        object.__setattr__(self, "freq_grid", f)
        object.__setattr__(self, "signal", s)

    def local_maxima(self, rel_height: float = 0.0) -> np.ndarray:
        """Grid frequencies of strict local maxima above ``rel_height * max``."""
        s = self.signal
        if s.size < 3:
            return np.array([])
        inner = (s[1:-1] > s[:-2]) & (s[1:-1] >= s[2:]) & (s[1:-1] > rel_height * s.max())
        return self.freq_grid[1:-1][inner]


@dataclass(frozen=True)
class TransitionWeights:
    """Per-line weight p * N_sites applied on top of the matrix element."""

    polarization: float = 1.0
    n_sites: float = 1.0

    @property
    def factor(self) -> float:
        return self.polarization * self.n_sites


def manifold_of(label: str) -> str | None:
    """Electronic manifold tag of a product-basis label such as ``"-1_e,+1/2"``."""
    head = label.split(",")[0]
    if not head.endswith("_e"):
        return None
    if "/" in head:
        return "NV0"
    return head


def enumerate_transitions(eig: Eigensystem, rf_operator, weights: TransitionWeights | None = None,
                          model: str = "quadratic", floor: float = AMPLITUDE_FLOOR,
                          manifold: str | None = None, family: str | None = None) -> list[TransitionLine]:
    """Lines between eigenstates driven by ``rf_operator``.

    One line per pair i < j (ascending energy) whose |<j|rf|i>|^2 exceeds
    ``floor`` times the largest squared element. ``manifold`` keeps only
    pairs whose labels both sit in that electronic manifold.
    """
    rf = np.asarray(rf_operator, dtype=complex)
    n = len(eig)
    if rf.shape != (n, n):
        raise SpectroscopyError(f"rf operator shape {rf.shape} does not match dimension {n}")
    if not is_hermitian(rf):
        raise SpectroscopyError("rf operator is not Hermitian")
    if model not in MODELS:
        raise SpectroscopyError(f"unknown amplitude model {model!r}")
    w = (weights or TransitionWeights()).factor
    m = eig.states.conj().T @ rf @ eig.states
    m2 = np.abs(m) ** 2
    off = m2[~np.eye(n, dtype=bool)]
    cut = floor * (off.max() if off.size else 0.0)
    mans = [manifold_of(lab) for lab in eig.labels]
    lines = []
    for i in range(n):
        for j in range(i + 1, n):
            if m2[j, i] <= cut or m2[j, i] == 0.0:
                continue
            if manifold is not None and not (mans[i] == manifold and mans[j] == manifold):
                continue
            amp = m2[j, i] if model == "quadratic" else np.sqrt(m2[j, i])
            lines.append(TransitionLine(float(eig.energies[j] - eig.energies[i]), float(w * amp),
                                        eig.labels[i], eig.labels[j],
                                        mans[i] if mans[i] == mans[j] else None, family))
    return lines


def synthesize_spectrum(lines, grid, linewidth: float) -> Spectrum:
    """Sum of Lorentzians with FWHM ``linewidth`` and peak height equal to each amplitude."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise SpectroscopyError("empty frequency grid")
    if not linewidth > 0:
        raise SpectroscopyError("linewidth must be positive")
    lines = list(lines)
    centers = np.array([ln.f for ln in lines], dtype=float)
    amps = np.array([ln.amplitude for ln in lines], dtype=float)
    signal = _backend.lorentzian_sum(grid, centers, amps, linewidth / 2)
    return Spectrum(grid, np.asarray(signal), float(linewidth))


def _nuclear_rf(system: SpinSystemSpec, which=None) -> np.ndarray:
    """Sum of I_x over the nuclei listed in ``which`` (all by default)."""
    dims = system.dims
    which = range(len(system.nuclei)) if which is None else which
    rf = np.zeros((system.dim, system.dim), dtype=complex)
    for k in which:
        rf += embed(spin_operators(system.nuclei[k].species.spin).sx, k + 1, dims)
    return rf


def _electron_rf(system: SpinSystemSpec) -> np.ndarray:
    return embed(spin_operators(system.electron.spin).sx, 0, system.dims)


DRIVES = ("physical", "bare")


def rf_drive(system: SpinSystemSpec, drive: str = "physical") -> np.ndarray:
    """RF coupling operator along x in units of the bare nuclear coupling.

    ``"bare"`` is the sum of nuclear I_x. ``"physical"`` adds the electron term
    (gamma_e / gamma_n) S_x of the same field, which is what produces the
    hyperfine enhancement of the nuclear Rabi frequency.
    """
    if drive not in DRIVES:
        raise SpectroscopyError(f"unknown drive {drive!r}")
    rf = _nuclear_rf(system)
    if drive == "physical":
        gn = system.nuclei[0].gyro(system.constants)
        rf = rf + (system.constants.gamma_e / gn) * _electron_rf(system)
    return rf


def family_lines(field: FieldConfig | None = None, constants: PhysicalConstants = DEFAULT_CONSTANTS,
                 catalog: FamilyCatalog = DEFAULT_CATALOG, manifolds=("0_e",), families=None,
                 model: str = "quadratic", drive: str = "physical") -> list[TransitionLine]:
    """13C nuclear lines of every catalog family, one 6x6 diagonalization per site.

    Each site carries weight p, so a family of N degenerate sites sums to p * N.
    """
    field = field or FieldConfig()
    out = []
    for fam in families or catalog.names():
        rec = catalog_lookup(fam, catalog)
        for phi in rec.site_phis:
            system = nv_c13_system(replace(rec.scalars, phi=phi), field, constants)
            eig = hermitian_eig(build_hamiltonian(system), system.basis_labels())
            rf = rf_drive(system, drive)
            for man in manifolds:
                out += enumerate_transitions(eig, rf, TransitionWeights(rec.polarization, 1.0), model,
                                             manifold=man, family=fam)
    return sorted(out, key=lambda ln: (ln.f, ln.family or ""))


def merge_degenerate(lines, tol: float = 1e-9) -> list[TransitionLine]:
    """Combine lines of the same family and manifold closer than ``tol`` MHz."""
    merged: list[TransitionLine] = []
    for ln in sorted(lines, key=lambda x: (x.family or "", x.manifold or "", x.f)):
        last = merged[-1] if merged else None
        if last and last.family == ln.family and last.manifold == ln.manifold and abs(last.f - ln.f) <= tol:
            merged[-1] = replace(last, amplitude=last.amplitude + ln.amplitude)
        else:
            merged.append(ln)
    return sorted(merged, key=lambda x: (x.f, x.family or ""))


def odmr_electronic_lines(families=None, field: FieldConfig | None = None,
                          constants: PhysicalConstants = DEFAULT_CONSTANTS,
                          catalog: FamilyCatalog = DEFAULT_CATALOG, floor: float = 1e-6) -> list[TransitionLine]:
    """|0> -> |-1> electron lines: the three 14N lines and the 13C satellites.

    Satellites come from an 18-dim NV-14N-13C diagonalization per family with
    the 14N in m_I = +1 (the polarized central line). Every line is labeled
    with the product state it connects.
    """
    field = field or FieldConfig(bz=487.0)
    if field.bx != 0:
        raise SpectroscopyError("ODMR lines require an aligned field (bx = 0)")
    n14 = NucleusSpec(Species.N14, HyperfineScalars(constants.A_par_n14_nvm, constants.A_perp_n14_nvm),
                      quadrupole=constants.Q_n14_nvm)
    lines: list[TransitionLine] = []

    system = SpinSystemSpec(Electron.NV_MINUS, (n14,), field, constants)
    eig = hermitian_eig(build_hamiltonian(system), system.basis_labels())
    for ln in enumerate_transitions(eig, _electron_rf(system), floor=floor):
        a, b = ln.from_label.split(","), ln.to_label.split(",")
        if {a[0], b[0]} == {"0_e", "-1_e"} and a[1] == b[1]:
            lines.append(replace(ln, manifold="0_e<->-1_e", family=f"N14 mI={a[1]}"))

    for fam in families if families is not None else catalog.names():
        sc = catalog_lookup(fam, catalog).scalars
        system = SpinSystemSpec(Electron.NV_MINUS, (n14, NucleusSpec(Species.C13, sc)), field, constants)
        eig = hermitian_eig(build_hamiltonian(system), system.basis_labels())
        for ln in enumerate_transitions(eig, _electron_rf(system), floor=floor):
            a, b = ln.from_label.split(","), ln.to_label.split(",")
            if {a[0], b[0]} == {"0_e", "-1_e"} and a[1] == b[1] == "+1":
                lines.append(replace(ln, manifold="0_e<->-1_e", family=fam))
    return sorted(lines, key=lambda ln: (ln.family or "", ln.f))


def odmr_central_frequency(lines) -> float:
    """Frequency of the 14N m_I = +1 line."""
    for ln in lines:
        if ln.family == "N14 mI=+1":
            return ln.f
    raise SpectroscopyError("no 14N m_I = +1 line present")


PAIR_STATE_TAGS = ("T0", "S", "T-")


def pair_gT_frequencies(family1: str, family2: str, field: FieldConfig | None = None,
                        constants: PhysicalConstants = DEFAULT_CONSTANTS,
                        catalog: FamilyCatalog = DEFAULT_CATALOG, phi1: float = 0.0,
                        phi2: float = 0.0, drive: str = "physical") -> list[TransitionLine]:
    """Lines from |g> = |+1/2,+1/2> to the other three 0_e nuclear states of a pair.

    Of the two states built from |+-> and |-+>, the one more strongly driven
    from |g> by the physical RF field is tagged ``T0`` and the other ``S``. The
    remaining state is ``T-``. For families with opposite-sign A_perp the
    enhanced drive flips sign on one nucleus, so ``T0`` is then the state
    closer to the antisymmetric bare combination.

    Amplitudes are |<f|rf|g>|^2 for the chosen ``drive`` with no floor, so
    forbidden lines show up with amplitude ~0.
    """
    s1 = replace(catalog_lookup(family1, catalog).scalars, phi=phi1)
    s2 = replace(catalog_lookup(family2, catalog).scalars, phi=phi2)
    system = nv_c13_pair_system(s1, s2, field or FieldConfig(), constants)
    labels = system.basis_labels()
    eig = hermitian_eig(build_hamiltonian(system), labels)
    rf = rf_drive(system, drive)
    bright = rf_drive(system, "physical")

    idx = {lab: labels.index(lab) for lab in ("0_e,+1/2,+1/2", "0_e,+1/2,-1/2", "0_e,-1/2,+1/2", "0_e,-1/2,-1/2")}
    cols = [k for k, lab in enumerate(eig.labels) if manifold_of(lab) == "0_e"]
    if len(cols) != 4:
        raise SpectroscopyError("could not isolate four 0_e pair states")
    v = eig.states
    g = max(cols, key=lambda k: abs(v[idx["0_e,+1/2,+1/2"], k]))
    rest = [k for k in cols if k != g]
    tm = max(rest, key=lambda k: abs(v[idx["0_e,-1/2,-1/2"], k]))
    mixed = [k for k in rest if k != tm]
    mb = np.abs(v.conj().T @ bright @ v[:, g]) ** 2
    t0 = max(mixed, key=lambda k: (mb[k], -k))
    s = next(k for k in mixed if k != t0)

    m = v.conj().T @ rf @ v
    pair = f"{family1}{family2}"
    out = []
    for tag, k in zip(PAIR_STATE_TAGS, (t0, s, tm)):
        out.append(TransitionLine(float(abs(eig.energies[k] - eig.energies[g])), float(abs(m[k, g]) ** 2),
                                  "g", tag, "0_e", pair))
    return out


def pair_triplet_line(family1: str, family2: str, **kw) -> TransitionLine:
    """The |g> -> |T0> line of a pair."""
    return pair_gT_frequencies(family1, family2, **kw)[0]


def all_family_pairs(catalog: FamilyCatalog = DEFAULT_CATALOG) -> list[tuple[str, str]]:
    names = catalog.names()
    same = [(a, a) for a in names]
    mixed = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
    return same + mixed


def two_tone_response(pump: TransitionLine, probe: TransitionLine) -> float:
    """1 when pump (0_e manifold) and probe (+-1_e manifold) address the same family."""
    if pump.family is None or probe.family is None:
        raise SpectroscopyError("two-tone response needs family labels on both lines")
    if pump.manifold not in (None, "0_e"):
        raise SpectroscopyError("pump must be a 0_e-manifold line")
    if probe.manifold not in (None, "+1_e", "-1_e"):
        raise SpectroscopyError("probe must be a +-1_e-manifold line")
    return 1.0 if pump.family == probe.family else 0.0


def two_tone_matrix(families=("A", "B", "C", "D")) -> np.ndarray:
    """Response for every (pump family, probe family) combination."""
    fams = list(families)
    out = np.zeros((len(fams), len(fams)))
    for i, a in enumerate(fams):
        for j, b in enumerate(fams):
            out[i, j] = two_tone_response(TransitionLine(0.0, 1.0, "", "", "0_e", a),
                                          TransitionLine(0.0, 1.0, "", "", "-1_e", b))
    return out
