"""Time-domain signals: Hahn echo (ESEEM), Ramsey traces, detrending and FFT.

Times are in microseconds and frequencies in MHz unless a name says kHz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .hamiltonian import Electron, FieldConfig, NucleusSpec, Species, SpinSystemSpec, build_hamiltonian
from .hyperfine import DEFAULT_CONSTANTS, HyperfineGeometry, HyperfineScalars, PhysicalConstants
from .spectroscopy import Spectrum
from .spin import hermitian_eig


class DynamicsError(ValueError):
    """Invalid sequence or trace."""


@dataclass(frozen=True)
class TimeTrace:
    t: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if t.shape != y.shape or t.ndim != 1:
            raise DynamicsError("t and y must be 1-D arrays of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise DynamicsError("time axis must be increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise DynamicsError("trace contains non-finite values")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class DecayParams:
    t2_star_c13: float = 203.0
    t2_star_n14: float = 864.0
    t2_electron: float = 7.0
    t1_electron: float = 3100.0

    def __post_init__(self):
        for name in ("t2_star_c13", "t2_star_n14", "t2_electron", "t1_electron"):
            if not getattr(self, name) > 0:
                raise DynamicsError(f"{name} must be positive")


def _electron_rotation(theta: float, n_nuc: int) -> np.ndarray:
    """exp(-i theta sigma_x / 2) on the {|0>, |-1>} electron pair, identity on |+1>."""
    r = np.eye(3, dtype=complex)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    r[1, 1] = r[2, 2] = c
    r[1, 2] = r[2, 1] = -1j * s
    return np.kron(r, np.eye(n_nuc, dtype=complex))


def hahn_echo_raw(system: SpinSystemSpec, tau_grid) -> np.ndarray:
    """|0> population after pi/2 - tau - pi - tau - pi/2, no decoherence envelope.

    The initial state is |0><0| on the electron times the maximally mixed
    nuclear state.
    """
    if system.electron is not Electron.NV_MINUS:
        raise DynamicsError("Hahn echo needs an NV- electron")
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or np.any(tau < 0):
        raise DynamicsError("tau grid must be 1-D and non-negative")
    n_nuc = system.dim // 3
    eig = hermitian_eig(build_hamiltonian(system))
    v, e = eig.states, eig.energies
    p2 = _electron_rotation(math.pi / 2, n_nuc)
    p1 = _electron_rotation(math.pi, n_nuc)
    # work in the eigenbasis: free evolution is diagonal there
    p2e = v.conj().T @ p2 @ v
    p1e = v.conj().T @ p1 @ v
    proj = np.zeros(system.dim)
    proj[n_nuc:2 * n_nuc] = 1.0
    p0e = (v.conj().T * proj) @ v
    rho0 = p0e / n_nuc
    out = np.empty(tau.size)
    for k, t in enumerate(tau):
        ph = np.exp(-2j * np.pi * e * t)
        u = p2e @ (ph[:, None] * p1e * ph[None, :]) @ p2e
        out[k] = np.real(np.trace(p0e @ u @ rho0 @ u.conj().T))
    return out


def echo_envelope(tau, t2: float, power: float = 1.0) -> np.ndarray:
    return np.exp(-((2 * np.asarray(tau, dtype=float) / t2) ** power))


def simulate_hahn_echo(system: SpinSystemSpec, tau_grid, decay: DecayParams | None = None,
                       envelope_power: float = 1.0) -> TimeTrace:
    """Echo amplitude vs tau times exp(-(2 tau / T2)^n)."""
    decay = decay or DecayParams()
    tau = np.asarray(tau_grid, dtype=float)
    y = hahn_echo_raw(system, tau) * echo_envelope(tau, decay.t2_electron, envelope_power)
    return TimeTrace(tau, y, {"sequence": "hahn_echo", "t2_us": decay.t2_electron, "power": envelope_power})


# weak 13C bath used for the ESEEM example -----------------------------------

@dataclass(frozen=True)
class WeakBath:
    """Randomly placed, purely dipolar 13C spins (a placeholder bath).

    Dipolar magnitudes are uniform in ``a_d_range`` (MHz), polar angles are
    isotropic and azimuths uniform. The seed makes every draw reproducible.
    """

    n_nuclei: int = 4
    n_configs: int = 8
    a_d_range: tuple = (0.005, 0.03)
    seed: int = 0

    def systems(self, field_cfg: FieldConfig, constants: PhysicalConstants = DEFAULT_CONSTANTS):
        rng = np.random.default_rng(self.seed)
        out = []
        for _ in range(self.n_configs):
            nuclei = []
            for _ in range(self.n_nuclei):
                a_d = rng.uniform(*self.a_d_range)
                theta = float(np.arccos(rng.uniform(-1.0, 1.0)))
                phi = float(rng.uniform(0.0, 2 * math.pi))
                nuclei.append(NucleusSpec(Species.C13, dipolar_scalars(a_d, theta, phi)))
            out.append(SpinSystemSpec(Electron.NV_MINUS, tuple(nuclei), field_cfg, constants))
        return out


def dipolar_scalars(a_d: float, theta: float, phi: float) -> HyperfineScalars:
    """Scalars of a contact-free dipolar coupling, using the tensor convention of the catalog."""
    HyperfineGeometry(0.0, a_d, theta, phi % (2 * math.pi))  # validates ranges
    a_par = -a_d * (1 - 3 * math.cos(theta) ** 2)
    a_ani = 3 * a_d * math.cos(theta) * math.sin(theta)
    return HyperfineScalars(a_par, -a_par / 2, a_ani, phi)


def simulate_hahn_echo_ensemble(systems, tau_grid, decay: DecayParams | None = None,
                                envelope_power: float = 1.0) -> TimeTrace:
    """Average of the raw echo over several systems, then one envelope."""
    systems = list(systems)
    if not systems:
        raise DynamicsError("empty ensemble")
    decay = decay or DecayParams()
    tau = np.asarray(tau_grid, dtype=float)
    raw = sum(hahn_echo_raw(s, tau) for s in systems) / len(systems)
    y = raw * echo_envelope(tau, decay.t2_electron, envelope_power)
    return TimeTrace(tau, y, {"sequence": "hahn_echo", "ensemble": len(systems), "t2_us": decay.t2_electron})


# Ramsey -------------------------------------------------------------------

def simulate_ramsey(two_level_set, t2_star: float, t_grid) -> TimeTrace:
    """y(t) = sum_k w_k cos(2 pi delta_k t) exp(-t / T2*), delta in kHz, t in us."""
    comps = [(float(d), float(w)) for d, w in two_level_set]
    if any(w < 0 for _, w in comps):
        raise DynamicsError("Ramsey weights must be >= 0")
    if not t2_star > 0:
        raise DynamicsError("t2_star must be positive")
    t = np.asarray(t_grid, dtype=float)
    y = np.zeros_like(t)
    for d, w in comps:
        y += w * np.cos(2 * np.pi * d * 1e-3 * t)
    y *= np.exp(-t / t2_star)
    return TimeTrace(t, y, {"sequence": "ramsey", "t2_star_us": t2_star, "detunings_khz": [d for d, _ in comps]})


def ramsey_detunings(centers_khz, drive_khz: float) -> list[float]:
    return [abs(c - drive_khz) for c in centers_khz]


# analysis -----------------------------------------------------------------

def detrend_polynomial(trace: TimeTrace, order: int) -> TimeTrace:
    """Subtract the least-squares polynomial of degree ``order``."""
    n = trace.t.size
    if order < 0 or order >= n:
        raise DynamicsError("polynomial order must satisfy 0 <= order < number of points")
    t = trace.t
    mid, half = (t[0] + t[-1]) / 2, (t[-1] - t[0]) / 2 or 1.0
    x = (t - mid) / half
    vander = np.polynomial.legendre.legvander(x, order)
    coef, _, rank, _ = np.linalg.lstsq(vander, trace.y, rcond=None)
    if rank < order + 1:
        raise DynamicsError("rank-deficient polynomial fit")
    return TimeTrace(t, trace.y - vander @ coef, {**trace.meta, "detrend_order": order})


def is_uniform(t, rtol: float = 1e-6) -> bool:
    d = np.diff(np.asarray(t, dtype=float))
    return d.size == 0 or bool(np.all(np.abs(d - d.mean()) <= rtol * abs(d.mean())))


def fft_spectrum(trace: TimeTrace, window: str = "none", zero_pad_factor: int = 1) -> Spectrum:
    """One-sided magnitude spectrum, frequency axis in MHz.

    The scaling makes sum |Y|^2 df equal sum |y_w|^2 dt for the windowed trace.
    """
    t = trace.t
    if t.size < 2 or not is_uniform(t):
        raise DynamicsError("FFT needs a uniform time grid with at least two points")
    if window not in ("none", "hann"):
        raise DynamicsError(f"unknown window {window!r}")
    if int(zero_pad_factor) < 1:
        raise DynamicsError("zero_pad_factor must be >= 1")
    dt = (t[-1] - t[0]) / (t.size - 1)
    y = trace.y * (np.hanning(t.size) if window == "hann" else 1.0)
    n = t.size * int(zero_pad_factor)
    mag = np.abs(np.fft.rfft(y, n)) * dt
    mag[1:(n + 1) // 2] *= math.sqrt(2.0)
    freqs = np.fft.rfftfreq(n, dt)
    return Spectrum(freqs, mag, 1.0 / (n * dt))


def dominant_frequency(spectrum: Spectrum, f_min: float = 0.0, f_max: float | None = None) -> float:
    f = spectrum.freq_grid
    mask = f >= f_min
    if f_max is not None:
        mask &= f <= f_max
    if not mask.any():
        raise DynamicsError("no frequency bins in the requested band")
    idx = np.flatnonzero(mask)
    return float(f[idx[np.argmax(spectrum.signal[idx])]])


def parabolic_peak(spectrum: Spectrum, f_guess: float) -> float:
    """Peak position refined by a parabola through the three bins around ``f_guess``."""
    f, s = spectrum.freq_grid, spectrum.signal
    i = int(np.argmin(np.abs(f - f_guess)))
    if i == 0 or i == f.size - 1:
        return float(f[i])
    a, b, c = s[i - 1], s[i], s[i + 1]
    den = a - 2 * b + c
    shift = 0.5 * (a - c) / den if den != 0 else 0.0
    return float(f[i] + shift * (f[1] - f[0]))


@dataclass(frozen=True)
class EseemAnalysis:
    """Defaults for turning an echo trace into a peak frequency."""

    detrend_order: int = 6
    window: str = "hann"
    zero_pad_factor: int = 64
    f_min: float = 0.1


def eseem_spectrum(trace: TimeTrace, analysis: EseemAnalysis = EseemAnalysis()) -> Spectrum:
    return fft_spectrum(detrend_polynomial(trace, analysis.detrend_order), analysis.window,
                        analysis.zero_pad_factor)


def eseem_peak(trace: TimeTrace, analysis: EseemAnalysis = EseemAnalysis()) -> float:
    """Dominant modulation frequency (MHz) above ``analysis.f_min``."""
    return dominant_frequency(eseem_spectrum(trace, analysis), analysis.f_min)


def with_field(systems, field_cfg: FieldConfig):
    return [replace(s, field=field_cfg) for s in systems]
