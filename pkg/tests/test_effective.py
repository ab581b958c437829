import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvcluster.effective import (
    NV0_LABELS, PerturbationWarning, delta_e_aligned, delta_e_closed, distinct_values, effective_h0e,
    enhanced_gyromagnetic, extract_nv0_tensor, n14_frequencies_nv0, n14_frequencies_nvm, site_splitting,
    validity_ok,
)
from nvcluster.hamiltonian import FieldConfig, build_hamiltonian, nv0_n14_system, nv_c13_system, nv_n14_system
from nvcluster.hyperfine import DEFAULT_CONSTANTS as C, HyperfineScalars, family_scalars
from nvcluster.spin import hermitian_eig

F0 = FieldConfig(486.8)
PAPER_NV0 = {"+1N-1/2": 7.828, "-1N-1/2": 1.472, "+1N+1/2": 1.782, "-1N+1/2": 7.540}


def exact_delta(sc, f):
    system = nv_c13_system(sc, f)
    eig = hermitian_eig(build_hamiltonian(system), system.basis_labels())
    return abs(eig.energy_of("0_e,-1/2") - eig.energy_of("0_e,+1/2"))


def test_decoupled_limit():
    h = effective_h0e(HyperfineScalars(5.0, 0.0, 0.0), F0)
    assert h.h_perp == 0 and h.nu == 0
    gnb = C.gamma_n_c13 * 486.8
    assert np.allclose(h.matrix, 0.5 * np.diag([gnb, -gnb]))


def test_nu_family_a():
    h = effective_h0e(family_scalars("A"), F0)
    # magnitude 52.1 kHz; positive, opposing the negative 13C Zeeman term
    assert math.isclose(h.nu * 1e3, 52.07, abs_tol=0.05)
    assert math.isclose(abs(h.nu), 0.1 * abs(C.gamma_n_c13 * 486.8), rel_tol=0.01)


def test_h_perp_family_a_aligned():
    sc = family_scalars("A")
    h = effective_h0e(sc, F0)
    d2 = C.D**2 - (C.gamma_e * 486.8) ** 2
    assert math.isclose(abs(h.h_perp), abs(C.gamma_e * sc.a_perp * sc.a_ani * 486.8) / d2, rel_tol=1e-12)
    assert math.isclose(abs(h.h_perp) * 1e3, 5.21, abs_tol=0.01)


def test_matrix_layout():
    h = effective_h0e(family_scalars("B"), FieldConfig(486.8, 0.7))
    assert np.allclose(h.matrix, h.matrix.conj().T)
    assert math.isclose(h.matrix[0, 0].real, (h.gamma_n_bz + h.nu) / 2)
    assert np.isclose(h.matrix[0, 1], (h.gamma_n_bx + h.h_perp) / 2)


@pytest.mark.parametrize("fam,target", [("A", 468.9), ("D", 515.1)])
def test_delta_e_families(fam, target):
    assert abs(delta_e_closed(family_scalars(fam), F0) * 1e3 - target) < 0.3


def test_delta_e_zero_coupling():
    sc = HyperfineScalars(0.0, 0.0)
    assert math.isclose(delta_e_closed(sc, F0), abs(C.gamma_n_c13 * 486.8), rel_tol=1e-14)
    f = FieldConfig(486.8, 2.0)
    assert math.isclose(delta_e_closed(sc, f), abs(C.gamma_n_c13) * math.hypot(486.8, 2.0), rel_tol=1e-14)


@pytest.mark.parametrize("fam", "ABCD")
@pytest.mark.parametrize("bx", [0.0, 0.5, 1.0, 1.5])
def test_oracle_equivalence(fam, bx):
    f = FieldConfig(486.8, bx)
    sc = family_scalars(fam)
    assert abs(delta_e_closed(sc, f) - exact_delta(sc, f)) <= 2e-3


@pytest.mark.parametrize("bx", [0.0, 0.5, 1.0, 1.5])
def test_perturbative_convergence(bx):
    f = FieldConfig(486.8, bx)
    sc = family_scalars("A")
    d1 = abs(delta_e_closed(sc, f) - exact_delta(sc, f))
    d2 = abs(delta_e_closed(sc.scaled(0.5), f) - exact_delta(sc.scaled(0.5), f))
    assert d1 >= 3 * d2


@settings(max_examples=50, deadline=None)
@given(phi=st.floats(0, 2 * math.pi), fam=st.sampled_from("ABCD"))
def test_aligned_independent_of_phi(phi, fam):
    a = delta_e_closed(family_scalars(fam, 0.0), F0)
    b = delta_e_closed(family_scalars(fam, phi), F0)
    assert abs(a - b) <= 1e-14
    assert abs(a - delta_e_aligned(family_scalars(fam), 486.8)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(bx=st.floats(-3, 3), phi=st.floats(0, 2 * math.pi), fam=st.sampled_from("ABCD"),
       bz=st.floats(100, 700))
def test_bx_reflection_symmetry(bx, phi, fam, bz):
    a = delta_e_closed(family_scalars(fam, phi), FieldConfig(bz, -bx))
    b = delta_e_closed(family_scalars(fam, phi + math.pi), FieldConfig(bz, bx))
    assert abs(a - b) <= 1e-12


def test_scalar_shift_freedom():
    h = effective_h0e(family_scalars("C", 0.3), FieldConfig(486.8, 1.0))
    e1 = np.linalg.eigvalsh(h.matrix)
    e2 = np.linalg.eigvalsh(h.matrix + h.c_shift * np.eye(2))
    assert math.isclose(e1[1] - e1[0], e2[1] - e2[0], rel_tol=1e-12)
    assert math.isclose(h.splitting, delta_e_closed(family_scalars("C", 0.3), FieldConfig(486.8, 1.0)), rel_tol=1e-12)


def test_site_splitting():
    sites = site_splitting("A", F0)
    assert len(sites) == 6
    vals = [d for _, d in sites]
    assert max(vals) - min(vals) <= 1e-12
    bis = site_splitting("A", FieldConfig(486.8, 0.85, math.pi / 6))
    assert len(distinct_values([d for _, d in bis], 1e-9)) == 3


def test_double_quantum_replacement():
    sc = HyperfineScalars(13.0, 15.0, 1.0, 0.0, a_perp_prime=1.0)
    h0 = effective_h0e(sc, F0)
    h1 = effective_h0e(sc, F0, include_a_perp_prime=True)
    assert math.isclose(h1.nu / h0.nu, (15.0**2 - 1.0) / 15.0**2, rel_tol=1e-12)
    assert math.isclose(abs(h1.h_perp) / abs(h0.h_perp), 14.0 / 15.0, rel_tol=1e-12)


def test_validity_warning_near_anticrossing():
    sc = family_scalars("A")
    assert validity_ok(sc, F0)
    with pytest.warns(PerturbationWarning):
        h = effective_h0e(sc, FieldConfig(1000.0))
    assert not h.valid
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        effective_h0e(sc, F0)


def test_n14_nvm_values():
    f = n14_frequencies_nvm(C, 486.8)
    assert abs(f["+1N0"] - 5.095) < 5e-4
    assert abs(f["-1N0"] - 4.799) < 5e-4
    assert abs(f["+1N0"] - 5.091) < 0.010


def test_n14_nvm_collapse():
    c = C.override(A_perp_n14_nvm=0.0, gamma_n_n14=0.0)
    q, a = 4.95, 2.16
    for v in n14_frequencies_nvm(c, 486.8).lines.values():
        assert any(math.isclose(v, x, abs_tol=1e-12) for x in (q, q + a, q - a))


def test_n14_nvm_against_exact():
    system = nv_n14_system(F0)
    eig = hermitian_eig(build_hamiltonian(system), system.basis_labels())
    closed = n14_frequencies_nvm(C, 486.8)
    for lab, v in closed.items():
        mi, ms = lab.split("N")
        exact = abs(eig.energy_of(f"{ms}_e,{mi}") - eig.energy_of(f"{ms}_e,0"))
        assert abs(exact - v) < 5e-3, lab


def test_n14_nvm_guard():
    with pytest.raises(ZeroDivisionError):
        n14_frequencies_nvm(C, C.D / C.gamma_e)
    with pytest.raises(ValueError):
        n14_frequencies_nvm(C, -1)


def test_nv0_defaults():
    f = n14_frequencies_nv0(a0_par=6.057, bz=486.8)
    expect = {"+1N-1/2": 7.833, "-1N-1/2": 1.471, "+1N+1/2": 1.782, "-1N+1/2": 7.534}
    for k in NV0_LABELS:
        assert abs(f[k] - expect[k]) < 6e-4
        assert abs(f[k] - PAPER_NV0[k]) < 0.010


def test_nv0_secular_difference():
    f = n14_frequencies_nv0(a0_perp=0.0, bz=486.8)
    assert math.isclose(f["+1N-1/2"] - f["-1N+1/2"], -2 * C.gamma_n_n14 * 486.8, abs_tol=1e-12)


def test_nv0_against_exact():
    system = nv0_n14_system(F0, a0_par=6.057)
    eig = hermitian_eig(build_hamiltonian(system), system.basis_labels())
    closed = n14_frequencies_nv0(a0_par=6.057, bz=486.8)
    for lab, v in closed.items():
        mi, ms = lab.split("N")
        exact = abs(eig.energy_of(f"{ms}_e,{mi}") - eig.energy_of(f"{ms}_e,0"))
        assert abs(exact - v) < 5e-3, lab


def test_extraction_from_measured():
    r = extract_nv0_tensor(PAPER_NV0, 486.8)
    assert math.isclose(r.q0_abs, 4.6555, abs_tol=1e-9)
    assert math.isclose(r.a0_par, -6.057, abs_tol=1e-9)
    assert math.isclose(r.a0_par_magnitude, 6.057, abs_tol=1e-9)
    assert r.radicand_negative and r.radicand < 0
    assert "a0_perp_note" in r.diagnostics


def test_extraction_round_trip():
    f = n14_frequencies_nv0(bz=486.8)
    r = extract_nv0_tensor(f, 486.8)
    assert abs(r.q0_abs - 4.655) < 5e-3
    assert abs(r.a0_par_magnitude - 6.06) < 5e-3
    assert abs(r.a0_perp - 3.9) < 0.1
    # the radicand combination equals -A0_perp^2 for these line labels
    assert r.radicand_negative


def test_extraction_bad_labels():
    with pytest.raises(KeyError):
        extract_nv0_tensor({"+1N-1/2": 1.0}, 486.8)


def test_enhanced_gyro_decoupled():
    r = enhanced_gyromagnetic(HyperfineScalars(3.0, 0.0, 1.0), F0)
    assert r.gamma_par_eff == r.gamma_perp_eff == C.gamma_n_c13


def test_enhanced_gyro_family_a():
    a = enhanced_gyromagnetic(family_scalars("A"), F0)
    assert math.isclose(a.gamma_perp_eff_khz_per_g, -40.4, abs_tol=0.05)
    assert 37 < a.gamma_perp_eff / C.gamma_n_c13 < 39
    b = enhanced_gyromagnetic(family_scalars("B"), F0)
    ratio = b.gamma_perp_eff / a.gamma_perp_eff
    assert math.isclose(ratio, 14.0 / 15.6, rel_tol=0.02)


def test_rotating_frame_terms():
    sc = family_scalars("A")
    r = enhanced_gyromagnetic(sc, FieldConfig(486.8, 1.0), b_rf=0.5)
    assert math.isclose(r.omega_rabi, 0.25 * r.gamma_perp_eff)
    assert math.isclose(r.omega0, 0.5 * r.gamma_par_eff * 486.8)
    h = effective_h0e(sc, FieldConfig(486.8, 1.0))
    # omega' is the B_x part of nu / 2
    assert math.isclose(2 * r.omega_prime, h.nu - effective_h0e(sc, F0).nu, rel_tol=1e-12)
