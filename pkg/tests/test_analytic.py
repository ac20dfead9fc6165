import numpy as np
import pytest

from spinprobe.analytic import (
    DEFAULT_PREFACTOR,
    PRINTED_DISPERSION,
    PRINTED_PREFACTOR,
    FermionSpectrum,
    IsingAmplitudes,
    audit_prefactor,
    determinant_coherence_delta0,
    free_fermion_coherence_pbc,
    free_fermion_correlation_obc,
    free_fermion_entropy_obc,
    ground_energy_obc,
    ising_coherence,
    pbc_correlation,
    spinon_velocity,
)
from spinprobe.exact import correlation_exact, ground_state_exact
from spinprobe.model import ModelParams
from spinprobe.tcl import tcl_coherence
from spinprobe.traces import uniform_grid


def test_spinon_velocity_examples():
    assert spinon_velocity(1, 0) == pytest.approx(1.0)
    assert spinon_velocity(1, 1) == pytest.approx(np.pi / 2)
    assert spinon_velocity(1, 0.5) == pytest.approx(3 * np.sqrt(3) / 4)
    assert spinon_velocity(1, 1 - 1e-9) == pytest.approx(np.pi / 2, rel=1e-4)
    d = np.linspace(-0.999, 1, 500)
    assert np.all(np.diff([spinon_velocity(1, x) for x in d]) > 0)
    for bad in (-1.0, 1.5):
        with pytest.raises(ValueError):
            spinon_velocity(1, bad)


@pytest.mark.parametrize("L", [10, 12])
def test_spectrum_half_filling(L):
    s = FermionSpectrum.build(L)
    assert s.occupied.sum() == L // 2 and np.all(s.eps[s.occupied] <= 0)


def test_pbc_formula_properties():
    t = uniform_grid(30, 0.05)
    rho = free_fermion_coherence_pbc(12, 1.0, 0.25, t).rho
    assert rho[0] == 0.5 and np.all(np.abs(rho) <= 0.5 + 1e-15)


def test_pbc_zero_mode_choice_small_effect():
    t = uniform_grid(40, 0.1)
    a = free_fermion_coherence_pbc(100, 1.0, 0.25, t, zero_mode="low").rho
    b = free_fermion_coherence_pbc(100, 1.0, 0.25, t, zero_mode="high").rho
    assert np.abs(a - b).max() <= 1e-3


@pytest.mark.parametrize("L", [12, 100])
def test_pbc_formula_is_tcl_of_pbc_correlator(L):
    t = uniform_grid(20, 0.01)
    a = free_fermion_coherence_pbc(L, 1.0, 0.1, t).rho
    b = tcl_coherence(pbc_correlation(L, 1.0, t), 0.1).trace.rho
    assert np.abs(a - b).max() <= 1e-6


def test_prefactor_audit_selects_ed_value():
    c0 = correlation_exact(ModelParams(L=12, delta=0.0), [0.0, 0.1]).C[0].real
    sel, table = audit_prefactor(c0)
    assert sel == DEFAULT_PREFACTOR == 1.0 and table[PRINTED_PREFACTOR] == pytest.approx(1.0)


def test_dispersion_choice_against_ed():
    # correlator frequencies must match the chain's; the printed scale does not
    t = uniform_grid(10, 0.05)
    ed = correlation_exact(ModelParams(L=12, delta=0.0), t).C
    # ED at L = 12 uses open boundaries; compare spectra of the periodic formula by C(0) and
    # against the open free-fermion result for the dispersion entering both
    good = free_fermion_correlation_obc(12, 1.0, t).C
    assert np.abs(good - ed).max() < 1e-10
    a = pbc_correlation(400, 1.0, t).C
    b = pbc_correlation(400, 1.0, t, dispersion=PRINTED_DISPERSION).C
    big = free_fermion_correlation_obc(400, 1.0, t).C
    assert np.abs(a - big).max() < np.abs(b - big).max()


def test_obc_correlator_examples():
    t = uniform_grid(20, 0.05)
    c = free_fermion_correlation_obc(12, 1.0, t)
    assert abs(c.C[0] - 0.25) < 1e-12
    assert np.abs(c.C - correlation_exact(ModelParams(L=12, delta=0.0), t).C).max() < 1e-10
    ts, Cs = c.symmetric()
    np.testing.assert_allclose(Cs[::-1], np.conj(Cs))


def test_pbc_and_obc_converge_with_L():
    t = uniform_grid(8, 0.05)
    dev = [np.abs(pbc_correlation(L, 1.0, t).C - free_fermion_correlation_obc(L, 1.0, t).C).max() for L in (50, 200)]
    assert dev[1] < dev[0]


def test_determinant_examples():
    t = uniform_grid(20, 0.05)
    np.testing.assert_allclose(determinant_coherence_delta0(12, 1.0, 0.0, t).rho, 0.5, atol=1e-13)
    rho = determinant_coherence_delta0(12, 1.0, 0.25, t).rho
    assert abs(rho[0] - 0.5) < 1e-14 and np.all(np.abs(rho) <= 0.5 + 1e-12)


def test_obc_energy_and_entropy():
    from spinprobe.exact import entanglement_entropy_dense

    G, e0 = ground_state_exact(ModelParams(L=10, delta=0.0))
    assert ground_energy_obc(10) == pytest.approx(e0, abs=1e-10)
    assert free_fermion_entropy_obc(10) == pytest.approx(entanglement_entropy_dense(G.psi, 10), abs=1e-10)


def test_ising_examples():
    t = uniform_grid(100, 0.05)
    eq = ising_coherence(IsingAmplitudes(2**-0.5, 2**-0.5), 0.25, t).rho
    np.testing.assert_allclose(eq, 0.5 * np.cos(0.125 * t), atol=1e-14)
    pure = ising_coherence(IsingAmplitudes(1.0, 0.0), 0.25, t).rho
    np.testing.assert_allclose(np.abs(pure), 0.5)
    skew = ising_coherence(IsingAmplitudes(np.sqrt(0.3), np.sqrt(0.7)), 0.25, t).rho
    assert np.abs(skew.imag).max() > 0.1
    with pytest.raises(ValueError):
        IsingAmplitudes(1.0, 1.0)
