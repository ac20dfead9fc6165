import numpy as np
import pytest

from spinprobe.exact import (
    ExactSolverError,
    coherence_exact,
    correlation_exact,
    entanglement_entropy_dense,
    flip_parity,
    full_space_coherence,
    ground_state_exact,
    propagate_krylov,
    DenseState,
)
from spinprobe.model import ModelParams, build_xxz_terms, terms_to_dense
from spinprobe.traces import uniform_grid


def _dense_ground(p):
    H = terms_to_dense(build_xxz_terms(p), p.L)
    w, v = np.linalg.eigh(H)
    return w, v


@pytest.mark.parametrize("delta", [0.0, 0.5, 1.0, 2.5, -0.5, -0.95])
def test_ground_energy_matches_dense(delta):
    p = ModelParams(L=8, delta=delta)
    w, _ = _dense_ground(p)
    G, e0 = ground_state_exact(p)
    assert abs(e0 - w[0]) < 1e-10
    H = terms_to_dense(build_xxz_terms(p), 8)
    assert abs(np.vdot(G.psi, H @ G.psi).real - w[0]) < 1e-10
    assert abs(np.linalg.norm(G.psi) - 1) < 1e-12


def test_ferromagnet_states():
    p = ModelParams(L=4, delta=-10.0)
    G, e0 = ground_state_exact(p)
    assert e0 == pytest.approx(-7.5) and entanglement_entropy_dense(G.psi, 4) == 0.0
    cat, e1 = ground_state_exact(p, ferro_initial="cat")
    assert e1 == e0 and flip_parity(cat.psi) == pytest.approx(1.0)
    assert entanglement_entropy_dense(cat.psi, 4) == pytest.approx(np.log(2))


def test_size_gate():
    with pytest.raises(ExactSolverError):
        ground_state_exact(ModelParams(L=16, delta=0.0))


def test_two_site_closed_form():
    p = ModelParams(L=2, delta=0.0, g=0.25)
    t = uniform_grid(100, 0.05)
    om = np.sqrt(0.25 + p.g**2 / 16)
    ref = 0.5 * (1 - p.g**2 / (8 * om**2) * np.sin(om * t) ** 2)
    assert np.abs(coherence_exact(p, t).rho - ref).max() < 1e-10


@pytest.mark.parametrize("delta", [0.0, 1.0, -1.5])
def test_full_space_eigh_oracle(delta):
    p = ModelParams(L=6, delta=delta)
    t = uniform_grid(10, 0.1)
    a = full_space_coherence(p, t, method="eigh").rho
    b = coherence_exact(p, t).rho
    assert np.abs(a - b).max() < 1e-10


@pytest.mark.parametrize("delta", [0.0, 0.5, 2.5, -0.5, -1.5])
def test_coherence_real_and_bounded(delta):
    t = uniform_grid(20, 0.05)
    rho = coherence_exact(ModelParams(L=10, delta=delta), t).rho
    assert abs(rho[0] - 0.5) < 1e-14
    assert np.abs(rho.imag).max() < 1e-10
    assert np.abs(rho).max() <= 0.5 + 1e-12


def test_field_phase():
    t = uniform_grid(5, 0.1)
    p = ModelParams(L=6, delta=0.3)
    a = coherence_exact(p, t).rho
    b = coherence_exact(p.with_(h_z=0.7), t).rho
    np.testing.assert_allclose(b, a * np.exp(-0.7j * t), atol=1e-13)


def test_correlation_against_spectral_sum():
    p = ModelParams(L=8, delta=0.7)
    t = uniform_grid(6, 0.1)
    C = correlation_exact(p, t).C
    assert abs(C[0] - 0.25) < 1e-12
    H = terms_to_dense(build_xxz_terms(p), 8)
    w, v = np.linalg.eigh(H)
    G, _ = ground_state_exact(p)
    sz = 0.5 - ((np.arange(256) >> (8 - p.M)) & 1)
    amp = v.conj().T @ (sz * G.psi)
    e0 = np.vdot(G.psi, H @ G.psi).real
    ref = (np.abs(amp) ** 2 * np.exp(-1j * np.outer(t, w - e0))).sum(axis=1)
    assert np.abs(C - ref).max() < 1e-10


def test_zero_hamiltonian_propagation():
    psi = np.random.default_rng(0).standard_normal(16) + 0j
    psi /= np.linalg.norm(psi)
    traj = propagate_krylov(np.zeros((16, 16)), DenseState(4, psi), 0.1, 5)
    assert len(traj) == 6 and all(np.array_equal(s.psi, psi) for s in traj)


def test_entropy_singlet():
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    assert entanglement_entropy_dense(psi, 2) == pytest.approx(np.log(2))
