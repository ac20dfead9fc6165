import numpy as np
import pytest
from scipy.linalg import expm

from spinprobe.krylov import KrylovError, expm_krylov, lanczos_ground


def _herm(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (A + A.conj().T) / 2


@pytest.mark.parametrize("dt", [0.01, 0.3, 2.0])
def test_expm_matches_dense(dt):
    H = _herm(60, 1)
    v = np.random.default_rng(2).standard_normal(60) + 0j
    ref = expm(-1j * dt * H) @ v
    np.testing.assert_allclose(expm_krylov(H.__matmul__, v, dt, tol=1e-13), ref, atol=1e-10)


def test_expm_small_space_and_zero():
    H = np.diag([1.0, -1.0])
    v = np.array([1.0, 1.0]) / np.sqrt(2)
    np.testing.assert_allclose(expm_krylov(H.__matmul__, v, 0.7), np.exp(-0.7j * np.diag(H)) * v, atol=1e-14)
    np.testing.assert_array_equal(expm_krylov(H.__matmul__, np.zeros(2), 1.0), np.zeros(2))


def test_expm_splits_large_steps():
    H = _herm(200, 3)
    v = np.ones(200, dtype=complex)
    out = expm_krylov(H.__matmul__, v, 1.0, tol=1e-10, kmax=12)
    np.testing.assert_allclose(out, expm(-1j * H) @ v, atol=1e-8)


def test_lanczos_ground():
    H = _herm(80, 4)
    e, v, res = lanczos_ground(H.__matmul__, np.ones(80, dtype=complex), tol=1e-10, kmax=30, max_restarts=50)
    w = np.linalg.eigvalsh(H)
    assert abs(e - w[0]) < 1e-9 and res < 1e-10
    assert np.linalg.norm(H @ v - e * v) < 1e-8


def test_lanczos_nonconvergence_raises():
    H = _herm(300, 5)
    with pytest.raises(KrylovError):
        lanczos_ground(H.__matmul__, np.ones(300), tol=1e-14, kmax=3, max_restarts=2)
