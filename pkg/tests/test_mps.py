import numpy as np
import pytest

from spinprobe.model import ModelParams, build_branch_terms, build_xxz_terms, terms_to_dense
from spinprobe.tensornet.mps import (
    MPSState,
    apply_heff1,
    apply_heff2,
    compress,
    entanglement_entropy,
    expectation_mpo,
    flip,
    heff1_operator,
    heff2_operator,
    mpo_from_terms,
    mps_sum,
    neel_state,
    overlap,
    polarized_mps,
    product_state,
    truncate_svd,
    xxz_mpo,
)


def random_mps(L, chi, seed=0):
    rng = np.random.default_rng(seed)
    dims = [1] + [min(chi, 2 ** min(i, L - i)) for i in range(1, L)] + [1]
    T = [rng.standard_normal((dims[i], 2, dims[i + 1])) + 1j * rng.standard_normal((dims[i], 2, dims[i + 1])) for i in range(L)]
    st = MPSState(T, center=None)
    st.move_center(0)
    return st.normalize()


@pytest.mark.parametrize("delta,branch", [(0.0, 0), (1.0, 1), (-2.5, -1)])
def test_mpo_matches_dense(delta, branch):
    p = ModelParams(L=6, delta=delta, g=0.3)
    terms = build_xxz_terms(p) if branch == 0 else build_branch_terms(p, branch)
    assert np.abs(xxz_mpo(p, branch).to_dense() - terms_to_dense(terms, 6)).max() <= 1e-12


def test_mpo_expectation_matches_dense():
    p = ModelParams(L=8, delta=0.7)
    st = random_mps(8, 6)
    psi = st.to_dense()
    ref = np.vdot(psi, terms_to_dense(build_xxz_terms(p), 8) @ psi)
    assert abs(expectation_mpo(st, xxz_mpo(p)) - ref) < 1e-12


def test_mpo_rejects_long_range():
    from spinprobe.model import Term

    with pytest.raises(ValueError):
        mpo_from_terms([Term(1.0, ((1, "Sz"), (3, "Sz")))], 4)


def test_canonical_forms_orthonormal():
    st = random_mps(10, 8, seed=3)
    for c in (0, 4, 9, 2):
        st.move_center(c)
        assert st.orthonormality_error() < 1e-10
        assert abs(st.norm() - 1) < 1e-10


def test_overlap_and_dense_agree():
    a, b = random_mps(8, 4, 1), random_mps(8, 5, 2)
    assert abs(overlap(a, b) - np.vdot(a.to_dense(), b.to_dense())) < 1e-12


def test_flip_and_sum():
    up = polarized_mps(6)
    cat = mps_sum(up, flip(up))
    dense = cat.to_dense()
    assert dense[0] == 1 and dense[-1] == 1 and np.count_nonzero(dense) == 2
    assert np.allclose(flip(neel_state(4)).to_dense(), product_state([1, 0, 1, 0]).to_dense())


def test_entropy_examples():
    assert entanglement_entropy(neel_state(8)) == 0.0
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    U, S, Vh, _ = truncate_svd(singlet.reshape(2, 2), 4, 1e-14)
    st = MPSState([U.reshape(1, 2, -1), (S[:, None] * Vh).reshape(-1, 2, 1)], center=1)
    assert entanglement_entropy(st, 1) == pytest.approx(np.log(2))


def test_compress_keeps_state():
    st = random_mps(8, 16, 4)
    c = compress(st, chi_max=64)
    assert abs(abs(overlap(st, c)) - 1) < 1e-10
    small = compress(st, chi_max=2)
    assert max(small.bond_dims) <= 2 and abs(small.norm() - 1) < 1e-12


def test_truncate_svd_weights():
    theta = np.diag([0.8, 0.5, 0.3, 1e-4])
    U, S, Vh, disc = truncate_svd(theta, 2, 1e-12)
    w = np.array([0.8, 0.5, 0.3, 1e-4]) ** 2
    assert len(S) == 2 and disc == pytest.approx(w[2:].sum() / w.sum())
    assert abs(np.linalg.norm(S) - 1) < 1e-14


def test_heff_operators_match_reference():
    rng = np.random.default_rng(5)
    c = lambda *s: rng.standard_normal(s) + 1j * rng.standard_normal(s)
    Le, Re = c(3, 4, 3), c(5, 4, 5)
    W1, W2 = c(4, 6, 2, 2), c(6, 4, 2, 2)
    v2 = c(3, 2, 2, 5)
    np.testing.assert_allclose(heff2_operator(Le, W1, W2, Re)(v2), apply_heff2(Le, W1, W2, Re, v2), atol=1e-12)
    Re1 = c(5, 6, 5)
    v1 = c(3, 2, 5)
    np.testing.assert_allclose(heff1_operator(Le, W1, Re1)(v1), apply_heff1(Le, W1, Re1, v1), atol=1e-12)
