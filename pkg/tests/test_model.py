import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinprobe.model import (
    MINUS,
    PLUS,
    BranchSign,
    ModelParams,
    Term,
    build_branch_terms,
    build_xxz_terms,
    canonical_terms,
    hermitian_conjugate,
    spin_flip,
    terms_to_dense,
    total_sz,
)

deltas = st.floats(-3, 3, allow_nan=False)
small_L = st.sampled_from([2, 4, 6, 8])


def test_params_defaults_and_validation():
    p = ModelParams(L=10, delta=0.5)
    assert (p.J, p.g, p.h_z, p.M) == (1.0, 0.25, 0.0, 5)
    for bad in (dict(L=3, delta=0), dict(L=0, delta=0), dict(L=4, delta=0, J=-1), dict(L=4, delta=0, M=5)):
        with pytest.raises(ValueError):
            ModelParams(**bad)
    assert p.with_(L=20).M == 10


def test_branch_sign_two_values():
    assert int(PLUS) == 1 and int(MINUS) == -1
    with pytest.raises(ValueError):
        BranchSign(0)


def test_term_counts():
    t = build_xxz_terms(ModelParams(L=2, delta=0.0))
    assert len(t) == 2 and {o for term in t for o in term.ops} == {(1, "S+"), (2, "S-"), (1, "S-"), (2, "S+")}
    assert all(term.coeff == 0.5 for term in t)
    assert len(build_xxz_terms(ModelParams(L=4, delta=1.0))) == 9
    assert len(build_xxz_terms(ModelParams(L=100, delta=2.5))) == 297


def test_three_site_term_count():
    # L must be even for the model, so count per bond on a 4-site chain minus the last bond
    terms = [t for t in build_xxz_terms(ModelParams(L=4, delta=1.0)) if max(s for s, _ in t.ops) <= 3]
    assert len(terms) == 6


def test_branch_terms():
    p = ModelParams(L=4, delta=0.3, g=0.25, M=1)
    extra = build_branch_terms(p, +1)[-1]
    assert extra == Term(0.125, ((1, "Sz"),))
    p0 = ModelParams(L=4, delta=0.3, g=0.0)
    assert build_branch_terms(p0, -1) == build_xxz_terms(p0)


def test_two_site_branch_sector_matrix():
    g = 0.25
    p = ModelParams(L=2, delta=0.0, g=g)
    for s in (+1, -1):
        H = terms_to_dense(build_branch_terms(p, s), 2)
        # Sz = 0 sector spanned by |up,down> (index 1) and |down,up> (index 2); M = 1
        blk = H[np.ix_([1, 2], [1, 2])]
        np.testing.assert_allclose(blk, [[s * g / 4, 0.5], [0.5, -s * g / 4]], atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(L=small_L, delta=deltas, g=st.floats(-1, 1), branch=st.sampled_from([1, -1]))
def test_hermiticity(L, delta, g, branch):
    terms = build_branch_terms(ModelParams(L=L, delta=delta, g=g), branch)
    H = terms_to_dense(terms, L)
    assert np.array_equal(H, H.conj().T)
    assert canonical_terms(hermitian_conjugate(terms)) == canonical_terms(terms)


@settings(max_examples=20, deadline=None)
@given(L=small_L, delta=deltas)
def test_magnetization_conserved(L, delta):
    H = terms_to_dense(build_xxz_terms(ModelParams(L=L, delta=delta)), L)
    Sz = total_sz(L).toarray()
    assert np.abs(H @ Sz - Sz @ H).max() <= 1e-12


@settings(max_examples=20, deadline=None)
@given(L=small_L, delta=deltas, g=st.floats(-1, 1))
def test_flip_maps_plus_to_minus(L, delta, g):
    p = ModelParams(L=L, delta=delta, g=g)
    F = spin_flip(L).toarray()
    Hp = terms_to_dense(build_branch_terms(p, +1), L)
    Hm = terms_to_dense(build_branch_terms(p, -1), L)
    assert np.array_equal(F @ Hp @ F, Hm)
