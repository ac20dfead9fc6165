import numpy as np
import pytest
from scipy.special import comb

from spinprobe import _kernels_py, kernels
from spinprobe.exact import sector_basis, xxz_matrix
from spinprobe.model import ModelParams, build_branch_terms, build_xxz_terms, terms_to_sparse

compiled = pytest.importorskip("spinprobe._kernels")


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("L", [2, 4, 6, 10])
def test_sector_states_match(L):
    for n in range(L + 1):
        a, b = compiled.sector_states(L, n), _kernels_py.sector_states(L, n)
        assert np.array_equal(a, b) and a.size == comb(L, n, exact=True)


def _sorted(coo):
    r, c, v = coo
    k = np.lexsort((c, r))
    return r[k], c[k], v[k]


@pytest.mark.parametrize("L,delta,site,field", [(4, 0.0, 0, 0.0), (8, 1.3, 4, 0.125), (10, -0.7, 1, -0.3)])
def test_coo_match_sector_and_full(L, delta, site, field):
    for states in (compiled.sector_states(L, L // 2), np.arange(2**L, dtype=np.int64)):
        a = _sorted(compiled.xxz_coo(states, L, 1.0, delta, site, field))
        b = _sorted(_kernels_py.xxz_coo(states, L, 1.0, delta, site, field))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)


@pytest.mark.parametrize("delta", [0.0, 0.5, -1.5])
def test_assembly_matches_kronecker(delta):
    L = 8
    p = ModelParams(L=L, delta=delta)
    ref = terms_to_sparse(build_xxz_terms(p), L).toarray()
    assert np.abs(xxz_matrix(p).toarray() - ref).max() == 0.0
    basis = sector_basis(L, 1.0)
    np.testing.assert_array_equal(xxz_matrix(p, basis).toarray(), ref[np.ix_(basis.states, basis.states)])


def test_branch_field_in_assembly():
    from spinprobe.exact import branch_matrix

    p = ModelParams(L=6, delta=0.4, g=0.3, M=2)
    for s in (1, -1):
        ref = terms_to_sparse(build_branch_terms(p, s), 6).toarray()
        assert np.abs(branch_matrix(p, s).toarray() - ref).max() == 0.0
