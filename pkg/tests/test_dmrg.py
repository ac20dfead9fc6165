import numpy as np
import pytest

from spinprobe.analytic import ground_energy_obc
from spinprobe.exact import entanglement_entropy_dense, ground_state_exact
from spinprobe.model import ModelParams
from spinprobe.tensornet import DmrgConfig, dmrg_ground_state, entanglement_entropy, flip_parity


def test_heisenberg_energy_and_entropy_vs_ed():
    p = ModelParams(L=12, delta=1.0)
    psi, e = dmrg_ground_state(p, DmrgConfig(chi_max=64))
    G, e_ed = ground_state_exact(p)
    assert abs(e - e_ed) <= 1e-8 * abs(e_ed)
    assert entanglement_entropy(psi) == pytest.approx(entanglement_entropy_dense(G.psi, 12), abs=1e-8)
    assert abs(abs(flip_parity(psi)) - 1) < 1e-8


@pytest.mark.parametrize("delta", [0.5, -0.5, 2.5])
def test_other_anisotropies_vs_ed(delta):
    p = ModelParams(L=10, delta=delta)
    _, e = dmrg_ground_state(p, DmrgConfig(chi_max=32))
    assert e == pytest.approx(ground_state_exact(p)[1], rel=1e-8)


def test_ferromagnet_is_product():
    p = ModelParams(L=20, delta=-2.0)
    psi, e = dmrg_ground_state(p)
    assert e == pytest.approx(-2.0 * 19 / 4)
    assert all(d == 1 for d in psi.bond_dims)
    assert entanglement_entropy(psi) == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        DmrgConfig(cutoff=0.0)
    with pytest.raises(ValueError):
        DmrgConfig(chi_max=0)


@pytest.mark.slow
def test_xx_chain_energy_at_L100():
    _, e = dmrg_ground_state(ModelParams(L=100, delta=0.0), DmrgConfig(chi_max=64))
    assert e == pytest.approx(ground_energy_obc(100), rel=1e-6)
