"""Two-site DMRG ground-state search."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..krylov import lanczos_ground
from ..model import ModelParams
from .mps import (
    MPO,
    Environments,
    MPSState,
    heff2_operator,
    compress,
    expectation_mpo,
    flip,
    mps_sum,
    overlap,
    polarized_mps,
    product_state,
    truncate_svd,
    update_left_env,
    update_right_env,
    xxz_mpo,
)

log = logging.getLogger(__name__)


class DmrgNotConverged(RuntimeError):
    def __init__(self, msg, energies):
        super().__init__(msg)
        self.energies = energies


@dataclass(frozen=True)
class DmrgConfig:
    chi_max: int = 128
    cutoff: float = 1e-12
    max_sweeps: int = 40
    min_sweeps: int = 4
    energy_tol: float = 1e-10
    lanczos_krylov: int = 20
    lanczos_restarts: int = 4

    def __post_init__(self):
        if not 0.0 < self.cutoff < 1.0:
            raise ValueError("cutoff must lie in (0, 1)")
        if self.chi_max < 1:
            raise ValueError("chi_max must be positive")


@dataclass
class DmrgResult:
    state: MPSState
    energy: float
    energies: list
    max_discarded: float


def sector_product_state(L: int, sz: float) -> MPSState:
    """Product state with total ``Sz = sz``: alternating spins, surplus ups at the left."""
    n_up = int(round(L / 2 + sz))
    if not 0 <= n_up <= L:
        raise ValueError(f"no sector Sz={sz} for L={L}")
    n_down = L - n_up
    spins, u, d = [], n_up, n_down
    for i in range(L):
        if (i % 2 == 0 and u > 0) or d == 0:
            spins.append(0)
            u -= 1
        else:
            spins.append(1)
            d -= 1
    return product_state(spins)


def run_dmrg(mpo: MPO, init: MPSState, cfg: DmrgConfig) -> DmrgResult:
    """Two-site DMRG from ``init``; the magnetisation of ``init`` is conserved."""
    psi = init.copy()
    L = psi.L
    psi.move_center(0)
    psi.normalize()
    env = Environments(psi, mpo)
    env.build_right(psi, 1)
    energies = []
    max_disc = 0.0
    e = np.nan

    def local_update(i, direction):
        nonlocal e, max_disc
        A, B = psi.tensors[i], psi.tensors[i + 1]
        theta = np.tensordot(A, B, axes=(2, 0))
        Lenv, Renv = env.left[i], env.right[i + 2]
        W1, W2 = mpo.W[i], mpo.W[i + 1]
        e, theta, _ = lanczos_ground(
            heff2_operator(Lenv, W1, W2, Renv),
            theta,
            tol=1e-10,
            kmax=cfg.lanczos_krylov,
            max_restarts=cfg.lanczos_restarts,
            strict=False,
        )
        dl, d1, d2, dr = theta.shape
        U, S, Vh, disc = truncate_svd(theta.reshape(dl * d1, d2 * dr), cfg.chi_max, cfg.cutoff)
        max_disc = max(max_disc, disc)
        if direction > 0:
            psi.tensors[i] = U.reshape(dl, d1, -1)
            psi.tensors[i + 1] = (S[:, None] * Vh).reshape(-1, d2, dr)
            env.left[i + 1] = update_left_env(env.left[i], psi.tensors[i], W1)
            psi.center = i + 1
        else:
            psi.tensors[i] = (U * S).reshape(dl, d1, -1)
            psi.tensors[i + 1] = Vh.reshape(-1, d2, dr)
            env.right[i + 1] = update_right_env(env.right[i + 2], psi.tensors[i + 1], W2)
            psi.center = i

    for sweep in range(cfg.max_sweeps):
        max_disc = 0.0
        for i in range(L - 1):
            local_update(i, +1)
        for i in range(L - 2, -1, -1):
            local_update(i, -1)
        energies.append(float(e))
        log.debug("sweep %d: E=%.14f chi=%d disc=%.1e", sweep, e, max(psi.bond_dims), max_disc)
        if sweep + 1 >= cfg.min_sweeps and len(energies) > 1:
            if abs(energies[-1] - energies[-2]) < cfg.energy_tol * max(1.0, abs(e)):
                psi.discarded.append(max_disc)
                return DmrgResult(psi, float(e), energies, max_disc)
    raise DmrgNotConverged(
        f"DMRG not converged after {cfg.max_sweeps} sweeps (last change "
        f"{abs(energies[-1] - energies[-2]):.2e})",
        energies,
    )


def flip_parity(state: MPSState) -> float:
    return float(overlap(state, flip(state)).real)


def symmetrize(state: MPSState, mpo: MPO, cfg: DmrgConfig, tol: float = 1e-8) -> MPSState:
    """Project a quasi-degenerate ground state onto a definite spin-flip parity.

    The lower-energy projection wins; near ties (within ``1e-10`` relative)
    resolve to the flip-even one.
    """
    p = flip_parity(state)
    if abs(abs(p) - 1.0) < tol:
        return state
    best = None
    for sign in (+1, -1):
        proj = mps_sum(state, flip(state), 1.0, sign)
        if np.sqrt(max(abs(overlap(proj, proj)), 0.0)) < 1e-6:
            continue
        proj = compress(proj, cfg.chi_max, 1e-14)
        e = expectation_mpo(proj, mpo).real
        if best is None or e < best[0] - 1e-10 * max(1.0, abs(e)):
            best = (e, proj)
    return best[1]


def dmrg_ground_state(
    params: ModelParams,
    cfg: DmrgConfig | None = None,
    sector: float | None = None,
) -> tuple[MPSState, float]:
    """Variational ground state of the XXZ chain.

    ``sector=None`` picks ``Sz = 0`` for ``delta > -1`` (symmetrised over the
    spin flip) and the fully polarised up state for ``delta <= -1``.
    """
    cfg = cfg or DmrgConfig()
    mpo = xxz_mpo(params)
    if sector is None:
        sector = params.L / 2 if params.delta <= -1.0 else 0.0
    if abs(sector) == params.L / 2:
        psi = polarized_mps(params.L, up=sector > 0)
        return psi, float(expectation_mpo(psi, mpo).real)
    res = run_dmrg(mpo, sector_product_state(params.L, sector), cfg)
    psi, e = res.state, res.energy
    if sector == 0:
        psi = symmetrize(psi, mpo, cfg)
        if psi is not res.state:
            e = float(expectation_mpo(psi, mpo).real)
    psi.move_center(0)
    return psi, e
