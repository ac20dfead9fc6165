"""Exact (brute-force) backend for small chains.

All states live in the full ``2^L`` space, but every propagation is done block by
block in fixed-magnetization sectors, which the branch Hamiltonians conserve.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from . import kernels
from .krylov import expm_krylov
from .model import ModelParams, terms_to_sparse
from .traces import CoherenceTrace, CorrelationTrace, grid_step

log = logging.getLogger(__name__)

MAX_L = 14
DENSE_MAX_L = 10
DEGENERACY_TOL = 1e-10


class ExactSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SectorBasis:
    """Computational basis states with fixed total Sz, ascending."""

    L: int
    sz: float
    states: np.ndarray

    @property
    def dim(self) -> int:
        return self.states.size


def sector_basis(L: int, sz: float) -> SectorBasis:
    n_down = int(round(L / 2 - sz))
    if not 0 <= n_down <= L:
        raise ValueError(f"no sector Sz={sz} for L={L}")
    states = kernels.sector_states(L, n_down)
    assert states.size == comb(L, n_down)
    return SectorBasis(L, L / 2 - n_down, states)


def _n_down(L: int) -> np.ndarray:
    x = np.arange(2**L, dtype=np.int64)
    return sum((x >> b) & 1 for b in range(L))


@dataclass
class DenseState:
    """Chain state as a full ``2^L`` amplitude vector."""

    L: int
    psi: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.psi))

    def sectors(self):
        """Yield ``(SectorBasis, amplitudes)`` for every sector with weight."""
        nd = _n_down(self.L)
        for n in range(self.L + 1):
            mask = nd == n
            block = self.psi[mask]
            if np.linalg.norm(block) > 1e-14:
                basis = SectorBasis(self.L, self.L / 2 - n, np.flatnonzero(mask).astype(np.int64))
                yield basis, block


def xxz_matrix(params: ModelParams, basis: SectorBasis | None = None, field: float = 0.0) -> sp.csr_matrix:
    """XXZ chain plus ``field * Sz_M`` restricted to ``basis`` (full space if None)."""
    L = params.L
    states = np.arange(2**L, dtype=np.int64) if basis is None else basis.states
    rows, cols, vals = kernels.xxz_coo(states, L, params.J, params.delta, params.M, field)
    n = states.size
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def branch_matrix(params: ModelParams, branch: int, basis: SectorBasis | None = None) -> sp.csr_matrix:
    """``H_S + branch * (g/2) Sz_M``; ``branch = 0`` gives the bare chain."""
    return xxz_matrix(params, basis, field=0.5 * branch * params.g)


def _check_size(params: ModelParams, max_L: int):
    if params.L > max_L:
        raise ExactSolverError(f"exact backend limited to L <= {max_L}, got L={params.L}")


def _lowest(H: sp.csr_matrix, k: int, dense: bool, seed: int):
    n = H.shape[0]
    k = min(k, n)
    if dense or n <= max(k + 2, 64):
        w, v = np.linalg.eigh(H.toarray())
        return w[:k], v[:, :k]
    rng = np.random.default_rng(seed)
    try:
        w, v = eigsh(H, k=k, which="SA", tol=1e-13, v0=rng.standard_normal(n), maxiter=20 * n)
    except ArpackNoConvergence as exc:
        res = np.inf
        if len(exc.eigenvalues):
            res = float(np.linalg.norm(H @ exc.eigenvectors[:, 0] - exc.eigenvalues[0] * exc.eigenvectors[:, 0]))
        raise ExactSolverError(f"eigensolver did not converge; residual {res:.2e}") from exc
    order = np.argsort(w)
    return w[order], v[:, order]


def _embed(L: int, basis: SectorBasis, vec: np.ndarray) -> np.ndarray:
    psi = np.zeros(2**L, dtype=complex)
    psi[basis.states] = vec
    return psi


def polarized_state(L: int, up: bool = True) -> np.ndarray:
    psi = np.zeros(2**L, dtype=complex)
    psi[0 if up else 2**L - 1] = 1.0
    return psi


def flip_parity(psi: np.ndarray) -> float:
    """``<psi| F |psi>`` for the global spin flip ``F``."""
    return float(np.vdot(psi, psi[::-1]).real)


def ground_state_exact(
    params: ModelParams,
    sector: float | None = None,
    *,
    ferro_initial: str = "up",
    max_L: int = MAX_L,
    seed: int = 0,
) -> tuple[DenseState, float]:
    """Chain ground state and energy.

    With ``sector=None`` every non-negative Sz sector is scanned. Ties between
    ``+Sz`` and ``-Sz`` resolve to the flip-symmetric combination. Within a
    sector, a degeneracy below 1e-10 also resolves to the flip-even state.

    For ``delta <= -1`` the degenerate polarized pair is represented by the
    all-up product state (``ferro_initial="up"``, the default) or by the
    symmetric cat state (``ferro_initial="cat"``, used as the dynamics
    initial state).
    """
    _check_size(params, max_L)
    L = params.L
    dense = L <= DENSE_MAX_L
    if sector is None and params.delta <= -1.0:
        e0 = params.J * params.delta * (L - 1) / 4
        if ferro_initial == "up":
            return DenseState(L, polarized_state(L, True)), e0
        if ferro_initial != "cat":
            raise ValueError(f"ferro_initial must be 'cat' or 'up', got {ferro_initial!r}")
        psi = (polarized_state(L, True) + polarized_state(L, False)) / np.sqrt(2)
        return DenseState(L, psi), e0

    candidates = [sector] if sector is not None else [L / 2 - n for n in range(L // 2, -1, -1)]
    best = None
    for sz in candidates:
        basis = sector_basis(L, sz)
        H = xxz_matrix(params, basis)
        w, v = _lowest(H, 2, dense, seed)
        if best is None or w[0] < best[0] - DEGENERACY_TOL:
            best = (w[0], w, v, basis)
    e0, w, v, basis = best
    if basis.sz == 0 and len(w) > 1 and w[1] - w[0] < DEGENERACY_TOL:
        vecs = [_embed(L, basis, v[:, i]) for i in range(2)]
        F = np.array([[np.vdot(a, b[::-1]) for b in vecs] for a in vecs])
        fw, fv = np.linalg.eigh(F)
        psi = fv[0, -1] * vecs[0] + fv[1, -1] * vecs[1]
    else:
        psi = _embed(L, basis, v[:, 0])
        if sector is None and basis.sz != 0:
            flipped = psi[::-1]
            psi = (psi + flipped) / np.sqrt(2)
    psi /= np.linalg.norm(psi)
    # fix the global phase so the largest amplitude is real positive
    k = np.argmax(np.abs(psi))
    psi *= np.conj(psi[k]) / abs(psi[k])
    return DenseState(L, psi), float(e0)


def _evolve(H, vec, dt, steps):
    """Yield ``vec`` at steps ``0..steps`` under ``exp(-i H dt)``."""
    matvec = H.__matmul__
    cur = vec.astype(complex)
    yield cur
    for _ in range(steps):
        cur = expm_krylov(matvec, cur, dt)
        yield cur


def propagate_krylov(H, state: DenseState, dt: float, steps: int) -> list[DenseState]:
    """Trajectory ``[psi(0), psi(dt), ..., psi(steps*dt)]``.

    ``H`` is a term list or a ``2^L`` square matrix.
    """
    if not isinstance(H, (np.ndarray, sp.spmatrix, sp.sparray)):
        H = terms_to_sparse(H, state.L)
    H = sp.csr_matrix(H)
    if H.nnz == 0:
        return [DenseState(state.L, state.psi.astype(complex).copy()) for _ in range(steps + 1)]
    traj = []
    for psi in _evolve(H, state.psi, dt, steps):
        drift = abs(np.linalg.norm(psi) - state.norm)
        if drift > 1e-10:
            log.warning("norm drift %.2e after %d steps", drift, len(traj))
        traj.append(DenseState(state.L, psi))
    return traj


def coherence_exact(
    params: ModelParams,
    t_grid,
    *,
    ferro_initial: str = "cat",
    rho0: complex = 0.5,
    ground: tuple[DenseState, float] | None = None,
    max_L: int = MAX_L,
) -> CoherenceTrace:
    """Qubit coherence from the overlap of the two conditionally evolved chain states."""
    _check_size(params, max_L)
    t = np.asarray(t_grid, dtype=float)
    dt = grid_step(t)
    steps = t.size - 1
    G, e0 = ground if ground is not None else ground_state_exact(params, ferro_initial=ferro_initial, max_L=max_L)
    overlap = np.zeros(t.size, dtype=complex)
    for basis, block in G.sectors():
        Hp = branch_matrix(params, +1, basis)
        Hm = branch_matrix(params, -1, basis)
        for k, (a, b) in enumerate(zip(_evolve(Hp, block, dt, steps), _evolve(Hm, block, dt, steps))):
            overlap[k] += np.vdot(b, a)
    rho = rho0 * np.exp(-1j * params.h_z * t) * overlap
    return CoherenceTrace(t, rho, backend="exact", meta={"E0": e0, "ferro_initial": ferro_initial})


def correlation_exact(params: ModelParams, t_grid, *, ferro_initial: str = "cat", max_L: int = MAX_L) -> CorrelationTrace:
    """``C(t) = e^{i E0 t} <G| Sz_M e^{-i H_S t} Sz_M |G>``."""
    _check_size(params, max_L)
    t = np.asarray(t_grid, dtype=float)
    dt = grid_step(t)
    G, e0 = ground_state_exact(params, ferro_initial=ferro_initial, max_L=max_L)
    L, M = params.L, params.M
    sz_M = 0.5 - ((np.arange(2**L) >> (L - M)) & 1)
    C = np.zeros(t.size, dtype=complex)
    for basis, block in G.sectors():
        phi = sz_M[basis.states] * block
        H = xxz_matrix(params, basis)
        for k, vec in enumerate(_evolve(H, phi, dt, t.size - 1)):
            C[k] += np.vdot(phi, vec)
    C *= np.exp(1j * e0 * t)
    return CorrelationTrace(t, C, backend="exact", meta={"E0": e0})


def full_space_coherence(params: ModelParams, t_grid, *, method: str = "krylov", ferro_initial: str = "cat") -> CoherenceTrace:
    """Coherence from explicit qubit (x) chain evolution in ``2^(L+1)`` dimensions.

    Test oracle for the two-branch method. The qubit is the leading tensor factor
    with ``|0>`` the ``sigma^z = +1`` state.
    """
    if params.L > 12:
        raise ExactSolverError("full-space oracle limited to L <= 12")
    t = np.asarray(t_grid, dtype=float)
    G, _ = ground_state_exact(params, ferro_initial=ferro_initial)
    dim = 2**params.L
    HS = xxz_matrix(params)
    szM = sp.diags(0.5 - ((np.arange(dim) >> (params.L - params.M)) & 1))
    sigz = sp.diags([1.0, -1.0])
    H = (
        0.5 * params.h_z * sp.kron(sigz, sp.identity(dim))
        + sp.kron(sp.identity(2), HS)
        + 0.5 * params.g * sp.kron(sigz, szM)
    ).tocsr()
    psi0 = np.kron(np.array([1.0, 1.0]) / np.sqrt(2), G.psi)
    if method == "eigh":
        w, U = np.linalg.eigh(H.toarray())
        c = U.conj().T @ psi0
        traj = (U @ (np.exp(-1j * np.outer(w, t)) * c[:, None])).T
    elif method == "krylov":
        traj = list(_evolve(H, psi0, grid_step(t), t.size - 1))
    else:
        raise ValueError(method)
    rho = np.array([np.vdot(psi[dim:], psi[:dim]) for psi in traj])
    return CoherenceTrace(t, rho, backend="exact-full", meta={"method": method})


def entanglement_entropy_dense(psi: np.ndarray, L: int, cut: int | None = None) -> float:
    """Von Neumann entropy (natural log) of sites ``1..cut`` via the reduced density matrix."""
    cut = L // 2 if cut is None else cut
    m = psi.reshape(2**cut, 2 ** (L - cut))
    rho_a = m @ m.conj().T
    p = np.linalg.eigvalsh(rho_a)
    p = p[p > 1e-16]
    return float(-(p * np.log(p)).sum()) + 0.0
