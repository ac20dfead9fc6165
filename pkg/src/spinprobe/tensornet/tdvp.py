"""Real-time TDVP: two-site while bonds can still grow, one-site afterwards."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..krylov import KrylovError, expm_krylov
from .mps import (
    MPO,
    Environments,
    MPSState,
    heff0_operator,
    heff1_operator,
    heff2_operator,
    compress,
    truncate_svd,
    update_left_env,
    update_right_env,
)

log = logging.getLogger(__name__)


class TdvpError(RuntimeError):
    pass


@dataclass(frozen=True)
class TdvpConfig:
    dt: float = 0.05
    chi_max: int = 128
    cutoff: float = 1e-10
    mode: str = "auto"  # "auto" (two-site -> one-site), "two", "one"
    krylov_tol: float = 1e-12
    krylov_dim: int = 30

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0.0 < self.cutoff < 1.0:
            raise ValueError("cutoff must lie in (0, 1)")
        if self.mode not in ("auto", "two", "one"):
            raise ValueError(f"unknown TDVP mode {self.mode!r}")


def bond_caps(L: int, chi_max: int) -> list[int]:
    return [min(chi_max, 2 ** min(b, L - b)) for b in range(1, L)]


def pad_bonds(state: MPSState, targets: list[int], rng=None) -> MPSState:
    """Enlarge bonds to ``targets`` with zero-weight orthonormal directions.

    The state is unchanged; the enlarged manifold lets one-site TDVP grow
    entanglement. Works on a copy left-canonicalised up to the last site.
    """
    rng = rng or np.random.default_rng(0)
    st = state.copy()
    st.move_center(0)
    st.move_center(st.L - 1)
    for i in range(st.L - 1):
        A = st.tensors[i]
        dl, d, dr = A.shape
        want = min(targets[i], dl * d)
        if want <= dr:
            continue
        m = A.reshape(dl * d, dr)
        extra = rng.standard_normal((dl * d, want - dr)) + 0j
        extra -= m @ (m.conj().T @ extra)
        extra, _ = np.linalg.qr(extra)
        extra -= m @ (m.conj().T @ extra)
        extra, _ = np.linalg.qr(extra)
        st.tensors[i] = np.concatenate([m, extra], axis=1).reshape(dl, d, want)
        B = st.tensors[i + 1]
        pad = np.zeros((want - dr, B.shape[1], B.shape[2]), dtype=B.dtype)
        st.tensors[i + 1] = np.concatenate([B, pad], axis=0)
    return st


class TdvpEvolver:
    """Stateful TDVP integrator for ``exp(-i H t)|psi>``.

    Each :meth:`step` advances by ``cfg.dt`` with a symmetric (second-order)
    left-right sweep. In ``auto`` mode the two-site scheme runs until some bond
    reaches ``chi_max`` or every bond reaches its maximal size; then bonds are
    padded and the one-site scheme takes over.
    """

    def __init__(self, state: MPSState, mpo: MPO, cfg: TdvpConfig):
        self.cfg = cfg
        self.mpo = mpo
        if max(state.bond_dims) > cfg.chi_max:
            state = compress(state, cfg.chi_max, cfg.cutoff)
        self.state = state.astype(np.complex128)
        self.state.move_center(0)
        self.norm0 = self.state.norm()
        self.two_site = cfg.mode in ("auto", "two")
        self.discarded = 0.0
        self.steps = 0
        self.switched_at = None
        self._caps = bond_caps(state.L, cfg.chi_max)
        self._maybe_switch()
        self._reset_env()

    def _reset_env(self):
        self.env = Environments(self.state, self.mpo)
        self.env.build_right(self.state, 1)

    def _maybe_switch(self):
        if self.cfg.mode != "auto" or not self.two_site:
            return
        dims = self.state.bond_dims
        if max(dims) >= self.cfg.chi_max or all(d >= c for d, c in zip(dims, self._caps)):
            self.state = pad_bonds(self.state, self._caps)
            self.state.move_center(0)
            self.two_site = False
            self.switched_at = self.steps
            log.debug("TDVP switched to one-site at step %d", self.steps)

    def _expm(self, matvec, v, dt):
        try:
            return expm_krylov(matvec, v, dt, tol=self.cfg.krylov_tol, kmax=self.cfg.krylov_dim)
        except KrylovError as exc:
            raise TdvpError(f"local Krylov failure at step {self.steps}: {exc}") from exc

    def step(self) -> MPSState:
        half = 0.5 * self.cfg.dt
        if self.two_site:
            self._sweep2(half)
        else:
            self._sweep1(half)
        self.steps += 1
        drift = abs(self.state.norm() - self.norm0)
        if drift > 1e-8:
            log.warning("TDVP norm drift %.2e at step %d", drift, self.steps)
        if self.two_site:
            before = self.two_site
            self._maybe_switch()
            if before and not self.two_site:
                self._reset_env()
        return self.state

    # one-site ----------------------------------------------------------

    def _sweep1(self, h):
        psi, env, W = self.state, self.env, self.mpo.W
        L = psi.L
        # left -> right, centre starts at 0
        for i in range(L):
            Le, Re = env.left[i], env.right[i + 1]
            psi.tensors[i] = self._expm(heff1_operator(Le, W[i], Re), psi.tensors[i], h)
            if i == L - 1:
                break
            A = psi.tensors[i]
            dl, d, dr = A.shape
            Q, C = np.linalg.qr(A.reshape(dl * d, dr))
            psi.tensors[i] = Q.reshape(dl, d, -1)
            env.left[i + 1] = update_left_env(Le, psi.tensors[i], W[i])
            Le2 = env.left[i + 1]
            C = self._expm(heff0_operator(Le2, Re), C, -h)
            psi.tensors[i + 1] = np.tensordot(C, psi.tensors[i + 1], axes=(1, 0))
        psi.center = L - 1
        # right -> left
        for i in range(L - 1, -1, -1):
            Le, Re = env.left[i], env.right[i + 1]
            psi.tensors[i] = self._expm(heff1_operator(Le, W[i], Re), psi.tensors[i], h)
            if i == 0:
                break
            A = psi.tensors[i]
            dl, d, dr = A.shape
            Q, R = np.linalg.qr(A.reshape(dl, d * dr).T)
            psi.tensors[i] = Q.T.reshape(-1, d, dr)
            C = R.T
            env.right[i] = update_right_env(Re, psi.tensors[i], W[i])
            Re2 = env.right[i]
            C = self._expm(heff0_operator(Le, Re2), C, -h)
            psi.tensors[i - 1] = np.tensordot(psi.tensors[i - 1], C, axes=(2, 0))
        psi.center = 0

    # two-site ----------------------------------------------------------

    def _split(self, theta, i, direction):
        dl, d1, d2, dr = theta.shape
        U, S, Vh, disc = truncate_svd(theta.reshape(dl * d1, d2 * dr), self.cfg.chi_max, self.cfg.cutoff)
        self.discarded += disc
        psi = self.state
        if direction > 0:
            psi.tensors[i] = U.reshape(dl, d1, -1)
            psi.tensors[i + 1] = (S[:, None] * Vh).reshape(-1, d2, dr)
        else:
            psi.tensors[i] = (U * S).reshape(dl, d1, -1)
            psi.tensors[i + 1] = Vh.reshape(-1, d2, dr)

    def _sweep2(self, h):
        psi, env, W = self.state, self.env, self.mpo.W
        L = psi.L
        for i in range(L - 1):
            Le, Re = env.left[i], env.right[i + 2]
            theta = np.tensordot(psi.tensors[i], psi.tensors[i + 1], axes=(2, 0))
            theta = self._expm(heff2_operator(Le, W[i], W[i + 1], Re), theta, h)
            self._split(theta, i, +1)
            env.left[i + 1] = update_left_env(Le, psi.tensors[i], W[i])
            if i < L - 2:
                Le2, Re1 = env.left[i + 1], env.right[i + 2]
                psi.tensors[i + 1] = self._expm(heff1_operator(Le2, W[i + 1], Re1), psi.tensors[i + 1], -h)
        for i in range(L - 2, -1, -1):
            Le, Re = env.left[i], env.right[i + 2]
            theta = np.tensordot(psi.tensors[i], psi.tensors[i + 1], axes=(2, 0))
            theta = self._expm(heff2_operator(Le, W[i], W[i + 1], Re), theta, h)
            self._split(theta, i, -1)
            env.right[i + 1] = update_right_env(Re, psi.tensors[i + 1], W[i + 1])
            if i > 0:
                Le1, Re2 = env.left[i], env.right[i + 1]
                psi.tensors[i] = self._expm(heff1_operator(Le1, W[i], Re2), psi.tensors[i], -h)
        psi.center = 0


def tdvp_evolve(state: MPSState, mpo: MPO, cfg: TdvpConfig, steps: int, copy: bool = True):
    """Yield the state after each of ``steps`` TDVP steps (copies unless ``copy=False``)."""
    ev = TdvpEvolver(state, mpo, cfg)
    for _ in range(steps):
        s = ev.step()
        yield s.copy() if copy else s
