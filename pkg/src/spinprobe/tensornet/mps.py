"""Open-boundary MPS and MPO containers plus the contractions everything else uses.

Tensor layouts:

* MPS site tensor ``A[i]``: ``(left bond, physical, right bond)``.
* MPO site tensor ``W[i]``: ``(left bond, right bond, out, in)``.
* Left environment ``Lenv[x, w, y]`` and right environment ``Renv[x, w, y]``:
  ``x`` is the ket bond, ``w`` the MPO bond, ``y`` the (conjugated) bra bond.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model import LOCAL_OPS, ModelParams, Term, build_branch_terms, build_xxz_terms, validate_terms

D = 2  # local dimension


# --------------------------------------------------------------------- MPO


@dataclass
class MPO:
    W: list

    @property
    def L(self) -> int:
        return len(self.W)

    def to_dense(self) -> np.ndarray:
        """Full matrix; only for small L (tests)."""
        T = self.W[0][0]  # (Dr, out, in)
        for Wi in self.W[1:]:
            T = np.einsum("aij,abkl->bikjl", T, Wi)
            T = T.reshape(T.shape[0], T.shape[1] * T.shape[2], T.shape[3] * T.shape[4])
        return T[0]


def mpo_from_terms(terms: list[Term], L: int) -> MPO:
    """Finite-state MPO for on-site and nearest-neighbour terms.

    Bond ``i | i+1`` carries channel 0 ("nothing placed yet"), one channel per
    two-site term crossing it, and a final channel ("term finished").
    """
    terms = list(terms)
    validate_terms(terms, L)
    onsite = [np.zeros((D, D), dtype=complex) for _ in range(L)]
    crossing = [[] for _ in range(L - 1)]
    for t in terms:
        ops = sorted(t.ops)
        if len(ops) == 1:
            s, tag = ops[0]
            onsite[s - 1] += t.coeff * LOCAL_OPS[tag]
        elif len(ops) == 2 and ops[1][0] == ops[0][0] + 1:
            (s, a), (_, b) = ops
            crossing[s - 1].append((t.coeff, LOCAL_OPS[a], LOCAL_OPS[b]))
        else:
            raise ValueError(f"only on-site and nearest-neighbour terms supported, got {t.ops}")
    dims = [1] + [2 + len(c) for c in crossing] + [1]
    W = []
    for i in range(L):
        dl, dr = dims[i], dims[i + 1]
        Wi = np.zeros((dl, dr, D, D), dtype=complex)
        first, last = i == 0, i == L - 1
        start_l = 0
        end_l = dl - 1
        start_r = 0
        end_r = dr - 1
        if not last:
            Wi[start_l, start_r] = np.eye(D)
        if not first:
            Wi[end_l, end_r] = np.eye(D)
        Wi[start_l, end_r] += onsite[i]
        if not last:
            for c, (coeff, a, _) in enumerate(crossing[i]):
                Wi[start_l, 1 + c] = coeff * a
        if not first:
            for c, (_, _, b) in enumerate(crossing[i - 1]):
                Wi[1 + c, end_r] = b
        W.append(Wi)
    if np.all([np.isrealobj(w) or not np.any(w.imag) for w in W]):
        W = [w.real.copy() for w in W]
    return MPO(W)


def xxz_mpo(params: ModelParams, branch: int = 0) -> MPO:
    terms = build_xxz_terms(params) if branch == 0 else build_branch_terms(params, branch)
    return mpo_from_terms(terms, params.L)


# --------------------------------------------------------------------- MPS


@dataclass
class MPSState:
    """MPS with a canonical-centre marker and a log of discarded weights.

    ``center = None`` means no canonical form is assumed.
    """

    tensors: list
    center: int | None = None
    discarded: list = field(default_factory=list)

    @property
    def L(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [A.shape[2] for A in self.tensors[:-1]]

    def copy(self) -> "MPSState":
        return MPSState([A.copy() for A in self.tensors], self.center, list(self.discarded))

    def astype(self, dtype) -> "MPSState":
        return MPSState([A.astype(dtype) for A in self.tensors], self.center, list(self.discarded))

    def to_dense(self) -> np.ndarray:
        psi = self.tensors[0]
        for A in self.tensors[1:]:
            psi = np.tensordot(psi, A, axes=([-1], [0]))
        return psi.reshape(-1)

    # canonical forms ---------------------------------------------------

    def move_center(self, to: int) -> "MPSState":
        """QR-shift the orthogonality centre to site ``to`` (in place)."""
        if self.center is None:
            self.center = 0
            for i in range(self.L - 1, 0, -1):
                self._shift_left(i)
            self.center = 0
        while self.center < to:
            self._shift_right(self.center)
            self.center += 1
        while self.center > to:
            self._shift_left(self.center)
            self.center -= 1
        return self

    def _shift_right(self, i):
        A = self.tensors[i]
        dl, d, dr = A.shape
        Q, R = np.linalg.qr(A.reshape(dl * d, dr))
        self.tensors[i] = Q.reshape(dl, d, Q.shape[1])
        self.tensors[i + 1] = np.tensordot(R, self.tensors[i + 1], axes=(1, 0))

    def _shift_left(self, i):
        A = self.tensors[i]
        dl, d, dr = A.shape
        Q, R = np.linalg.qr(A.reshape(dl, d * dr).T)
        self.tensors[i] = Q.T.reshape(Q.shape[1], d, dr)
        self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], R.T, axes=(2, 0))

    def norm(self) -> float:
        if self.center is not None:
            return float(np.linalg.norm(self.tensors[self.center]))
        return float(np.sqrt(abs(overlap(self, self))))

    def normalize(self) -> "MPSState":
        if self.center is None:
            self.move_center(0)
        self.tensors[self.center] = self.tensors[self.center] / np.linalg.norm(self.tensors[self.center])
        return self

    def orthonormality_error(self) -> float:
        """Largest deviation from identity of the left/right canonical conditions."""
        err = 0.0
        c = self.center if self.center is not None else 0
        for i, A in enumerate(self.tensors):
            if i < c:
                m = A.reshape(-1, A.shape[2])
                err = max(err, np.abs(m.conj().T @ m - np.eye(m.shape[1])).max())
            elif i > c:
                m = A.reshape(A.shape[0], -1)
                err = max(err, np.abs(m @ m.conj().T - np.eye(m.shape[0])).max())
        return float(err)


def product_state(spins, dtype=float) -> MPSState:
    """Product MPS from a sequence of local states (0 = up, 1 = down, or 2-vectors)."""
    tensors = []
    for s in spins:
        A = np.zeros((1, D, 1), dtype=dtype)
        if np.ndim(s) == 0:
            A[0, int(s), 0] = 1.0
        else:
            A[0, :, 0] = s
        tensors.append(A)
    return MPSState(tensors, center=0)


def neel_state(L: int, dtype=float) -> MPSState:
    return product_state([i % 2 for i in range(L)], dtype)


def polarized_mps(L: int, up: bool = True, dtype=float) -> MPSState:
    return product_state([0 if up else 1] * L, dtype)


def flip(state: MPSState) -> MPSState:
    """Apply the global spin flip ``prod_i 2 S^x_i``."""
    return MPSState([A[:, ::-1, :].copy() for A in state.tensors], state.center, list(state.discarded))


def apply_site_op(state: MPSState, op: np.ndarray, site: int) -> MPSState:
    """``op`` at ``site`` (1-based); the canonical centre is kept if it sits there."""
    out = state.copy()
    out.tensors[site - 1] = np.einsum("st,atb->asb", op, out.tensors[site - 1])
    if out.center != site - 1:
        out.center = None
    return out


def overlap(bra: MPSState, ket: MPSState) -> complex:
    """``<bra|ket>`` by left-to-right transfer-matrix contraction."""
    E = np.ones((1, 1))
    for a, b in zip(bra.tensors, ket.tensors):
        E = np.tensordot(E, b, axes=(1, 0))  # (ya, s, yb)
        E = np.tensordot(a.conj(), E, axes=([0, 1], [0, 1]))  # (ya', yb')
    return complex(E[0, 0])


def expectation_mpo(state: MPSState, mpo: MPO) -> complex:
    E = np.ones((1, 1, 1))
    for A, W in zip(state.tensors, mpo.W):
        E = update_left_env(E, A, W)
    return complex(E[0, 0, 0])


def mps_sum(a: MPSState, b: MPSState, ca: complex = 1.0, cb: complex = 1.0) -> MPSState:
    """``ca |a> + cb |b>`` by direct sum of bond spaces (not normalised)."""
    L = a.L
    out = []
    for i, (A, B) in enumerate(zip(a.tensors, b.tensors)):
        if i == 0:
            T = np.concatenate([ca * A, cb * B], axis=2)
        elif i == L - 1:
            T = np.concatenate([A, B], axis=0)
        else:
            dt = np.result_type(A, B)
            T = np.zeros((A.shape[0] + B.shape[0], D, A.shape[2] + B.shape[2]), dtype=dt)
            T[: A.shape[0], :, : A.shape[2]] = A
            T[A.shape[0] :, :, A.shape[2] :] = B
        out.append(T)
    return MPSState(out, center=None)


def truncate_svd(theta: np.ndarray, chi_max: int, cutoff: float):
    """SVD of a matrix keeping at most ``chi_max`` values and discarding weight <= ``cutoff``.

    Returns ``(U, S, Vh, discarded_weight)`` with ``S`` renormalised.
    """
    try:
        U, S, Vh = np.linalg.svd(theta, full_matrices=False)
    except np.linalg.LinAlgError:
        from scipy.linalg import svd

        U, S, Vh = svd(theta, full_matrices=False, lapack_driver="gesvd")
    total = float(np.sum(S**2))
    if total == 0.0:
        return U[:, :1], S[:1], Vh[:1], 0.0
    w = S**2 / total
    # tail[k] = weight discarded when keeping k values
    tail = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    keep = int(np.argmax(tail <= cutoff))
    keep = max(1, min(keep, chi_max))
    disc = float(tail[keep])
    S = S[:keep]
    S = S / np.linalg.norm(S)
    return U[:, :keep], S, Vh[:keep], disc


def compress(state: MPSState, chi_max: int = 256, cutoff: float = 1e-14) -> MPSState:
    """Canonicalise then SVD-truncate every bond; result has centre at site 0 and unit norm."""
    st = state.copy()
    st.center = None
    st.move_center(st.L - 1)
    st.normalize()
    for i in range(st.L - 1, 0, -1):
        A = st.tensors[i]
        dl, d, dr = A.shape
        U, S, Vh, disc = truncate_svd(A.reshape(dl, d * dr), chi_max, cutoff)
        st.tensors[i] = Vh.reshape(-1, d, dr)
        st.tensors[i - 1] = np.tensordot(st.tensors[i - 1], U * S, axes=(2, 0))
        st.discarded.append(disc)
    st.center = 0
    return st


def bond_spectrum(state: MPSState, bond: int) -> np.ndarray:
    """Schmidt values across bond ``bond`` (between sites ``bond`` and ``bond+1``, 1-based)."""
    if not 1 <= bond < state.L:
        raise ValueError(f"bond {bond} outside [1, {state.L - 1}]")
    st = state.copy() if state.center != bond - 1 else state
    if st is not state:
        st.move_center(bond - 1)
    A = st.tensors[bond - 1]
    S = np.linalg.svd(A.reshape(-1, A.shape[2]), compute_uv=False)
    return S / np.linalg.norm(S)


def entanglement_entropy(state: MPSState, bond: int | None = None) -> float:
    """Von Neumann entropy (natural log) across ``bond``; defaults to the middle bond."""
    bond = state.L // 2 if bond is None else bond
    p = bond_spectrum(state, bond) ** 2
    p = p[p > 1e-300]
    return float(-(p * np.log(p)).sum()) + 0.0


# ------------------------------------------------------- environments, H_eff


def update_left_env(Lenv, A, W):
    t = np.tensordot(Lenv, A, axes=(0, 0))  # (w, y, s', x')
    t = np.tensordot(t, W, axes=([0, 2], [0, 3]))  # (y, x', w', s)
    return np.tensordot(t, A.conj(), axes=([0, 3], [0, 1]))  # (x', w', y')


def update_right_env(Renv, A, W):
    t = np.tensordot(A, Renv, axes=(2, 0))  # (x, s', w', y')
    t = np.tensordot(t, W, axes=([1, 2], [3, 1]))  # (x, y', w, s)
    return np.tensordot(t, A.conj(), axes=([3, 1], [1, 2]))  # (x, w, y)


def apply_heff1(Lenv, W, Renv, v):
    t = np.tensordot(Lenv, v, axes=(0, 0))  # (w, y, s', x')
    t = np.tensordot(t, W, axes=([0, 2], [0, 3]))  # (y, x', w', s)
    t = np.tensordot(t, Renv, axes=([1, 2], [0, 1]))  # (y, s, y')
    return t


def apply_heff2(Lenv, W1, W2, Renv, v):
    t = np.tensordot(Lenv, v, axes=(0, 0))  # (w, y, s1, s2, x')
    t = np.tensordot(t, W1, axes=([0, 2], [0, 3]))  # (y, s2, x', w1, t1)
    t = np.tensordot(t, W2, axes=([3, 1], [0, 3]))  # (y, x', t1, w2, t2)
    t = np.tensordot(t, Renv, axes=([1, 3], [0, 1]))  # (y, t1, t2, y')
    return t


def apply_heff0(Lenv, Renv, C):
    t = np.tensordot(Lenv, C, axes=(0, 0))  # (w, y, x')
    return np.tensordot(t, Renv, axes=([0, 2], [1, 0]))  # (y, y')


def heff1_operator(Lenv, W, Renv):
    """Matvec closure for the one-site effective Hamiltonian.

    Folds ``Lenv`` and ``W`` once so each application is two matrix products.
    """
    cx, _, cy = Lenv.shape
    dl, dr, d, _ = W.shape
    rx, _, ry = Renv.shape
    LW = np.tensordot(Lenv, W, axes=(1, 0))  # (x, y, w', s, s')
    M1 = LW.transpose(1, 3, 0, 4, 2).reshape(cy * d, cx * d * dr)
    R2 = Renv.reshape(rx, dr * ry)

    def matvec(v):
        t = v.reshape(cx * d, rx) @ R2  # (x s', w' y')
        return (M1 @ t.reshape(cx * d * dr, ry)).reshape(cy, d, ry)

    return matvec


def heff2_operator(Lenv, W1, W2, Renv):
    """Matvec closure for the two-site effective Hamiltonian."""
    cx, _, cy = Lenv.shape
    _, D1, d, _ = W1.shape
    rx, _, ry = Renv.shape
    LW = np.tensordot(Lenv, W1, axes=(1, 0))  # (x, y, w1, t1, s1)
    M1 = LW.transpose(1, 3, 0, 4, 2).reshape(cy * d, cx * d * D1)
    WR = np.tensordot(W2, Renv, axes=(1, 1))  # (w1, t2, s2, x', y')
    M2 = WR.transpose(2, 3, 0, 1, 4).reshape(d * rx, D1 * d * ry)

    def matvec(v):
        t = v.reshape(cx * d, d * rx) @ M2  # (x s1, w1 t2 y')
        return (M1 @ t.reshape(cx * d * D1, d * ry)).reshape(cy, d, d, ry)

    return matvec


def heff0_operator(Lenv, Renv):
    """Matvec closure for the bond (zero-site) effective Hamiltonian."""
    cx, D_, cy = Lenv.shape
    rx, _, ry = Renv.shape
    LT = Lenv.transpose(2, 0, 1).reshape(cy, cx * D_)
    R2 = Renv.reshape(rx, D_ * ry)

    def matvec(C):
        return LT @ (C @ R2).reshape(cx * D_, ry)

    return matvec


class Environments:
    """Cached left/right environments of ``<psi|H|psi>`` for a fixed MPO."""

    def __init__(self, state: MPSState, mpo: MPO):
        L = state.L
        self.mpo = mpo
        self.left = [None] * (L + 1)
        self.right = [None] * (L + 1)
        dt = np.result_type(state.tensors[0], mpo.W[0])
        self.left[0] = np.ones((1, 1, 1), dtype=dt)
        self.right[L] = np.ones((1, 1, 1), dtype=dt)

    def build_right(self, state: MPSState, down_to: int):
        for i in range(state.L - 1, down_to - 1, -1):
            self.right[i] = update_right_env(self.right[i + 1], state.tensors[i], self.mpo.W[i])

    def build_left(self, state: MPSState, up_to: int):
        for i in range(up_to):
            self.left[i + 1] = update_left_env(self.left[i], state.tensors[i], self.mpo.W[i])
