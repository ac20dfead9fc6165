"""Model parameters and operator blueprints for the qubit + XXZ chain system.

Sites are 1-based. The local basis is ``(up, down)``, so ``Sz = diag(1/2, -1/2)``
and in the full tensor-product basis site 1 is the most significant factor.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp

TAGS = ("S+", "S-", "Sz", "Id")

SPLUS = np.array([[0.0, 1.0], [0.0, 0.0]])
SMINUS = SPLUS.T.copy()
SZ = np.diag([0.5, -0.5])
ID2 = np.eye(2)
LOCAL_OPS = {"S+": SPLUS, "S-": SMINUS, "Sz": SZ, "Id": ID2}
_DAGGER = {"S+": "S-", "S-": "S+", "Sz": "Sz", "Id": "Id"}


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the qubit + chain Hamiltonian.

    ``M`` defaults to the middle spin ``L // 2``.
    """

    L: int
    delta: float
    J: float = 1.0
    g: float = 0.25
    h_z: float = 0.0
    M: int | None = field(default=None)

    def __post_init__(self):
        if not isinstance(self.L, (int, np.integer)) or self.L < 2 or self.L % 2:
            raise ValueError(f"L must be an even integer >= 2, got {self.L!r}")
        if self.J <= 0:
            raise ValueError(f"J must be positive, got {self.J}")
        if self.M is None:
            object.__setattr__(self, "M", self.L // 2)
        if not 1 <= self.M <= self.L:
            raise ValueError(f"M={self.M} outside [1, {self.L}]")

    def with_(self, **kw) -> "ModelParams":
        if "L" in kw and "M" not in kw:
            kw["M"] = None
        return replace(self, **kw)


class Term(NamedTuple):
    coeff: float
    ops: tuple  # ((site, tag), ...)


class BranchSign(int):
    """Qubit ``sigma^z`` eigenvalue labelling a conditional chain Hamiltonian."""

    def __new__(cls, value):
        if value not in (1, -1):
            raise ValueError(f"branch sign must be +1 or -1, got {value!r}")
        return super().__new__(cls, value)


PLUS = BranchSign(1)
MINUS = BranchSign(-1)


def build_xxz_terms(params: ModelParams) -> list[Term]:
    """Open-boundary XXZ chain as a list of ``Term``.

    Three terms per bond: the two hopping halves and (if ``delta != 0``) the
    Ising part.
    """
    L, J, delta = params.L, params.J, params.delta
    if L < 2:
        raise ValueError("need at least two sites")
    terms = []
    for i in range(1, L):
        terms.append(Term(0.5 * J, ((i, "S+"), (i + 1, "S-"))))
        terms.append(Term(0.5 * J, ((i, "S-"), (i + 1, "S+"))))
        if delta != 0.0:
            terms.append(Term(J * delta, ((i, "Sz"), (i + 1, "Sz"))))
    return terms


def build_branch_terms(params: ModelParams, branch: int) -> list[Term]:
    """Chain Hamiltonian conditioned on the qubit state: ``H_S +- (g/2) Sz_M``."""
    branch = BranchSign(branch)
    terms = build_xxz_terms(params)
    if params.g != 0.0:
        terms.append(Term(branch * 0.5 * params.g, ((params.M, "Sz"),)))
    return terms


def hermitian_conjugate(terms: Iterable[Term]) -> list[Term]:
    return [Term(np.conj(t.coeff), tuple((s, _DAGGER[o]) for s, o in reversed(t.ops))) for t in terms]


def canonical_terms(terms: Iterable[Term]) -> list[Term]:
    """Sort operators within each term by site, then sort the terms.

    Operators on distinct sites commute, so this is a normal form.
    """
    out = [Term(t.coeff, tuple(sorted(t.ops))) for t in terms]
    return sorted(out, key=lambda t: (t.ops, t.coeff))


def validate_terms(terms: Iterable[Term], L: int) -> None:
    for t in terms:
        for site, tag in t.ops:
            if not 1 <= site <= L:
                raise ValueError(f"site {site} outside [1, {L}]")
            if tag not in LOCAL_OPS:
                raise ValueError(f"unknown local operator {tag!r}")


def site_operator(op: np.ndarray, site: int, L: int) -> sp.csr_matrix:
    """Embed a 2x2 operator at ``site`` (1-based) into the 2^L space."""
    left = sp.identity(2 ** (site - 1), format="csr")
    right = sp.identity(2 ** (L - site), format="csr")
    return sp.kron(sp.kron(left, sp.csr_matrix(op)), right, format="csr")


def terms_to_sparse(terms: Iterable[Term], L: int) -> sp.csr_matrix:
    """Assemble a term list into a sparse ``2^L x 2^L`` matrix by Kronecker products."""
    terms = list(terms)
    validate_terms(terms, L)
    dim = 2**L
    H = sp.csr_matrix((dim, dim), dtype=float)
    for t in terms:
        mat = t.coeff * sp.identity(dim, format="csr")
        for site, tag in t.ops:
            mat = mat @ site_operator(LOCAL_OPS[tag], site, L)
        H = H + mat
    return H.tocsr()


def terms_to_dense(terms: Iterable[Term], L: int) -> np.ndarray:
    return terms_to_sparse(terms, L).toarray()


def total_sz(L: int) -> sp.csr_matrix:
    return sum(site_operator(SZ, i, L) for i in range(1, L + 1)).tocsr()


def spin_flip(L: int) -> sp.csr_matrix:
    """Global flip ``prod_i 2 S^x_i``: maps basis index ``x`` to ``~x``."""
    dim = 2**L
    idx = np.arange(dim)
    return sp.csr_matrix((np.ones(dim), (idx, (dim - 1) - idx)), shape=(dim, dim))
