"""Lanczos routines shared by the exact and tensor-network backends."""
from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger(__name__)


class KrylovError(RuntimeError):
    pass


def _tridiag(a, b):
    m = len(a)
    T = np.zeros((m, m))
    idx = np.arange(m)
    T[idx, idx] = a
    T[idx[1:], idx[:-1]] = b[: m - 1]
    return np.linalg.eigh(T)


def _lanczos(matvec, v, kmax, breakdown_tol, converged=None, check_from=2):
    """Lanczos tridiagonalisation with full reorthogonalisation.

    Returns ``(V, alpha, beta, breakdown)`` where ``V`` has ``m <= kmax``
    orthonormal rows and ``beta[m-1]`` couples to the next (unbuilt) vector.
    Stops early on breakdown or when ``converged(alpha, beta)`` returns true.
    """
    shape = v.shape
    alpha = np.zeros(kmax)
    beta = np.zeros(kmax)
    v0 = v.ravel() / np.linalg.norm(v)
    V = None
    for j in range(kmax):
        w = np.asarray(matvec((v0 if V is None else V[j]).reshape(shape))).ravel()
        if V is None:
            # the operator may be complex even when the start vector is real
            V = np.empty((kmax, v.size), dtype=np.result_type(v0.dtype, w.dtype, np.float64))
            V[0] = v0
        alpha[j] = np.vdot(V[j], w).real
        w = w - alpha[j] * V[j]
        if j > 0:
            w -= beta[j - 1] * V[j - 1]
        # full reorthogonalisation; repeated when cancellation is severe
        before = np.linalg.norm(w)
        Vj = V[: j + 1]
        w -= Vj.T @ (Vj.conj() @ w)
        beta[j] = np.linalg.norm(w)
        if beta[j] < 0.5 * before:
            w -= Vj.T @ (Vj.conj() @ w)
            beta[j] = np.linalg.norm(w)
        m = j + 1
        if beta[j] < breakdown_tol:
            return V[:m], alpha[:m], beta[:m], True
        if converged is not None and m >= check_from and converged(alpha[:m], beta[:m]):
            return V[:m], alpha[:m], beta[:m], False
        if m < kmax:
            V[m] = w / beta[j]
    return V, alpha, beta, False


def expm_krylov(matvec, v, dt, tol=1e-12, kmax=40, _depth=0):
    """Return ``exp(-1j * dt * H) @ v`` for Hermitian ``H`` given as ``matvec``.

    The subspace grows until the a-posteriori error bound
    ``||v|| beta_m |[exp(-i dt T) e_1]_m|`` drops below ``tol``. If ``kmax``
    vectors do not suffice the step is split in two (at most 8 levels) and a
    warning is logged.
    """
    nrm = np.linalg.norm(v)
    if nrm == 0.0 or dt == 0.0:
        return v.astype(np.complex128, copy=True)
    kmax = min(kmax, v.size)
    coeffs = {}

    def converged(a, b):
        w, U = _tridiag(a, b)
        c = U @ (np.exp(-1j * dt * w) * U[0])
        coeffs["c"] = c
        return nrm * abs(b[-1] * c[-1]) < tol

    V, a, b, breakdown = _lanczos(matvec, v, kmax, 1e-13 * max(1.0, nrm), converged)
    m = len(a)
    c = coeffs.get("c")
    if c is None or len(c) != m:
        w, U = _tridiag(a, b)
        c = U @ (np.exp(-1j * dt * w) * U[0])
    err = nrm * abs(b[m - 1] * c[-1])
    if not breakdown and m < v.size and err > tol:
        if _depth >= 8:
            raise KrylovError(f"Krylov exponential did not converge (error estimate {err:.2e})")
        log.warning("Krylov step dt=%g not converged (err %.1e); halving", dt, err)
        half = expm_krylov(matvec, v, dt / 2, tol, kmax, _depth + 1)
        return expm_krylov(matvec, half, dt / 2, tol, kmax, _depth + 1)
    return (nrm * (c @ V)).reshape(v.shape)


def lanczos_ground(matvec, v0, tol=1e-10, kmax=30, max_restarts=50, strict=True):
    """Lowest eigenpair of a Hermitian operator by restarted Lanczos.

    Returns ``(energy, vector, residual_norm)``. Raises :class:`KrylovError` if
    the residual stays above ``tol`` after ``max_restarts`` restarts, unless
    ``strict`` is false, in which case the best estimate is returned.
    """
    v = np.asarray(v0)
    shape = v.shape
    if np.linalg.norm(v) == 0.0:
        raise ValueError("zero start vector")
    v = v / np.linalg.norm(v)
    kmax = min(kmax, v.size)

    def converged(a, b):
        _, U = _tridiag(a, b)
        return abs(b[-1] * U[-1, 0]) < tol

    res = np.inf
    e = np.nan
    for _ in range(max_restarts):
        V, a, b, _ = _lanczos(matvec, v, kmax, 1e-14, converged, check_from=3)
        w, U = _tridiag(a, b)
        e, c = w[0], U[:, 0]
        v = (c @ V[: len(a)]).reshape(shape)
        v /= np.linalg.norm(v)
        # Lanczos residual ||H v - e v|| = beta_m |c_m|
        res = abs(b[len(a) - 1] * c[-1])
        if res < tol:
            return float(e), v, float(res)
    if not strict:
        return float(e), v, float(res)
    raise KrylovError(f"Lanczos ground state not converged: residual {res:.3e}")
