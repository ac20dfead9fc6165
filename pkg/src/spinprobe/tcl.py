"""Second-order time-convolutionless solution for the qubit coherence."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .traces import CoherenceTrace, CorrelationTrace, grid_step


@dataclass
class TclResult:
    trace: CoherenceTrace
    gamma: np.ndarray  # cumulative exponent (g^2/2) int_0^t A
    A: np.ndarray  # A(tau) = int_{-tau}^{tau} C = 2 int_0^tau Re C


def memory_integral(corr: CorrelationTrace) -> np.ndarray:
    """``A(tau) = 2 int_0^tau Re C(t') dt'`` by cumulative trapezoid."""
    dt = grid_step(corr.t)
    return 2.0 * cumulative_trapezoid(corr.C.real, dx=dt, initial=0.0)


def tcl_coherence(corr: CorrelationTrace, g: float, rho0: complex = 0.5) -> TclResult:
    """``rho01(t) = rho0 exp(-(g^2/2) int_0^t A(tau) dtau)``.

    The grid must be uniform and start at 0; only ``Re C`` enters, since
    ``C(-t) = conj C(t)``.
    """
    dt = grid_step(corr.t)
    A = memory_integral(corr)
    gamma = 0.5 * g**2 * cumulative_trapezoid(A, dx=dt, initial=0.0)
    rho = rho0 * np.exp(-gamma)
    trace = CoherenceTrace(corr.t.copy(), rho, backend=f"tcl-{corr.backend}" if corr.backend else "tcl", meta={"g": g})
    return TclResult(trace, gamma, A)


def markov_diagnostic(corr: CorrelationTrace, window: tuple[float, float]) -> float:
    """Mean of ``A(T)`` over ``T`` in ``window``: the rate a Markov treatment would give."""
    lo, hi = window
    if lo < 0 or hi <= lo:
        raise ValueError("window must satisfy 0 <= lo < hi")
    if hi > corr.t[-1] + 1e-12:
        raise ValueError(f"window end {hi} beyond trace end {corr.t[-1]}")
    A = memory_integral(corr)
    mask = (corr.t >= lo - 1e-12) & (corr.t <= hi + 1e-12)
    return float(A[mask].mean())
