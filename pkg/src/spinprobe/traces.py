"""Sampled time series produced by every backend, and their CSV form."""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

CSV_HEADER = "t,re_rho01,im_rho01,abs_rho01"


def uniform_grid(t_max: float, dt: float) -> np.ndarray:
    """``0, dt, 2 dt, ...`` up to ``t_max`` (inclusive when it lands on the grid)."""
    if t_max <= 0 or dt <= 0:
        raise ValueError("t_max and dt must be positive")
    n = int(np.floor(t_max / dt + 1e-9))
    return dt * np.arange(n + 1)


def grid_step(t: np.ndarray, rtol: float = 1e-9) -> float:
    """Return the spacing of a uniform grid starting at 0, or raise."""
    t = np.asarray(t, dtype=float)
    if t.size < 2 or t[0] != 0.0:
        raise ValueError("grid must start at t = 0 and have at least two samples")
    d = np.diff(t)
    dt = d.mean()
    if np.max(np.abs(d - dt)) > rtol * max(1.0, abs(t[-1])):
        raise ValueError("time grid is not uniform")
    return float(dt)


@dataclass
class CoherenceTrace:
    """Qubit coherence rho01(t) on a time grid."""

    t: np.ndarray
    rho: np.ndarray
    backend: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.rho = np.asarray(self.rho, dtype=complex)
        if self.t.shape != self.rho.shape:
            raise ValueError("t and rho must have the same shape")

    @property
    def dt(self) -> float:
        return grid_step(self.t)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for t, r in zip(self.t, self.rho):
            buf.write(f"{t:.17g},{r.real:.17g},{r.imag:.17g},{abs(r):.17g}\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def read_csv(cls, path, backend: str = "") -> "CoherenceTrace":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1] + 1j * data[:, 2], backend=backend)


@dataclass
class CorrelationTrace:
    """Ground-state two-time correlator C(t) = <Sz_M(t) Sz_M(0)> for t >= 0."""

    t: np.ndarray
    C: np.ndarray
    backend: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.C = np.asarray(self.C, dtype=complex)
        if self.t.shape != self.C.shape:
            raise ValueError("t and C must have the same shape")

    @property
    def dt(self) -> float:
        return grid_step(self.t)

    def symmetric(self):
        """Samples on ``[-t_max, t_max]`` using ``C(-t) = conj C(t)``."""
        t = np.concatenate([-self.t[:0:-1], self.t])
        C = np.concatenate([np.conj(self.C[:0:-1]), self.C])
        return t, C
