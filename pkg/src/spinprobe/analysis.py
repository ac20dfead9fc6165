"""Observables extracted from coherence traces: recoherence time, frequency, fits, comparisons."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .analytic import spinon_velocity
from .traces import CoherenceTrace, grid_step

log = logging.getLogger(__name__)

DEFAULT_PROMINENCE = 0.05
DEFAULT_TRANSIENT = 10.0


# ------------------------------------------------------------------ reports


@dataclass
class ObservableReport:
    """Derived observables for one parameter point.

    Absent quantities are ``None``; ``notes`` records why.
    """

    t_r: float | None = None
    omega: float | None = None
    entropy: float | None = None
    fit: dict | None = None
    comparison: dict | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.t_r is not None and not self.t_r > 0:
            raise ValueError(f"t_r must be positive, got {self.t_r}")
        if self.omega is not None and not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.fit is not None and not 0.0 <= self.fit.get("r2", 0.0) <= 1.0:
            raise ValueError("R^2 outside [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


# ------------------------------------------------------------ recoherence


def recoherence_analysis(trace: CoherenceTrace, prominence: float = DEFAULT_PROMINENCE):
    """Return ``(t_r, reason)``; ``t_r`` is ``None`` when no revival is found.

    The initial decay is followed down to its running minimum until ``|rho01|``
    rises by ``prominence * |rho01(0)|`` above it. The revival peak is the
    maximum reached before ``|rho01|`` falls the same amount below it again
    (or the trace ends). Its position is refined by a parabola through the
    three samples around the discrete maximum.
    """
    if not 0 < prominence < 1:
        raise ValueError("prominence must lie in (0, 1)")
    t = np.asarray(trace.t)
    a = np.abs(trace.rho)
    if a.size < 3:
        return None, "trace too short"
    step = prominence * a[0]
    if step == 0:
        return None, "zero initial coherence"
    k_min = 0
    k_rise = None
    for k in range(1, a.size):
        if a[k] < a[k_min]:
            k_min = k
        elif a[k] - a[k_min] >= step:
            k_rise = k
            break
    if k_rise is None:
        if k_min == a.size - 1:
            return None, "trace ends during the initial decay"
        return None, "no revival above the prominence threshold"
    k_peak = k_rise
    confirmed = False
    for k in range(k_rise, a.size):
        if a[k] > a[k_peak]:
            k_peak = k
        elif a[k_peak] - a[k] >= step:
            confirmed = True
            break
    if k_peak == a.size - 1:
        return None, "revival still rising at the end of the trace"
    t_r = float(t[k_peak])
    y0, y1, y2 = a[k_peak - 1], a[k_peak], a[k_peak + 1]
    curv = y0 - 2 * y1 + y2
    if curv < 0:
        t_r += 0.5 * (y0 - y2) / curv * (t[1] - t[0])
    return t_r, "ok" if confirmed else "peak not followed by a prominent drop"


def estimate_recoherence_time(trace: CoherenceTrace, prominence: float = DEFAULT_PROMINENCE) -> float | None:
    """First prominent revival peak of ``|rho01(t)|``, or ``None``."""
    t_r, reason = recoherence_analysis(trace, prominence)
    if t_r is None:
        log.debug("no recoherence: %s", reason)
    return t_r


# -------------------------------------------------------------- frequency


def frequency_analysis(
    trace: CoherenceTrace,
    transient: float = DEFAULT_TRANSIENT,
    min_periods: float = 2.0,
    snr: float = 10.0,
    pad: int = 1 << 18,
):
    """Return ``(omega, reason)`` for the dominant oscillation of ``Re rho01``.

    Hann-windowed, zero-padded FFT of the mean-subtracted signal after
    ``transient``; the peak bin is refined by quadratic interpolation of
    the three bins around it. ``omega`` is angular. The peak must stand
    ``snr`` times above the median spectral magnitude and fit at least
    ``min_periods`` periods into the analysed window.
    """
    dt = grid_step(trace.t)
    x = trace.rho.real[trace.t >= transient - 1e-12]
    if x.size < 8:
        return None, "too few samples after the transient"
    x = x - x.mean()
    scale = np.max(np.abs(x))
    if scale == 0 or scale < 1e-12 * max(1.0, np.max(np.abs(trace.rho))):
        return None, "no oscillation after the transient"
    x = x / scale
    nfft = max(pad, 1 << int(np.ceil(np.log2(4 * x.size))))
    power = np.abs(np.fft.rfft(x * np.hanning(x.size), n=nfft))
    k = 1 + int(np.argmax(power[1:-1]))
    if power[k] < snr * np.median(power):
        return None, "no spectral peak above the noise floor"
    y0, y1, y2 = power[k - 1], power[k], power[k + 1]
    curv = y0 - 2 * y1 + y2
    shift = 0.5 * (y0 - y2) / curv if curv < 0 else 0.0
    omega = 2 * np.pi * (k + shift) / (nfft * dt)
    span = (x.size - 1) * dt
    if omega * span < 2 * np.pi * min_periods:
        return None, f"fewer than {min_periods:g} periods in the analysed window"
    return float(omega), "ok"


def estimate_frequency(trace: CoherenceTrace, transient: float = DEFAULT_TRANSIENT, **kw) -> float | None:
    """Dominant angular frequency of ``Re rho01`` after ``transient``, or ``None``."""
    omega, reason = frequency_analysis(trace, transient, **kw)
    if omega is None:
        log.debug("no frequency: %s", reason)
    return omega


# -------------------------------------------------------------------- fits


@dataclass
class LineFit:
    slope: float
    intercept: float
    r2: float
    residuals: list
    inverse_velocity: float | None = None  # 1/u_s for the supplied delta
    slope_ratio: float | None = None  # slope * u_s

    def to_dict(self) -> dict:
        return asdict(self)


def fit_tr_vs_L(points, delta: float | None = None, J: float = 1.0) -> LineFit:
    """Least-squares line through ``(L, t_r)`` points.

    With ``delta`` given, the slope is also compared against ``1/u_s``.
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("need at least three (L, t_r) points")
    x, y = pts[:, 0], pts[:, 1]
    if np.ptp(x) == 0:
        raise ValueError("all L values coincide; slope undefined")
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((res**2).sum())
    if ss_tot == 0:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    fit = LineFit(float(slope), float(intercept), r2, res.tolist())
    if delta is not None:
        u = spinon_velocity(J, delta)
        fit.inverse_velocity = 1.0 / u
        fit.slope_ratio = float(slope * u)
    return fit


# ------------------------------------------------------------- comparison


@dataclass
class Comparison:
    max_abs: float
    l2: float  # root-mean-square deviation over the common grid
    first_divergence: float | None
    threshold: float
    resampled: bool
    n_points: int

    def to_dict(self) -> dict:
        return asdict(self)


def compare_traces(a: CoherenceTrace, b: CoherenceTrace, threshold: float = 1e-3) -> Comparison:
    """Deviation metrics between two coherence traces.

    Traces on different grids are compared on ``a``'s samples inside the
    common time window, with ``b`` linearly interpolated (``resampled=True``).
    """
    same = a.t.shape == b.t.shape and np.allclose(a.t, b.t, rtol=0, atol=1e-9 * max(1.0, abs(a.t[-1])))
    if same:
        t, ra, rb = a.t, a.rho, b.rho
    else:
        lo, hi = max(a.t[0], b.t[0]), min(a.t[-1], b.t[-1])
        mask = (a.t >= lo - 1e-12) & (a.t <= hi + 1e-12)
        if hi < lo or not mask.any():
            raise ValueError("traces have disjoint time grids")
        t, ra = a.t[mask], a.rho[mask]
        rb = np.interp(t, b.t, b.rho.real) + 1j * np.interp(t, b.t, b.rho.imag)
        log.info("compare_traces: resampled onto %d common points", t.size)
    d = np.abs(ra - rb)
    over = np.nonzero(d > threshold)[0]
    return Comparison(
        max_abs=float(d.max()),
        l2=float(math.sqrt(np.mean(d**2))),
        first_divergence=float(t[over[0]]) if over.size else None,
        threshold=threshold,
        resampled=not same,
        n_points=int(t.size),
    )
