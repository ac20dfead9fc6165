import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinprobe.analysis import (
    ObservableReport,
    compare_traces,
    estimate_frequency,
    estimate_recoherence_time,
    fit_tr_vs_L,
    recoherence_analysis,
)
from spinprobe.traces import CoherenceTrace, uniform_grid


def bump(t, t_r=30.0, width=3.0):
    """Decay to 0.1 then a Gaussian revival centred on ``t_r``."""
    return 0.5 * np.exp(-t / 3) + 0.3 * np.exp(-((t - t_r) ** 2) / (2 * width**2))


def test_recoherence_synthetic_bump():
    t = uniform_grid(60, 0.05)
    assert estimate_recoherence_time(CoherenceTrace(t, bump(t))) == pytest.approx(30.0, abs=0.05)


def test_recoherence_absent_for_monotone_decay():
    t = uniform_grid(60, 0.05)
    tr, why = recoherence_analysis(CoherenceTrace(t, 0.5 * np.exp(-t / 5)))
    assert tr is None and why == "trace ends during the initial decay"
    tr, why = recoherence_analysis(CoherenceTrace(t, 0.5 * np.exp(-t / 5) + 0.1))
    assert tr is None


def test_recoherence_still_rising():
    t = uniform_grid(38, 0.05)
    tr, why = recoherence_analysis(CoherenceTrace(t, bump(t, t_r=40.0)))
    assert tr is None and "still rising" in why


@settings(max_examples=25, deadline=None)
@given(scale=st.floats(0.01, 10.0), phase=st.floats(0, 2 * np.pi))
def test_recoherence_invariant_to_scale_and_phase(scale, phase):
    t = uniform_grid(60, 0.05)
    base = estimate_recoherence_time(CoherenceTrace(t, bump(t)))
    got = estimate_recoherence_time(CoherenceTrace(t, scale * np.exp(1j * phase) * bump(t)))
    assert got == pytest.approx(base, abs=1e-9)


def test_recoherence_grid_refinement():
    vals = [estimate_recoherence_time(CoherenceTrace(t, bump(t))) for t in (uniform_grid(60, d) for d in (0.2, 0.1, 0.05))]
    assert abs(vals[2] - 30) <= abs(vals[0] - 30) + 1e-3 and abs(vals[2] - 30) < 0.05


def test_frequency_examples():
    t = uniform_grid(200, 0.1)
    assert estimate_frequency(CoherenceTrace(t, 0.5 * np.cos(0.125 * t))) == pytest.approx(0.125, abs=1e-3)
    assert estimate_frequency(CoherenceTrace(t, 0.3 + 0.2 * np.cos(0.7 * t))) == pytest.approx(0.7, abs=1e-3)
    assert estimate_frequency(CoherenceTrace(t, 0.5 * np.ones_like(t))) is None
    # less than two periods after the transient
    assert estimate_frequency(CoherenceTrace(t, np.cos(0.02 * t))) is None


def test_frequency_invariant_to_offset_and_scale():
    t = uniform_grid(200, 0.1)
    a = estimate_frequency(CoherenceTrace(t, np.cos(0.31 * t)))
    b = estimate_frequency(CoherenceTrace(t, 7 + 0.01 * np.cos(0.31 * t)))
    assert a == pytest.approx(b, rel=1e-9)


def test_fit_exact_line():
    pts = [(L, 2.0 / np.pi * L + 1.5) for L in (24, 32, 48, 64)]
    fit = fit_tr_vs_L(pts, delta=1.0)
    assert fit.slope == pytest.approx(2 / np.pi) and fit.r2 == pytest.approx(1.0)
    assert fit.slope_ratio == pytest.approx(1.0)
    assert max(abs(r) for r in fit.residuals) < 1e-12


def test_fit_rejects_degenerate_input():
    with pytest.raises(ValueError):
        fit_tr_vs_L([(24, 1.0), (32, 2.0)])
    with pytest.raises(ValueError):
        fit_tr_vs_L([(24, 1.0), (24, 2.0), (24, 3.0)])


def test_compare_metrics():
    t = uniform_grid(10, 0.05)
    a = CoherenceTrace(t, 0.5 * np.exp(-t))
    c = compare_traces(a, a)
    assert c.max_abs == 0 and c.l2 == 0 and c.first_divergence is None and not c.resampled
    c = compare_traces(a, CoherenceTrace(t, a.rho + 0.01), threshold=1e-3)
    assert c.max_abs == pytest.approx(0.01) and c.l2 == pytest.approx(0.01) and c.first_divergence == 0.0


def test_compare_resamples_and_rejects_disjoint():
    a = CoherenceTrace(uniform_grid(10, 0.05), np.ones(201))
    b = CoherenceTrace(uniform_grid(5, 0.1), np.ones(51))
    c = compare_traces(a, b)
    assert c.resampled and c.n_points == 101 and c.max_abs == 0
    late = CoherenceTrace(uniform_grid(5, 0.1) + 20, np.ones(51))
    with pytest.raises(ValueError):
        compare_traces(a, late)


def test_report_invariants():
    assert ObservableReport(t_r=1.0, omega=0.1, entropy=0.3).to_dict()["t_r"] == 1.0
    with pytest.raises(ValueError):
        ObservableReport(t_r=-1.0)
    with pytest.raises(ValueError):
        ObservableReport(omega=0.0)
    with pytest.raises(ValueError):
        ObservableReport(fit={"r2": 1.5})
