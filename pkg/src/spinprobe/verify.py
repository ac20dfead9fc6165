"""Cross-validation checks between backends, runnable from ``spinprobe verify`` and the test suite.

Each check returns a :class:`CheckResult`; thresholds are fixed here so the
command line and the tests agree.
"""
from __future__ import annotations

import filecmp
import json
import logging
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class CheckResult:
    key: str
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.key}: {self.title} -- {self.detail} ({self.seconds:.1f} s)"


def _timed(fn):
    def wrapper(*a, **kw):
        start = time.perf_counter()
        res = fn(*a, **kw)
        res.seconds = time.perf_counter() - start
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ------------------------------------------------------------------ 1, 2


@_timed
def check_two_site_closed_form() -> CheckResult:
    from .exact import coherence_exact
    from .model import ModelParams
    from .traces import uniform_grid

    start = time.perf_counter()
    p = ModelParams(L=2, delta=0.0, g=0.25)
    t = uniform_grid(100.0, 0.05)
    tr = coherence_exact(p, t)
    elapsed = time.perf_counter() - start
    om = np.sqrt(p.J**2 / 4 + p.g**2 / 16)
    ref = 0.5 * (1 - p.g**2 / (8 * om**2) * np.sin(om * t) ** 2)
    err = float(np.abs(tr.rho - ref).max())
    ok = err <= 1e-10 and elapsed < 1.0
    return CheckResult("1", "two-site closed form", ok, f"max err {err:.2e} (tol 1e-10), runtime {elapsed:.2f} s (< 1 s)", data={"err": err, "runtime": elapsed})


@_timed
def check_full_space_vs_branches() -> CheckResult:
    from .exact import coherence_exact, full_space_coherence
    from .model import ModelParams
    from .traces import uniform_grid

    t = uniform_grid(20.0, 0.05)
    errs = {}
    for d in (0.0, 1.0, 2.5, -0.5, -1.5):
        p = ModelParams(L=8, delta=d)
        errs[d] = float(np.abs(full_space_coherence(p, t).rho - coherence_exact(p, t).rho).max())
    worst = max(errs.values())
    return CheckResult("2", "full-space vs two-branch ED, L=8", worst <= 1e-10, f"max |diff| {worst:.2e} over delta {sorted(errs)} (tol 1e-10)", data={"errors": errs})


# --------------------------------------------------------------------- 3

NOISE_ABS = 1e-8
NOISE_REL = 1e-2


@_timed
def check_tdvp_vs_exact(
    deltas=(0.0, 0.5, 1.0, 2.5, -0.5), chis=(32, 64, 128), L: int = 12, cutoff: float = 1e-14
) -> CheckResult:
    """TDVP against ED at chi_max = 128; errors must not grow as chi_max doubles.

    Doubling from 64 to 128 at L = 12 changes nothing (the largest possible bond
    is 64), so the chain 32 -> 64 -> 128 is tested. Errors equal to within
    floating-point noise (``max(1e-8, 1%)``) count as non-increasing. The
    weight cutoff is tightened so that ``chi_max`` is the only truncation:
    with the run default of 1e-10 the discarded weight accumulated over 400
    steps (about 1e-6) would mask the bond-dimension dependence.
    """
    from .exact import coherence_exact
    from .model import ModelParams
    from .tensornet import DmrgConfig, TdvpConfig, coherence_tdvp
    from .traces import uniform_grid

    t = uniform_grid(20.0, 0.05)
    table = {}
    ok = True
    for d in deltas:
        p = ModelParams(L=L, delta=d, g=0.25)
        ref = coherence_exact(p, t).rho
        row = []
        for chi in chis:
            tr = coherence_tdvp(p, t, DmrgConfig(), TdvpConfig(dt=0.05, chi_max=chi, cutoff=cutoff), branches="auto")
            row.append(float(np.abs(tr.rho - ref).max()))
        table[d] = row
        ok &= row[-1] <= 1e-3
        for a, b in zip(row, row[1:]):
            ok &= b <= a + max(NOISE_ABS, NOISE_REL * a)
    worst = max(r[-1] for r in table.values())
    detail = f"max err at chi={chis[-1]}: {worst:.2e} (tol 1e-3); " + "; ".join(
        f"d={d:g}: " + "/".join(f"{e:.1e}" for e in row) for d, row in table.items()
    )
    return CheckResult("3", "TDVP vs ED, L=12", bool(ok), detail, data={"chis": list(chis), "errors": table})


# --------------------------------------------------------------------- 4


@_timed
def check_delta0_tower_small() -> CheckResult:
    from .analytic import determinant_coherence_delta0, free_fermion_correlation_obc
    from .exact import coherence_exact, correlation_exact
    from .model import ModelParams
    from .traces import uniform_grid

    t = uniform_grid(20.0, 0.05)
    p = ModelParams(L=12, delta=0.0, g=0.25)
    ea = float(np.abs(free_fermion_correlation_obc(12, 1.0, t).C - correlation_exact(p, t).C).max())
    eb = float(np.abs(determinant_coherence_delta0(12, 1.0, 0.25, t).rho - coherence_exact(p, t).rho).max())
    ok = ea <= 1e-10 and eb <= 1e-8
    return CheckResult("4ab", "delta=0 OBC correlator and determinant vs ED, L=12", ok, f"(a) {ea:.2e} (tol 1e-10); (b) {eb:.2e} (tol 1e-8)", data={"a": ea, "b": eb})


@_timed
def check_delta0_paper_scale(L: int = 100, t_max: float = 40.0, chi: int = 64) -> CheckResult:
    from .analytic import determinant_coherence_delta0
    from .model import ModelParams
    from .tensornet import DmrgConfig, TdvpConfig, coherence_tdvp
    from .traces import uniform_grid

    t = uniform_grid(t_max, 0.05)
    p = ModelParams(L=L, delta=0.0, g=0.25)
    det = determinant_coherence_delta0(L, 1.0, 0.25, t)
    tr = coherence_tdvp(p, t, DmrgConfig(chi_max=chi), TdvpConfig(dt=0.05, chi_max=chi), branches="auto")
    err = float(np.abs(tr.rho - det.rho).max())
    return CheckResult("4c", f"determinant vs TDVP, L={L}, t<={t_max:g}", err <= 2e-3, f"max |diff| {err:.2e} (tol 2e-3), chi={chi}", data={"err": err})


# --------------------------------------------------------------------- 5


@_timed
def check_pbc_consistency(g: float = 0.25, t_max: float = 20.0, dt: float = 0.01) -> CheckResult:
    from .analytic import DEFAULT_PREFACTOR, audit_prefactor, free_fermion_coherence_pbc, pbc_correlation
    from .exact import correlation_exact
    from .model import ModelParams
    from .tcl import tcl_coherence
    from .traces import uniform_grid

    t = uniform_grid(t_max, dt)
    errs = {}
    for L in (12, 100):
        formula = free_fermion_coherence_pbc(L, 1.0, g, t)
        tcl = tcl_coherence(pbc_correlation(L, 1.0, t), g).trace
        errs[L] = float(np.abs(formula.rho - tcl.rho).max())
    c0 = float(correlation_exact(ModelParams(L=12, delta=0.0), [0.0, 0.05]).C[0].real)
    selected, table = audit_prefactor(c0)
    ok = max(errs.values()) <= 1e-6 and selected == DEFAULT_PREFACTOR
    detail = (
        f"max |formula - TCL| L=12: {errs[12]:.1e}, L=100: {errs[100]:.1e} (tol 1e-6, dt={dt}); "
        f"audit C(0) {table} vs ED {c0:.6f} -> c={selected:g}, default c={DEFAULT_PREFACTOR:g}"
    )
    return CheckResult("5", "periodic free-fermion formula vs TCL", ok, detail, data={"errors": errs, "selected": selected})


# --------------------------------------------------------------------- 6


@_timed
def check_tcl_window() -> CheckResult:
    from .exact import coherence_exact, correlation_exact
    from .model import ModelParams
    from .tcl import tcl_coherence
    from .traces import uniform_grid

    t = uniform_grid(20.0, 0.05)
    dev = {}
    for d in (0.5, 2.5):
        p = ModelParams(L=12, delta=d, g=0.25)
        tcl = tcl_coherence(correlation_exact(p, t), p.g).trace
        dev[d] = float(np.abs(tcl.rho - coherence_exact(p, t).rho).max())
    ok = dev[0.5] <= 0.02 and dev[2.5] > dev[0.5]
    return CheckResult("6", "TCL vs ED, L=12", ok, f"delta=0.5: {dev[0.5]:.2e} (tol 0.02); delta=2.5: {dev[2.5]:.2e} (must exceed)", data=dev)


# --------------------------------------------------------------------- 7


@_timed
def check_ising_saturation(L: int = 16, t_max: float = 200.0, chi: int = 16, dt: float = 0.1) -> CheckResult:
    from .analysis import frequency_analysis
    from .model import ModelParams
    from .tensornet import DmrgConfig, TdvpConfig, coherence_tdvp
    from .traces import uniform_grid

    t = uniform_grid(t_max, dt)
    om = {}
    for d in (10.0, 20.0):
        p = ModelParams(L=L, delta=d, g=0.25)
        tr = coherence_tdvp(p, t, DmrgConfig(), TdvpConfig(dt=dt, chi_max=chi), branches="auto")
        om[d], _ = frequency_analysis(tr, 10.0)
    if om[10.0] is None or om[20.0] is None:
        return CheckResult("7", "Ising saturation of omega", False, f"no frequency found: {om}", data=om)
    e10, e20 = abs(om[10.0] - 0.125), abs(om[20.0] - 0.125)
    ok = e20 < e10 < 0.05 * 0.125
    detail = f"omega(10)={om[10.0]:.6f}, omega(20)={om[20.0]:.6f}; |dev| {e20:.2e} < {e10:.2e} < {0.05 * 0.125:.2e}"
    return CheckResult("7", f"Ising saturation of omega, TDVP L={L}", ok, detail, data=om)


# --------------------------------------------------------------------- 8


def _tdvp_trace(L, delta, t_max, chi, dt):
    from .model import ModelParams
    from .tensornet import DmrgConfig, TdvpConfig, coherence_tdvp
    from .traces import uniform_grid

    p = ModelParams(L=L, delta=delta, g=0.25)
    t = uniform_grid(t_max, dt)
    return coherence_tdvp(p, t, DmrgConfig(chi_max=max(chi, 64)), TdvpConfig(dt=dt, chi_max=chi), branches="auto")


def _onset(trace, prominence=0.05):
    """Time of the running minimum that precedes the first prominent rise."""
    a = np.abs(trace.rho)
    k_min = 0
    for k in range(1, a.size):
        if a[k] < a[k_min]:
            k_min = k
        elif a[k] - a[k_min] >= prominence * a[0]:
            return float(trace.t[k_min])
    return None


@_timed
def check_recoherence(chi: int = 32, dt: float = 0.1, L_main: int = 48, Ls=(24, 32, 40, 48), reach: float = 2.6) -> CheckResult:
    """t_r phenomenology from TDVP traces run to ``reach * L / u_s`` (+5)."""
    from .analysis import fit_tr_vs_L, recoherence_analysis
    from .analytic import spinon_velocity

    cache = {}

    def trace(L, d, t_max):
        key = (L, d)
        if key not in cache:
            cache[key] = _tdvp_trace(L, d, t_max, chi, dt)
        return cache[key]

    def t_r(L, d):
        u = spinon_velocity(1.0, d)
        tr = trace(L, d, round(reach * L / u + 5.0, 1))
        return recoherence_analysis(tr)[0], _onset(tr)

    deltas = (0.25, 0.5, 0.75, 1.0)
    tr_delta = {d: t_r(L_main, d) for d in deltas}
    peaks = [tr_delta[d][0] for d in deltas]
    mono = all(x is not None for x in peaks) and all(b < a for a, b in zip(peaks, peaks[1:]))

    tr_L = {L: t_r(L, 1.0) for L in Ls}
    fit = onset_fit = None
    lin = False
    if all(v[0] is not None for v in tr_L.values()):
        fit = fit_tr_vs_L([(L, v[0]) for L, v in tr_L.items()], delta=1.0)
        lin = fit.r2 >= 0.95 and abs(fit.slope_ratio - 1.0) <= 0.2
    if all(v[1] is not None for v in tr_L.values()):
        onset_fit = fit_tr_vs_L([(L, v[1]) for L, v in tr_L.items()], delta=1.0)

    u05 = spinon_velocity(1.0, 0.5)
    window = 1.2 * L_main / u05
    neg = _tdvp_trace(L_main, -0.5, round(window, 1), chi, dt)
    t_neg, why = recoherence_analysis(neg)
    # a rise still in progress at the end of the window counts as detected
    no_rec = t_neg is None and why != "revival still rising at the end of the trace"

    ok = mono and lin and no_rec
    parts = [
        f"t_r(L={L_main}) over delta {list(deltas)}: " + ", ".join("-" if x is None else f"{x:.2f}" for x in peaks) + (" decreasing" if mono else " NOT decreasing"),
    ]
    if fit is not None:
        parts.append(f"t_r(L) at delta=1: slope {fit.slope:.3f} vs 1/u_s {fit.inverse_velocity:.3f} (ratio {fit.slope_ratio:.2f}, need 0.8..1.2), R^2 {fit.r2:.4f}")
    else:
        parts.append("t_r(L) at delta=1: missing revival")
    if onset_fit is not None:
        parts.append(f"[info] revival-onset slope {onset_fit.slope:.3f} (ratio {onset_fit.slope_ratio:.2f}, R^2 {onset_fit.r2:.4f})")
    parts.append(f"delta=-0.5 up to t={window:.1f}: " + ("no recoherence" if no_rec else f"recoherence detected ({why})"))
    data = {
        "t_r_delta": {d: v[0] for d, v in tr_delta.items()},
        "onset_delta": {d: v[1] for d, v in tr_delta.items()},
        "t_r_L": {L: v[0] for L, v in tr_L.items()},
        "onset_L": {L: v[1] for L, v in tr_L.items()},
        "fit": fit.to_dict() if fit else None,
        "onset_fit": onset_fit.to_dict() if onset_fit else None,
    }
    return CheckResult("8", "recoherence phenomenology (TDVP)", ok, "; ".join(parts), data=data)


# --------------------------------------------------------------------- 9


@_timed
def check_entropy(L: int = 48, chi: int = 64) -> CheckResult:
    from .model import ModelParams
    from .tensornet import DmrgConfig, dmrg_ground_state, entanglement_entropy

    S = {}
    for d in (-1.5, -1.1, -0.9, 1.0):
        psi, _ = dmrg_ground_state(ModelParams(L=L, delta=d), DmrgConfig(chi_max=chi))
        S[d] = entanglement_entropy(psi)
    ok = S[-1.5] <= 1e-6 and S[-0.9] >= 10 * S[-1.1] and S[1.0] > 0.5
    detail = ", ".join(f"S({d:g})={v:.4g}" for d, v in S.items())
    return CheckResult("9", f"ground-state entropy, DMRG L={L}", ok, detail + " (need S(-1.5)<=1e-6, S(-0.9)>=10 S(-1.1), S(1)>0.5)", data=S)


# -------------------------------------------------------------------- 10


@_timed
def check_markov(L: int = 100, window=(30.0, 40.0), dt: float = 0.01) -> CheckResult:
    from .analytic import free_fermion_correlation_obc
    from .tcl import markov_diagnostic, memory_integral
    from .traces import uniform_grid

    corr = free_fermion_correlation_obc(L, 1.0, uniform_grid(window[1], dt))
    avg = markov_diagnostic(corr, window)
    amax = float(np.abs(memory_integral(corr)).max())
    ok = abs(avg) <= 1e-2 * amax
    detail = f"|<A>_[{window[0]:g},{window[1]:g}]| = {abs(avg):.3e} vs 1e-2*max|A| = {1e-2 * amax:.3e} (ratio {abs(avg) / amax:.2e})"
    return CheckResult("10", f"Markov diagnostic, OBC L={L}", ok, detail, data={"avg": avg, "max": amax})


# -------------------------------------------------------------------- 11


@_timed
def check_g_scaling() -> CheckResult:
    from .analytic import free_fermion_correlation_obc
    from .tcl import tcl_coherence
    from .traces import CorrelationTrace, uniform_grid

    t = uniform_grid(40.0, 0.05)
    rng = np.random.default_rng(7)
    corrs = [
        free_fermion_correlation_obc(48, 1.0, t),
        CorrelationTrace(t, rng.standard_normal(t.size) + 1j * rng.standard_normal(t.size)),
        CorrelationTrace(t, 0.25 * np.ones(t.size)),
    ]
    worst = 0.0
    for c in corrs:
        g1 = tcl_coherence(c, 0.1).gamma
        g4 = tcl_coherence(c, 0.4).gamma
        nz = g1 != 0
        worst = max(worst, float(np.abs(g4[nz] / g1[nz] - 16.0).max()))
    return CheckResult("11", "TCL exponent scaling g=0.4 vs 0.1", worst <= 1e-12, f"max |ratio - 16| = {worst:.1e} (tol 1e-12)", data={"worst": worst})


# -------------------------------------------------------------------- 12


def _identical_dirs(a: Path, b: Path) -> list[str]:
    names = sorted(p.name for p in a.iterdir() if p.name != "manifest.json")
    other = sorted(p.name for p in b.iterdir() if p.name != "manifest.json")
    diffs = [] if names == other else [f"file sets differ: {names} vs {other}"]
    _, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    diffs += mismatch + errors
    strip = lambda m: [{k: v for k, v in r.items() if k != "wall_time"} for r in m["points"]]
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    if strip(ma) != strip(mb):
        diffs.append("manifest point records differ")
    return diffs


@_timed
def check_parallel_determinism(workers=(1, 8)) -> CheckResult:
    from .runner import RunConfig, execute

    with tempfile.TemporaryDirectory() as tmp:
        dirs = []
        for w in workers:
            d = Path(tmp) / f"w{w}"
            cfg = RunConfig(backend="exact", L=8, t_max=10.0, dt=0.05, deltas=[-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0], out=str(d), workers=w)
            status = execute(cfg)
            if status:
                return CheckResult("12", "sweep determinism", False, f"sweep with {w} workers failed")
            dirs.append(d)
        diffs = _identical_dirs(*dirs)
        n = len(list(dirs[0].iterdir()))
    ok = not diffs
    return CheckResult("12", f"sweep outputs with {workers[0]} vs {workers[1]} workers", ok, "identical" if ok else f"differences: {diffs}", data={"files": n})


# --------------------------------------------------------------- registry

# key -> (check, slow, paper_scale)
CHECKS = {
    "1": (check_two_site_closed_form, False, False),
    "2": (check_full_space_vs_branches, False, False),
    "3": (check_tdvp_vs_exact, True, False),
    "4ab": (check_delta0_tower_small, False, False),
    "4c": (check_delta0_paper_scale, True, True),
    "5": (check_pbc_consistency, False, False),
    "6": (check_tcl_window, False, False),
    "7": (check_ising_saturation, True, False),
    "8": (check_recoherence, True, False),
    "9": (check_entropy, True, False),
    "10": (check_markov, False, False),
    "11": (check_g_scaling, False, False),
    "12": (check_parallel_determinism, False, False),
}


def run_checks(keys=None, slow: bool = False, paper_scale: bool = False, echo=print) -> list[CheckResult]:
    """Run the selected checks (all fast ones by default) and echo one line each."""
    results = []
    for key, (fn, is_slow, is_paper) in CHECKS.items():
        if keys is not None and key not in keys:
            continue
        if keys is None and ((is_slow and not slow) or (is_paper and not paper_scale)):
            echo(f"[SKIP] criterion {key}: {fn.__name__} (needs --slow{' --paper-scale' if is_paper else ''})")
            continue
        try:
            res = fn()
        except Exception as exc:  # report and continue with the other checks
            log.exception("check %s crashed", key)
            res = CheckResult(key, fn.__name__, False, f"error: {type(exc).__name__}: {exc}")
        echo(res.line())
        results.append(res)
    return results
