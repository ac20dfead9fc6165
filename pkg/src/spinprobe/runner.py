"""Run configuration, backend dispatch, capability gating and sweep orchestration."""
from __future__ import annotations

import dataclasses
import itertools
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .analysis import ObservableReport, compare_traces, frequency_analysis, recoherence_analysis
from .analytic import (
    DEFAULT_DISPERSION,
    DEFAULT_PREFACTOR,
    IsingAmplitudes,
    determinant_coherence_delta0,
    free_fermion_coherence_pbc,
    free_fermion_entropy_obc,
    ising_coherence,
)
from .model import ModelParams
from .traces import CoherenceTrace, uniform_grid

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

BACKENDS = ("exact", "tdvp", "tcl-exact", "tcl-tdvp", "analytic-pbc", "analytic-obc-det", "ising")
DESK_L = 48
PAPER_L = 100
WORKERS_ENV = "SPINPROBE_WORKERS"


class CapabilityError(ValueError):
    """Backend/parameter combination the selected backend cannot handle."""


# ------------------------------------------------------------------ config


@dataclass
class RunConfig:
    backend: str = "tdvp"
    # model
    J: float = 1.0
    delta: float = 0.0
    L: int | None = None  # None -> 48, or 100 with paper_scale
    g: float = 0.25
    h_z: float = 0.0
    M: int | None = None
    # time grid of the output trace
    t_max: float = 60.0
    dt: float = 0.05
    # tensor network
    chi_max: int = 128
    tdvp_dt: float | None = None  # None -> dt
    cutoff: float = 1e-10
    tdvp_mode: str = "auto"
    branches: str = "auto"
    dmrg_chi: int = 128
    dmrg_cutoff: float = 1e-12
    dmrg_max_sweeps: int = 40
    # initial state for delta <= -1
    ferro_initial: str = "cat"
    # analytic backends
    prefactor: float = DEFAULT_PREFACTOR
    dispersion: float = DEFAULT_DISPERSION
    zero_mode: str = "low"
    alpha2: float = 0.5
    # analysis
    prominence: float = 0.05
    transient: float = 10.0
    # sweep axes (None -> the single model value)
    deltas: list | None = None
    Ls: list | None = None
    gs: list | None = None
    # bookkeeping
    out: str = "runs/spinprobe"
    seed: int = 0
    workers: int | None = None
    paper_scale: bool = False

    def resolved(self) -> "RunConfig":
        """Copy with defaults that depend on other fields filled in."""
        c = dataclasses.replace(self)
        if c.L is None:
            c.L = PAPER_L if c.paper_scale else DESK_L
        if c.tdvp_dt is None:
            c.tdvp_dt = c.dt
        if c.workers is None:
            c.workers = 1
        return c

    def points(self) -> list[ModelParams]:
        c = self.resolved()
        deltas = c.deltas if c.deltas is not None else [c.delta]
        Ls = c.Ls if c.Ls is not None else [c.L]
        gs = c.gs if c.gs is not None else [c.g]
        if not deltas or not Ls or not gs:
            raise ValueError("sweep axes must be non-empty")
        out = []
        for L, g, d in itertools.product(Ls, gs, deltas):
            M = c.M if c.M is not None and c.Ls is None else None
            out.append(ModelParams(L=int(L), delta=float(d), J=c.J, g=float(g), h_z=c.h_z, M=M))
        return out

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# TOML section -> {key in file: RunConfig field}
_SECTIONS = {
    "model": {"J": "J", "delta": "delta", "L": "L", "g": "g", "h_z": "h_z", "M": "M"},
    "time": {"t_max": "t_max", "dt": "dt"},
    "tdvp": {"chi_max": "chi_max", "dt": "tdvp_dt", "cutoff": "cutoff", "mode": "tdvp_mode", "branches": "branches"},
    "dmrg": {"chi_max": "dmrg_chi", "cutoff": "dmrg_cutoff", "max_sweeps": "dmrg_max_sweeps"},
    "analytic": {"prefactor": "prefactor", "dispersion": "dispersion", "zero_mode": "zero_mode", "alpha2": "alpha2"},
    "analysis": {"prominence": "prominence", "transient": "transient"},
    "sweep": {"delta": "deltas", "L": "Ls", "g": "gs"},
}
_TOP = {"backend", "out", "seed", "workers", "ferro_initial", "paper_scale"}


def parse_axis(text, cast=float) -> list:
    """Sweep axis from ``"a:b:step"`` (inclusive), ``"x,y,z"``, a scalar or a list."""
    if isinstance(text, (list, tuple)):
        return [cast(v) for v in text]
    if isinstance(text, (int, float)):
        return [cast(text)]
    s = str(text).strip()
    if ":" in s:
        parts = s.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:step, got {s!r}")
        a, b, step = (float(p) for p in parts)
        if step <= 0 or b < a:
            raise ValueError(f"bad range {s!r}")
        n = int(math.floor((b - a) / step + 1e-9))
        vals = [a + i * step for i in range(n + 1)]
        # round away accumulated binary noise so tags and CSV rows are stable
        return [cast(round(v, 12)) for v in vals]
    return [cast(v) for v in s.split(",") if v.strip()]


def load_toml(path) -> dict:
    """Flatten a TOML config into ``RunConfig`` field names."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    flat = {}
    for key, val in raw.items():
        if isinstance(val, dict):
            if key not in _SECTIONS:
                raise ValueError(f"unknown config section [{key}]")
            for k, v in val.items():
                if k not in _SECTIONS[key]:
                    raise ValueError(f"unknown key {k!r} in [{key}]")
                flat[_SECTIONS[key][k]] = v
        elif key in _TOP:
            flat[key] = val
        else:
            raise ValueError(f"unknown top-level config key {key!r}")
    for name, cast in (("deltas", float), ("Ls", int), ("gs", float)):
        if name in flat:
            flat[name] = parse_axis(flat[name], cast)
    return flat


def build_config(file_values: dict | None = None, overrides: dict | None = None, env=None) -> RunConfig:
    """Merge defaults < TOML file < ``SPINPROBE_WORKERS`` < explicit overrides."""
    env = os.environ if env is None else env
    values = dict(file_values or {})
    if env.get(WORKERS_ENV):
        values["workers"] = int(env[WORKERS_ENV])
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    names = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(values) - names
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    return RunConfig(**values)


# --------------------------------------------------------------- gating


def check_capability(cfg: RunConfig, params: ModelParams) -> None:
    """Reject unsupported combinations before any computation."""
    from .exact import MAX_L

    b = cfg.backend
    if b not in BACKENDS:
        raise CapabilityError(f"unknown backend {b!r}; choose from {', '.join(BACKENDS)}")
    if not cfg.t_max > 0 or not cfg.dt > 0 or cfg.dt > cfg.t_max:
        raise CapabilityError("need 0 < dt <= t_max")
    if cfg.ferro_initial not in ("cat", "up"):
        raise CapabilityError("ferro_initial must be 'cat' or 'up'")
    if b in ("exact", "tcl-exact") and params.L > MAX_L:
        raise CapabilityError(f"backend {b} supports L <= {MAX_L}, got L={params.L}")
    if b in ("analytic-pbc", "analytic-obc-det") and params.delta != 0.0:
        raise CapabilityError(f"backend {b} is exact only at delta = 0, got delta={params.delta}")
    if b == "ising":
        if abs(params.delta) <= 1.0:
            raise CapabilityError(f"ising backend describes |delta| >> 1, got delta={params.delta}")
        if not 0.0 <= cfg.alpha2 <= 1.0:
            raise CapabilityError("alpha2 must lie in [0, 1]")
    if b in ("tdvp", "tcl-tdvp"):
        tdt = cfg.tdvp_dt if cfg.tdvp_dt is not None else cfg.dt
        n = cfg.dt / tdt
        if tdt <= 0 or abs(n - round(n)) > 1e-9 or round(n) < 1:
            raise CapabilityError(f"output dt={cfg.dt} must be a multiple of the TDVP step {tdt}")
        if cfg.chi_max < 1 or cfg.dmrg_chi < 1:
            raise CapabilityError("bond dimensions must be positive")
        if cfg.tdvp_mode not in ("auto", "two", "one"):
            raise CapabilityError(f"unknown TDVP mode {cfg.tdvp_mode!r}")
        if cfg.branches not in ("both", "flip", "auto"):
            raise CapabilityError(f"unknown branch mode {cfg.branches!r}")
    if b == "analytic-pbc" and cfg.zero_mode not in ("low", "high"):
        raise CapabilityError("zero_mode must be 'low' or 'high'")


# --------------------------------------------------------------- compute


def _tn_configs(cfg: RunConfig):
    from .tensornet import DmrgConfig, TdvpConfig

    dmrg = DmrgConfig(chi_max=cfg.dmrg_chi, cutoff=cfg.dmrg_cutoff, max_sweeps=cfg.dmrg_max_sweeps)
    tdvp = TdvpConfig(dt=cfg.tdvp_dt, chi_max=cfg.chi_max, cutoff=cfg.cutoff, mode=cfg.tdvp_mode)
    return dmrg, tdvp


def _phase(t, h_z):
    return np.exp(-1j * h_z * np.asarray(t))


def compute_point(cfg: RunConfig, params: ModelParams):
    """Return ``(trace, entropy, diagnostics)`` for one parameter point."""
    cfg = cfg.resolved()
    check_capability(cfg, params)
    t = uniform_grid(cfg.t_max, cfg.dt)
    b = cfg.backend
    diag: dict = {}
    entropy = None
    if b in ("exact", "tcl-exact"):
        from .exact import coherence_exact, correlation_exact, entanglement_entropy_dense, ground_state_exact

        G, e0 = ground_state_exact(params, ferro_initial="up", seed=cfg.seed)
        entropy = entanglement_entropy_dense(G.psi, params.L)
        init = ground_state_exact(params, ferro_initial=cfg.ferro_initial, seed=cfg.seed)
        diag["E0"] = e0
        if b == "exact":
            trace = coherence_exact(params, t, ferro_initial=cfg.ferro_initial, ground=init)
        else:
            from .tcl import tcl_coherence

            corr = correlation_exact(params, t, ferro_initial=cfg.ferro_initial)
            res = tcl_coherence(corr, params.g)
            trace = CoherenceTrace(t, res.trace.rho * _phase(t, params.h_z), backend=b)
            diag["C0"] = float(corr.C[0].real)
    elif b in ("tdvp", "tcl-tdvp"):
        from .tensornet import coherence_tdvp, dmrg_ground_state, entanglement_entropy, initial_state_mps
        from .tensornet import two_time_correlation_mps

        dcfg, tcfg = _tn_configs(cfg)
        G, e0 = dmrg_ground_state(params, dcfg)
        entropy = entanglement_entropy(G)
        diag.update(E0=e0, ground_bond_dims=G.bond_dims)
        init = initial_state_mps(params, dcfg, cfg.ferro_initial, ground=(G, e0))
        if b == "tdvp":
            trace = coherence_tdvp(params, t, dcfg, tcfg, ferro_initial=cfg.ferro_initial, branches=cfg.branches, ground=init)
        else:
            from .tcl import tcl_coherence

            corr = two_time_correlation_mps(params, t, dcfg, tcfg, ground=init)
            res = tcl_coherence(corr, params.g)
            trace = CoherenceTrace(t, res.trace.rho * _phase(t, params.h_z), backend=b)
            diag["C0"] = float(corr.C[0].real)
            diag["discarded_weight"] = corr.meta.get("discarded_weight")
    elif b == "analytic-pbc":
        tr = free_fermion_coherence_pbc(
            params.L, params.J, params.g, t, prefactor=cfg.prefactor, dispersion=cfg.dispersion, zero_mode=cfg.zero_mode
        )
        trace = CoherenceTrace(t, tr.rho * _phase(t, params.h_z), backend=b, meta=tr.meta)
        diag["entropy_note"] = "periodic formula has no open-chain bipartition"
    elif b == "analytic-obc-det":
        trace = determinant_coherence_delta0(params.L, params.J, params.g, t, M=params.M, h_z=params.h_z)
        entropy = free_fermion_entropy_obc(params.L, params.J)
    elif b == "ising":
        a2 = cfg.alpha2
        amps = IsingAmplitudes(math.sqrt(a2), math.sqrt(1 - a2))
        tr = ising_coherence(amps, params.g, t)
        trace = CoherenceTrace(t, tr.rho * _phase(t, params.h_z), backend=b, meta=tr.meta)
        if params.delta > 0:
            p = np.array([a2, 1 - a2])
            p = p[p > 0]
            entropy = float(-(p * np.log(p)).sum()) + 0.0
        else:
            entropy = 0.0
    else:  # pragma: no cover - guarded by check_capability
        raise CapabilityError(b)
    for k, v in trace.meta.items():
        if k != "wall_time":
            diag.setdefault(k, v)
    trace.backend = b
    return trace, entropy, diag


def observables(trace: CoherenceTrace, entropy, cfg: RunConfig) -> ObservableReport:
    t_r, why_t = recoherence_analysis(trace, cfg.prominence)
    omega, why_w = frequency_analysis(trace, cfg.transient)
    notes = {}
    if t_r is None or why_t != "ok":
        notes["t_r"] = why_t
    if omega is None:
        notes["omega"] = why_w
    return ObservableReport(t_r=t_r, omega=omega, entropy=entropy, notes=notes)


# ------------------------------------------------------------- persistence


def point_tag(p: ModelParams) -> str:
    return f"L{p.L}_delta{p.delta:+.6g}_g{p.g:.6g}"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    return x


def _params_dict(p: ModelParams) -> dict:
    return {"L": p.L, "delta": p.delta, "J": p.J, "g": p.g, "h_z": p.h_z, "M": p.M}


def _run_point(cfg: RunConfig, params: ModelParams, out: str) -> dict:
    """Compute one point and write its CSV and JSON. Runs inside workers."""
    from threadpoolctl import threadpool_limits

    start = time.perf_counter()
    tag = point_tag(params)
    row = {"tag": tag, "params": _params_dict(params)}
    try:
        with threadpool_limits(1):
            trace, entropy, diag = compute_point(cfg, params)
        report = observables(trace, entropy, cfg)
    except Exception as exc:  # recorded in the manifest; other points continue
        log.exception("point %s failed", tag)
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}", wall_time=time.perf_counter() - start)
        return row
    csv_name, rep_name = f"coherence_{tag}.csv", f"report_{tag}.json"
    trace.write_csv(Path(out) / csv_name)
    body = {
        "backend": cfg.backend,
        "params": row["params"],
        "observables": report.to_dict(),
        "diagnostics": diag,
    }
    with open(Path(out) / rep_name, "w") as fh:
        json.dump(_jsonable(body), fh, indent=2, sort_keys=True)
        fh.write("\n")
    row.update(
        status="ok",
        csv=csv_name,
        report=rep_name,
        observables=report.to_dict(),
        wall_time=time.perf_counter() - start,
    )
    return row


def _init_worker():
    from threadpoolctl import threadpool_limits

    # keep the limit alive for the life of the worker process
    global _LIMITS
    _LIMITS = threadpool_limits(1)


def _fmt(v):
    return "" if v is None else f"{v:.17g}"


def execute(cfg: RunConfig, argv=None) -> int:
    """Run every point of ``cfg`` and write traces, reports, observables and manifest.

    Returns 0 if every point succeeded, 1 otherwise. Capability errors are
    raised before any computation or file creation.
    """
    cfg = cfg.resolved()
    points = cfg.points()
    for p in points:
        check_capability(cfg, p)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    workers = max(1, min(int(cfg.workers), len(points)))
    if workers == 1:
        rows = [_run_point(cfg, p, str(out)) for p in points]
    else:
        with ProcessPoolExecutor(max_workers=workers, mp_context=get_context("spawn"), initializer=_init_worker) as ex:
            futs = [ex.submit(_run_point, cfg, p, str(out)) for p in points]
            rows = [f.result() for f in futs]
    with open(out / "observables.csv", "w", newline="") as fh:
        fh.write("delta,t_r,omega,entropy,L,g\n")
        for r in rows:
            o = r.get("observables") or {}
            p = r["params"]
            fh.write(
                f"{p['delta']:.17g},{_fmt(o.get('t_r'))},{_fmt(o.get('omega'))},{_fmt(o.get('entropy'))},{p['L']},{p['g']:.17g}\n"
            )
    manifest = {
        "spinprobe_version": __version__,
        "kernels": kernels.BACKEND,
        "numpy_version": np.__version__,
        "command": list(argv) if argv is not None else None,
        "config": cfg.to_dict(),
        "workers": workers,
        "points": rows,
        "wall_time": time.perf_counter() - start,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2)
        fh.write("\n")
    failed = [r["tag"] for r in rows if r["status"] != "ok"]
    if failed:
        log.error("%d point(s) failed: %s", len(failed), ", ".join(failed))
    return 1 if failed else 0


# ---------------------------------------------------------------- compare


def _load_points(directory) -> dict:
    path = Path(directory) / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"{directory}: no manifest.json")
    with open(path) as fh:
        man = json.load(fh)
    pts = {}
    for r in man["points"]:
        if r.get("status") == "ok":
            pts[r["tag"]] = (r, CoherenceTrace.read_csv(Path(directory) / r["csv"], backend=man["config"]["backend"]))
    return pts


def compare_runs(dir_a, dir_b, threshold: float = 1e-3) -> dict:
    """``compare_traces`` metrics for every parameter point present in both runs."""
    a, b = _load_points(dir_a), _load_points(dir_b)
    only_a, only_b = sorted(set(a) - set(b)), sorted(set(b) - set(a))
    if only_a or only_b:
        raise ValueError(f"mismatched sweeps: only in {dir_a}: {only_a}; only in {dir_b}: {only_b}")
    metrics = {}
    for tag in sorted(a):
        ta, tb = a[tag][1], b[tag][1]
        metrics[tag] = compare_traces(ta, tb, threshold).to_dict()
    return metrics
