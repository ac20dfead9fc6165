"""Command-line entry point: ``spinprobe {run,sweep,compare,verify,ground}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .runner import BACKENDS, CapabilityError, build_config, compare_runs, execute, load_toml, parse_axis

log = logging.getLogger("spinprobe")

# argparse dest -> RunConfig field
_FLAG_FIELDS = {
    "backend": "backend",
    "J": "J",
    "g": "g",
    "h_z": "h_z",
    "M": "M",
    "tmax": "t_max",
    "dt": "dt",
    "chi": "chi_max",
    "tdvp_dt": "tdvp_dt",
    "cutoff": "cutoff",
    "tdvp_mode": "tdvp_mode",
    "branches": "branches",
    "dmrg_chi": "dmrg_chi",
    "dmrg_cutoff": "dmrg_cutoff",
    "ferro_initial": "ferro_initial",
    "prefactor": "prefactor",
    "dispersion": "dispersion",
    "zero_mode": "zero_mode",
    "alpha2": "alpha2",
    "prominence": "prominence",
    "transient": "transient",
    "out": "out",
    "seed": "seed",
    "workers": "workers",
}


def _model_args(p: argparse.ArgumentParser, sweep: bool):
    p.add_argument("--config", help="TOML configuration file; flags override its values")
    p.add_argument("--backend", choices=BACKENDS)
    if sweep:
        p.add_argument("--delta", help="anisotropy values: 'a:b:step' (inclusive) or 'x,y,z'")
        p.add_argument("--L", help="chain lengths: 'a:b:step' or 'x,y,z'")
        p.add_argument("--g", help="coupling values: 'a:b:step' or 'x,y,z'")
    else:
        p.add_argument("--delta", type=float)
        p.add_argument("--L", type=int)
        p.add_argument("--g", type=float)
    p.add_argument("--J", type=float)
    p.add_argument("--h-z", dest="h_z", type=float)
    p.add_argument("--M", type=int, help="coupled site (1-based); default L/2")
    p.add_argument("--tmax", type=float, help="final time of the trace")
    p.add_argument("--dt", type=float, help="output sampling step")
    p.add_argument("--chi", type=int, help="TDVP bond dimension cap")
    p.add_argument("--tdvp-dt", dest="tdvp_dt", type=float, help="TDVP step (divides --dt)")
    p.add_argument("--cutoff", type=float, help="TDVP truncation cutoff")
    p.add_argument("--tdvp-mode", dest="tdvp_mode", choices=("auto", "two", "one"))
    p.add_argument("--branches", choices=("both", "flip", "auto"), help="evolve both branches or use the spin-flip shortcut")
    p.add_argument("--dmrg-chi", dest="dmrg_chi", type=int)
    p.add_argument("--dmrg-cutoff", dest="dmrg_cutoff", type=float)
    p.add_argument("--ferro-initial", dest="ferro_initial", choices=("cat", "up"), help="initial chain state for delta <= -1")
    p.add_argument("--prefactor", type=float, help="periodic-formula prefactor c")
    p.add_argument("--dispersion", type=float, help="periodic mode energy scale")
    p.add_argument("--zero-mode", dest="zero_mode", choices=("low", "high"))
    p.add_argument("--alpha2", type=float, help="|alpha|^2 for the ising backend")
    p.add_argument("--prominence", type=float)
    p.add_argument("--transient", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--paper-scale", action="store_true", help="default L = 100 instead of 48")
    if sweep:
        p.add_argument("--workers", type=int, help="parallel workers (env SPINPROBE_WORKERS)")


def _config_from_args(args, sweep: bool):
    file_values = load_toml(args.config) if args.config else {}
    over = {field: getattr(args, dest, None) for dest, field in _FLAG_FIELDS.items()}
    if args.paper_scale:
        over["paper_scale"] = True
    if sweep:
        if args.delta is not None:
            over["deltas"] = parse_axis(args.delta, float)
        if args.L is not None:
            over["Ls"] = parse_axis(args.L, int)
        if args.g is not None:
            over["gs"] = parse_axis(args.g, float)
    else:
        over.update(delta=args.delta, L=args.L, g=args.g)
        # a single run ignores sweep axes from the config file
        for k in ("deltas", "Ls", "gs"):
            file_values.pop(k, None)
        over["workers"] = 1
    return build_config(file_values, over)


def cmd_run(args, argv, sweep=False) -> int:
    cfg = _config_from_args(args, sweep)
    status = execute(cfg, argv)
    print(f"wrote results to {cfg.out}")
    return status


def cmd_compare(args, argv) -> int:
    metrics = compare_runs(args.a, args.b, args.threshold)
    text = json.dumps(metrics, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_verify(args, argv) -> int:
    from .verify import run_checks

    keys = args.only.split(",") if args.only else None
    results = run_checks(keys, slow=args.slow, paper_scale=args.paper_scale)
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return 1 if n_fail else 0


def cmd_ground(args, argv) -> int:
    from .model import ModelParams

    p = ModelParams(L=args.L, delta=args.delta, J=args.J)
    method = args.method
    if method == "auto":
        method = "exact" if p.L <= 14 else "dmrg"
    if method == "exact":
        from .exact import MAX_L, entanglement_entropy_dense, ground_state_exact

        if p.L > MAX_L:
            raise CapabilityError(f"exact ground state supports L <= {MAX_L}")
        G, e0 = ground_state_exact(p, seed=args.seed)
        S = entanglement_entropy_dense(G.psi, p.L)
        extra = {}
    else:
        from .tensornet import DmrgConfig, dmrg_ground_state, entanglement_entropy

        G, e0 = dmrg_ground_state(p, DmrgConfig(chi_max=args.chi, cutoff=args.cutoff))
        S = entanglement_entropy(G)
        extra = {"bond_dims": G.bond_dims}
    out = {"L": p.L, "delta": p.delta, "J": p.J, "method": method, "energy": e0, "entropy": S, **extra}
    text = json.dumps(out, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinprobe", description="Qubit decoherence as a probe of the XXZ spin chain.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="coherence trace for one parameter point")
    _model_args(p, sweep=False)
    p.set_defaults(func=lambda a, v: cmd_run(a, v, sweep=False))

    p = sub.add_parser("sweep", help="coherence traces over a parameter grid")
    _model_args(p, sweep=True)
    p.set_defaults(func=lambda a, v: cmd_run(a, v, sweep=True))

    p = sub.add_parser("compare", help="deviation metrics between two run directories")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--threshold", type=float, default=1e-3, help="divergence threshold")
    p.add_argument("--out", help="write metrics JSON here")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="cross-check the backends against each other")
    p.add_argument("--slow", action="store_true", help="include the tensor-network checks (minutes to an hour)")
    p.add_argument("--paper-scale", action="store_true", help="include the L = 100 TDVP check")
    p.add_argument("--only", help="comma-separated check keys, e.g. 1,2,4ab")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("ground", help="ground-state energy and middle-bond entropy")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--method", choices=("auto", "exact", "dmrg"), default="auto")
    p.add_argument("--chi", type=int, default=128)
    p.add_argument("--cutoff", type=float, default=1e-12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ground)
    return ap


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, argv)
    except CapabilityError as exc:
        print(f"spinprobe: capability error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as exc:
        print(f"spinprobe: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
