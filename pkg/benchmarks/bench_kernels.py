"""Compare the compiled and pure-Python exact-diagonalization kernels.

Usage: python benchmarks/bench_kernels.py [--L 10 12 14 16] [--repeat 3]
"""
import argparse
import timeit

import numpy as np

from spinprobe import _kernels_py

try:
    from spinprobe import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def bench(mod, L, repeat):
    t_states = min(timeit.repeat(lambda: mod.sector_states(L, L // 2), number=1, repeat=repeat))
    states = mod.sector_states(L, L // 2)
    t_coo = min(timeit.repeat(lambda: mod.xxz_coo(states, L, 1.0, 0.5, L // 2, 0.125), number=1, repeat=repeat))
    return states.size, t_states, t_coo


def same_output(L):
    s1, s2 = _kernels_c.sector_states(L, L // 2), _kernels_py.sector_states(L, L // 2)
    if not np.array_equal(s1, s2):
        return False
    a = _kernels_c.xxz_coo(s1, L, 1.0, 0.5, L // 2, 0.125)
    b = _kernels_py.xxz_coo(s2, L, 1.0, 0.5, L // 2, 0.125)
    key = lambda r: np.lexsort((r[1], r[0]))
    ka, kb = key(a), key(b)
    return all(np.array_equal(x[ka], y[kb]) for x, y in zip(a, b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=int, nargs="+", default=[10, 12, 14, 16])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels_c is None:
        print("compiled extension not available; build with `pip install -e .`")
    print(f"{'L':>3} {'dim':>7} {'kernel':>8} {'states [ms]':>12} {'coo [ms]':>10}")
    for L in args.L:
        for name, mod in (("cython", _kernels_c), ("python", _kernels_py)):
            if mod is None:
                continue
            dim, ts, tc = bench(mod, L, args.repeat)
            print(f"{L:>3} {dim:>7} {name:>8} {1e3 * ts:>12.2f} {1e3 * tc:>10.2f}")
        if _kernels_c is not None:
            print(f"    outputs identical: {same_output(L)}")


if __name__ == "__main__":
    main()
