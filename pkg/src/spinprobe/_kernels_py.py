"""Pure-Python fallback for :mod:`spinprobe._kernels` (same signatures, same output)."""
import numpy as np


def sector_states(L, n_down):
    x = np.arange(2**L, dtype=np.int64)
    counts = np.zeros_like(x)
    for bit in range(L):
        counts += (x >> bit) & 1
    return x[counts == n_down]


def xxz_coo(states, L, J, delta, field_site, field):
    states = np.asarray(states, dtype=np.int64)
    n = states.size
    idx = np.arange(n, dtype=np.int64)
    diag = np.zeros(n)
    rows, cols, vals = [], [], []
    for i in range(1, L):
        bi = (states >> (L - i)) & 1
        bj = (states >> (L - i - 1)) & 1
        diag += J * delta * (0.5 - bi) * (0.5 - bj)
        hop = bi != bj
        y = states[hop] ^ ((1 << (L - i)) | (1 << (L - i - 1)))
        pos = np.searchsorted(states, y)
        pos_c = np.minimum(pos, n - 1)
        ok = states[pos_c] == y
        rows.append(idx[hop][ok])
        cols.append(pos_c[ok])
        vals.append(np.full(ok.sum(), 0.5 * J))
    if field_site >= 1 and field != 0.0:
        diag += field * (0.5 - ((states >> (L - field_site)) & 1))
    nz = diag != 0.0
    rows.append(idx[nz])
    cols.append(idx[nz])
    vals.append(diag[nz])
    return (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))
