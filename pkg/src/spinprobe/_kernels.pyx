# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for exact-diagonalization basis and Hamiltonian assembly.

Bit convention: site i (1-based) lives at bit L - i; a set bit means spin down.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline int _popcount(long long x) noexcept nogil:
    cdef int c = 0
    while x:
        x &= x - 1
        c += 1
    return c


def sector_states(int L, int n_down):
    """All L-bit integers with ``n_down`` set bits, ascending."""
    cdef long long dim = 1LL << L
    cdef long long x
    cdef Py_ssize_t n = 0
    out = np.empty(dim, dtype=np.int64)
    cdef long long[::1] o = out
    for x in range(dim):
        if _popcount(x) == n_down:
            o[n] = x
            n += 1
    return out[:n].copy()


cdef inline Py_ssize_t _find(const long long* states, Py_ssize_t n, long long x) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = n - 1, mid
    while lo <= hi:
        mid = (lo + hi) >> 1
        if states[mid] == x:
            return mid
        elif states[mid] < x:
            lo = mid + 1
        else:
            hi = mid - 1
    return -1


cdef bint _lin_tables(const long long[::1] states, int L, long long[::1] ja, long long[::1] jb):
    """Fill two-half lookup tables so that ``index(x) = jb[x >> h] + ja[x & mask]``.

    Valid when every state has the same popcount (a magnetization sector);
    returns False otherwise.
    """
    cdef int h = L // 2
    cdef long long mask = (1LL << h) - 1
    cdef Py_ssize_t n = states.shape[0], a
    cdef long long x, low, hi, prev = -1
    cdef int p0 = _popcount(states[0]) if n else 0
    cdef long long[64] count
    cdef int k
    for a in range(n):
        if _popcount(states[a]) != p0:
            return False
    for k in range(64):
        count[k] = 0
    for low in range(mask + 1):
        k = _popcount(low)
        ja[low] = count[k]
        count[k] += 1
    for a in range(n):
        x = states[a]
        hi = x >> h
        if hi != prev:
            jb[hi] = a - ja[x & mask]
            prev = hi
    return True


def xxz_coo(const long long[::1] states, int L, double J, double delta,
            int field_site, double field):
    """COO triplets of the open XXZ chain plus ``field * Sz_{field_site}``.

    Off-diagonal moves that leave the basis are dropped, so ``states`` should be
    closed under the hopping (a full space or a fixed-magnetization sector).
    Sector bases use lookup tables; other bases fall back to binary search.
    """
    cdef Py_ssize_t n = states.shape[0]
    cdef Py_ssize_t cap = n * L
    rows = np.empty(cap, dtype=np.int64)
    cols = np.empty(cap, dtype=np.int64)
    vals = np.empty(cap, dtype=np.float64)
    cdef long long[::1] r = rows
    cdef long long[::1] c = cols
    cdef double[::1] v = vals
    cdef int h = L // 2
    cdef long long mask = (1LL << h) - 1
    ja_arr = np.zeros(mask + 1, dtype=np.int64)
    jb_arr = np.zeros((1LL << (L - h)), dtype=np.int64)
    cdef long long[::1] ja = ja_arr
    cdef long long[::1] jb = jb_arr
    cdef bint lin = n > 0 and _lin_tables(states, L, ja, jb)
    cdef const long long* sp = &states[0] if n else NULL
    cdef Py_ssize_t a, b, k = 0
    cdef int i, bi, bj
    cdef long long x, y
    cdef double diag, si, sj
    for a in range(n):
        x = states[a]
        diag = 0.0
        for i in range(1, L):
            bi = (x >> (L - i)) & 1
            bj = (x >> (L - i - 1)) & 1
            si = 0.5 - bi
            sj = 0.5 - bj
            diag += J * delta * si * sj
            if bi != bj:
                y = x ^ ((1LL << (L - i)) | (1LL << (L - i - 1)))
                if lin:
                    b = jb[y >> h] + ja[y & mask]
                else:
                    b = _find(sp, n, y)
                if b >= 0:
                    r[k] = a
                    c[k] = b
                    v[k] = 0.5 * J
                    k += 1
        if field_site >= 1 and field != 0.0:
            diag += field * (0.5 - ((x >> (L - field_site)) & 1))
        if diag != 0.0:
            r[k] = a
            c[k] = a
            v[k] = diag
            k += 1
    return rows[:k].copy(), cols[:k].copy(), vals[:k].copy()
