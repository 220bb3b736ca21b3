"""Modular row reduction kernels.

Two interchangeable backends compute the reduced row echelon form of an
int64 matrix modulo a prime p < 2**31 (so products fit in int64).  The
backend is chosen by the FMTWIST_BACKEND environment variable
("numba" or "numpy"); numba is used when it is importable and no
override is set.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False


def _modinv(a, p):
    # extended Euclid; a is nonzero mod p
    t, new_t, r, new_r = 0, 1, p, a % p
    while new_r:
        q = r // new_r
        t, new_t = new_t, t - q * new_t
        r, new_r = new_r, r - q * new_r
    return t % p


def rref_mod_p_numpy(a: np.ndarray, p: int, full: bool = True):
    """Row reduce a copy of ``a`` mod p.

    Returns (reduced matrix, rank, pivot columns).  With ``full=False``
    only the entries below each pivot are cleared, which suffices for rank.
    """
    a = np.mod(a, p).astype(np.int64)
    m, n = a.shape
    pivots = []
    r = 0
    for c in range(n):
        if r == m:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        k = r + nz[0]
        if k != r:
            a[[r, k]] = a[[k, r]]
        inv = _modinv(int(a[r, c]), p)
        a[r, c:] = a[r, c:] * inv % p
        rows = np.nonzero(a[:, c])[0] if full else r + 1 + np.nonzero(a[r + 1:, c])[0]
        rows = rows[rows != r]
        if rows.size:
            f = a[rows, c][:, None]
            a[rows, c:] = (a[rows, c:] - f * a[r, c:][None, :]) % p
        pivots.append(c)
        r += 1
    return a, r, np.array(pivots, dtype=np.int64)


if HAS_NUMBA:

    @njit(cache=True)
    def _modinv_nb(a, p):
        t, new_t, r, new_r = 0, 1, p, a % p
        while new_r != 0:
            q = r // new_r
            t, new_t = new_t, t - q * new_t
            r, new_r = new_r, r - q * new_r
        return t % p

    @njit(cache=True)
    def _rref_nb(a, p, full):
        m, n = a.shape
        pivots = np.empty(min(m, n), dtype=np.int64)
        r = 0
        for c in range(n):
            if r == m:
                break
            k = -1
            for i in range(r, m):
                if a[i, c] != 0:
                    k = i
                    break
            if k < 0:
                continue
            if k != r:
                for j in range(n):
                    tmp = a[r, j]
                    a[r, j] = a[k, j]
                    a[k, j] = tmp
            inv = _modinv_nb(a[r, c], p)
            for j in range(c, n):
                a[r, j] = a[r, j] * inv % p
            start = 0 if full else r + 1
            for i in range(start, m):
                if i == r:
                    continue
                f = a[i, c]
                if f == 0:
                    continue
                for j in range(c, n):
                    a[i, j] = (a[i, j] - f * a[r, j]) % p
            pivots[r] = c
            r += 1
        return r, pivots[:r]

    def rref_mod_p_numba(a: np.ndarray, p: int, full: bool = True):
        a = np.ascontiguousarray(np.mod(a, p).astype(np.int64))
        r, piv = _rref_nb(a, np.int64(p), full)
        return a, int(r), piv


def backend() -> str:
    choice = os.environ.get("FMTWIST_BACKEND", "").strip().lower()
    if choice == "numpy" or not HAS_NUMBA:
        return "numpy"
    return "numba"


def rref_mod_p(a: np.ndarray, p: int, full: bool = True):
    if backend() == "numba":
        return rref_mod_p_numba(a, p, full)
    return rref_mod_p_numpy(a, p, full)
