"""Exact linear algebra over Q for integer matrices.

Everything is computed modulo word-size primes and lifted back to Q by
Chinese remaindering and rational reconstruction.  Lifted answers are
always checked with exact integer arithmetic before they are returned,
so no result depends on a lucky choice of prime:

* rank r is certified from below by a prime (rank mod p <= rank over Q)
  and from above by n - r verified kernel vectors;
* solutions are checked by substitution, and inconsistency is certified
  by a left kernel vector y with y.A = 0 and y.b != 0.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt

import numpy as np

from ._kernels import rref_mod_p

PRIMES = (
    2147483647, 2147483629, 2147483587, 2147483579, 2147483563, 2147483549,
    2147483543, 2147483497, 2147483489, 2147483477, 2147483423, 2147483399,
    2147483353, 2147483323, 2147483269, 2147483249, 2147483237, 2147483179,
    2147483171, 2147483137, 2147483123, 2147483077, 2147483069, 2147483059,
    2147483053, 2147483033, 2147483029, 2147482951, 2147482949, 2147482943,
    2147482937, 2147482921, 2147482877, 2147482873, 2147482867, 2147482859,
    2147482819, 2147482817, 2147482811, 2147482801, 2147482763, 2147482739,
    2147482697, 2147482693, 2147482681, 2147482663, 2147482661, 2147482621,
)

_INT64_SAFE = 2 ** 62


class ExactnessError(RuntimeError):
    """Raised when modular lifting does not converge within the prime budget."""


def as_matrix(a, ncols: int | None = None) -> np.ndarray:
    """Integer matrix as int64 when it fits, else as an object array."""
    arr = np.asarray(a)
    if arr.ndim == 1 and ncols is not None:
        arr = arr.reshape(-1, ncols)
    if arr.size == 0:
        shape = arr.shape if arr.ndim == 2 else (0, ncols or 0)
        return np.zeros(shape, dtype=np.int64)
    if arr.dtype == object:
        big = max(abs(int(x)) for x in arr.flat)
        if big < 2 ** 62:
            return arr.astype(np.int64)
        return arr
    return arr.astype(np.int64)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact integer product, staying in int64 when no overflow is possible."""
    if a.shape[1] == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    if a.dtype != object and b.dtype != object and a.size and b.size:
        bound = int(np.abs(a).max()) * int(np.abs(b).max()) * a.shape[1]
        if bound < _INT64_SAFE:
            return a @ b
    return as_matrix(a.astype(object) @ b.astype(object))


_CHECK_PRIMES = (
    33554393, 33554383, 33554371, 33554347, 33554341, 33554317,
    33554291, 33554273, 33554267, 33554249, 33554239, 33554221,
)


def _maxabs(a: np.ndarray) -> int:
    if a.size == 0:
        return 0
    if a.dtype == object:
        return max(abs(int(x)) for x in a.flat)
    return int(np.abs(a).max())


def product_is_zero(a: np.ndarray, b: np.ndarray) -> bool:
    """Exact test of a @ b == 0 without forming big-integer products.

    The product is checked modulo enough 25-bit primes to exceed twice the
    a-priori bound on its entries.
    """
    if a.size == 0 or b.size == 0:
        return True
    bound = _maxabs(a) * _maxabs(b) * a.shape[1]
    if bound < _INT64_SAFE and a.dtype != object and b.dtype != object:
        return not np.any(a @ b)
    need = 2 * bound + 1
    modulus = 1
    chunk = 2048
    for p in _CHECK_PRIMES:
        ap = np.mod(a, p).astype(np.int64)
        bp = np.mod(b, p).astype(np.int64)
        acc = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
        for s in range(0, a.shape[1], chunk):
            acc = (acc + ap[:, s:s + chunk] @ bp[s:s + chunk]) % p
        if np.any(acc):
            return False
        modulus *= p
        if modulus >= need:
            return True
    return not np.any(matmul(a, b))


def _ratrec(a: int, m: int):
    """Rational reconstruction of a mod m with |num|, den <= sqrt(m/2)."""
    bound = isqrt(m // 2)
    r0, r1 = m, a % m
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound:
        return None
    if s1 < 0:
        s1, r1 = -s1, -r1
    if gcd(r1, s1) != 1:
        return None
    return Fraction(r1, s1)


def _lift(x: np.ndarray, m: int):
    """Lift residues mod m to rationals; None if some entry fails.

    Integral entries come back as Python ints, the rest as Fractions.
    """
    small = isqrt(m // 2)
    if m < _INT64_SAFE and x.dtype != object:
        sym = np.where(x > m // 2, x - m, x)
        if x.size == 0 or int(np.abs(sym).max()) <= small:
            return sym.astype(object)
    xo = x.astype(object)
    sym = np.where(xo > m // 2, xo - m, xo)
    out = np.empty(x.shape, dtype=object)
    for idx, v in np.ndenumerate(sym):
        v = int(v)
        if abs(v) <= small:
            out[idx] = v
        else:
            f = _ratrec(v % m, m)
            if f is None:
                return None
            out[idx] = f
    return out


def _better(cand, best):
    """Compare (rank, pivots) signatures; good primes maximise rank, then
    give the lexicographically smallest pivot list."""
    if best is None:
        return True
    if cand[0] != best[0]:
        return cand[0] > best[0]
    return tuple(cand[1]) < tuple(best[1])


def _rational_rref(a: np.ndarray, accept, max_primes: int = len(PRIMES)):
    """Multi-modular RREF.  ``accept(rank, pivots, R)`` receives the lifted
    leading rows (object array of Fractions) and returns a result or None."""
    best = None
    acc = None
    modulus = 1
    for p in PRIMES[:max_primes]:
        red, r, piv = rref_mod_p(a, p, True)
        sig = (r, tuple(int(c) for c in piv))
        if best is not None and sig != best:
            if not _better(sig, best):
                continue
            acc = None
            modulus = 1
        best = sig
        rows = red[:r].astype(object)
        if acc is None:
            acc, modulus = rows, p
        else:
            inv = pow(modulus, -1, p)
            acc = acc + modulus * (((rows - acc) * inv) % p)
            modulus *= p
        lifted = _lift(acc, modulus)
        if lifted is None:
            continue
        result = accept(r, list(sig[1]), lifted)
        if result is not None:
            return result
    raise ExactnessError("modular lifting did not converge")


def _kernel_from_rref(n: int, pivots, R) -> np.ndarray:
    pivset = set(pivots)
    free = [c for c in range(n) if c not in pivset]
    if not free:
        return np.zeros((n, 0), dtype=np.int64)
    block = R[:, free] if len(pivots) else np.zeros((0, len(free)), dtype=object)
    if all(isinstance(v, int) for v in block.flat):
        N = np.zeros((n, len(free)), dtype=object)
        N[free, range(len(free))] = 1
        if len(pivots):
            N[pivots, :] = -block
        return as_matrix(N)
    cols = []
    for j, f in enumerate(free):
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -Fraction(block[i, j])
        den = 1
        for x in v:
            den = den * x.denominator // gcd(den, x.denominator)
        iv = [int(x * den) for x in v]
        g = 0
        for x in iv:
            g = gcd(g, x)
        cols.append([x // g for x in iv])
    return as_matrix(np.array(cols, dtype=object).T)


def nullspace(a) -> np.ndarray:
    """Integer basis (as columns) of the right kernel of ``a`` over Q."""
    a = as_matrix(a)
    m, n = a.shape
    if m == 0 or n == 0 or not np.any(a):
        return as_matrix(np.eye(n, dtype=np.int64))

    def accept(r, pivots, R):
        N = _kernel_from_rref(n, pivots, R)
        if not product_is_zero(a, N):
            return None
        return N

    return _rational_rref(a, accept)


def rank(a) -> int:
    """Exact rank over Q."""
    a = as_matrix(a)
    m, n = a.shape
    if m == 0 or n == 0 or not np.any(a):
        return 0
    if n > m:
        a = a.T
        m, n = n, m
    _, r, _ = rref_mod_p(a, PRIMES[0], False)
    if r == n:
        return r
    # the verified kernel bounds the rank from above; the prime that
    # produced it bounds it from below
    return n - nullspace(a).shape[1]


def solve(a, b):
    """One rational solution x of a x = b (b a vector), or None.

    The answer is a list of Fractions; None comes with an exact certificate
    of inconsistency.
    """
    a = as_matrix(a)
    m, n = a.shape
    b = as_matrix(np.asarray(b, dtype=object).reshape(m, 1))
    if not np.any(b):
        return [Fraction(0)] * n
    if n == 0:
        return None
    aug = as_matrix(np.concatenate([a.astype(object), b.astype(object)], axis=1))
    bobj = [int(x) for x in b[:, 0]]

    def accept(r, pivots, R):
        if pivots and pivots[-1] == n:
            # candidate inconsistency: certify with a left kernel vector
            Y = nullspace(a.T)
            for j in range(Y.shape[1]):
                y = [int(v) for v in Y[:, j]]
                if sum(yi * bi for yi, bi in zip(y, bobj)) != 0:
                    return ("none",)
            return None
        x = [Fraction(0)] * n
        for i, c in enumerate(pivots):
            x[c] = Fraction(R[i, n])
        den = 1
        for v in x:
            den = den * v.denominator // gcd(den, v.denominator)
        xi = as_matrix(np.array([[int(v * den)] for v in x], dtype=object))
        lhs = matmul(a, xi)
        if all(int(lhs[i, 0]) == den * bobj[i] for i in range(m)):
            return ("ok", x)
        return None

    res = _rational_rref(aug, accept)
    return None if res[0] == "none" else res[1]


def in_span(cols, v) -> bool:
    """Whether v lies in the Q-span of the columns of ``cols``."""
    cols = as_matrix(cols)
    if cols.shape[1] == 0:
        return not np.any(np.asarray(v, dtype=object) != 0)
    return solve(cols, v) is not None


def inverse(a):
    """Exact inverse as a matrix of Fractions; ValueError if singular."""
    a = as_matrix(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("inverse needs a square matrix")
    out = np.empty((n, n), dtype=object)
    for j in range(n):
        e = [0] * n
        e[j] = 1
        x = solve(a, e)
        if x is None:
            raise ValueError("matrix is singular")
        out[:, j] = x
    return out


def _row_integral(a) -> np.ndarray:
    """Scale each row of a rational matrix to integers (kernel and rank are
    unchanged by row scaling)."""
    a = np.asarray(a, dtype=object)
    if a.ndim != 2:
        raise ValueError("expected a matrix")
    out = np.empty(a.shape, dtype=object)
    for i in range(a.shape[0]):
        den = 1
        for x in a[i]:
            if isinstance(x, Fraction) and x.denominator != 1:
                den = den * x.denominator // gcd(den, x.denominator)
        out[i] = [int(x * den) for x in a[i]]
    return as_matrix(out)


def q_rank(a) -> int:
    """Exact rank of a matrix with rational entries."""
    a = np.asarray(a, dtype=object)
    if a.size == 0:
        return 0
    return len(q_rref(a)[1])


def q_nullspace(a) -> np.ndarray:
    """Integer kernel basis (columns) of a rational matrix."""
    a = np.asarray(a, dtype=object)
    N, _ = kernel_basis(a, a.shape[1])
    for j in range(N.shape[1]):
        den = 1
        for x in N[:, j]:
            if isinstance(x, Fraction):
                den = den * x.denominator // gcd(den, x.denominator)
        N[:, j] = [int(x * den) for x in N[:, j]]
    return as_matrix(N) if N.size else np.zeros(N.shape, dtype=np.int64)


def q_solve(a, b):
    """Rational solution of a x = b for rational a, b, or None."""
    a = np.asarray(a, dtype=object)
    b = np.asarray(b, dtype=object).reshape(-1)
    n = a.shape[1]
    if a.shape[0] == 0 or not any(x != 0 for x in b):
        return [Fraction(0)] * n
    R, piv = q_rref(np.concatenate([a, b.reshape(-1, 1)], axis=1))
    if piv and piv[-1] == n:
        return None
    x = [Fraction(0)] * n
    for i, c in enumerate(piv):
        x[c] = Fraction(R[i, n])
    return x


def _sdm(a):
    """Sparse exact matrix over QQ from an object array of ints/Fractions."""
    from sympy import QQ
    from sympy.polys.matrices.sdm import SDM
    a = np.asarray(a, dtype=object)
    m, n = a.shape
    rows = {}
    for i, j in zip(*np.nonzero(a)):
        x = a[i, j]
        rows.setdefault(int(i), {})[int(j)] = (QQ(x.numerator, x.denominator)
                                               if isinstance(x, Fraction) else QQ(int(x)))
    return SDM(rows, (m, n), QQ)


def _from_q(x):
    num, den = int(x.numerator), int(x.denominator)
    return num if den == 1 else Fraction(num, den)


def q_rref(a):
    """Exact reduced row echelon form of a rational matrix: (R, pivots).

    Uses sympy's sparse rational RREF; the matrices met in resolutions and
    Hom complexes are very sparse, where this beats the dense modular path.
    R is an object array of ints and Fractions.
    """
    a = np.asarray(a, dtype=object)
    m = a.shape[0]
    n = a.shape[1] if a.ndim == 2 else 0
    if m == 0 or n == 0:
        return np.zeros((0, n), dtype=object), []
    red, piv = _sdm(a).rref()
    R = np.zeros((len(piv), n), dtype=object)
    for i, row in red.items():
        for j, x in row.items():
            R[i, j] = _from_q(x)
    return R, list(piv)


def kernel_basis(a, n: int | None = None):
    """Right kernel of ``a`` as (N, free) with N[free] the identity, so the
    coordinates of a kernel vector v are simply v[free]."""
    a = np.asarray(a, dtype=object)
    if n is None:
        n = a.shape[1]
    if a.size == 0:
        return np.eye(n, dtype=np.int64).astype(object), list(range(n))
    R, piv = q_rref(a)
    pivset = set(piv)
    free = [c for c in range(n) if c not in pivset]
    N = np.zeros((n, len(free)), dtype=object)
    fidx = {f: j for j, f in enumerate(free)}
    for f, j in fidx.items():
        N[f, j] = 1
    for i, c in enumerate(piv):
        for f in np.nonzero(R[i])[0]:
            if f != c:
                N[c, fidx[int(f)]] = -R[i, f]
    return N, free


def complement(span_rows, n: int) -> list[int]:
    """Standard basis indices completing the row span to all of Q^n."""
    a = np.asarray(span_rows, dtype=object).reshape(-1, n)
    piv = q_rref(a)[1] if a.shape[0] else []
    pivset = set(piv)
    return [c for c in range(n) if c not in pivset]


# ----------------------------------------------------------------------
# sparse interface: matrices as {row: {col: value}} with an explicit shape

def sparse_sdm(rows: dict, shape):
    from sympy import QQ
    from sympy.polys.matrices.sdm import SDM
    conv = {}
    for i, r in rows.items():
        cr = {}
        for j, x in r.items():
            if x != 0:
                cr[j] = QQ(x.numerator, x.denominator) if isinstance(x, Fraction) else QQ(int(x))
        if cr:
            conv[i] = cr
    return SDM(conv, tuple(shape), QQ)


def sparse_rref(rows: dict, shape):
    """(reduced rows as {i: {j: value}}, pivot columns) of a sparse matrix."""
    red, piv = sparse_sdm(rows, shape).rref()
    out = {i: {j: _from_q(x) for j, x in r.items()} for i, r in red.items()}
    return out, list(piv)


def sparse_rank(rows: dict, shape) -> int:
    if not rows or 0 in shape:
        return 0
    return len(sparse_sdm(rows, shape).rref()[1])


def sparse_transpose(rows: dict) -> dict:
    out: dict = {}
    for i, r in rows.items():
        for j, x in r.items():
            out.setdefault(j, {})[i] = x
    return out


def sparse_kernel(rows: dict, shape):
    """Right kernel as (list of sparse column vectors {i: value}, free)."""
    n = shape[1]
    red, piv = sparse_rref(rows, shape) if rows else ({}, [])
    pivset = set(piv)
    free = [c for c in range(n) if c not in pivset]
    fidx = {f: k for k, f in enumerate(free)}
    vecs = [{f: 1} for f in free]
    for i, c in enumerate(piv):
        for j, x in red.get(i, {}).items():
            if j != c:
                vecs[fidx[j]][c] = -x
    return vecs, free


def sparse_inverse(rows: dict, n: int) -> dict:
    """Exact inverse of an invertible n x n sparse matrix."""
    inv = sparse_sdm(rows, (n, n)).inv()
    return {i: {j: _from_q(x) for j, x in r.items()} for i, r in inv.items()}
