"""Directed finite-dimensional algebras and their representations.

A directed algebra has vertices 0..n-1, one per exceptional object, with
Hom(P_i, P_j) = H(i, j) covariant: H(i, j) = 0 for i > j and H(i, i) is
spanned by the identity (basis index 0).  Composition b o a of a in H(i, j)
and b in H(j, k) is given by structure constants

    mult(i, j, k)[b, a, c] = coefficient of basis c of H(i, k).

A representation R assigns a vector space R(v) = Hom(P_v, X) to every
vertex; a in H(u, v) acts by precomposition R(v) -> R(u).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations_with_replacement, product as iproduct
from typing import Sequence

import numpy as np

from . import linalg


class AlgebraError(ValueError):
    pass


class DirectedAlgebra:
    def __init__(self, name: str, labels: Sequence, dims, mult, order=None):
        self.name = name
        self.labels = tuple(labels)
        self.n = len(self.labels)
        self.dims = np.asarray(dims, dtype=np.int64)
        self._mult = mult                   # callable (i, j, k) -> array, or dict
        self._cache: dict = {}
        self.order = tuple(order) if order is not None else tuple(range(self.n))

    def __repr__(self):
        return f"DirectedAlgebra({self.name!r}, {self.n} vertices)"

    def dim(self, i: int, j: int) -> int:
        return int(self.dims[i, j])

    def mult(self, i: int, j: int, k: int) -> np.ndarray:
        key = (i, j, k)
        m = self._cache.get(key)
        if m is None:
            if self.dim(i, j) == 0 or self.dim(j, k) == 0 or self.dim(i, k) == 0:
                m = np.zeros((self.dim(j, k), self.dim(i, j), self.dim(i, k)), dtype=np.int64)
            elif callable(self._mult):
                m = self._mult(i, j, k)
            else:
                m = self._mult[key]
            self._cache[key] = m
        return m

    def identity(self, i: int) -> np.ndarray:
        v = np.zeros(self.dim(i, i), dtype=object)
        v[0] = 1
        return v

    def compose(self, i: int, j: int, k: int, b, a) -> np.ndarray:
        """b o a for a in H(i, j), b in H(j, k)."""
        m = self.mult(i, j, k)
        if m.size == 0:
            return np.zeros(self.dim(i, k), dtype=object)
        t = np.tensordot(np.asarray(b, dtype=object), m, axes=(0, 0))
        return np.tensordot(np.asarray(a, dtype=object), t, axes=(0, 0))

    def post_matrix(self, i: int, j: int, k: int, b) -> np.ndarray:
        """Matrix of a -> b o a, H(i, j) -> H(i, k); shape (dim H(i,k), dim H(i,j))."""
        m = self.mult(i, j, k)
        return np.tensordot(np.asarray(b, dtype=object), m, axes=(0, 0)).T

    def pre_matrix(self, i: int, j: int, k: int, a) -> np.ndarray:
        """Matrix of b -> b o a, H(j, k) -> H(i, k); shape (dim H(i,k), dim H(j,k))."""
        m = self.mult(i, j, k)
        return np.tensordot(np.asarray(a, dtype=object), m, axes=(0, 1)).T

    def arrows(self, v: int, w: int) -> list[np.ndarray]:
        """Basis vectors of H(v, w) spanning a complement of the
        decomposable maps (those factoring through a third vertex)."""
        key = ("arrows", v, w)
        got = self._cache.get(key)
        if got is None:
            d = self.dim(v, w)
            rows = []
            if v != w and d:
                for x in range(self.n):
                    if x in (v, w) or not (self.dim(v, x) and self.dim(x, w)):
                        continue
                    m = self.mult(v, x, w)
                    rows.extend(m.reshape(-1, d).tolist())
            idx = linalg.complement(rows, d) if v != w else []
            got = [_unit(d, i) for i in idx]
            self._cache[key] = got
        return got

    # -- checks ----------------------------------------------------------
    def is_directed(self) -> bool:
        for i in range(self.n):
            if self.dim(i, i) != 1:
                return False
        ordpos = {v: p for p, v in enumerate(self.order)}
        for i, j in iproduct(range(self.n), repeat=2):
            if i != j and self.dim(i, j) and self.dim(j, i):
                return False
            if i != j and self.dim(i, j) and ordpos[i] > ordpos[j]:
                return False
        return True

    def check_identity(self) -> bool:
        for i, j in iproduct(range(self.n), repeat=2):
            d = self.dim(i, j)
            for a in range(d):
                e = np.zeros(d, dtype=object)
                e[a] = 1
                if not np.array_equal(self.compose(i, j, j, self.identity(j), e), e):
                    return False
                if not np.array_equal(self.compose(i, i, j, e, self.identity(i)), e):
                    return False
        return True

    def check_associative(self) -> bool:
        n = self.n
        for i, j, k, l in iproduct(range(n), repeat=4):
            if not (self.dim(i, j) and self.dim(j, k) and self.dim(k, l)):
                continue
            for a, b, c in iproduct(range(self.dim(i, j)), range(self.dim(j, k)),
                                    range(self.dim(k, l))):
                ea = _unit(self.dim(i, j), a)
                eb = _unit(self.dim(j, k), b)
                ec = _unit(self.dim(k, l), c)
                lhs = self.compose(i, k, l, ec, self.compose(i, j, k, eb, ea))
                rhs = self.compose(i, j, l, self.compose(j, k, l, ec, eb), ea)
                if not np.array_equal(lhs, rhs):
                    return False
        return True


def _unit(n: int, i: int) -> np.ndarray:
    v = np.zeros(n, dtype=object)
    v[i] = 1
    return v


# --------------------------------------------------------------------------
# constructors

def _monomials(nvars: int, deg: int):
    out = []
    for combo in combinations_with_replacement(range(nvars), deg):
        e = [0] * nvars
        for c in combo:
            e[c] += 1
        out.append(tuple(e))
    return sorted(out, reverse=True)


def monomial_algebra(name: str, nvars: int, nvert: int, labels=None) -> DirectedAlgebra:
    """H(i, j) = degree j - i polynomials in ``nvars`` commuting variables."""
    monos = {d: _monomials(nvars, d) for d in range(nvert)}
    index = {d: {m: k for k, m in enumerate(ms)} for d, ms in monos.items()}
    dims = np.zeros((nvert, nvert), dtype=np.int64)
    for i in range(nvert):
        for j in range(i, nvert):
            dims[i, j] = len(monos[j - i])

    def mult(i, j, k):
        out = np.zeros((dims[j, k], dims[i, j], dims[i, k]), dtype=np.int64)
        for b, mb in enumerate(monos[k - j]):
            for a, ma in enumerate(monos[j - i]):
                c = index[k - i][tuple(x + y for x, y in zip(ma, mb))]
                out[b, a, c] = 1
        return out

    labels = labels or [f"O({k})" for k in range(nvert)]
    return DirectedAlgebra(name, labels, dims, mult)


def beilinson(n: int) -> DirectedAlgebra:
    """End of O, O(1), ..., O(n) on P^n."""
    return monomial_algebra(f"p{n}_beilinson", n + 1, n + 1)


def kronecker(m: int) -> DirectedAlgebra:
    """Two vertices with m arrows."""
    return monomial_algebra(f"kronecker{m}", m, 2, ["P0", "P1"])


def linear_quiver(n: int) -> DirectedAlgebra:
    """Path algebra of 0 -> 1 -> ... -> n-1 without relations."""
    return monomial_algebra(f"a{n}", 1, n, [f"P{k}" for k in range(n)])


def point_algebra() -> DirectedAlgebra:
    return DirectedAlgebra("point", ["pt"], np.ones((1, 1), dtype=np.int64),
                           {(0, 0, 0): np.ones((1, 1, 1), dtype=np.int64)})


_TENSOR_CACHE: dict = {}


def tensor_op(a: DirectedAlgebra, b: DirectedAlgebra) -> DirectedAlgebra:
    """A (x) B^op: vertex (i, j) stands for the tensor-projective Ae_i (x) e_jB.

    H((i,j), (k,l)) = H_A(i,k) (x) H_B(l,j), basis index alpha * dim + beta.
    """
    key = (id(a), id(b))
    if key in _TENSOR_CACHE:
        return _TENSOR_CACHE[key][2]
    verts = [(i, j) for i in range(a.n) for j in range(b.n)]
    idx = {v: k for k, v in enumerate(verts)}
    n = len(verts)
    dims = np.zeros((n, n), dtype=np.int64)
    for (i, j), (k, l) in iproduct(verts, repeat=2):
        dims[idx[(i, j)], idx[(k, l)]] = a.dim(i, k) * b.dim(l, j)

    def mult(p, q, r):
        (i, j), (k, l), (m, nn) = verts[p], verts[q], verts[r]
        ma = a.mult(i, k, m)            # [b1, a1, c1]
        mb = b.mult(nn, l, j)           # B-parts compose in the opposite order
        out = np.einsum("xac,ybd->xyabcd", ma, np.transpose(mb, (1, 0, 2)))
        s = out.shape
        return out.reshape(s[0] * s[1], s[2] * s[3], s[4] * s[5])

    order = sorted(range(n), key=lambda k: (verts[k][0] - verts[k][1], verts[k]))
    alg = DirectedAlgebra(f"{a.name}(x){b.name}^op", [f"{a.labels[i]}|{b.labels[j]}"
                                                      for i, j in verts], dims, mult, order)
    alg.factors = (a, b)
    alg.pairs = tuple(verts)
    alg.pair_index = idx
    _TENSOR_CACHE[key] = (a, b, alg)
    return alg


# --------------------------------------------------------------------------
# representations

@dataclass
class Rep:
    """R(v) = Hom(P_v, X); act[(u, v)][a] is the matrix R(v) -> R(u) of a in H(u, v)."""
    algebra: DirectedAlgebra
    dims: tuple[int, ...]
    act: dict = field(default_factory=dict)

    def action(self, u: int, v: int, a_vec) -> np.ndarray:
        m = self.act.get((u, v))
        if m is None or m.size == 0:
            return np.zeros((self.dims[u], self.dims[v]), dtype=object)
        return np.tensordot(np.asarray(a_vec, dtype=object), m, axes=(0, 0))

    def total_dim(self) -> int:
        return sum(self.dims)


def projective_rep(alg: DirectedAlgebra, l: int) -> Rep:
    dims = tuple(alg.dim(v, l) for v in range(alg.n))
    act = {}
    for u, v in iproduct(range(alg.n), repeat=2):
        if alg.dim(u, v) and dims[v] and dims[u]:
            m = alg.mult(u, v, l)                         # [phi, a, c]
            act[(u, v)] = np.transpose(m, (1, 2, 0)).astype(object)   # [a, c, phi]
    return Rep(alg, dims, act)


def simple_rep(alg: DirectedAlgebra, l: int) -> Rep:
    dims = tuple(int(v == l) for v in range(alg.n))
    act = {(l, l): np.ones((1, 1, 1), dtype=object)}
    return Rep(alg, dims, act)


def diagonal_rep(alg: DirectedAlgebra) -> Rep:
    """The diagonal bimodule as a representation of A (x) A^op:
    (k, l) -> H(k, l), with (alpha (x) beta) acting by phi -> beta o phi o alpha."""
    a, b = alg.factors
    if a is not b:
        raise AlgebraError("diagonal needs A (x) A^op")
    verts = alg.pairs
    dims = tuple(a.dim(k, l) for k, l in verts)
    act = {}
    for p, q in iproduct(range(alg.n), repeat=2):
        (k, l), (k2, l2) = verts[p], verts[q]
        # arrows (k,l) -> (k2,l2): alpha in H(k,k2), beta in H(l2,l); acts R(k2,l2) -> R(k,l)
        if not (alg.dim(p, q) and dims[p] and dims[q]):
            continue
        da, db = a.dim(k, k2), a.dim(l2, l)
        m = np.zeros((da * db, dims[p], dims[q]), dtype=object)
        for x in range(da):
            ea = _unit(da, x)
            pre = a.pre_matrix(k, k2, l2, ea)           # H(k2,l2) -> H(k,l2)
            for y in range(db):
                eb = _unit(db, y)
                post = a.post_matrix(k, l2, l, eb)      # H(k,l2) -> H(k,l)
                m[x * db + y] = post.dot(pre)
        act[(p, q)] = m
    return Rep(alg, dims, act)


def serre_rep(alg: DirectedAlgebra) -> Rep:
    """The dual bimodule D(A) on A (x) A^op: (k, l) -> H(l, k)^*."""
    a, b = alg.factors
    if a is not b:
        raise AlgebraError("Serre bimodule needs A (x) A^op")
    verts = alg.pairs
    dims = tuple(a.dim(l, k) for k, l in verts)
    act = {}
    for p, q in iproduct(range(alg.n), repeat=2):
        (k, l), (k2, l2) = verts[p], verts[q]
        if not (alg.dim(p, q) and dims[p] and dims[q]):
            continue
        # alpha in H(k,k2), beta in H(l2,l) acts on psi in H(l2,k2)^* by
        # (psi . (alpha, beta))(x) = psi(alpha o x o beta) for x in H(l,k)
        da, db = a.dim(k, k2), a.dim(l2, l)
        m = np.zeros((da * db, dims[p], dims[q]), dtype=object)
        for x in range(da):
            ea = _unit(da, x)
            post = a.post_matrix(l, k, k2, ea)          # H(l,k) -> H(l,k2)
            for y in range(db):
                eb = _unit(db, y)
                pre = a.pre_matrix(l2, l, k2, eb)       # H(l,k2) -> H(l2,k2)
                m[x * db + y] = (pre.dot(post)).T
        act[(p, q)] = m
    return Rep(alg, dims, act)


def check_rep(rep: Rep) -> bool:
    """Identity acts trivially and (b o a) acts as act(a) act(b)."""
    alg = rep.algebra
    for v in range(alg.n):
        if rep.dims[v]:
            if not np.array_equal(rep.action(v, v, alg.identity(v)),
                                  np.eye(rep.dims[v], dtype=np.int64).astype(object)):
                return False
    for u, v, w in iproduct(range(alg.n), repeat=3):
        if not (alg.dim(u, v) and alg.dim(v, w) and rep.dims[u] and rep.dims[w]):
            continue
        for x, y in iproduct(range(alg.dim(u, v)), range(alg.dim(v, w))):
            ea, eb = _unit(alg.dim(u, v), x), _unit(alg.dim(v, w), y)
            lhs = rep.action(u, w, alg.compose(u, v, w, eb, ea))
            rhs = rep.action(u, v, ea).dot(rep.action(v, w, eb))
            if not np.array_equal(lhs, rhs):
                return False
    return True


def _generators(rep: Rep) -> list[tuple[int, np.ndarray]]:
    """Elements whose images span R/rad R, vertex by vertex."""
    alg = rep.algebra
    gens = []
    for v in range(alg.n):
        d = rep.dims[v]
        if d == 0:
            continue
        rows = []
        for w in range(alg.n):
            if w == v or not alg.dim(v, w) or not rep.dims[w]:
                continue
            for a in alg.arrows(v, w):
                rows.extend(rep.action(v, w, a).T.tolist())
        for i in linalg.complement(rows, d):
            gens.append((v, _unit(d, i)))
    return gens


def _cover(rep: Rep, gens):
    """Kernel representation of the cover sum_g P_{v_g} -> R.

    Kernel bases are pivot-normalised, so coordinates are read off at the
    free rows instead of solved for.
    """
    alg = rep.algebra
    offs = {}
    for u in range(alg.n):
        o, lst = 0, []
        for g, (vg, _) in enumerate(gens):
            lst.append(o)
            o += alg.dim(u, vg)
        offs[u] = (lst, o)
    kern, free, kdims = {}, {}, []
    for u in range(alg.n):
        lst, total = offs[u]
        E = np.zeros((rep.dims[u], total), dtype=object)
        for g, (vg, r) in enumerate(gens):
            for a in range(alg.dim(u, vg)):
                E[:, lst[g] + a] = rep.action(u, vg, _unit(alg.dim(u, vg), a)).dot(r)
        N, fr = linalg.kernel_basis(E, total)
        kern[u], free[u] = N, fr
        kdims.append(N.shape[1])
    act = {}
    for u, w in iproduct(range(alg.n), repeat=2):
        if not (alg.dim(u, w) and kdims[u] and kdims[w]):
            continue
        lst_u, tot_u = offs[u]
        lst_w, tot_w = offs[w]
        m = np.zeros((alg.dim(u, w), kdims[u], kdims[w]), dtype=object)
        fu = free[u]
        for a in range(alg.dim(u, w)):
            ea = _unit(alg.dim(u, w), a)
            img = np.zeros((tot_u, kdims[w]), dtype=object)
            for g, (vg, _) in enumerate(gens):
                du, dw = alg.dim(u, vg), alg.dim(w, vg)
                if du and dw:
                    img[lst_u[g]:lst_u[g] + du] = alg.pre_matrix(u, w, vg, ea).dot(
                        kern[w][lst_w[g]:lst_w[g] + dw])
            m[a] = img[fu]
        act[(u, w)] = m
    return Rep(alg, tuple(kdims), act), kern, offs


def resolve_module(rep: Rep, max_length: int = 64):
    """Minimal projective resolution.

    Returns levels; level 0 is a list of (vertex, element of R(vertex)),
    level s >= 1 a list of (vertex, {g: vector in H(vertex, v_g)}) giving
    the differential into the generators g of level s - 1.
    """
    levels = []
    cur = rep
    gens = _generators(cur)
    levels.append([(v, r) for v, r in gens])
    for _ in range(max_length):
        if not gens:
            return levels[:-1] if not levels[-1] else levels
        kernel, kern, offs = _cover(cur, gens)
        if kernel.total_dim() == 0:
            return levels
        new = _generators(kernel)
        level = []
        for v, r in new:
            coords = kern[v].dot(r)
            lst, _ = offs[v]
            comp = {}
            for g, (vg, _) in enumerate(gens):
                d = cur.algebra.dim(v, vg)
                if d:
                    vec = coords[lst[g]:lst[g] + d]
                    if any(vec):
                        comp[g] = vec
            level.append((v, comp))
        levels.append(level)
        cur, gens = kernel, new
    raise AlgebraError("resolution did not terminate")
