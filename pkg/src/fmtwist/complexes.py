"""Bounded complexes of projectives over a directed algebra.

Terms in degree n are a dict label -> vertex; labels are tuples of ints and
keep a fixed sort order, so every construction is deterministic.  The
differential d[n][t][s] is the coefficient vector of the component
P_s -> P_t, an element of H(v_s, v_t).  Chain maps use the same layout:
blocks[n][t][s] for s in degree n of the source and t in degree n + k of
the target.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct

import numpy as np

from . import linalg
from .algebra import DirectedAlgebra, Rep, projective_rep, resolve_module


class ComplexError(ValueError):
    pass


def _nz(v) -> bool:
    return any(x != 0 for x in v)


def _vec(n: int) -> np.ndarray:
    return np.zeros(n, dtype=object)


def _add_block(table: dict, n: int, t, s, vec):
    """table[n][t][s] += vec, dropping blocks that cancel."""
    row = table.setdefault(n, {}).setdefault(t, {})
    cur = row.get(s)
    new = vec if cur is None else cur + vec
    if _nz(new):
        row[s] = new
    else:
        row.pop(s, None)
        if not row:
            del table[n][t]


def _clean(table: dict) -> dict:
    out = {}
    for n, rows in table.items():
        for t, row in rows.items():
            for s, v in row.items():
                if _nz(v):
                    out.setdefault(n, {}).setdefault(t, {})[s] = v
    return out


def _norm(x):
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    return x


class ProjComplex:
    """A bounded complex of projectives over ``algebra``."""

    def __init__(self, algebra: DirectedAlgebra, terms: dict, d: dict | None = None,
                 name: str = ""):
        self.algebra = algebra
        self.terms = {n: dict(sorted(t.items())) for n, t in terms.items() if t}
        self.d = _clean(d or {})
        self.name = name

    # -- basic access ----------------------------------------------------
    def degrees(self) -> list[int]:
        return sorted(self.terms)

    def vertex(self, n: int, lab) -> int:
        return self.terms[n][lab]

    def labels(self, n: int) -> list:
        return list(self.terms.get(n, {}))

    def size(self) -> int:
        return sum(len(t) for t in self.terms.values())

    def is_zero(self) -> bool:
        return not self.terms

    def comp(self, n: int, t, s):
        return self.d.get(n, {}).get(t, {}).get(s)

    def __repr__(self):
        shape = {n: len(t) for n, t in sorted(self.terms.items())}
        return f"ProjComplex({self.name or 'X'}, {shape})"

    def __eq__(self, other):
        if not isinstance(other, ProjComplex):
            return NotImplemented
        if self.algebra is not other.algebra or self.terms != other.terms:
            return False
        return _blocks_equal(self.d, other.d)

    def signature(self):
        """Hashable literal description (terms and differential)."""
        terms = tuple((n, tuple(t.items())) for n, t in sorted(self.terms.items()))
        d = tuple((n, t, s, tuple(_norm(x) for x in v))
                  for n in sorted(self.d) for t in sorted(self.d[n])
                  for s, v in sorted(self.d[n][t].items()))
        return terms, d

    def vertex_counts(self) -> dict[int, list[int]]:
        out = {}
        for n, t in self.terms.items():
            c = [0] * self.algebra.n
            for v in t.values():
                c[v] += 1
            out[n] = c
        return out

    def k_class(self) -> list[int]:
        """Class in K_0 = Z^vertices: sum over terms of (-1)^n [P_v]."""
        c = [0] * self.algebra.n
        for n, t in self.terms.items():
            for v in t.values():
                c[v] += (-1) ** (n % 2)
        return c

    # -- checks ------------------------------------------------------------
    def d_squared_zero(self) -> bool:
        alg = self.algebra
        for n in self.degrees():
            acc: dict = {}
            for t, row in self.d.get(n, {}).items():
                vt = self.vertex(n + 1, t)
                for u, row2 in self.d.get(n + 1, {}).items():
                    b = row2.get(t)
                    if b is None:
                        continue
                    vu = self.vertex(n + 2, u)
                    for s, a in row.items():
                        vs = self.vertex(n, s)
                        _add_block(acc, 0, u, s, alg.compose(vs, vt, vu, b, a))
            if acc.get(0):
                return False
        return True

    def check(self):
        for n, rows in self.d.items():
            for t, row in rows.items():
                if t not in self.terms.get(n + 1, {}):
                    raise ComplexError(f"differential targets unknown term {t} in degree {n+1}")
                for s, v in row.items():
                    if s not in self.terms.get(n, {}):
                        raise ComplexError(f"differential from unknown term {s} in degree {n}")
                    if len(v) != self.algebra.dim(self.vertex(n, s), self.vertex(n + 1, t)):
                        raise ComplexError("coefficient vector has the wrong length")
        if not self.d_squared_zero():
            raise ComplexError("d o d != 0")
        return self


def _blocks_equal(a: dict, b: dict) -> bool:
    a, b = _clean(a), _clean(b)
    if set(a) != set(b):
        return False
    for n in a:
        if set(a[n]) != set(b[n]):
            return False
        for t in a[n]:
            if set(a[n][t]) != set(b[n][t]):
                return False
            for s in a[n][t]:
                if any(x != y for x, y in zip(a[n][t][s], b[n][t][s])):
                    return False
    return True


class ChainMap:
    """A graded map X -> Y of degree ``degree`` (blocks[n][t][s], s in X^n,
    t in Y^{n+degree}).  A chain map in the strict sense has degree 0 and
    commutes with the differentials; homotopy classes of maps of other
    degrees are elements of Hom complex homology."""

    def __init__(self, src: ProjComplex, tgt: ProjComplex, blocks: dict | None = None,
                 degree: int = 0):
        if src.algebra is not tgt.algebra:
            raise ComplexError("maps need a common algebra")
        self.src, self.tgt, self.degree = src, tgt, degree
        self.blocks = _clean(blocks or {})

    def __repr__(self):
        nb = sum(len(r) for rows in self.blocks.values() for r in rows.values())
        return f"ChainMap({self.src!r} -> {self.tgt!r}, deg {self.degree}, {nb} blocks)"

    def get(self, n, t, s):
        return self.blocks.get(n, {}).get(t, {}).get(s)

    def is_zero(self) -> bool:
        return not self.blocks

    def __add__(self, other: "ChainMap") -> "ChainMap":
        out = {n: {t: dict(r) for t, r in rows.items()} for n, rows in self.blocks.items()}
        for n, rows in other.blocks.items():
            for t, r in rows.items():
                for s, v in r.items():
                    _add_block(out, n, t, s, v)
        return ChainMap(self.src, self.tgt, out, self.degree)

    def scale(self, c) -> "ChainMap":
        if c == 0:
            return ChainMap(self.src, self.tgt, {}, self.degree)
        return ChainMap(self.src, self.tgt,
                        {n: {t: {s: v * c for s, v in r.items()} for t, r in rows.items()}
                         for n, rows in self.blocks.items()}, self.degree)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __matmul__(self, other: "ChainMap") -> "ChainMap":
        return compose(self, other)

    def defect(self) -> "ChainMap":
        """d_Y f - (-1)^k f d_X; zero exactly for chain maps (k = 0) and
        cocycles of the Hom complex."""
        X, Y, k = self.src, self.tgt, self.degree
        alg = X.algebra
        out: dict = {}
        sign = -1 if k % 2 else 1
        for n, rows in self.blocks.items():
            for t, r in rows.items():
                vt = Y.vertex(n + k, t)
                for u, b in ((u, row[t]) for u, row in Y.d.get(n + k, {}).items() if t in row):
                    vu = Y.vertex(n + k + 1, u)
                    for s, a in r.items():
                        _add_block(out, n, u, s, alg.compose(X.vertex(n, s), vt, vu, b, a))
        for n, rows in X.d.items():
            for t, r in rows.items():
                vt = X.vertex(n + 1, t)
                for u, b in self.blocks.get(n + 1, {}).items():
                    fb = b.get(t)
                    if fb is None:
                        continue
                    vu = Y.vertex(n + 1 + k, u)
                    for s, a in r.items():
                        _add_block(out, n, u, s,
                                   -sign * alg.compose(X.vertex(n, s), vt, vu, fb, a))
        return ChainMap(X, Y, out, k + 1)

    def is_chain_map(self) -> bool:
        return self.defect().is_zero()


def compose(f: ChainMap, g: ChainMap) -> ChainMap:
    """f o g."""
    if g.tgt is not f.src and g.tgt.terms != f.src.terms:
        raise ComplexError("maps are not composable")
    alg = f.src.algebra
    X, M, Y = g.src, g.tgt, f.tgt
    out: dict = {}
    for n, rows in g.blocks.items():
        m = n + g.degree
        frows = f.blocks.get(m, {})
        if not frows:
            continue
        for t, r in rows.items():
            vt = M.vertex(m, t)
            for u, fr in frows.items():
                b = fr.get(t)
                if b is None:
                    continue
                vu = Y.vertex(m + f.degree, u)
                for s, a in r.items():
                    _add_block(out, n, u, s, alg.compose(X.vertex(n, s), vt, vu, b, a))
    return ChainMap(X, Y, out, f.degree + g.degree)


def identity_map(X: ProjComplex) -> ChainMap:
    blocks = {n: {lab: {lab: X.algebra.identity(v)} for lab, v in t.items()}
              for n, t in X.terms.items()}
    return ChainMap(X, X, blocks)


def zero_map(X: ProjComplex, Y: ProjComplex, degree: int = 0) -> ChainMap:
    return ChainMap(X, Y, {}, degree)


# ----------------------------------------------------------------------
# Hom complexes

class HomComplex:
    """Hom^n(X, Y) = prod_p Hom(X^p, Y^{p+n}) with D(f) = d_Y f - (-1)^n f d_X.

    Elements are sparse coordinate dicts {index: value}; index maps
    (p, s, t, b) to a position, b running over the basis of H(v_s, v_t).
    """

    def __init__(self, X: ProjComplex, Y: ProjComplex):
        if X.algebra is not Y.algebra:
            raise ComplexError("algebra mismatch")
        self.X, self.Y = X, Y
        self._space: dict = {}
        self._mat: dict = {}
        self._hom: dict = {}

    def degree_range(self) -> range:
        if self.X.is_zero() or self.Y.is_zero():
            return range(0)
        xd, yd = self.X.degrees(), self.Y.degrees()
        return range(yd[0] - xd[-1], yd[-1] - xd[0] + 1)

    def space(self, n: int):
        """(offsets {(p, s, t): (offset, dim)}, total dimension)."""
        got = self._space.get(n)
        if got is None:
            alg = self.X.algebra
            offs, o = {}, 0
            for p in self.X.degrees():
                yt = self.Y.terms.get(p + n)
                if not yt:
                    continue
                for s, vs in self.X.terms[p].items():
                    for t, vt in yt.items():
                        d = alg.dim(vs, vt)
                        if d:
                            offs[(p, s, t)] = (o, d)
                            o += d
            got = (offs, o)
            self._space[n] = got
        return got

    def dim(self, n: int) -> int:
        return self.space(n)[1]

    def matrix(self, n: int) -> dict:
        """Sparse rows of D^n: Hom^n -> Hom^{n+1}."""
        got = self._mat.get(n)
        if got is not None:
            return got
        X, Y, alg = self.X, self.Y, self.X.algebra
        src, _ = self.space(n)
        dst, _ = self.space(n + 1)
        rows: dict = {}
        sign = -(-1 if n % 2 else 1)

        def put(key, mat, col0, c):
            o, _ = dst[key]
            for i in range(mat.shape[0]):
                for j in range(mat.shape[1]):
                    x = mat[i, j]
                    if x != 0:
                        r = rows.setdefault(o + i, {})
                        r[col0 + j] = r.get(col0 + j, 0) + c * x

        for (p, s, t), (o, m) in src.items():
            vs, vt = X.vertex(p, s), Y.vertex(p + n, t)
            for u, row in Y.d.get(p + n, {}).items():
                c = row.get(t)
                if c is not None:
                    put((p, s, u), alg.post_matrix(vs, vt, Y.vertex(p + n + 1, u), c), o, 1)
            for s2 in X.terms.get(p - 1, {}):
                a = X.comp(p - 1, s, s2)
                if a is not None and (p - 1, s2, t) in dst:
                    put((p - 1, s2, t), alg.pre_matrix(X.vertex(p - 1, s2), vs, vt, a), o, sign)
        rows = {i: {j: x for j, x in r.items() if x != 0} for i, r in rows.items()}
        rows = {i: r for i, r in rows.items() if r}
        self._mat[n] = rows
        return rows

    def rank(self, n: int) -> int:
        return linalg.sparse_rank(self.matrix(n), (self.dim(n + 1), self.dim(n)))

    def homology_dim(self, n: int) -> int:
        return self.dim(n) - self.rank(n) - self.rank(n - 1)

    def homology_dims(self) -> dict[int, int]:
        out = {}
        for n in self.degree_range():
            h = self.homology_dim(n)
            if h:
                out[n] = h
        return out

    # -- elements ----------------------------------------------------------
    def to_vector(self, f: ChainMap) -> dict:
        offs, _ = self.space(f.degree)
        out = {}
        for p, rows in f.blocks.items():
            for t, r in rows.items():
                for s, v in r.items():
                    o, _ = offs[(p, s, t)]
                    for b, x in enumerate(v):
                        if x != 0:
                            out[o + b] = x
        return out

    def from_vector(self, n: int, vec: dict) -> ChainMap:
        offs, _ = self.space(n)
        blocks: dict = {}
        for (p, s, t), (o, m) in offs.items():
            vals = [vec.get(o + b, 0) for b in range(m)]
            if any(x != 0 for x in vals):
                blocks.setdefault(p, {}).setdefault(t, {})[s] = np.array(vals, dtype=object)
        return ChainMap(self.X, self.Y, blocks, n)

    def apply(self, n: int, vec: dict) -> dict:
        out: dict = {}
        for i, r in self.matrix(n).items():
            acc = 0
            for j, x in r.items():
                y = vec.get(j)
                if y is not None:
                    acc += x * y
            if acc != 0:
                out[i] = acc
        return out

    def homology(self, n: int) -> "Homology":
        h = self._hom.get(n)
        if h is None:
            h = Homology(self, n)
            self._hom[n] = h
        return h


class Homology:
    """H^n of a Hom complex with cocycle representatives and a coordinate
    map sending a cocycle to its class."""

    def __init__(self, hom: HomComplex, n: int):
        self.hom, self.n = hom, n
        N = hom.dim(n)
        Z, _ = linalg.sparse_kernel(hom.matrix(n), (hom.dim(n + 1), N)) if N else ([], [])
        B = list(linalg.sparse_transpose(hom.matrix(n - 1)).values())
        cols = B + Z
        M: dict = {}
        for j, v in enumerate(cols):
            for i, x in v.items():
                M.setdefault(i, {})[j] = x
        _, piv = linalg.sparse_rref(M, (N, len(cols))) if cols else ({}, [])
        sel = [cols[j] for j in piv]
        self.reps = [cols[j] for j in piv if j >= len(B)]
        self.dim = len(self.reps)
        self.zdim = len(sel)
        # rows R0 on which the selected basis is invertible
        WT = {k: dict(v) for k, v in enumerate(sel)}
        _, rows0 = linalg.sparse_rref(WT, (len(sel), N)) if sel else ({}, [])
        self._rows0 = rows0
        sq = {}
        for i, r in enumerate(rows0):
            for k, v in enumerate(sel):
                x = v.get(r)
                if x is not None:
                    sq.setdefault(i, {})[k] = x
        self._inv = linalg.sparse_inverse(sq, len(sel)) if sel else {}
        self._nb = len(sel) - self.dim

    def rep_map(self, i: int) -> ChainMap:
        return self.hom.from_vector(self.n, self.reps[i])

    def coords(self, f) -> list:
        """Class of the cocycle f (ChainMap or vector) in the basis of reps."""
        vec = self.hom.to_vector(f) if isinstance(f, ChainMap) else f
        if self.hom.apply(self.n, vec):
            raise ComplexError("not a cocycle")
        c = [vec.get(r, 0) for r in self._rows0]
        out = []
        for k in range(self._nb, self.zdim):
            row = self._inv.get(k, {})
            out.append(_norm(sum(x * c[j] for j, x in row.items())) if row else 0)
        return out

    def combo(self, coeffs) -> ChainMap:
        vec: dict = {}
        for c, v in zip(coeffs, self.reps):
            if c:
                for i, x in v.items():
                    vec[i] = vec.get(i, 0) + c * x
        return self.hom.from_vector(self.n, {i: x for i, x in vec.items() if x != 0})


def hom_complex(X: ProjComplex, Y: ProjComplex) -> HomComplex:
    return HomComplex(X, Y)


def map_class(f: ChainMap, hom: HomComplex | None = None) -> list:
    hom = hom or HomComplex(f.src, f.tgt)
    return hom.homology(f.degree).coords(f)


def is_nullhomotopic(f: ChainMap, hom: HomComplex | None = None) -> bool:
    return not any(map_class(f, hom))


def homotopic(f: ChainMap, g: ChainMap, hom: HomComplex | None = None) -> bool:
    return is_nullhomotopic(f - g, hom)


# ----------------------------------------------------------------------
# constructions

def projective(alg: DirectedAlgebra, v: int, degree: int = 0, label=(0,)) -> ProjComplex:
    return ProjComplex(alg, {degree: {label: v}}, {}, name=f"P{v}")


def zero_complex(alg: DirectedAlgebra) -> ProjComplex:
    return ProjComplex(alg, {}, {}, name="0")


def shift(X: ProjComplex, k: int) -> ProjComplex:
    """X[k]^n = X^{n+k}, differential times (-1)^k."""
    sg = -1 if k % 2 else 1
    terms = {n - k: t for n, t in X.terms.items()}
    d = {n - k: {t: {s: sg * v for s, v in r.items()} for t, r in rows.items()}
         for n, rows in X.d.items()}
    return ProjComplex(X.algebra, terms, d, name=f"{X.name}[{k}]" if k else X.name)


def shift_map(f: ChainMap, k: int, src=None, tgt=None) -> ChainMap:
    """f[k] between X[k] and Y[k] (same blocks, degrees moved)."""
    src = src or shift(f.src, k)
    tgt = tgt or shift(f.tgt, k)
    return ChainMap(src, tgt, {n - k: rows for n, rows in f.blocks.items()}, f.degree)


def direct_sum(X: ProjComplex, Y: ProjComplex) -> ProjComplex:
    terms, d = {}, {}
    for tag, Z in ((0, X), (1, Y)):
        for n, t in Z.terms.items():
            for lab, v in t.items():
                terms.setdefault(n, {})[(tag,) + lab] = v
        for n, rows in Z.d.items():
            for t, r in rows.items():
                for s, v in r.items():
                    d.setdefault(n, {}).setdefault((tag,) + t, {})[(tag,) + s] = v
    return ProjComplex(X.algebra, terms, d, name=f"({X.name}+{Y.name})")


class Cone(ProjComplex):
    """Mapping cone C = X[1] + Y of f: X -> Y, d = [[-d_X, 0], [f, d_Y]].

    Terms carry the prefix (0,) for X and (1,) for Y; ``inc`` is Y -> C and
    ``proj`` is C -> X[1], completing the distinguished triangle."""

    def __init__(self, f: ChainMap, name: str = ""):
        if f.degree != 0:
            raise ComplexError("cone needs a degree 0 map")
        X, Y = f.src, f.tgt
        terms, d = {}, {}
        for n, t in X.terms.items():
            for lab, v in t.items():
                terms.setdefault(n - 1, {})[(0,) + lab] = v
        for n, t in Y.terms.items():
            for lab, v in t.items():
                terms.setdefault(n, {})[(1,) + lab] = v
        for n, rows in X.d.items():
            for t, r in rows.items():
                for s, v in r.items():
                    d.setdefault(n - 1, {}).setdefault((0,) + t, {})[(0,) + s] = -v
        for n, rows in f.blocks.items():
            for t, r in rows.items():
                for s, v in r.items():
                    d.setdefault(n - 1, {}).setdefault((1,) + t, {})[(0,) + s] = v
        for n, rows in Y.d.items():
            for t, r in rows.items():
                for s, v in r.items():
                    d.setdefault(n, {}).setdefault((1,) + t, {})[(1,) + s] = v
        super().__init__(X.algebra, terms, d, name=name or f"cone({X.name}->{Y.name})")
        self.map = f
        alg = X.algebra
        self.inc = ChainMap(Y, self, {n: {(1,) + lab: {lab: alg.identity(v)} for lab, v in t.items()}
                                      for n, t in Y.terms.items()})
        X1 = shift(X, 1)
        self.x_shift = X1
        self.proj = ChainMap(self, X1, {n - 1: {lab: {(0,) + lab: alg.identity(v)}
                                                for lab, v in t.items()}
                                        for n, t in X.terms.items()})


def cone(f: ChainMap, name: str = "") -> Cone:
    return Cone(f, name)


def cone_map(f: ChainMap, f2: ChainMap, a: ChainMap, b: ChainMap,
             C: Cone | None = None, C2: Cone | None = None) -> ChainMap:
    """Map of cones induced by a strictly commuting square b f = f2 a:
    cone(f) -> cone(f2), acting as a[1] + b."""
    C = C or cone(f)
    C2 = C2 or cone(f2)
    blocks: dict = {}
    for n, rows in a.blocks.items():
        for t, r in rows.items():
            for s, v in r.items():
                blocks.setdefault(n - 1, {}).setdefault((0,) + t, {})[(0,) + s] = v
    for n, rows in b.blocks.items():
        for t, r in rows.items():
            for s, v in r.items():
                blocks.setdefault(n, {}).setdefault((1,) + t, {})[(1,) + s] = v
    return ChainMap(C, C2, blocks)


def subcomplex(X: ProjComplex, keep, name: str = "") -> tuple[ProjComplex, ChainMap]:
    """Terms satisfying keep(n, label, vertex), assumed closed under d;
    returns the subcomplex and its inclusion."""
    terms = {n: {lab: v for lab, v in t.items() if keep(n, lab, v)} for n, t in X.terms.items()}
    d = {n: {t: {s: v for s, v in r.items() if s in terms.get(n, {})}
             for t, r in rows.items() if t in terms.get(n + 1, {})}
         for n, rows in X.d.items()}
    for n, rows in X.d.items():
        for t, r in rows.items():
            if t not in terms.get(n + 1, {}) and any(s in terms.get(n, {}) for s in r):
                raise ComplexError("kept terms are not closed under the differential")
    S = ProjComplex(X.algebra, terms, d, name=name)
    alg = X.algebra
    inc = ChainMap(S, X, {n: {lab: {lab: alg.identity(v)} for lab, v in t.items()}
                          for n, t in S.terms.items()})
    return S, inc


def quotient(X: ProjComplex, drop, name: str = "") -> tuple[ProjComplex, ChainMap]:
    """Quotient by a subcomplex (the terms where drop(...) holds) and the
    projection X -> X/S."""
    terms = {n: {lab: v for lab, v in t.items() if not drop(n, lab, v)}
             for n, t in X.terms.items()}
    d = {n: {t: {s: v for s, v in r.items() if s in terms.get(n, {})}
             for t, r in rows.items() if t in terms.get(n + 1, {})}
         for n, rows in X.d.items()}
    Q = ProjComplex(X.algebra, terms, d, name=name)
    alg = X.algebra
    proj = ChainMap(X, Q, {n: {lab: {lab: alg.identity(v)} for lab, v in t.items()}
                           for n, t in Q.terms.items()})
    return Q, proj


# ----------------------------------------------------------------------
# minimal models

def _scalar_inv(c):
    if c == 1 or c == -1:
        return c
    return Fraction(1) / c


def minimize(X: ProjComplex, track: bool = True, name: str = ""):
    """Cancel every isomorphic component P_v -> P_v of the differential
    (Gaussian elimination).  Over a directed algebra the result is the
    minimal complex, unique up to isomorphism.

    Returns (M, iota, pi) with iota: M -> X and pi: X -> M homotopy inverse
    chain maps and pi iota = 1_M; iota and pi are None when track is False.
    """
    import heapq
    alg = X.algebra
    terms = {n: dict(t) for n, t in X.terms.items()}
    d = {n: {t: dict(r) for t, r in rows.items()} for n, rows in X.d.items()}
    col: dict = {}
    heap = []
    for n, rows in d.items():
        for t, r in rows.items():
            for s, v in r.items():
                col.setdefault(n, {}).setdefault(s, set()).add(t)
                if terms[n][s] == terms[n + 1][t]:
                    heap.append((n, s, t))
    heapq.heapify(heap)
    iota = {n: {u: {u: alg.identity(v)} for u, v in t.items()} for n, t in terms.items()} \
        if track else None
    pi = {n: {u: {u: alg.identity(v)} for u, v in t.items()} for n, t in terms.items()} \
        if track else None
    pi_inv = {n: {u: {u} for u in t} for n, t in terms.items()} if track else None

    def setd(n, t, s, vec):
        row = d.setdefault(n, {}).setdefault(t, {})
        if _nz(vec):
            new = s not in row
            row[s] = vec
            if new:
                col.setdefault(n, {}).setdefault(s, set()).add(t)
            if terms[n][s] == terms[n + 1][t]:
                heapq.heappush(heap, (n, s, t))
        else:
            if s in row:
                del row[s]
                col[n][s].discard(t)
            if not row:
                del d[n][t]

    while heap:
        n, s, t = heapq.heappop(heap)
        c_vec = d.get(n, {}).get(t, {}).get(s)
        if c_vec is None:
            continue
        v = terms[n][s]
        cinv = _scalar_inv(c_vec[0])
        gamma = {u: w for u, w in d[n][t].items() if u != s}       # deg n -> t
        delta = {tp: d[n][tp][s] for tp in col[n][s] if tp != t}   # s -> deg n+1
        for tp, dl in delta.items():
            vt = terms[n + 1][tp]
            b = dl * cinv
            for u, g in gamma.items():
                vu = terms[n][u]
                cur = d[n][tp].get(u)
                upd = -alg.compose(vu, v, vt, b, g)
                setd(n, tp, u, upd if cur is None else cur + upd)
        if track:
            for u, g in gamma.items():
                vu = terms[n][u]
                a = -g * cinv
                row = iota[n][u]
                for o, w in iota[n][s].items():
                    vo = X.terms[n][o]
                    add = alg.compose(vu, v, vo, w, a)
                    row[o] = row[o] + add if o in row else add
                    if not _nz(row[o]):
                        del row[o]
            for o in list(pi_inv[n + 1].get(t, ())):
                x = pi[n + 1][o].pop(t)
                vo = X.terms[n + 1][o]
                for tp, dl in delta.items():
                    vt = terms[n + 1][tp]
                    add = alg.compose(vo, v, vt, -dl * cinv, x)
                    row = pi[n + 1][o]
                    if tp in row:
                        row[tp] = row[tp] + add
                        if not _nz(row[tp]):
                            del row[tp]
                            pi_inv[n + 1][tp].discard(o)
                    elif _nz(add):
                        row[tp] = add
                        pi_inv[n + 1][tp].add(o)
            for o in pi_inv[n].get(s, ()):
                pi[n][o].pop(s, None)
            pi_inv[n].pop(s, None)
            pi_inv[n + 1].pop(t, None)
            iota[n].pop(s, None)
            iota[n + 1].pop(t, None)
        # remove s (degree n) and t (degree n+1)
        for tp in list(col[n].get(s, ())):
            d[n][tp].pop(s, None)
            if not d[n][tp]:
                del d[n][tp]
        col[n].pop(s, None)
        if t in d.get(n, {}):
            for u in d[n][t]:
                col[n][u].discard(t)
            del d[n][t]
        for tp in list(col.get(n + 1, {}).get(t, ())):
            d[n + 1][tp].pop(t, None)
            if not d[n + 1][tp]:
                del d[n + 1][tp]
        col.get(n + 1, {}).pop(t, None)
        if s in d.get(n - 1, {}):
            for u in d[n - 1][s]:
                col[n - 1][u].discard(s)
            del d[n - 1][s]
        del terms[n][s]
        del terms[n + 1][t]
    M = ProjComplex(alg, terms, d, name=name or X.name)
    if not track:
        return M, None, None
    ib = {}
    for n, rows in iota.items():
        for u, row in rows.items():
            for o, w in row.items():
                ib.setdefault(n, {}).setdefault(o, {})[u] = w
    pb = {}
    for n, rows in pi.items():
        for o, row in rows.items():
            for u, w in row.items():
                pb.setdefault(n, {}).setdefault(u, {})[o] = w
    return M, ChainMap(M, X, ib), ChainMap(X, M, pb)


def from_resolution(alg: DirectedAlgebra, levels, name: str = "") -> ProjComplex:
    """Complex of a projective resolution: level s sits in degree -s."""
    terms, d = {}, {}
    for s, level in enumerate(levels):
        terms[-s] = {(i,): entry[0] for i, entry in enumerate(level)}
        if s:
            for i, (v, comp) in enumerate(level):
                for g, vec in comp.items():
                    d.setdefault(-s, {}).setdefault((g,), {})[(i,)] = np.asarray(vec, dtype=object)
    return ProjComplex(alg, terms, d, name=name)


def resolve(rep: Rep, name: str = "") -> ProjComplex:
    """Minimal projective resolution of a representation.  The result
    carries ``augmentation`` {label: element of rep at the vertex} for its
    degree 0 generators and ``module`` (the resolved representation)."""
    levels = resolve_module(rep)
    X = from_resolution(rep.algebra, levels, name=name)
    X.augmentation = {(i,): np.asarray(r, dtype=object) for i, (_, r) in enumerate(levels[0])} \
        if levels else {}
    X.module = rep
    return X


# ----------------------------------------------------------------------
# homology

def homology_table(X: ProjComplex) -> dict[int, dict[int, int]]:
    """Brute force: for each vertex v the homology of the vector space
    complex Hom(P_v, X), by dense ranks.  Returns {v: {degree: dim}}."""
    alg = X.algebra
    out = {}
    for v in range(alg.n):
        dims, mats = {}, {}
        for n in X.degrees():
            dims[n] = [(lab, alg.dim(v, w)) for lab, w in X.terms[n].items()]
        for n in X.degrees():
            src, tgt = dims[n], dims.get(n + 1, [])
            ns, nt = sum(x for _, x in src), sum(x for _, x in tgt)
            m = np.zeros((nt, ns), dtype=object)
            ro = 0
            for t, dt in tgt:
                co = 0
                for s, ds in src:
                    vec = X.comp(n, t, s)
                    if vec is not None and dt and ds:
                        m[ro:ro + dt, co:co + ds] = alg.post_matrix(
                            v, X.terms[n][s], X.terms[n + 1][t], vec)
                    co += ds
                ro += dt
            mats[n] = m
        h = {}
        for n in X.degrees():
            total = sum(x for _, x in dims[n])
            r_out = linalg.q_rank(mats[n]) if mats[n].size else 0
            prev = mats.get(n - 1)
            r_in = linalg.q_rank(prev) if prev is not None and prev.size else 0
            k = total - r_out - r_in
            if k:
                h[n] = k
        out[v] = h
    return out


def is_acyclic(X: ProjComplex) -> bool:
    return minimize(X, track=False)[0].is_zero()


def is_acyclic_brute(X: ProjComplex) -> bool:
    return all(not h for h in homology_table(X).values())


def is_quasi_iso(f: ChainMap) -> bool:
    """f is a quasi-isomorphism iff its cone is acyclic; between bounded
    complexes of projectives this is the same as being a homotopy
    equivalence."""
    return f.degree == 0 and f.is_chain_map() and is_acyclic(cone(f))


# ----------------------------------------------------------------------
# morphisms by linear algebra in Hom homology

def _class_matrix(cands: list[ChainMap], hom: HomComplex, n: int):
    h = hom.homology(n)
    return h, [h.coords(c) for c in cands]


def _solve_classes(cols: list[list], target: list):
    if not cols:
        return [] if not any(target) else None
    a = np.array(cols, dtype=object).T
    if a.shape[0] == 0:
        return [0] * len(cols)
    x = linalg.q_solve(a, np.array(target, dtype=object))
    return None if x is None else [_norm(v) for v in x]


def solve_post(f: ChainMap, h: ChainMap, Z: ProjComplex | None = None):
    """A cocycle x with f o x homotopic to h (x: Z -> f.src), or None."""
    Z = Z or h.src
    k = h.degree - f.degree
    hx = hom_complex(Z, f.src).homology(k)
    hzy = hom_complex(Z, f.tgt)
    hy = hzy.homology(h.degree)
    cols = [hy.coords(compose(f, hx.rep_map(i))) for i in range(hx.dim)]
    c = _solve_classes(cols, hy.coords(h))
    return None if c is None else hx.combo(c)


def solve_pre(g: ChainMap, h: ChainMap, Y: ProjComplex | None = None):
    """A cocycle x with x o g homotopic to h (x: g.tgt -> Y), or None."""
    Y = Y or h.tgt
    k = h.degree - g.degree
    hx = hom_complex(g.tgt, Y).homology(k)
    hy = hom_complex(g.src, Y).homology(h.degree)
    cols = [hy.coords(compose(hx.rep_map(i), g)) for i in range(hx.dim)]
    c = _solve_classes(cols, hy.coords(h))
    return None if c is None else hx.combo(c)


def same_up_to_scalar(f: ChainMap, g: ChainMap):
    """The scalar c with f ~ c g in Hom homology (both nonzero), else None."""
    hom = hom_complex(f.src, f.tgt)
    h = hom.homology(f.degree)
    a, b = h.coords(f), h.coords(g)
    if not any(a) or not any(b):
        return None
    i = next(j for j, x in enumerate(b) if x != 0)
    c = Fraction(a[i]) / Fraction(b[i])
    if any(Fraction(x) != c * y for x, y in zip(a, b)):
        return None
    return _norm(c)


def find_quasi_iso(X: ProjComplex, Y: ProjComplex, seed: int = 0, tries: int = 32):
    """Morphism search: basis elements of H^0 Hom(X, Y) first, then seeded
    random integer combinations; the first map with acyclic cone wins.
    Returns None when no candidate works (or the shadows already differ)."""
    if X.k_class() != Y.k_class():
        return None
    h = hom_complex(X, Y).homology(0)
    if h.dim == 0:
        return identity_map(X) if X.is_zero() and Y.is_zero() else None
    for i in range(h.dim):
        f = h.rep_map(i)
        if is_quasi_iso(f):
            return f
    rng = random.Random(seed)
    for _ in range(tries):
        f = h.combo([rng.randint(-3, 3) for _ in range(h.dim)])
        if not f.is_zero() and is_quasi_iso(f):
            return f
    return None


def is_exceptional(E: ProjComplex) -> bool:
    return hom_complex(E, E).homology_dims() == {0: 1}


# ----------------------------------------------------------------------
# mutations

def evaluation_map(E: ProjComplex, X: ProjComplex, name: str = ""):
    """ev: (+)_k Hom^{-k}(E, X) (x) E[k] -> X, one summand per basis class.

    A degree -k cocycle phi: E -> X is literally a chain map E[k] -> X, so
    its blocks are reused with degrees moved; summand labels get the prefix
    (k, i)."""
    hom = hom_complex(E, X)
    terms, d, blocks = {}, {}, {}
    for deg in hom.degree_range():
        h = hom.homology(deg)
        k = -deg
        sg = -1 if k % 2 else 1
        for i in range(h.dim):
            pre = (k, i)
            for n, t in E.terms.items():
                for lab, v in t.items():
                    terms.setdefault(n - k, {})[pre + lab] = v
            for n, rows in E.d.items():
                for t, r in rows.items():
                    for s, v in r.items():
                        d.setdefault(n - k, {}).setdefault(pre + t, {})[pre + s] = sg * v
            phi = h.rep_map(i)
            for n, rows in phi.blocks.items():
                for t, r in rows.items():
                    for s, v in r.items():
                        blocks.setdefault(n - k, {}).setdefault(t, {})[pre + s] = v
    S = ProjComplex(E.algebra, terms, d, name=name or f"Hom({E.name},{X.name})*{E.name}")
    return ChainMap(S, X, blocks)


def left_mutation(E: ProjComplex, X: ProjComplex, minimal: bool = True, name: str = ""):
    """Cone of the evaluation map into X; returns (L_E X, ev).  With
    ``minimal`` the cone is replaced by its minimal model."""
    if not is_exceptional(E):
        raise ComplexError("left mutation needs an exceptional object")
    ev = evaluation_map(E, X)
    C = cone(ev, name=name or f"L_{E.name}({X.name})")
    if minimal:
        C = minimize(C, track=False, name=C.name)[0]
    return C, ev


def dual_sequence(seq: list[ProjComplex]) -> list[ProjComplex]:
    """E'_i: mutate E_i to the left across E_{i-1}, ..., E_0 (in that
    order).  Entry i of the result is E'_i."""
    out = []
    for i, E in enumerate(seq):
        X = E
        for j in range(i - 1, -1, -1):
            X, _ = left_mutation(seq[j], X)
        X.name = f"E'{i}"
        out.append(X)
    return out


def project_semiorthogonal(collection: list[ProjComplex], X: ProjComplex):
    """Triangle A1 -> X -> A0 -> A1[1] with A1 in the span of the collection
    and A0 in its right orthogonal.  A0 is X mutated across the collection,
    last member first; A1 = cone(X -> A0)[-1].

    Returns (A1, A0, triangle) with triangle = {"to_x": A1 -> X,
    "to_a0": X -> A0}."""
    for C in collection:
        if not is_exceptional(C):
            raise ComplexError("collection is not exceptional")
    for i, C in enumerate(collection):
        for D in collection[i + 1:]:
            if hom_complex(D, C).homology_dims():
                raise ComplexError("collection is not exceptional")
    cur = X
    g = identity_map(X)
    for C in reversed(collection):
        ev = evaluation_map(C, cur)
        Cn = cone(ev)
        M, _, p = minimize(Cn)
        g = compose(p, compose(Cn.inc, g))
        cur = M
    A0 = cur
    A0.name = "A0"
    Cg = cone(g)
    A1full = shift(Cg, -1)
    to_x = ChainMap(A1full, X, {n + 1: rows for n, rows in Cg.proj.blocks.items()})
    A1, i1, _ = minimize(A1full, name="A1")
    return A1, A0, {"to_x": compose(to_x, i1), "to_a0": g}


# ----------------------------------------------------------------------
# random test material

def random_complex(alg: DirectedAlgebra, rng: random.Random, size: int = 4,
                   scramble: int = 4) -> ProjComplex:
    """A random bounded complex: iterated cones of random chain maps
    between smaller random complexes, padded with contractible pieces and
    hidden by random unipotent changes of basis."""
    def small():
        v, w = sorted(rng.randrange(alg.n) for _ in range(2))
        deg = rng.randint(-1, 1)
        if rng.random() < 0.5 or not alg.dim(v, w):
            return projective(alg, v, deg)
        vec = np.array([rng.randint(-2, 2) for _ in range(alg.dim(v, w))], dtype=object)
        d = {deg: {(1,): {(0,): vec}}} if _nz(vec) else {}
        return ProjComplex(alg, {deg: {(0,): v}, deg + 1: {(1,): w}}, d)

    X = small()
    while X.size() < size:
        Y = small()
        if rng.random() < 0.5:
            X, Y = Y, X
        h = hom_complex(X, Y).homology(0)
        f = h.combo([rng.randint(-2, 2) for _ in range(h.dim)]) if h.dim else zero_map(X, Y)
        X = minimize(cone(f), track=False)[0] if rng.random() < 0.3 else cone(f)
    if rng.random() < 0.5:
        v, deg = rng.randrange(alg.n), rng.randint(-2, 1)
        triv = ProjComplex(alg, {deg: {(0,): v}, deg + 1: {(1,): v}},
                           {deg: {(1,): {(0,): alg.identity(v) * rng.choice((1, -1, 2))}}})
        X = direct_sum(X, triv)
    return scramble_basis(X, rng, scramble)


def scramble_basis(X: ProjComplex, rng: random.Random, steps: int) -> ProjComplex:
    """Conjugate the differential by random elementary automorphisms
    1 + phi e_ba of single terms; the result is isomorphic to X."""
    alg = X.algebra
    for _ in range(steps):
        degs = [n for n in X.degrees() if len(X.terms[n]) > 1]
        if not degs:
            return X
        n = rng.choice(degs)
        a, b = rng.sample(X.labels(n), 2)
        va, vb = X.vertex(n, a), X.vertex(n, b)
        if not alg.dim(va, vb):
            continue
        phi = np.array([rng.randint(-2, 2) for _ in range(alg.dim(va, vb))], dtype=object)
        if not _nz(phi):
            continue
        g = identity_map(X) + ChainMap(X, X, {n: {b: {a: phi}}})
        ginv = identity_map(X) - ChainMap(X, X, {n: {b: {a: phi}}})
        dmap = ChainMap(X, X, X.d, 1)
        new = compose(g, compose(dmap, ginv))
        X = ProjComplex(alg, X.terms, new.blocks, name=X.name)
    return X


# ----------------------------------------------------------------------
# maps into modules and lifts through resolutions

def module_map_defect(X: ProjComplex, rep: Rep, values: dict) -> bool:
    """values {label: element of rep(v)} on degree 0 terms define a map
    X -> rep; it is a chain map iff it kills the image of d^{-1}."""
    acc: dict = {}
    for t, row in X.d.get(-1, {}).items():
        if t not in values:
            continue
        vt = X.vertex(0, t)
        for u, a in row.items():
            vu = X.vertex(-1, u)
            c = rep.action(vu, vt, a).dot(values[t])
            acc[u] = acc[u] + c if u in acc else c
    return not any(_nz(v) for v in acc.values())


def precompose_module_map(values: dict, f: ChainMap, rep: Rep) -> dict:
    """(E o f) on the degree 0 terms of f.src."""
    out = {}
    X = f.src
    for t2, v2 in X.terms.get(0, {}).items():
        acc = np.zeros(rep.dims[v2], dtype=object)
        for t, r in f.blocks.get(0, {}).items():
            a = r.get(t2)
            if a is not None and t in values:
                acc = acc + rep.action(v2, f.tgt.vertex(0, t), a).dot(values[t])
        if _nz(acc):
            out[t2] = acc
    return out


def lift_to_resolution(X: ProjComplex, R: ProjComplex, values: dict) -> ChainMap:
    """The chain map F: X -> R with aug o F^0 = E, where R = resolve(rep)
    and E is given by ``values``.  Built degree by degree; unique up to
    homotopy."""
    rep, aug = R.module, R.augmentation
    alg = X.algebra
    blocks: dict = {}
    gens = list(R.terms.get(0, {}).items())
    for t, vt in X.terms.get(0, {}).items():
        target = values.get(t)
        if target is None or not _nz(target):
            continue
        cols, where = [], []
        for g, vg in gens:
            for e in range(alg.dim(vt, vg)):
                unit = _vec(alg.dim(vt, vg))
                unit[e] = 1
                cols.append(rep.action(vt, vg, unit).dot(aug[g]))
                where.append((g, e))
        if not cols:
            raise ComplexError("value cannot be lifted")
        sol = linalg.q_solve(np.array(cols, dtype=object).T, np.asarray(target, dtype=object))
        if sol is None:
            raise ComplexError("value cannot be lifted")
        for (g, e), x in zip(where, sol):
            if x != 0:
                row = blocks.setdefault(0, {}).setdefault(g, {})
                vec = row.get(t)
                if vec is None:
                    vec = _vec(alg.dim(vt, R.vertex(0, g)))
                vec[e] += _norm(x)
                row[t] = vec
    lo = min(R.degrees()) if not R.is_zero() else 0
    for m in range(-1, min(X.degrees(), default=0) - 1, -1):
        if m < lo:
            break
        ys = list(R.terms.get(m, {}).items())
        gs = list(R.terms.get(m + 1, {}).items())
        for u, vu in X.terms.get(m, {}).items():
            # right hand side: (F^{m+1} d_X)[g][u]
            rhs = {}
            for t, row in X.d.get(m, {}).items():
                a = row.get(u)
                if a is None:
                    continue
                vt = X.vertex(m + 1, t)
                for g, fr in blocks.get(m + 1, {}).items():
                    b = fr.get(t)
                    if b is not None:
                        vg = R.vertex(m + 1, g)
                        c = alg.compose(vu, vt, vg, b, a)
                        rhs[g] = rhs[g] + c if g in rhs else c
            if not any(_nz(v) for v in rhs.values()):
                continue
            offs, o = {}, 0
            for g, vg in gs:
                offs[g] = (o, alg.dim(vu, vg))
                o += alg.dim(vu, vg)
            coffs, c0 = {}, 0
            for y, vy in ys:
                coffs[y] = (c0, alg.dim(vu, vy))
                c0 += alg.dim(vu, vy)
            mat = np.zeros((o, c0), dtype=object)
            for g, row in R.d.get(m, {}).items():
                go, gd = offs[g]
                for y, dv in row.items():
                    yo, yd = coffs[y]
                    if gd and yd:
                        mat[go:go + gd, yo:yo + yd] = alg.post_matrix(
                            vu, R.vertex(m, y), R.vertex(m + 1, g), dv)
            b = np.zeros(o, dtype=object)
            for g, v in rhs.items():
                go, gd = offs[g]
                b[go:go + gd] = v
            sol = linalg.q_solve(mat, b) if c0 else None
            if sol is None:
                raise ComplexError("lift failed: target is not exact")
            for y, (yo, yd) in coffs.items():
                vec = np.array([_norm(x) for x in sol[yo:yo + yd]], dtype=object)
                if yd and _nz(vec):
                    blocks.setdefault(m, {}).setdefault(y, {})[u] = vec
    return ChainMap(X, R, blocks)
