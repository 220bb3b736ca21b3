"""Numerical Grothendieck groups with an Euler pairing.

A lattice is a declared ordered basis plus its Gram matrix
G[i][j] = chi(b_i, b_j).  Classes and operators carry integer coordinates
in that basis; nothing here ever reorders a basis.

Words of operators are read as compositions: [A, B, C] means A o B o C,
so C acts first.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import linalg

SHADOW_LABEL = "shadow-verified"


class LatticeMismatch(ValueError):
    pass


class NonIntegralError(ValueError):
    pass


def _as_int_rows(m) -> tuple[tuple[int, ...], ...]:
    rows = tuple(tuple(int(x) for x in row) for row in m)
    for row, orig in zip(rows, m):
        for a, b in zip(row, orig):
            if a != b:
                raise NonIntegralError(f"non-integral entry {b!r}")
    return rows


def _mul(a, b):
    n, k, m = len(a), len(b), len(b[0]) if b else 0
    return tuple(tuple(sum(a[i][t] * b[t][j] for t in range(k)) for j in range(m)) for i in range(n))


def _transpose(a):
    return tuple(zip(*a)) if a else ()


def _identity(n):
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def _inverse(a):
    inv = linalg.inverse([list(r) for r in a])
    return tuple(tuple(Fraction(x) for x in row) for row in inv)


@dataclass(frozen=True)
class EulerLattice:
    gram: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...] = ()
    exceptional_basis: bool = False
    name: str = ""

    def __post_init__(self):
        gram = _as_int_rows(self.gram)
        object.__setattr__(self, "gram", gram)
        n = len(gram)
        if n < 1 or any(len(r) != n for r in gram):
            raise ValueError("Gram matrix must be square of size >= 1")
        labels = tuple(self.labels) or tuple(f"b{i}" for i in range(n))
        if len(labels) != n:
            raise ValueError("one label per basis vector")
        object.__setattr__(self, "labels", labels)
        if self.exceptional_basis and not is_unit_upper_triangular(gram):
            raise ValueError("exceptional basis needs a unit upper triangular Gram matrix")

    @property
    def rank(self) -> int:
        return len(self.gram)

    def cls(self, coords: Sequence[int]) -> "KClass":
        return KClass(self, tuple(coords))

    def basis(self, i: int) -> "KClass":
        return KClass(self, tuple(int(j == i) for j in range(self.rank)))

    def __getitem__(self, label: str) -> "KClass":
        return self.basis(self.labels.index(label))


def is_unit_upper_triangular(gram) -> bool:
    n = len(gram)
    return all(gram[i][i] == 1 for i in range(n)) and all(
        gram[i][j] == 0 for i in range(n) for j in range(i))


@dataclass(frozen=True)
class KClass:
    lattice: EulerLattice = field(repr=False)
    coords: tuple[int, ...]

    def __post_init__(self):
        coords = _as_int_rows([self.coords])[0]
        if len(coords) != self.lattice.rank:
            raise LatticeMismatch("coordinate length does not match the lattice rank")
        object.__setattr__(self, "coords", coords)

    def _check(self, other: "KClass"):
        if other.lattice != self.lattice:
            raise LatticeMismatch("classes live on different lattices")

    def __add__(self, other: "KClass") -> "KClass":
        self._check(other)
        return KClass(self.lattice, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "KClass") -> "KClass":
        return self + (-other)

    def __neg__(self) -> "KClass":
        return KClass(self.lattice, tuple(-a for a in self.coords))

    def __rmul__(self, c: int) -> "KClass":
        return KClass(self.lattice, tuple(c * a for a in self.coords))


@dataclass(frozen=True)
class LatticeOp:
    matrix: tuple[tuple[int, ...], ...]
    source: EulerLattice = field(repr=False)
    target: EulerLattice | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.target is None:
            object.__setattr__(self, "target", self.source)
        m = _as_int_rows(self.matrix)
        if len(m) != self.target.rank or any(len(r) != self.source.rank for r in m):
            raise LatticeMismatch("matrix shape does not match the lattices")
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other: "LatticeOp") -> "LatticeOp":
        """Composition: (self @ other)(v) = self(other(v))."""
        if other.target != self.source:
            raise LatticeMismatch("operators are not composable")
        return LatticeOp(_mul(self.matrix, other.matrix), other.source, self.target)

    def __call__(self, v: KClass) -> KClass:
        if v.lattice != self.source:
            raise LatticeMismatch("class is not on the source lattice")
        col = _mul(self.matrix, tuple((c,) for c in v.coords))
        return KClass(self.target, tuple(r[0] for r in col))

    def __pow__(self, k: int) -> "LatticeOp":
        if self.source != self.target:
            raise LatticeMismatch("powers need an endomorphism")
        if k < 0:
            inv = _inverse(self.matrix)
            return LatticeOp(inv, self.source) ** (-k)
        out = identity_op(self.source)
        for _ in range(k):
            out = out @ self
        return out

    def is_isometry(self) -> bool:
        g_s, g_t = self.source.gram, self.target.gram
        return _mul(_mul(_transpose(self.matrix), g_t), self.matrix) == g_s


def identity_op(lattice: EulerLattice) -> LatticeOp:
    return LatticeOp(_identity(lattice.rank), lattice)


def euler_pairing(v: KClass, w: KClass) -> int:
    v._check(w)
    g = v.lattice.gram
    return sum(v.coords[i] * g[i][j] * w.coords[j]
               for i in range(len(g)) for j in range(len(g)))


def spherical_twist_op(f: KClass) -> LatticeOp:
    """K-shadow of the twist along f: v -> v - chi(f, v) f."""
    lat = f.lattice
    cols = []
    for j in range(lat.rank):
        b = lat.basis(j)
        cols.append((b - euler_pairing(f, b) * f).coords)
    return LatticeOp(_transpose(cols), lat)


def mutate_class(e: KClass, x: KClass) -> KClass:
    """Class of the left mutation of x across e: [x] - chi(e, x)[e]."""
    return x - euler_pairing(e, x) * e


def shift_op(lattice: EulerLattice, n: int) -> LatticeOp:
    s = -1 if n % 2 else 1
    return LatticeOp(tuple(tuple(s * x for x in r) for r in _identity(lattice.rank)), lattice)


def dual_basis(lattice: EulerLattice) -> list[KClass]:
    """Classes d_j with chi(b_i, d_j) = delta_ij for an exceptional basis."""
    if not is_unit_upper_triangular(lattice.gram):
        raise ValueError("dual_basis needs an exceptional basis")
    inv = _as_int_rows(_inverse(lattice.gram))
    return [KClass(lattice, tuple(inv[i][j] for i in range(lattice.rank)))
            for j in range(lattice.rank)]


def adjoint_op(op: LatticeOp, g_source=None, g_target=None) -> LatticeOp:
    """Shadow of the adjoint: chi_t(M v, w) = chi_s(v, M' w).

    M' = G_s^-1 M^T G_t; a non-integral result raises NonIntegralError.
    """
    g_s = op.source.gram if g_source is None else _as_int_rows(g_source)
    g_t = op.target.gram if g_target is None else _as_int_rows(g_target)
    try:
        inv = _inverse(g_s)
    except ValueError:
        raise ValueError("source Gram matrix is not invertible") from None
    adj = _mul(_mul(inv, _transpose(op.matrix)), g_t)
    return LatticeOp(_as_int_rows(adj), op.target, op.source)


def serre_op(lattice: EulerLattice) -> LatticeOp:
    """Shadow S of the Serre functor: chi(v, w) = chi(w, S v)."""
    try:
        inv = _inverse(lattice.gram)
    except ValueError:
        raise ValueError("Gram matrix is not invertible") from None
    return LatticeOp(_as_int_rows(_mul(inv, _transpose(lattice.gram))), lattice)


@dataclass(frozen=True)
class RelationReport:
    passed: bool
    product: tuple[tuple[int, ...], ...]
    expected: tuple[tuple[int, ...], ...]
    residual: tuple[tuple[int, ...], ...] | None
    label: str = SHADOW_LABEL

    @property
    def verdict(self) -> str:
        return "shadow-pass" if self.passed else "fail"


def compose(word: Sequence[LatticeOp], lattice: EulerLattice) -> LatticeOp:
    out = identity_op(lattice)
    for op in word:
        out = out @ op
    return out


def check_relation(word: Sequence[LatticeOp], expected: LatticeOp) -> RelationReport:
    """Exact comparison of the composite of ``word`` with ``expected``."""
    for op in word:
        if op.source.rank != expected.source.rank or op.target.rank != expected.target.rank:
            raise LatticeMismatch("dimension mismatch in relation")
    prod = compose(word, expected.source).matrix
    ok = prod == expected.matrix
    residual = None if ok else tuple(
        tuple(a - b for a, b in zip(r1, r2)) for r1, r2 in zip(prod, expected.matrix))
    return RelationReport(ok, prod, expected.matrix, residual)
