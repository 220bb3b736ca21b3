"""Finite numerical Chow rings with Todd classes.

A model is a graded basis with structure constants for the product, a
Todd class, and the top-degree coefficient as degree map.  Euler pairings
come from Riemann-Roch: chi(F, G) = deg(ch(F)^dual . ch(G) . td).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct
from typing import Mapping, Sequence

Vec = tuple[Fraction, ...]


class ModelError(ValueError):
    pass


def _vec(v) -> Vec:
    return tuple(Fraction(x) for x in v)


@dataclass(frozen=True)
class ChowModel:
    """Graded basis ``names``/``degrees``; ``mult[(i, j)]`` is the product
    of basis elements i and j as a coefficient vector.  Missing pairs
    multiply to zero, except that the unit (index 0) is implicit."""
    name: str
    names: tuple[str, ...]
    degrees: tuple[int, ...]
    mult: Mapping[tuple[int, int], Vec]
    todd: Vec
    dim: int

    def __post_init__(self):
        if self.degrees[0] != 0:
            raise ModelError("basis element 0 must be the unit")
        tops = [i for i, d in enumerate(self.degrees) if d == self.dim]
        if len(tops) != 1:
            raise ModelError("need exactly one top-degree basis element")
        object.__setattr__(self, "todd", _vec(self.todd))
        object.__setattr__(self, "mult", {k: _vec(v) for k, v in self.mult.items()})

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def top(self) -> int:
        return self.degrees.index(self.dim)

    def basis(self, name: str) -> Vec:
        i = self.names.index(name)
        return tuple(Fraction(int(j == i)) for j in range(self.size))

    def vector(self, coeffs: Mapping[str, object]) -> Vec:
        out = [Fraction(0)] * self.size
        for k, c in coeffs.items():
            out[self.names.index(k)] += Fraction(c)
        return tuple(out)

    def _basis_product(self, i: int, j: int) -> Vec:
        if i == 0 or j == 0:
            k = j if i == 0 else i
            return tuple(Fraction(int(t == k)) for t in range(self.size))
        if (i, j) in self.mult:
            return self.mult[(i, j)]
        if (j, i) in self.mult:
            return self.mult[(j, i)]
        return (Fraction(0),) * self.size

    def product(self, a: Sequence, b: Sequence) -> Vec:
        out = [Fraction(0)] * self.size
        for i, x in enumerate(a):
            if not x:
                continue
            for j, y in enumerate(b):
                if not y:
                    continue
                for k, c in enumerate(self._basis_product(i, j)):
                    if c:
                        out[k] += x * y * c
        return tuple(out)

    def dual(self, a: Sequence) -> Vec:
        return tuple(Fraction(x) * (-1) ** d for x, d in zip(a, self.degrees))

    def degree(self, a: Sequence) -> Fraction:
        return Fraction(a[self.top])

    def exp(self, divisor: Sequence) -> Vec:
        """Chern character of a line bundle: exp of a degree-one class."""
        out = self.basis(self.names[0])
        term = out
        for k in range(1, self.dim + 1):
            term = tuple(x / k for x in self.product(term, divisor))
            out = tuple(a + b for a, b in zip(out, term))
        return out

    def is_graded_commutative(self) -> bool:
        # Chow degree d sits in cohomological degree 2d, so no signs appear
        n = self.size
        for i, j in iproduct(range(n), repeat=2):
            if self._basis_product(i, j) != self._basis_product(j, i):
                return False
        return True

    def is_associative(self) -> bool:
        n = self.size
        e = [self.basis(x) for x in self.names]
        return all(self.product(self.product(e[i], e[j]), e[k]) ==
                   self.product(e[i], self.product(e[j], e[k]))
                   for i, j, k in iproduct(range(n), repeat=3))

    def respects_grading(self) -> bool:
        for (i, j), v in self.mult.items():
            d = self.degrees[i] + self.degrees[j]
            if any(c and self.degrees[k] != d for k, c in enumerate(v)):
                return False
        return True


def euler_from_chern(model: ChowModel, ch_f: Sequence, ch_g: Sequence) -> int:
    """deg(ch(F)^dual . ch(G) . td) as an exact integer."""
    val = model.degree(model.product(model.product(model.dual(ch_f), ch_g), model.todd))
    if val.denominator != 1:
        raise ModelError(f"non-integral Euler pairing {val}")
    return int(val)


def line_bundle_chi(model: ChowModel, divisor: Sequence) -> int:
    return euler_from_chern(model, model.basis(model.names[0]), model.exp(divisor))


def _model(name, names, degrees, mult, todd, dim):
    idx = {n: i for i, n in enumerate(names)}
    m = {}
    for (a, b), coeffs in mult.items():
        v = [0] * len(names)
        for k, c in coeffs.items():
            v[idx[k]] = c
        m[(idx[a], idx[b])] = v
    t = [0] * len(names)
    for k, c in todd.items():
        t[idx[k]] = c
    return ChowModel(name, tuple(names), tuple(degrees), m, tuple(t), dim)


def projective_line() -> ChowModel:
    return _model("P1", ["1", "pt"], [0, 1], {}, {"1": 1, "pt": 1}, 1)


def elliptic_curve() -> ChowModel:
    return _model("E", ["1", "pt"], [0, 1], {}, {"1": 1}, 1)


def projective_plane() -> ChowModel:
    return _model("P2", ["1", "H", "pt"], [0, 1, 2], {("H", "H"): {"pt": 1}},
                  {"1": 1, "H": Fraction(3, 2), "pt": 1}, 2)


def hirzebruch_f3() -> ChowModel:
    # s the (-3)-section, f a fibre; c1 = 2s + 5f, chi(O) = 1
    return _model("F3", ["1", "s", "f", "pt"], [0, 1, 1, 2],
                  {("s", "s"): {"pt": -3}, ("s", "f"): {"pt": 1}, ("f", "f"): {}},
                  {"1": 1, "s": 1, "f": Fraction(5, 2), "pt": 1}, 2)


MODELS = {
    "P1": projective_line,
    "E": elliptic_curve,
    "P2": projective_plane,
    "F3": hirzebruch_f3,
}
