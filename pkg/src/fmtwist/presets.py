"""Geometry presets: Euler lattices and line twists built from Chow models.

Surface and threefold presets model compactly supported K-theory.  Their
classes are pushed forward from divisor components D (curves or surfaces
with their own Chow model), and every Gram entry is produced by the
divisor-restriction oracle

    chi(O_D(A), O_D'(B)) = chi_D'((B - A)|D') - chi_D'((B - A + D)|D')

for line bundles A, B on the ambient space.  The same Gram matrix must
reproduce every oracle value on a spanning family of such sheaves; this is
checked when a preset is built.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product as iproduct
from typing import Mapping, Sequence

import numpy as np

from . import linalg
from .chow import ChowModel, euler_from_chern, line_bundle_chi, MODELS
from .lattice import EulerLattice, KClass, LatticeOp, spherical_twist_op


class PresetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Component:
    """A divisor component: its Chow model, the restriction of each Pic
    generator (coordinates over ``local``) and the lattice label of the
    pushed-forward structure sheaf of each local curve class."""
    name: str
    model: ChowModel
    local: tuple[str, ...]
    restriction: Mapping[str, tuple[int, ...]]
    curves: Mapping[str, str] = field(default_factory=dict)

    def local_vector(self, coords: Sequence) -> tuple[Fraction, ...]:
        return self.model.vector(dict(zip(self.local, coords)))


@dataclass(frozen=True, eq=False)
class GeometryPreset:
    name: str
    lattice: EulerLattice
    pic: tuple[str, ...]
    divisors: Mapping[str, tuple[int, ...]]
    components: Mapping[str, Component]
    notes: tuple[str, ...] = ()
    chow: ChowModel | None = None
    classes: Mapping[str, tuple[int, ...]] = field(default_factory=dict)

    # -- Pic arithmetic -------------------------------------------------
    def divisor(self, spec) -> tuple[int, ...]:
        """Pic coordinates of a divisor name, a {name: coeff} mapping or a
        coordinate tuple."""
        if isinstance(spec, str):
            return self.divisors[spec]
        if isinstance(spec, Mapping):
            out = [0] * len(self.pic)
            for k, c in spec.items():
                for i, x in enumerate(self.divisors[k]):
                    out[i] += c * x
            return tuple(out)
        return tuple(int(x) for x in spec)

    def restrict(self, comp: str, pic_coords: Sequence[int]) -> tuple[int, ...]:
        c = self.components[comp]
        out = [0] * len(c.local)
        for g, a in zip(self.pic, pic_coords):
            for i, x in enumerate(c.restriction[g]):
                out[i] += a * x
        return tuple(out)

    # -- classes --------------------------------------------------------
    def sheaf_class(self, comp: str, local_divisor: Sequence[int] = ()) -> KClass:
        """Class of O_D(lambda) pushed forward, lambda given locally on D."""
        if not local_divisor:
            local_divisor = (0,) * len(self.components[comp].local)
        return self.lattice.cls(_decompose(self, comp, tuple(local_divisor)))

    def line_bundle_class(self, comp: str, pic_coords: Sequence[int]) -> KClass:
        return self.sheaf_class(comp, self.restrict(comp, pic_coords))

    def line_twist(self, pic_coords) -> LatticeOp:
        return _line_twist(self, self.divisor(pic_coords))

    def spherical_twist(self, comp: str, local_divisor: Sequence[int] = ()) -> LatticeOp:
        return spherical_twist_op(self.sheaf_class(comp, local_divisor))


def _decompose(preset: GeometryPreset, comp: str, lam: tuple[int, ...]) -> tuple[int, ...]:
    c = preset.components[comp]
    m = c.model
    gens, coords = [], []
    lat = preset.lattice
    gens.append(m.basis(m.names[0]))
    coords.append(lat.basis(lat.labels.index(f"O_{comp}")).coords)
    if m.dim == 1:
        gens.append(m.basis("pt"))
        coords.append(lat["pt"].coords)
    else:
        for curve in c.local:
            v = m.basis(curve)
            sq = m.product(v, v)
            gens.append(tuple(a - b / 2 for a, b in zip(v, sq)))
            coords.append(lat[c.curves[curve]].coords)
        gens.append(m.basis("pt"))
        coords.append(lat["pt"].coords)
    ch = m.exp(c.local_vector(lam))
    A = np.array([[int(x * 2) for x in g] for g in gens], dtype=object).T
    b = [int(x * 2) for x in ch]
    sol = linalg.solve(A, b)
    if sol is None:
        raise PresetError(f"cannot decompose O_{comp}{lam}")
    out = [Fraction(0)] * lat.rank
    for s, cc in zip(sol, coords):
        for i, x in enumerate(cc):
            out[i] += s * x
    if any(x.denominator != 1 for x in out):
        raise PresetError("non-integral class")
    return tuple(int(x) for x in out)


def oracle_chi(preset: GeometryPreset, d1: str, a1: Sequence[int], d2: str, a2: Sequence[int]) -> int:
    """Divisor-restriction oracle for chi(O_D1(A1), O_D2(A2)), A in Pic."""
    diff = tuple(y - x for x, y in zip(a1, a2))
    shifted = tuple(x + y for x, y in zip(diff, preset.divisors[d1]))
    comp = preset.components[d2]
    chi = lambda pic: line_bundle_chi(comp.model, comp.local_vector(preset.restrict(d2, pic)))
    return chi(diff) - chi(shifted)


def _sheaf_family(preset: GeometryPreset, span=(-1, 0, 1, 2)):
    fam = []
    for d in preset.components:
        for a in iproduct(span, repeat=len(preset.pic)):
            fam.append((d, a))
    return fam


def _pick_basis(cols: list[tuple[int, ...]], rank: int) -> list[int]:
    chosen = []
    for i, c in enumerate(cols):
        trial = chosen + [i]
        if linalg.rank(np.array([cols[j] for j in trial], dtype=object)) == len(trial):
            chosen = trial
            if len(chosen) == rank:
                return chosen
    raise PresetError("sheaf family does not span the lattice")


def oracle_gram(preset: GeometryPreset) -> tuple[tuple[int, ...], ...]:
    """Gram matrix forced by the oracle, verified on the whole family."""
    fam = _sheaf_family(preset)
    X = [preset.line_bundle_class(d, a).coords for d, a in fam]
    n = preset.lattice.rank
    idx = _pick_basis(X, n)
    B = np.array([X[i] for i in idx], dtype=object).T
    Binv = linalg.inverse(B)
    omega = np.array([[oracle_chi(preset, fam[i][0], fam[i][1], fam[j][0], fam[j][1])
                       for j in idx] for i in idx], dtype=object)
    G = Binv.T @ omega @ Binv
    if any(Fraction(x).denominator != 1 for x in G.flat):
        raise PresetError("oracle Gram is not integral")
    G = [[int(x) for x in row] for row in G]
    for s, t in iproduct(range(len(fam)), repeat=2):
        v, w = X[s], X[t]
        val = sum(v[i] * G[i][j] * w[j] for i in range(n) for j in range(n))
        if val != oracle_chi(preset, fam[s][0], fam[s][1], fam[t][0], fam[t][1]):
            raise PresetError(f"oracle inconsistent on {fam[s]} x {fam[t]}")
    return tuple(tuple(r) for r in G)


@lru_cache(maxsize=None)
def _line_twist_cached(preset: GeometryPreset, pic: tuple[int, ...]) -> LatticeOp:
    fam = _sheaf_family(preset, span=(0, 1))
    X = [preset.line_bundle_class(d, a).coords for d, a in fam]
    Y = [preset.line_bundle_class(d, tuple(x + y for x, y in zip(a, pic))).coords
         for d, a in fam]
    n = preset.lattice.rank
    idx = _pick_basis(X, n)
    B = np.array([X[i] for i in idx], dtype=object).T
    C = np.array([Y[i] for i in idx], dtype=object).T
    M = C @ linalg.inverse(B)
    op = LatticeOp(tuple(tuple(x for x in row) for row in M), preset.lattice)
    for x, y in zip(X, Y):
        if op(preset.lattice.cls(x)).coords != tuple(y):
            raise PresetError("line twist is not well defined on classes")
    return op


def _line_twist(preset: GeometryPreset, pic) -> LatticeOp:
    if preset.name.endswith("_beilinson"):
        return projective_line_twist(preset, int(pic[0]))
    if preset.chow is not None:
        return _curve_line_twist(preset, tuple(pic))
    return _line_twist_cached(preset, tuple(pic))


def _curve_line_twist(preset: GeometryPreset, pic: tuple[int, ...]) -> LatticeOp:
    # (rank, degree) lattice on a curve: multiply ch by exp(L)
    m = preset.chow
    L = m.vector({"pt": sum(a * d for a, d in zip(pic, preset.divisors["H"]))})
    e = m.exp(L)
    cols = [tuple(int(x) for x in m.product(m.basis(nm), e)) for nm in m.names]
    return LatticeOp(tuple(zip(*cols)), preset.lattice)


def _build(name, labels, pic, divisors, components, notes, classes):
    placeholder = EulerLattice(tuple(tuple(int(i == j) for j in range(len(labels)))
                                     for i in range(len(labels))), tuple(labels))
    pre = GeometryPreset(name, placeholder, pic, divisors, components, notes)
    gram = oracle_gram(pre)
    lat = EulerLattice(gram, tuple(labels), name=name)
    pre = GeometryPreset(name, lat, pic, divisors, components, notes)
    named = {k: pre.sheaf_class(c, lam).coords for k, (c, lam) in classes.items()}
    return GeometryPreset(name, lat, pic, divisors, components, notes, None, named)


def preset_a2_surface() -> GeometryPreset:
    p1 = MODELS["P1"]()
    comps = {
        "C3": Component("C3", p1, ("pt",), {"C1": (0,), "C2": (1,)}),
        "C4": Component("C4", p1, ("pt",), {"C1": (1,), "C2": (0,)}),
    }
    divisors = {"C1": (1, 0), "C2": (0, 1), "C3": (1, -2), "C4": (-2, 1)}
    notes = (
        "compactly supported K-theory of the surface",
        "Pic is free on C1, C2 with C3 = C1 - 2 C2 and C4 = C2 - 2 C1",
        "C3, C4 are (-2)-curves isomorphic to P1",
    )
    classes = {"O_C3": ("C3", (0,)), "O_C4": ("C4", (0,)), "O_C3(1)": ("C3", (1,)),
               "O_C4(1)": ("C4", (1,))}
    return _build("a2_surface", ["O_C3", "O_C4", "pt"], ("C1", "C2"), divisors, comps,
                  notes, classes)


def preset_z5_threefold() -> GeometryPreset:
    comps = {
        "D4": Component("D4", MODELS["P2"](), ("H",), {"D1": (1,), "D2": (0,)},
                        {"H": "O_l"}),
        "D5": Component("D5", MODELS["F3"](), ("s", "f"), {"D1": (0, 1), "D2": (1, 3)},
                        {"s": "O_l", "f": "O_f"}),
    }
    divisors = {"D1": (1, 0), "D2": (0, 1), "D4": (-3, 1), "D5": (1, -2)}
    notes = (
        "compactly supported K-theory of the threefold",
        "Pic is generated by D1, D2 with D4 = D2 - 3 D1 and D5 = D1 - 2 D2",
        "D4.D5 = s is derived from the linear relations, not given as input",
        "the curve s = D4 cap D5 is a line of D4; [O_s] is identified with [O_l]",
    )
    classes = {"O_D4": ("D4", (0,)), "O_D4(h)": ("D4", (1,)), "O_D4(2h)": ("D4", (2,)),
               "O_D4(3h)": ("D4", (3,)), "O_D5": ("D5", (0, 0)), "O_D5(-f)": ("D5", (0, -1)),
               "O_D5(s+2f)": ("D5", (1, 2)), "O_D5(s+3f)": ("D5", (1, 3))}
    return _build("z5_threefold", ["O_D4", "O_D5", "O_l", "O_f", "pt"], ("D1", "D2"),
                  divisors, comps, notes, classes)


def preset_weighted_cy(weights=(1, 1, 1)) -> GeometryPreset:
    """Plane cubic curve in (rank, degree) coordinates."""
    if tuple(weights) != (1, 1, 1):
        raise PresetError("only weights (1, 1, 1) are supported")
    m = MODELS["E"]()
    gram = tuple(tuple(euler_from_chern(m, m.basis(a), m.basis(b)) for b in m.names)
                 for a in m.names)
    lat = EulerLattice(gram, ("rank", "degree"), name="elliptic_cubic")
    classes = {f"O({k})": (1, 3 * k) for k in range(-3, 4)}
    classes["pt"] = (0, 1)
    return GeometryPreset("elliptic_cubic", lat, ("H",), {"H": (3,)}, {},
                          ("smooth plane cubic; O(1) has degree 3",), m, classes)


def beilinson_lattice(n: int) -> GeometryPreset:
    """K(P^n) in the basis O, O(1), ..., O(n)."""
    m = MODELS["P1" if n == 1 else "P2"]() if n in (1, 2) else None
    if m is None:
        raise PresetError("only P1 and P2 are modelled")
    hyper = "pt" if n == 1 else "H"
    chs = [m.exp(m.vector({hyper: k})) for k in range(n + 1)]
    gram = tuple(tuple(euler_from_chern(m, a, b) for b in chs) for a in chs)
    labels = tuple(f"O({k})" for k in range(n + 1))
    lat = EulerLattice(gram, labels, exceptional_basis=True, name=f"p{n}_beilinson")
    classes = {lab: lat[lab].coords for lab in labels}
    return GeometryPreset(f"p{n}_beilinson", lat, ("H",), {"H": (1,)}, {},
                          ("exceptional basis O, ..., O(n)",), m, classes)


def projective_line_twist(preset: GeometryPreset, k: int) -> LatticeOp:
    """Shadow of - (x) O(k) on the Beilinson lattice of P^n."""
    m = preset.chow
    hyper = "pt" if m.dim == 1 else "H"
    n = preset.lattice.rank - 1
    basis_ch = [m.exp(m.vector({hyper: j})) for j in range(n + 1)]
    A = np.array([[int(x * 2) for x in v] for v in basis_ch], dtype=object).T
    cols = []
    for j in range(n + 1):
        target = m.exp(m.vector({hyper: j + k}))
        sol = linalg.solve(A, [int(x * 2) for x in target])
        cols.append(tuple(int(x) for x in sol))
    return LatticeOp(tuple(zip(*cols)), preset.lattice)


PRESETS = {
    "p1_beilinson": lambda: beilinson_lattice(1),
    "p2_beilinson": lambda: beilinson_lattice(2),
    "elliptic_cubic": preset_weighted_cy,
    "a2_surface": preset_a2_surface,
    "z5_threefold": preset_z5_threefold,
}


@lru_cache(maxsize=None)
def get_preset(name: str) -> GeometryPreset:
    try:
        return PRESETS[name]()
    except KeyError:
        raise PresetError(f"unknown preset {name!r}") from None
