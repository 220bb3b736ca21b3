from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fmtwist.chow import MODELS, ModelError, euler_from_chern, line_bundle_chi
from fmtwist.lattice import euler_pairing, spherical_twist_op
from fmtwist.presets import (PRESETS, PresetError, get_preset, oracle_chi, oracle_gram,
                             preset_weighted_cy)


@pytest.mark.parametrize("name", sorted(MODELS))
def test_models_are_commutative_associative_graded(name):
    m = MODELS[name]()
    assert m.is_associative()
    assert m.is_graded_commutative()
    assert m.respects_grading()


@pytest.mark.parametrize("name", sorted(MODELS))
def test_degree_vanishes_outside_top(name):
    m = MODELS[name]()
    for i, nm in enumerate(m.names):
        assert m.degree(m.basis(nm)) == int(m.degrees[i] == m.dim)


def test_structure_sheaf_p1():
    m = MODELS["P1"]()
    one = m.basis("1")
    assert euler_from_chern(m, one, one) == 1


def test_p1_o1():
    m = MODELS["P1"]()
    assert euler_from_chern(m, m.basis("1"), m.exp(m.basis("pt"))) == 2


def test_elliptic_structure_sheaf():
    m = MODELS["E"]()
    one = m.basis("1")
    assert euler_from_chern(m, one, one) == 0


@given(st.integers(-6, 6))
def test_p1_line_bundles(d):
    m = MODELS["P1"]()
    assert line_bundle_chi(m, m.vector({"pt": d})) == d + 1


@given(st.integers(-6, 6))
def test_p2_line_bundles(d):
    m = MODELS["P2"]()
    assert line_bundle_chi(m, m.vector({"H": d})) == (d + 1) * (d + 2) // 2


@given(st.integers(-4, 4), st.integers(-4, 4))
def test_f3_line_bundles(a, b):
    # Riemann-Roch on F3: chi(O(as+bf)) = 1 + (D.D + D.c1)/2 with s^2 = -3, c1 = 2s + 5f
    m = MODELS["F3"]()
    dd = -3 * a * a + 2 * a * b
    dc = -6 * a + 5 * a + 2 * b
    assert line_bundle_chi(m, m.vector({"s": a, "f": b})) == 1 + (dd + dc) // 2


def test_non_integral_pairing_is_an_error():
    m = MODELS["P2"]()
    half = tuple(Fraction(x, 2) if i == 1 else x for i, x in enumerate(m.basis("H")))
    with pytest.raises(ModelError):
        euler_from_chern(m, m.basis("1"), half)


# ----------------------------------------------------------------------
# presets

def test_preset_list():
    assert set(PRESETS) == {"p1_beilinson", "p2_beilinson", "elliptic_cubic",
                            "a2_surface", "z5_threefold"}


def test_unknown_preset():
    with pytest.raises(PresetError):
        get_preset("k3")


def test_elliptic_classes():
    g = preset_weighted_cy((1, 1, 1))
    assert g.classes["O(0)"] == (1, 0)
    assert g.classes["O(1)"] == (1, 3)
    assert euler_pairing(g.lattice.cls((1, 0)), g.lattice.cls((1, 3))) == 3
    assert g.lattice.gram == ((0, 1), (-1, 0))


def test_weighted_cy_other_weights_rejected():
    with pytest.raises(PresetError):
        preset_weighted_cy((1, 1, 2))


def test_a2_gram_matches_intersection_oracle():
    # torsion sheaves on a surface: chi(O_C, O_C') = -C.C', points pair to zero
    inter = {("C3", "C3"): -2, ("C4", "C4"): -2, ("C3", "C4"): 1, ("C4", "C3"): 1}
    g = get_preset("a2_surface")
    want = [[-inter[(a, b)] for b in ("C3", "C4")] + [0] for a in ("C3", "C4")] + [[0, 0, 0]]
    assert [list(r) for r in g.lattice.gram] == want


def test_a2_pairings_from_spec_examples():
    lat = get_preset("a2_surface").lattice
    assert euler_pairing(lat["O_C3"], lat["O_C3"]) == 2
    assert euler_pairing(lat["O_C3"], lat["O_C4"]) == -1


def test_a2_line_twist_c2():
    g = get_preset("a2_surface")
    t = g.line_twist("C2")
    assert t(g.lattice["O_C3"]).coords == (1, 0, 1)


def test_z5_spherical_d4():
    lat = get_preset("z5_threefold").lattice
    assert euler_pairing(lat["O_D4"], lat["O_D4"]) == 0


def test_z5_line_twist_d2_fixes_d4():
    g = get_preset("z5_threefold")
    assert g.line_twist("D2")(g.lattice["O_D4"]) == g.lattice["O_D4"]


def test_z5_d4_hyperplane_class():
    g = get_preset("z5_threefold")
    lat = g.lattice
    assert g.sheaf_class("D4", (1,)) == lat["O_D4"] + lat["O_l"] + lat["pt"]


def test_z5_gram_frozen():
    assert get_preset("z5_threefold").lattice.gram == (
        (0, 2, 3, -1, 0), (-2, 0, -1, 2, 0), (-3, 1, 0, 0, 0), (1, -2, 0, 0, 0), (0, 0, 0, 0, 0))


def test_z5_gram_antisymmetric():
    g = get_preset("z5_threefold").lattice.gram
    assert all(g[i][j] == -g[j][i] for i in range(5) for j in range(5))


@pytest.mark.parametrize("name", ["a2_surface", "z5_threefold"])
def test_gram_reproduces_under_oracle(name):
    g = get_preset(name)
    assert oracle_gram(g) == g.lattice.gram


@pytest.mark.parametrize("name", ["a2_surface", "z5_threefold"])
def test_spherical_classes(name):
    g = get_preset(name)
    want = 2 if name == "a2_surface" else 0
    for comp in g.components:
        f = g.sheaf_class(comp)
        assert euler_pairing(f, f) == want


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_line_twists_are_isometries(name):
    g = get_preset(name)
    for d in g.divisors:
        assert g.line_twist(d).is_isometry()


@given(st.sampled_from(["C3", "C4"]), st.integers(-3, 3), st.integers(-3, 3),
       st.sampled_from(["C3", "C4"]), st.integers(-3, 3), st.integers(-3, 3))
def test_a2_pairing_is_oracle_on_line_bundles(d1, a, b, d2, c, e):
    g = get_preset("a2_surface")
    v = g.line_bundle_class(d1, (a, b))
    w = g.line_bundle_class(d2, (c, e))
    assert euler_pairing(v, w) == oracle_chi(g, d1, (a, b), d2, (c, e))


def test_p1_beilinson_gram():
    assert get_preset("p1_beilinson").lattice.gram == ((1, 2), (0, 1))


def test_p2_beilinson_gram():
    assert get_preset("p2_beilinson").lattice.gram == ((1, 3, 6), (0, 1, 3), (0, 0, 1))


def test_twist_ops_from_presets_are_isometries_on_cy3():
    g = get_preset("z5_threefold")
    for name in g.classes:
        assert spherical_twist_op(g.lattice.cls(g.classes[name])).is_isometry()
