import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fmtwist.algebra import (beilinson, kronecker, linear_quiver, point_algebra,
                             projective_rep, simple_rep)
from fmtwist.complexes import (ChainMap, ComplexError, cone, direct_sum, dual_sequence,
                               evaluation_map, find_quasi_iso, hom_complex, homology_table,
                               homotopic, identity_map, is_acyclic, is_acyclic_brute,
                               is_exceptional, is_quasi_iso, left_mutation, minimize,
                               project_semiorthogonal, projective, random_complex, resolve,
                               shift, zero_map)
from fmtwist.lattice import mutate_class
from fmtwist.presets import get_preset

P1 = beilinson(1)
P2 = beilinson(2)
ALGEBRAS = [P1, P2, kronecker(3), linear_quiver(3), point_algebra()]


def projectives(alg):
    return [projective(alg, i) for i in range(alg.n)]


def empty_table(alg):
    return {v: {} for v in range(alg.n)}


seeds = st.integers(0, 10 ** 6)


# ----------------------------------------------------------------------
# algebras

@pytest.mark.parametrize("alg", ALGEBRAS, ids=lambda a: a.name)
def test_algebra_axioms(alg):
    assert alg.is_directed()
    assert alg.check_identity()
    assert alg.check_associative()


def test_beilinson_hom_dims():
    assert P1.dim(0, 1) == 2
    assert [P2.dim(0, j) for j in range(3)] == [1, 3, 6]
    assert P2.dim(2, 0) == 0


# ----------------------------------------------------------------------
# Hom complexes

@pytest.mark.parametrize("alg", ALGEBRAS, ids=lambda a: a.name)
def test_projectives_exceptional(alg):
    for P in projectives(alg):
        assert hom_complex(P, P).homology_dims() == {0: 1}
        assert is_exceptional(P)


def test_hom_p1_forward():
    P = projectives(P1)
    assert hom_complex(P[0], P[1]).homology_dims() == {0: 2}


def test_hom_p1_backward():
    P = projectives(P1)
    assert hom_complex(P[1], P[0]).homology_dims() == {}


def test_hom_algebra_mismatch():
    with pytest.raises(ComplexError):
        ChainMap(projective(P1, 0), projective(P2, 0))


@given(seeds)
def test_hom_complex_d_squared_and_nonnegative(seed):
    rng = random.Random(seed)
    X, Y = random_complex(P1, rng, 3), random_complex(P1, rng, 3)
    dims = hom_complex(X, Y).homology_dims()
    assert all(v > 0 for v in dims.values())
    assert X.d_squared_zero() and Y.d_squared_zero()


@given(seeds, st.integers(-2, 2))
def test_shift_moves_hom(seed, k):
    rng = random.Random(seed)
    X, Y = random_complex(P1, rng, 3), random_complex(P1, rng, 3)
    a = hom_complex(X, Y).homology_dims()
    b = hom_complex(X, shift(Y, k)).homology_dims()
    assert b == {n - k: v for n, v in a.items()}


# ----------------------------------------------------------------------
# cones and quasi-isomorphisms

@given(seeds)
def test_cone_of_identity_is_acyclic(seed):
    X = random_complex(P2, random.Random(seed), 3)
    assert is_acyclic(cone(identity_map(X)))


@given(seeds)
def test_cone_of_zero_is_sum(seed):
    rng = random.Random(seed)
    X, Y = random_complex(P1, rng, 2), random_complex(P1, rng, 2)
    assert homology_table(cone(zero_map(X, Y))) == homology_table(direct_sum(shift(X, 1), Y))


def test_cone_of_evaluation_p1():
    P = projectives(P1)
    ev = evaluation_map(P[0], P[1])
    assert ev.src.k_class() == [2, 0]
    C = cone(ev)
    # O(-1)[1]: the simple module at the last vertex in degree 0
    assert homology_table(C) == {0: {}, 1: {0: 1}}


def test_identity_is_quasi_iso():
    X = random_complex(P1, random.Random(3), 3)
    assert is_quasi_iso(identity_map(X))


def test_zero_map_not_quasi_iso():
    P = projectives(P1)
    assert not is_quasi_iso(zero_map(P[0], P[0]))


@pytest.mark.parametrize("kind", ["simple", "projective"])
@pytest.mark.parametrize("v", [0, 1, 2])
def test_resolution_augmentation(kind, v):
    rep = simple_rep(P2, v) if kind == "simple" else projective_rep(P2, v)
    R = resolve(rep)
    want = {u: ({0: rep.dims[u]} if rep.dims[u] else {}) for u in range(P2.n)}
    assert homology_table(R) == want


@given(seeds, st.sampled_from([0, 1]))
def test_quasi_iso_matches_brute_force(seed, which):
    rng = random.Random(seed)
    alg = [P1, P2][which]
    X, Y = random_complex(alg, rng, 3), random_complex(alg, rng, 3)
    h = hom_complex(X, Y).homology(0)
    f = h.combo([rng.randint(-2, 2) for _ in range(h.dim)]) if h.dim else zero_map(X, Y)
    assert is_quasi_iso(f) == is_acyclic_brute(cone(f))


@given(seeds)
def test_minimize_preserves_homology(seed):
    X = random_complex(P2, random.Random(seed), 4)
    M, iota, pi = minimize(X)
    assert homology_table(M) == homology_table(X)
    assert iota.is_chain_map() and pi.is_chain_map()
    assert is_quasi_iso(iota) and is_quasi_iso(pi)
    assert homotopic(pi @ iota, identity_map(M))
    assert homotopic(iota @ pi, identity_map(X))


@given(seeds)
def test_minimal_complex_has_no_unit_components(seed):
    M = minimize(random_complex(P1, random.Random(seed), 4), track=False)[0]
    for n, rows in M.d.items():
        for t, r in rows.items():
            for s, v in r.items():
                assert M.vertex(n, s) != M.vertex(n + 1, t)


@given(seeds, st.integers(1, 3))
def test_scaled_maps_have_isomorphic_cones(seed, c):
    rng = random.Random(seed)
    X, Y = random_complex(P1, rng, 2), random_complex(P1, rng, 2)
    h = hom_complex(X, Y).homology(0)
    if not h.dim:
        return
    f = h.rep_map(0)
    assert homology_table(cone(f)) == homology_table(cone(f.scale(-c)))


def test_find_quasi_iso_to_minimal_model():
    X = random_complex(P2, random.Random(7), 4)
    M = minimize(X, track=False)[0]
    f = find_quasi_iso(X, M)
    assert f is not None and is_quasi_iso(f)


# ----------------------------------------------------------------------
# mutations and duals

def test_mutation_trivial_when_orthogonal():
    P = projectives(P1)
    C, _ = left_mutation(P[1], P[0])
    assert homology_table(C) == homology_table(P[0])
    assert C.k_class() == P[0].k_class()


def test_mutation_p1_euler_sequence():
    P = projectives(P1)
    C, ev = left_mutation(P[0], P[1])
    assert C.k_class() == [-2, 1]
    assert find_quasi_iso(C, dual_sequence(P)[1]) is not None


def test_mutation_needs_exceptional():
    P = projectives(P1)
    with pytest.raises(ComplexError):
        left_mutation(direct_sum(P[0], P[0]), P[1])


@pytest.mark.parametrize("alg", [P1, P2], ids=lambda a: a.name)
def test_mutation_classes_match_lattice(alg):
    lat = get_preset(f"p{alg.n - 1}_beilinson").lattice
    P = projectives(alg)
    for i in range(alg.n):
        for j in range(i + 1, alg.n):
            C, _ = left_mutation(P[i], P[j])
            assert C.k_class() == list(mutate_class(lat.basis(i), lat.basis(j)).coords)


def test_dual_sequence_single_vertex():
    A = point_algebra()
    (E,) = dual_sequence(projectives(A))
    assert E.terms == projective(A, 0).terms


def test_dual_sequence_p1():
    P = projectives(P1)
    D = dual_sequence(P)
    assert homology_table(D[0]) == homology_table(P[0])
    assert D[1].k_class() == [-2, 1]


@pytest.mark.parametrize("alg", [P1, P2, kronecker(3), linear_quiver(3)], ids=lambda a: a.name)
def test_orthogonality_table(alg):
    P = projectives(alg)
    D = dual_sequence(P)
    for i in range(alg.n):
        for j in range(alg.n):
            assert hom_complex(P[i], D[j]).homology_dims() == ({0: 1} if i == j else {})


def test_p2_iterated_mutation():
    P = projectives(P2)
    X, _ = left_mutation(P[1], P[2])
    X, _ = left_mutation(P[0], X)
    assert [hom_complex(P[i], X).homology_dims() for i in range(3)] == [{}, {}, {0: 1}]


# ----------------------------------------------------------------------
# semiorthogonal projection

def test_projection_in_span():
    P = projectives(P1)
    A1, A0, tri = project_semiorthogonal([P[0]], direct_sum(P[0], P[0]))
    assert is_acyclic(A0)


def test_projection_in_orthogonal():
    P = projectives(P1)
    D = dual_sequence(P)
    A1, A0, tri = project_semiorthogonal([P[0]], D[1])
    assert is_acyclic(A1)


def test_projection_p1():
    P = projectives(P1)
    A1, A0, tri = project_semiorthogonal([P[0]], P[1])
    assert A1.k_class() == [2, 0]
    assert A0.k_class() == [-2, 1]
    assert hom_complex(P[0], A0).homology_dims() == {}
    assert tri["to_x"].is_chain_map() and tri["to_a0"].is_chain_map()
