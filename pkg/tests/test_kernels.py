import random

import pytest
from hypothesis import given, settings, strategies as st

from fmtwist.algebra import beilinson, point_algebra, tensor_op
from fmtwist.complexes import (direct_sum, dual_sequence, find_quasi_iso, hom_complex,
                               homology_table, is_quasi_iso, minimize, projective,
                               random_complex, zero_complex)
from fmtwist.kernels import (Adjunction, KernelError, adjoint_kernel, adjunction_tables,
                             apply_kernel, as_kernel, as_object, check_EL, check_maincond,
                             convolve, diagonal_kernel, diagonal_resolution,
                             is_literally_associative, k_matrix, left_unitor,
                             lift_to_product, rank_one_kernel, right_unitor, serre_kernel,
                             theorem_pipeline, transpose, twist_kernel)
from fmtwist.lattice import EulerLattice, LatticeOp, adjoint_op, serre_op, spherical_twist_op
from fmtwist.presets import get_preset

P1 = beilinson(1)
P2 = beilinson(2)
T1 = tensor_op(P1, P1)
seeds = st.integers(0, 10 ** 6)


def projectives(alg):
    return [projective(alg, i) for i in range(alg.n)]


def lattice(alg):
    return get_preset(f"p{alg.n - 1}_beilinson").lattice


def matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))]
            for i in range(len(a))]


def qiso(X, Y):
    return find_quasi_iso(minimize(X, track=False)[0], minimize(Y, track=False)[0]) is not None


# ----------------------------------------------------------------------
# convolution

@given(seeds)
def test_associativity_is_literal(seed):
    rng = random.Random(seed)
    K, L, M = (random_complex(T1, rng, s) for s in (3, 2, 2))
    assert is_literally_associative(K, L, M)


@given(seeds)
def test_unit_laws(seed):
    K = random_complex(T1, random.Random(seed), 3)
    assert is_quasi_iso(left_unitor(K))
    assert is_quasi_iso(right_unitor(K))


@given(seeds)
def test_apply_convolution_is_composition(seed):
    rng = random.Random(seed)
    K, L = random_complex(T1, rng, 3), random_complex(T1, rng, 2)
    M = random_complex(P1, rng, 2)
    lhs, rhs = apply_kernel(convolve(K, L), M), apply_kernel(K, apply_kernel(L, M))
    assert lhs.k_class() == rhs.k_class()
    assert qiso(lhs, rhs)


@given(seeds)
def test_convolution_shadow_is_matrix_product(seed):
    rng = random.Random(seed)
    K, L = random_complex(T1, rng, 3), random_complex(T1, rng, 3)
    assert k_matrix(convolve(K, L)) == matmul(k_matrix(K), k_matrix(L))


@pytest.mark.parametrize("alg", [P1, P2], ids=lambda a: a.name)
def test_diagonal_applied_to_projectives(alg):
    D = diagonal_kernel(alg)
    for P in projectives(alg):
        assert qiso(apply_kernel(D, P), P)


def test_rank_one_single_term():
    K = rank_one_kernel(projective(P2, 0), projective(P2, 2))
    assert K.degrees() == [0] and K.size() == 1


def test_rank_one_of_dual_two_terms():
    E = dual_sequence(projectives(P1))[1]
    K = rank_one_kernel(E, projective(P1, 1))
    assert K.size() == 3 and K.degrees() == [-1, 0]


@pytest.mark.parametrize("i, j, k", [(0, 0, 1), (1, 0, 1), (0, 1, 1), (2, 0, 2), (0, 2, 1)])
def test_rank_one_applied(i, j, k):
    # F (x) Hom(G, G'): a sum of dim H(j, k) copies of F
    F, G, G2 = projective(P2, i), projective(P2, j), projective(P2, k)
    img = apply_kernel(rank_one_kernel(F, G), G2)
    c = P2.dim(j, k)
    assert img.k_class() == [c * x for x in F.k_class()]
    assert homology_table(img) == {v: ({0: c * h[0]} if c and h else {})
                                   for v, h in homology_table(F).items()}


def test_rank_one_composition_shadow():
    # (F (x) G^v) o (F' (x) G'^v) = chi(G, F') F (x) G'^v on classes
    F, G, F2, G2 = (projective(P2, v) for v in (0, 1, 2, 0))
    KL = convolve(rank_one_kernel(F, G), rank_one_kernel(F2, G2))
    chi = P2.dim(1, 2)
    assert k_matrix(KL) == [[chi * x for x in r] for r in k_matrix(rank_one_kernel(F, G2))]


def test_convolution_algebra_mismatch():
    K = diagonal_kernel(P1)
    L = diagonal_kernel(P2)
    with pytest.raises(Exception):
        convolve(K, L)


def test_object_kernel_roundtrip():
    X = random_complex(P1, random.Random(1), 3)
    assert as_object(as_kernel(X)).terms == X.terms


# ----------------------------------------------------------------------
# adjoints

@pytest.mark.parametrize("alg", [P1, P2], ids=lambda a: a.name)
def test_adjoint_of_diagonal_is_diagonal(alg):
    assert qiso(adjoint_kernel(diagonal_kernel(alg)), diagonal_kernel(alg))


@pytest.mark.parametrize("alg", [P1, P2], ids=lambda a: a.name)
def test_serre_kernel_shadow(alg):
    S = serre_kernel(alg)
    assert k_matrix(S) == [list(r) for r in serre_op(lattice(alg)).matrix]


@given(seeds)
def test_adjunction_dimensions_random(seed):
    K = random_complex(T1, random.Random(seed), 3)
    Kt = adjoint_kernel(K)
    P = projectives(P1) + dual_sequence(projectives(P1))
    assert all(a == b for a, b in adjunction_tables(K, Kt, P, P))


@given(seeds)
def test_adjoint_shadow(seed):
    K = random_complex(T1, random.Random(seed), 3)
    lat = lattice(P1)
    want = adjoint_op(LatticeOp(k_matrix(K), lat))
    assert k_matrix(adjoint_kernel(K)) == [list(r) for r in want.matrix]


@pytest.mark.parametrize("i, j", [(0, 0), (0, 1), (1, 1), (1, 0)])
def test_rank_one_adjunction_tables(i, j):
    K = rank_one_kernel(projective(P1, i), projective(P1, j))
    P = projectives(P1)
    assert all(a == b for a, b in adjunction_tables(K, adjoint_kernel(K), P, P))


@pytest.mark.parametrize("make", ["diagonal", "rank_one", "serre"])
def test_triangle_identities_p1(make):
    if make == "diagonal":
        K = diagonal_kernel(P1)
    elif make == "serre":
        K = serre_kernel(P1)
    else:
        K = rank_one_kernel(projective(P1, 0), projective(P1, 1))
    adj = Adjunction(K)
    assert adj.mult.is_chain_map() and adj.comult.is_chain_map()
    assert adj.triangle_identities() == (True, True)


@settings(max_examples=15)
@given(seeds)
def test_triangle_identities_random(seed):
    K = random_complex(T1, random.Random(seed), 3)
    assert Adjunction(K).triangle_identities() == (True, True)


def test_rank_one_counit_is_evaluation():
    # for F (x) F^v the counit restricted to F is the evaluation F (x) Hom(F, F) -> F
    F = projective(P1, 1)
    adj = Adjunction(as_kernel(F), solve_unit=False)
    img = apply_kernel(adj.KKt, F)
    f = apply_kernel(adj.mult.src, F)
    assert img.k_class() == f.k_class()
    assert adj.mult.is_chain_map()


def test_transpose_involution():
    K = random_complex(T1, random.Random(4), 3)
    assert transpose(transpose(K)).k_class() == K.k_class()


# ----------------------------------------------------------------------
# twists

@pytest.mark.parametrize("alg", [P1, P2], ids=lambda a: a.name)
def test_twist_kernel_shadow(alg):
    lat = lattice(alg)
    for i, P in enumerate(projectives(alg)):
        want = spherical_twist_op(lat.basis(i)).matrix
        assert k_matrix(twist_kernel(P)) == [list(r) for r in want]


def test_twist_of_zero_is_identity():
    assert qiso(twist_kernel(zero_complex(P1)), diagonal_kernel(P1))


def test_twist_kills_its_object():
    P = projectives(P1)
    img = minimize(apply_kernel(twist_kernel(P[0]), P[0]), track=False)[0]
    assert img.is_zero()


def test_twist_p0_on_p1_triangle():
    # T(P1) fits in P0 (x) Hom(P0, P1) -> P1 -> T(P1): the class is [P1] - 2[P0]
    P = projectives(P1)
    img = apply_kernel(twist_kernel(P[0]), P[1])
    assert img.k_class() == [-2, 1]


# ----------------------------------------------------------------------
# diagonal resolution

@pytest.mark.parametrize("alg", [P1, P2], ids=lambda a: a.name)
def test_diagonal_resolution(alg):
    dres = diagonal_resolution(alg)
    assert dres.augmentation_ok()
    for k in range(alg.n):
        assert dres.piece_iso(k) is not None
    lhs, rhs = dres.k_identity()
    assert lhs == rhs


def test_diagonal_resolution_one_vertex():
    dres = diagonal_resolution(point_algebra())
    assert dres.augmentation_ok()
    assert dres.piece_iso(0) is not None


@pytest.mark.parametrize("alg", [P1, P2], ids=lambda a: a.name)
def test_check_el(alg):
    dres = diagonal_resolution(alg)
    for k in range(1, alg.n):
        r = check_EL(dres, k)
        assert r["pass"] and r["image_iso"] and r["piece_iso"]
        assert r["scalar"] not in (None, "0")


def test_check_el_range():
    with pytest.raises(KernelError):
        check_EL(diagonal_resolution(P1), 0)


# ----------------------------------------------------------------------
# product lift and the comparison pipeline

def test_lift_of_diagonal():
    K = serre_kernel(P1)
    adj = Adjunction(K)
    assert qiso(lift_to_product(K, adj.DB, adj), adj.KKt)


def test_lift_of_rank_one():
    K = serre_kernel(P1)
    G2, G = projective(P1, 1), projective(P1, 0)
    got = lift_to_product(K, rank_one_kernel(G2, G))
    want = rank_one_kernel(apply_kernel(K, G2), apply_kernel(K, G))
    assert k_matrix(got) == k_matrix(want)
    assert qiso(got, want)


@pytest.mark.parametrize("alg", [P1, P2], ids=lambda a: a.name)
def test_maincond(alg):
    assert check_maincond(diagonal_kernel(alg))["pass"]
    assert check_maincond(serre_kernel(alg))["pass"]


def test_maincond_fails_for_projection():
    res = check_maincond(rank_one_kernel(projective(P2, 0), projective(P2, 0)))
    assert not res["pass"]
    assert any(not row["pass"] for row in res["pairs"])


def test_pipeline_one_vertex():
    assert theorem_pipeline(diagonal_kernel(point_algebra()))["pass"]


def test_pipeline_p1():
    res = theorem_pipeline(diagonal_kernel(P1))
    assert res["pass"] and res["maincond"]
    assert all(st["certified"] for st in res["stages"])
