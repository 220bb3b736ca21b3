"""Kernels as complexes of tensor-projective bimodules.

A kernel from B to A lives over tensor_op(A, B): the vertex (i, j) is the
tensor-projective with Hom space H((i,j),(k,l)) = H_A(i,k) (x) H_B(l,j).
Convolution tensors over the middle algebra,

    (i, j) (x)_B (k, l) = sum over a basis b of H_B(j, k) of (i, l),

so a kernel over A (x) B^op sends objects over B to objects over A.  An
object over A is the same data as a kernel over A (x) pt^op; ``as_kernel``
and ``as_object`` switch between the two.

Convention table (functor composition is convolution):

    apply_kernel(convolve(K, L), M) == apply_kernel(K, apply_kernel(L, M))
    adjoint_kernel(K)   right adjoint:  Hom(K M, N) = Hom(M, K~ N)
    mult_morphism(K)    counit  K K~ -> D_A
    comult_morphism(K)  unit    D_B -> K~ K
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .algebra import (DirectedAlgebra, diagonal_rep, point_algebra, serre_rep,
                      tensor_op)
from .complexes import (ChainMap, ComplexError, ProjComplex, _add_block, _nz,
                        identity_map, minimize, resolve)

POINT = point_algebra()


class KernelError(ComplexError):
    pass


def factors(X: ProjComplex) -> tuple[DirectedAlgebra, DirectedAlgebra]:
    f = getattr(X.algebra, "factors", None)
    if f is None:
        raise KernelError("not a kernel: algebra is not a tensor product")
    return f


def _pair(X: ProjComplex, n: int, lab):
    return X.algebra.pairs[X.terms[n][lab]]


# ----------------------------------------------------------------------
# objects <-> kernels

def as_kernel(M: ProjComplex) -> ProjComplex:
    """An object over A as a kernel from the point to A."""
    alg = tensor_op(M.algebra, POINT)
    return ProjComplex(alg, M.terms, M.d, name=M.name)


def as_object(K: ProjComplex) -> ProjComplex:
    A, B = factors(K)
    if B is not POINT:
        raise KernelError("kernel does not come from the point")
    return ProjComplex(A, K.terms, K.d, name=K.name)


def map_as_kernel(f: ChainMap, src=None, tgt=None) -> ChainMap:
    return ChainMap(src or as_kernel(f.src), tgt or as_kernel(f.tgt), f.blocks, f.degree)


def map_as_object(f: ChainMap, src=None, tgt=None) -> ChainMap:
    return ChainMap(src or as_object(f.src), tgt or as_object(f.tgt), f.blocks, f.degree)


# ----------------------------------------------------------------------
# convolution

def _mult(alg, i, j, k):
    return np.asarray(alg.mult(i, j, k), dtype=object)


def convolve(K: ProjComplex, L: ProjComplex, name: str = "") -> ProjComplex:
    """K o L for K over A (x) B^op and L over B (x) C^op.

    The term ((p, x), b, (q, y)) has degree p + q and vertex (i, l); d = d_K (x) 1 +
    (-1)^p 1 (x) d_L."""
    A, B = factors(K)
    B2, C = factors(L)
    if B is not B2:
        raise KernelError("middle algebras differ")
    alg = tensor_op(A, C)
    pidx = alg.pair_index
    terms: dict = {}
    for p, kt in K.terms.items():
        for q, lt in L.terms.items():
            row = terms.setdefault(p + q, {})
            for x, vx in kt.items():
                i, j = K.algebra.pairs[vx]
                for y, vy in lt.items():
                    k, l = L.algebra.pairs[vy]
                    for b in range(B.dim(j, k)):
                        row[((p, x), b, (q, y))] = pidx[(i, l)]
    d: dict = {}
    # d_K (x) 1
    for p, rows in K.d.items():
        for x2, r in rows.items():
            i2, j2 = _pair(K, p + 1, x2)
            for x, phi in r.items():
                i, j = _pair(K, p, x)
                da = A.dim(i, i2)
                Phi = np.asarray(phi, dtype=object).reshape(da, B.dim(j2, j))
                for q, lt in L.terms.items():
                    for y, vy in lt.items():
                        k, l = L.algebra.pairs[vy]
                        nb, nb2 = B.dim(j, k), B.dim(j2, k)
                        if not nb or not nb2:
                            continue
                        T = np.einsum("ab,xbc->xca", Phi, _mult(B, j2, j, k))
                        for b in range(nb):
                            for b2 in range(nb2):
                                vec = T[b, b2]
                                if _nz(vec):
                                    _add_block(d, p + q, ((p + 1, x2), b2, (q, y)), ((p, x), b, (q, y)), vec)
    # (-1)^p 1 (x) d_L
    for q, rows in L.d.items():
        for y2, r in rows.items():
            k2, l2 = _pair(L, q + 1, y2)
            for y, psi in r.items():
                k, l = _pair(L, q, y)
                Psi = np.asarray(psi, dtype=object).reshape(B.dim(k, k2), C.dim(l2, l))
                for p, kt in K.terms.items():
                    sg = -1 if p % 2 else 1
                    for x, vx in kt.items():
                        i, j = K.algebra.pairs[vx]
                        nb, nb2 = B.dim(j, k), B.dim(j, k2)
                        if not nb or not nb2:
                            continue
                        U = np.einsum("gd,gbc->bcd", Psi, _mult(B, j, k, k2)) * sg
                        for b in range(nb):
                            for b2 in range(nb2):
                                vec = U[b, b2]
                                if _nz(vec):
                                    _add_block(d, p + q, ((p, x), b2, (q + 1, y2)), ((p, x), b, (q, y)), vec)
    return ProjComplex(alg, terms, d, name=name or f"{K.name}*{L.name}")


def convolve_maps(f: ChainMap, g: ChainMap, src: ProjComplex | None = None,
                  tgt: ProjComplex | None = None) -> ChainMap:
    """f (x) g: K1 o L1 -> K2 o L2 with the Koszul sign (-1)^{|g| p}."""
    A, B = factors(f.src)
    _, C = factors(g.src)
    src = src or convolve(f.src, g.src)
    tgt = tgt or convolve(f.tgt, g.tgt)
    blocks: dict = {}
    for p, frows in f.blocks.items():
        sg = -1 if (g.degree * p) % 2 else 1
        for x2, fr in frows.items():
            i2, j2 = _pair(f.tgt, p + f.degree, x2)
            for x, phi in fr.items():
                i, j = _pair(f.src, p, x)
                Phi = np.asarray(phi, dtype=object).reshape(A.dim(i, i2), B.dim(j2, j))
                for q, grows in g.blocks.items():
                    for y2, gr in grows.items():
                        k2, l2 = _pair(g.tgt, q + g.degree, y2)
                        for y, psi in gr.items():
                            k, l = _pair(g.src, q, y)
                            nb, nb2 = B.dim(j, k), B.dim(j2, k2)
                            if not nb or not nb2:
                                continue
                            Psi = np.asarray(psi, dtype=object).reshape(B.dim(k, k2), C.dim(l2, l))
                            # b -> e_g o b o e_beta
                            M = np.einsum("bxc,gcd->xgbd", _mult(B, j2, j, k), _mult(B, j2, k, k2))
                            T = np.einsum("ax,gz,xgbd->bdaz", Phi, Psi, M) * sg
                            for b in range(nb):
                                for b2 in range(nb2):
                                    vec = T[b, b2].reshape(-1)
                                    if _nz(vec):
                                        _add_block(blocks, p + q, ((p + f.degree, x2), b2, (q + g.degree, y2)),
                                                   ((p, x), b, (q, y)), vec)
    return ChainMap(src, tgt, blocks, f.degree + g.degree)


def left_whisker(K: ProjComplex, g: ChainMap, src=None, tgt=None) -> ChainMap:
    """1_K o g."""
    return convolve_maps(identity_map(K), g, src, tgt)


def right_whisker(f: ChainMap, L: ProjComplex, src=None, tgt=None) -> ChainMap:
    """f o 1_L."""
    return convolve_maps(f, identity_map(L), src, tgt)


def reassociate(KL_M: ProjComplex, K_LM: ProjComplex) -> ChainMap:
    """The identity (K o L) o M -> K o (L o M): relabel
    ((pq, ((p,x),b,(q,y))), c, (r,z)) as ((p,x), b, (q+r, ((q,y),c,(r,z)))).  Raises if the two complexes are not literally equal
    under this relabelling."""
    alg = KL_M.algebra
    blocks = {}
    for n, t in KL_M.terms.items():
        for lab, v in t.items():
            (_, ((p, x), b, (q, y))), c, (r, z) = lab
            new = ((p, x), b, (q + r, ((q, y), c, (r, z))))
            if K_LM.terms.get(n, {}).get(new) != v:
                raise KernelError("complexes differ under reassociation")
            blocks.setdefault(n, {})[new] = {lab: alg.identity(v)}
    return ChainMap(KL_M, K_LM, blocks)


def is_literally_associative(K, L, M) -> bool:
    X = convolve(convolve(K, L), M)
    Y = convolve(K, convolve(L, M))
    try:
        a = reassociate(X, Y)
    except KernelError:
        return False
    if sum(len(t) for t in X.terms.values()) != sum(len(t) for t in Y.terms.values()):
        return False
    # transport the differential of X and compare with Y entrywise
    from .complexes import _blocks_equal
    ren = {lab: new for n, rows in a.blocks.items() for new, r in rows.items() for lab in r}
    moved = {}
    for n, rows in X.d.items():
        for t, r in rows.items():
            for s, v in r.items():
                moved.setdefault(n, {}).setdefault(ren[t], {})[ren[s]] = v
    return _blocks_equal(moved, Y.d)


def apply_kernel(K: ProjComplex, M: ProjComplex, name: str = "") -> ProjComplex:
    """The image of the object M (over B) under the kernel K (over A (x) B^op)."""
    return as_object(convolve(K, as_kernel(M), name=name or f"{K.name}({M.name})"))


def apply_kernel_map(K: ProjComplex, f: ChainMap) -> ChainMap:
    g = left_whisker(K, map_as_kernel(f))
    return map_as_object(g)


# ----------------------------------------------------------------------
# duality and rank one kernels

def transpose(K: ProjComplex, name: str = "") -> ProjComplex:
    """Termwise dual with the two sides swapped: (i, j) in degree p becomes
    (j, i) in degree -p over B (x) A^op."""
    A, B = factors(K)
    alg = tensor_op(B, A)
    terms = {-n: {lab: alg.pair_index[_pair(K, n, lab)[::-1]] for lab in t}
             for n, t in K.terms.items()}
    d: dict = {}
    for n, rows in K.d.items():
        for t, r in rows.items():
            i2, j2 = _pair(K, n + 1, t)
            for s, v in r.items():
                i, j = _pair(K, n, s)
                vec = np.asarray(v, dtype=object).reshape(A.dim(i, i2), B.dim(j2, j)).T.reshape(-1)
                d.setdefault(-n - 1, {}).setdefault(s, {})[t] = vec
    return ProjComplex(alg, terms, d, name=name or f"{K.name}^T")


def transpose_map(f: ChainMap, src=None, tgt=None) -> ChainMap:
    """f^T: tgt^T -> src^T (degree 0 maps)."""
    A, B = factors(f.src)
    src = src or transpose(f.tgt)
    tgt = tgt or transpose(f.src)
    blocks: dict = {}
    for n, rows in f.blocks.items():
        for t, r in rows.items():
            i2, j2 = _pair(f.tgt, n + f.degree, t)
            for s, v in r.items():
                i, j = _pair(f.src, n, s)
                vec = np.asarray(v, dtype=object).reshape(A.dim(i, i2), B.dim(j2, j)).T.reshape(-1)
                blocks.setdefault(-n - f.degree, {}).setdefault(s, {})[t] = vec
    return ChainMap(src, tgt, blocks, f.degree)


def dual_object(G: ProjComplex) -> ProjComplex:
    """G^v as a kernel from the algebra of G to the point."""
    return transpose(as_kernel(G), name=f"{G.name}^v")


def rank_one_kernel(F: ProjComplex, G: ProjComplex, name: str = "") -> ProjComplex:
    """F (x) G^v, the kernel of M -> F (x) Hom(G, M)-type functors."""
    return convolve(as_kernel(F), dual_object(G), name=name or f"{F.name}x{G.name}^v")


# ----------------------------------------------------------------------
# diagonal and Serre kernels

@lru_cache(maxsize=None)
def _resolved(alg: DirectedAlgebra, which: str):
    AA = tensor_op(alg, alg)
    if which == "diag":
        levels_rep = diagonal_rep(AA)
        X = resolve(levels_rep, name="D")
    else:
        X = resolve(serre_rep(AA), name="S")
    return X


def diagonal_kernel(alg: DirectedAlgebra) -> ProjComplex:
    """Minimal projective resolution of the diagonal bimodule; it acts as
    the identity up to quasi-isomorphism."""
    return _resolved(alg, "diag")


def serre_kernel(alg: DirectedAlgebra) -> ProjComplex:
    """Minimal projective resolution of the dual bimodule (Serre functor)."""
    return _resolved(alg, "serre")


# ----------------------------------------------------------------------
# adjoints

def adjoint_kernel(K: ProjComplex, minimal: bool = True, name: str = ""):
    """Right adjoint K~ = S_B o K^T of the functor of K (over A (x) B^op).

    For K the diagonal this is S o D^T, quasi-isomorphic to the diagonal,
    since the transpose of the diagonal is the inverse Serre kernel."""
    A, B = factors(K)
    X = convolve(serre_kernel(B), transpose(K), name=name or f"{K.name}~")
    if minimal:
        X = minimize(X, track=False, name=X.name)[0]
    return X


def adjunction_tables(K: ProjComplex, Kt: ProjComplex, Ms, Ns):
    """Pairs of Hom dimension tables (Hom(K M, N), Hom(M, K~ N)) for all
    test objects; the adjunction holds when every pair agrees."""
    from .complexes import hom_complex
    out = []
    for M in Ms:
        KM = apply_kernel(K, M)
        for N in Ns:
            KtN = apply_kernel(Kt, N)
            out.append((hom_complex(KM, N).homology_dims(),
                        hom_complex(M, KtN).homology_dims()))
    return out


# ----------------------------------------------------------------------
# unitors, counit and unit

def left_unitor(K: ProjComplex, D: ProjComplex | None = None, src=None) -> ChainMap:
    """D_A o K -> K: x (x) b (x) y -> r_x b y on the degree 0 generators."""
    A, _ = factors(K)
    D = D or diagonal_kernel(A)
    src = src or convolve(D, K)
    blocks: dict = {}
    for n, t in src.terms.items():
        for lab in t:
            (p, x), b, (q, y) = lab
            if p != 0:
                continue
            i, _ = D.algebra.pairs[D.terms[0][x]]
            k, l = _pair(K, q, y)
            vec = np.zeros(A.dim(i, k), dtype=object)
            vec[b] = D.augmentation[x][0]
            blocks.setdefault(n, {}).setdefault(y, {})[lab] = vec
    return ChainMap(src, K, blocks)


def right_unitor(K: ProjComplex, D: ProjComplex | None = None, src=None) -> ChainMap:
    """K o D_B -> K: x (x) b (x) z -> x b r_z."""
    _, B = factors(K)
    D = D or diagonal_kernel(B)
    src = src or convolve(K, D)
    blocks: dict = {}
    for n, t in src.terms.items():
        for lab in t:
            (p, x), b, (q, z) = lab
            if q != 0:
                continue
            i, j = _pair(K, p, x)
            k, _ = D.algebra.pairs[D.terms[0][z]]
            vec = np.zeros(B.dim(j, k), dtype=object)
            vec[b] = D.augmentation[z][0]
            blocks.setdefault(n, {}).setdefault(x, {})[lab] = vec
    return ChainMap(src, K, blocks)


_SIGNS = (lambda p: 1, lambda p: -1 if p % 2 else 1,
          lambda p: -1 if (p * (p + 1) // 2) % 2 else 1,
          lambda p: -1 if (p * (p - 1) // 2) % 2 else 1)


def _evaluation_values(K: ProjComplex, X: ProjComplex, sign) -> dict:
    """Values of the evaluation K o (S_B o K^T) -> diagonal module on degree
    0 terms: x (x) b1 (x) s (x) b2 (x) x^T -> r_s(b1 b2) e_i."""
    A, B = factors(K)
    S = serre_kernel(B)
    out = {}
    for lab, v in X.terms.get(0, {}).items():
        (p, x), b1, (_, ((q, s), b2, (r, xt))) = lab
        if q != 0 or xt != x or r != -p:
            continue
        i, j = _pair(K, p, x)
        k, l = S.algebra.pairs[S.terms[0][s]]
        e1 = np.zeros(B.dim(j, k), dtype=object)
        e1[b1] = 1
        e2 = np.zeros(B.dim(l, j), dtype=object)
        e2[b2] = 1
        val = sum(np.asarray(S.augmentation[s], dtype=object) * B.compose(l, j, k, e1, e2))
        if val != 0:
            out[lab] = np.array([sign(p) * val], dtype=object)
    return out


class Adjunction:
    """K, its right adjoint K~ (minimal model of S_B o K^T) and the counit
    mult: K o K~ -> D_A and unit comult: D_B -> K~ o K."""

    def __init__(self, K: ProjComplex, solve_unit: bool = True):
        from .complexes import module_map_defect, precompose_module_map, lift_to_resolution
        self.K = K
        A, B = factors(K)
        self.DA, self.DB = diagonal_kernel(A), diagonal_kernel(B)
        full = convolve(serre_kernel(B), transpose(K), name=f"{K.name}~")
        self.Kt, iota, _ = minimize(full, name=full.name)
        self.KKt = convolve(K, self.Kt)
        big = convolve(K, full)
        rep = self.DA.module
        values = None
        for sign in _SIGNS:
            vals = _evaluation_values(K, big, sign)
            if module_map_defect(big, rep, vals):
                values = vals
                break
        if values is None:
            raise KernelError("no sign makes the evaluation a chain map")
        small = precompose_module_map(values, left_whisker(K, iota, src=self.KKt, tgt=big), rep)
        self.mult = lift_to_resolution(self.KKt, self.DA, small)
        self.comult = self._solve_unit() if solve_unit else None

    def _solve_unit(self) -> ChainMap:
        """The unit is the class x in H^0 Hom(D_B, K~ K) with
        lambda (mult o 1) assoc (1 o x) ~ rho on K o D_B."""
        from .complexes import hom_complex, _solve_classes
        K, Kt = self.K, self.Kt
        self.KtK = convolve(Kt, K)
        KD = convolve(K, self.DB)
        K_KtK = convolve(K, self.KtK)
        KKt_K = convolve(self.KKt, K)
        DK = convolve(self.DA, K)
        back = reassociate_inverse(KKt_K, K_KtK)
        m1 = right_whisker(self.mult, K, src=KKt_K, tgt=DK)
        lam = left_unitor(K, self.DA, src=DK)
        tail = lam @ m1 @ back
        hx = hom_complex(self.DB, self.KtK).homology(0)
        htgt = hom_complex(KD, K).homology(0)
        cols = []
        for i in range(hx.dim):
            w = left_whisker(K, hx.rep_map(i), src=KD, tgt=K_KtK)
            cols.append(htgt.coords(tail @ w))
        c = _solve_classes(cols, htgt.coords(right_unitor(K, self.DB, src=KD)))
        if c is None:
            raise KernelError("unit solve failed (convention mismatch)")
        return hx.combo(c)

    def triangle_identities(self) -> tuple[bool, bool]:
        """Both composites of the triangle identities against the unitors,
        compared in Hom homology."""
        from .complexes import homotopic
        K, Kt = self.K, self.Kt
        KD = convolve(K, self.DB)
        K_KtK = convolve(K, self.KtK)
        KKt_K = convolve(self.KKt, K)
        DK = convolve(self.DA, K)
        first = (left_unitor(K, self.DA, src=DK) @ right_whisker(self.mult, K, src=KKt_K, tgt=DK)
                 @ reassociate_inverse(KKt_K, K_KtK)
                 @ left_whisker(K, self.comult, src=KD, tgt=K_KtK))
        ok1 = homotopic(first, right_unitor(K, self.DB, src=KD))
        DKt = convolve(self.DB, Kt)
        KtK_Kt = convolve(self.KtK, Kt)
        Kt_KKt = convolve(Kt, self.KKt)
        KtD = convolve(Kt, self.DA)
        second = (right_unitor(Kt, self.DA, src=KtD) @ left_whisker(Kt, self.mult, src=Kt_KKt, tgt=KtD)
                  @ reassociate(KtK_Kt, Kt_KKt)
                  @ right_whisker(self.comult, Kt, src=DKt, tgt=KtK_Kt))
        ok2 = homotopic(second, left_unitor(Kt, self.DB, src=DKt))
        return ok1, ok2


def reassociate_inverse(KL_M: ProjComplex, K_LM: ProjComplex) -> ChainMap:
    f = reassociate(KL_M, K_LM)
    blocks = {}
    for n, rows in f.blocks.items():
        for t, r in rows.items():
            for s, v in r.items():
                blocks.setdefault(n, {}).setdefault(s, {})[t] = v
    return ChainMap(K_LM, KL_M, blocks)


# ----------------------------------------------------------------------
# resolution of the diagonal by the product collection

class DiagonalResolution:
    """Filtration of the diagonal kernel D by the second factor index.

    Terms of D are tensor-projectives (i, j) and the differential only
    lowers j, so L_k = {j <= k} is a subcomplex and R_k = D / L_k.  Per k:

        lrd[k]:  L_k -> D        inclusion
        drr[k]:  D -> R_k        projection
        rrlr[k]: R_k -> L_k[1]   connecting map (components of d)
        lrlr[k]: L_{k-1} -> L_k  solved from lrd[k-1] ~ lrd[k] lrlr[k]
        piece[k] = {j = k}, with lre[k]: L_k -> piece[k],
        elr[k]: piece[k] -> L_{k-1}[1] and err[k]: piece[k] -> R_{k-1}.
    """

    def __init__(self, alg: DirectedAlgebra):
        from .complexes import (dual_sequence, projective, quotient, solve_post,
                                subcomplex)
        self.algebra = alg
        self.D = D = diagonal_kernel(alg)
        pairs = D.algebra.pairs
        m = alg.n - 1
        self.m = m
        self.L, self.R, self.lrd, self.drr, self.rrlr = [], [], [], [], []
        self.lrlr, self.piece, self.lre, self.elr, self.err = [None], [], [], [None], [None]
        for k in range(m + 1):
            L, inc = subcomplex(D, lambda n, lab, v, k=k: pairs[v][1] <= k, name=f"L{k}")
            R, proj = quotient(D, lambda n, lab, v, k=k: pairs[v][1] <= k, name=f"R{k}")
            self.L.append(L)
            self.lrd.append(inc)
            self.R.append(R)
            self.drr.append(proj)
            self.rrlr.append(self._connecting(D, R, L))
        for k in range(m + 1):
            L = self.L[k]
            # G_k = L_k / L_{k-1}; it is also a subcomplex of R_{k-1}
            G, lre = quotient(L, lambda n, lab, v, k=k: pairs[v][1] < k, name=f"G{k}")
            self.piece.append(G)
            self.lre.append(lre)
            if k:
                x = solve_post(self.lrd[k], self.lrd[k - 1])
                if x is None:
                    raise KernelError("lrlr does not factor")
                self.lrlr.append(x)
                self.elr.append(self._connecting(L, G, self.L[k - 1]))
                R1 = self.R[k - 1]
                blocks = {n: {lab: {lab: alg_id(D, v)} for lab, v in t.items()}
                          for n, t in G.terms.items()}
                self.err.append(ChainMap(G, R1, blocks))
        self.projectives = [projective(alg, v) for v in range(alg.n)]
        self.duals = dual_sequence(self.projectives)

    @staticmethod
    def _connecting(X: ProjComplex, Q: ProjComplex, S: ProjComplex) -> ChainMap:
        """Q = X/S for a subcomplex S: the map Q -> S[1] given by the
        components of d_X from Q-terms to S-terms."""
        from .complexes import shift
        S1 = shift(S, 1)
        blocks: dict = {}
        for n, rows in X.d.items():
            for t, r in rows.items():
                if t not in S.terms.get(n + 1, {}):
                    continue
                for s, v in r.items():
                    if s in Q.terms.get(n, {}):
                        blocks.setdefault(n, {}).setdefault(t, {})[s] = v
        return ChainMap(Q, S1, blocks)

    def rank_one_piece(self, k: int) -> ProjComplex:
        return rank_one_kernel(self.duals[k], self.projectives[k], name=f"E'{k}xE{k}^v")

    def k_identity(self) -> tuple[list[int], list[int]]:
        """(class of D, sum over k of the classes of E'_k (x) E_k^v)."""
        total = [0] * self.D.algebra.n
        for k in range(self.m + 1):
            for i, c in enumerate(self.rank_one_piece(k).k_class()):
                total[i] += c
        return self.D.k_class(), total

    def piece_iso(self, k: int, seed: int = 0):
        """Morphism search for piece[k] -> E'_k (x) E_k^v."""
        from .complexes import find_quasi_iso
        return find_quasi_iso(self.piece[k], minimize(self.rank_one_piece(k), track=False)[0],
                              seed=seed)

    def augmentation_ok(self) -> bool:
        """D -> diagonal bimodule is a quasi-isomorphism: per vertex the
        homology is the module in degree 0 and the augmentation is onto."""
        from .complexes import homology_table
        rep, aug = self.D.module, self.D.augmentation
        alg = self.D.algebra
        table = homology_table(self.D)
        for v in range(alg.n):
            want = {0: rep.dims[v]} if rep.dims[v] else {}
            if table[v] != want:
                return False
            cols = []
            for g, vg in self.D.terms.get(0, {}).items():
                for e in range(alg.dim(v, vg)):
                    unit = np.zeros(alg.dim(v, vg), dtype=object)
                    unit[e] = 1
                    cols.append(rep.action(v, vg, unit).dot(aug[g]))
            from . import linalg
            r = linalg.q_rank(np.array(cols, dtype=object).T) if cols and rep.dims[v] else 0
            if r != rep.dims[v]:
                return False
        return True


def alg_id(X: ProjComplex, v: int):
    return X.algebra.identity(v)


def diagonal_resolution(alg: DirectedAlgebra) -> DiagonalResolution:
    return DiagonalResolution(alg)


# ----------------------------------------------------------------------
# twists, product lifts and the comparison battery

class Reduced:
    """A complex together with its minimal model and the comparison maps."""

    def __init__(self, X: ProjComplex, name: str = ""):
        self.full = X
        self.min, self.iota, self.pi = minimize(X, name=name or X.name)


def twist_kernel(F: ProjComplex, adj: Adjunction | None = None) -> ProjComplex:
    """Minimal model of the cone of mult: F (x) F^v -> D for an object F."""
    from .complexes import cone
    adj = adj or Adjunction(as_kernel(F), solve_unit=False)
    C = cone(adj.mult, name=f"T({F.name})")
    return minimize(C, track=False, name=C.name)[0]


def k_matrix(K: ProjComplex) -> list[list[int]]:
    """Columns are the classes of K applied to the projectives of the
    source algebra."""
    from .complexes import projective
    _, B = factors(K)
    cols = [apply_kernel(K, projective(B, v)).k_class() for v in range(B.n)]
    return [list(r) for r in zip(*cols)] if cols else []


def image_tables(K: ProjComplex, objects) -> list[dict]:
    from .complexes import homology_table
    return [homology_table(minimize(apply_kernel(K, M), track=False)[0]) for M in objects]


class ProductLift:
    """A -> K o A o K~ on kernels over B (x) B^op and on maps, through
    minimal models: lift(A) = min(min(K o A) o K~)."""

    def __init__(self, adj: Adjunction):
        self.adj = adj
        self._cache: dict = {}

    def stage(self, A: ProjComplex):
        key = id(A)
        got = self._cache.get(key)
        if got is None:
            KA = Reduced(convolve(self.adj.K, A), name=f"K{A.name}")
            P = Reduced(convolve(KA.min, self.adj.Kt), name=f"F'({A.name})")
            got = (A, KA, P)
            self._cache[key] = got
        return got[1], got[2]

    def obj(self, A: ProjComplex) -> ProjComplex:
        return self.stage(A)[1].min

    def map(self, f: ChainMap) -> ChainMap:
        KA, PA = self.stage(f.src)
        KB, PB = self.stage(f.tgt)
        g = KB.pi @ left_whisker(self.adj.K, f, src=KA.full, tgt=KB.full) @ KA.iota
        h = right_whisker(g, self.adj.Kt, src=PA.full, tgt=PB.full)
        return PB.pi @ h @ PA.iota

    def counit(self) -> ChainMap:
        """lift(D_B) -> D_A: the counit after the right unitor."""
        adj = self.adj
        DB = adj.DB
        KD, PD = self.stage(DB)
        rho = right_unitor(adj.K, DB, src=KD.full) @ KD.iota
        w = right_whisker(rho, adj.Kt, src=PD.full, tgt=adj.KKt)
        return adj.mult @ w @ PD.iota


def lift_to_product(K: ProjComplex, A: ProjComplex, adj: Adjunction | None = None):
    return ProductLift(adj or Adjunction(K)).obj(A)


def check_maincond(K: ProjComplex, seq=None) -> dict:
    """Hom(E_i, E_j) -> Hom(F E_i, F E_j) is an isomorphism for i < j:
    equal dimension tables and injective in degree 0."""
    from . import linalg
    from .complexes import hom_complex, projective
    _, B = factors(K)
    seq = seq or [projective(B, v) for v in range(B.n)]
    images = [Reduced(apply_kernel(K, E)) for E in seq]
    rows, ok = [], True
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            h_src = hom_complex(seq[i], seq[j])
            h_tgt = hom_complex(images[i].min, images[j].min)
            t_src, t_tgt = h_src.homology_dims(), h_tgt.homology_dims()
            H0 = h_src.homology(0)
            T0 = h_tgt.homology(0)
            cols = []
            for a in range(H0.dim):
                Fa = apply_kernel_map(K, H0.rep_map(a))
                Fa = ChainMap(images[i].full, images[j].full, Fa.blocks)
                cols.append(T0.coords(images[j].pi @ Fa @ images[i].iota))
            rank = linalg.q_rank(np.array(cols, dtype=object)) if cols and T0.dim else 0
            good = t_src == t_tgt and rank == H0.dim
            ok = ok and good
            rows.append({"i": i, "j": j, "source": t_src, "image": t_tgt,
                         "rank": rank, "pass": good})
    return {"pass": ok, "pairs": rows}


def multind(A: ProjComplex, F: ProjComplex, adjF: Adjunction | None = None) -> ChainMap:
    """A o (F (x) F^v) -> A o D -> A for a kernel A and an object F."""
    adjF = adjF or Adjunction(as_kernel(F), solve_unit=False)
    _, B = factors(A)
    DB = diagonal_kernel(B)
    src = convolve(A, adjF.KKt)
    mid = convolve(A, DB)
    return right_unitor(A, DB, src=mid) @ left_whisker(A, adjF.mult, src=src, tgt=mid)


def check_EL(dres: DiagonalResolution, k: int, seed: int = 0) -> dict:
    """The image of E_k under R_{k-1} is E'_k, and the induced map
    piece[k] ~ R_{k-1}(E_k) (x) E_k^v -> R_{k-1} agrees with err[k] up to a
    nonzero scalar."""
    from .complexes import find_quasi_iso, same_up_to_scalar
    if k < 1 or k > dres.m:
        raise KernelError("k out of range")
    R, E, Ed = dres.R[k - 1], dres.projectives[k], dres.duals[k]
    image = minimize(apply_kernel(R, E), track=False)[0]
    iso = find_quasi_iso(image, Ed, seed=seed)
    adjF = Adjunction(as_kernel(E), solve_unit=False)
    mi = multind(R, E, adjF)
    red = Reduced(mi.src)
    theta = find_quasi_iso(dres.piece[k], red.min, seed=seed)
    scalar = None
    if theta is not None:
        scalar = same_up_to_scalar(mi @ red.iota @ theta, dres.err[k])
    return {"k": k, "image_iso": iso is not None, "piece_iso": theta is not None,
            "scalar": None if scalar is None else str(scalar),
            "pass": iso is not None and scalar is not None}


def _tables(K: ProjComplex, objects) -> list:
    return image_tables(K, objects)


def battery(X: ProjComplex, Y: ProjComplex, objects) -> dict:
    """Necessary conditions for X ~ Y: equal K-matrices and equal homology
    tables of the images of every test object."""
    kx, ky = k_matrix(X), k_matrix(Y)
    tx, ty = _tables(X, objects), _tables(Y, objects)
    return {"k_matrix": kx == ky, "tables": tx == ty, "pass": kx == ky and tx == ty,
            "k_matrix_left": kx, "k_matrix_right": ky}


class TheoremPipeline:
    """Both sides of the twist formula for an endo-kernel K.

    tc[k]   = T(F E_0) o ... o T(F E_k)
    flrd[k] = counit o lift(lrd[k]): lift(L_k) -> D
    cone(flrd[k]) is compared with tc[k] by the battery, and for k < m the
    key composite F(R_k(E_{k+1})) -> lift(R_k)(F E_{k+1}) -> cone(flrd[k])(F E_{k+1})
    is tested for being a quasi-isomorphism.
    """

    def __init__(self, K: ProjComplex, log=None):
        from .complexes import cone, dual_sequence, projective
        self.K = K
        A, B = factors(K)
        if A is not B:
            raise KernelError("the pipeline needs an endo-kernel")
        self.log = log or (lambda msg: None)
        self.maincond = check_maincond(K)
        if not self.maincond["pass"]:
            raise KernelError("maincond fails; the theorem does not apply")
        self.adj = Adjunction(K)
        self.lift = ProductLift(self.adj)
        self.dres = diagonal_resolution(B)
        self.m = self.dres.m
        self.objects = ([projective(A, v) for v in range(A.n)]
                        + dual_sequence([projective(A, v) for v in range(A.n)]))
        self.counit = self.lift.counit()
        self.images = [Reduced(apply_kernel(K, P), name=f"F(E{i})")
                       for i, P in enumerate(self.dres.projectives)]
        self.twists = []
        for i, F in enumerate(self.images):
            self.twists.append(twist_kernel(F.min))
            self.log(f"twist {i}: {self.twists[-1]!r}")
        self.flrd, self.cones, self.tc = [], [], []
        cur = None
        for k in range(self.m + 1):
            f = self.counit @ self.lift.map(self.dres.lrd[k])
            self.flrd.append(f)
            self.cones.append(cone(f, name=f"cone(flrd{k})"))
            cur = self.twists[0] if cur is None else minimize(
                convolve(cur, self.twists[k]), track=False, name=f"tc{k}")[0]
            self.tc.append(cur)
            self.log(f"stage {k}: tc {cur!r}, cone {self.cones[-1]!r}")

    def frrc(self, k: int) -> ChainMap:
        """A map lift(R_k) -> cone(flrd[k]) completing the middle square
        (solved in Hom homology)."""
        from .complexes import solve_pre
        C = self.cones[k]
        g = self.lift.map(self.dres.drr[k])
        h = C.inc @ self.counit
        x = solve_pre(g, h, C)
        if x is None:
            raise KernelError(f"no frrc for k = {k}")
        return x

    def key_composite(self, k: int) -> ChainMap:
        adj = self.adj
        K, Kt = adj.K, adj.Kt
        R = self.dres.R[k]
        G = as_kernel(self.dres.projectives[k + 1])
        KA, PA = self.lift.stage(R)
        DG = Reduced(convolve(adj.DB, G))
        KG = Reduced(convolve(K, G))
        KtK_G = convolve(adj.KtK, G)
        Kt_KG = convolve(Kt, KG.full)
        s1 = right_whisker(adj.comult, G, src=DG.full, tgt=KtK_G)
        s2 = reassociate(KtK_G, Kt_KG)
        s3 = left_whisker(Kt, KG.pi, src=Kt_KG)
        inner = s3 @ s2 @ s1 @ DG.iota
        src = convolve(KA.min, DG.min)
        mid = convolve(KA.min, inner.tgt)
        s4 = left_whisker(KA.min, inner, src=src, tgt=mid)
        assoc = convolve(PA.full, KG.min)
        s5 = reassociate_inverse(assoc, mid)
        C = self.cones[k]
        fr = self.frrc(k) @ PA.pi
        s6 = right_whisker(fr, KG.min, src=assoc)
        return s6 @ s5 @ s4

    def run(self, certify: bool = True) -> dict:
        """The battery per stage; with ``certify`` a quasi-isomorphism
        tc[k] -> cone(flrd[k]) is also searched for (reported, not required)."""
        from .complexes import find_quasi_iso, is_quasi_iso
        stages = []
        ok = True
        for k in range(self.m + 1):
            b = battery(self.tc[k], self.cones[k], self.objects)
            entry = {"k": k, "k_matrix": b["k_matrix"], "tables": b["tables"]}
            if certify:
                right = minimize(self.cones[k], track=False)[0]
                entry["certified"] = find_quasi_iso(self.tc[k], right) is not None
            if k < self.m:
                comp = self.key_composite(k)
                entry["key_iso"] = bool(comp.is_chain_map() and is_quasi_iso(comp))
            entry["pass"] = b["pass"] and entry.get("key_iso", True)
            ok = ok and entry["pass"]
            stages.append(entry)
            self.log(f"battery {k}: {entry}")
        return {"pass": ok, "maincond": self.maincond["pass"], "stages": stages}


def theorem_pipeline(K: ProjComplex, log=None, certify: bool = True) -> dict:
    return TheoremPipeline(K, log=log).run(certify=certify)
