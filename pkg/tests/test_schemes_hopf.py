import random
from math import comb

import pytest

from plethcalc import linalg
from plethcalc.exact_algebra import QQ, ZZ, AlgebraMap, CoefficientRing, StructuralError, ValidationError
from plethcalc.plethory_examples import (divided_powers, idempotent_scheme, identity_scheme, lambda_structure,
                                         newton_primitive, small_schemes)
from plethcalc.pro_tower import GradedFreeModule
from plethcalc.schemes_hopf import (AlgebraView, FormalBimodule, Gamma, LevelStructure, SchemeStructure,
                                    check_adjunction_for, check_adjunctions, check_free_on_point, cofree_lift,
                                    cofree_lift_checked, free_bimodule, free_tensor, gamma_cofree, gamma_projection,
                                    indecomposables, primitive_polynomials, primitives, project_indecomposable, sym_free, triangle_instances,
                                    validate)


def replace_image(f, i, img):
    imgs = list(f.images)
    imgs[i] = img
    return AlgebraMap(f.source, f.target, imgs, graded=f.graded)


def test_validate_examples_pass():
    rep = validate(lambda_structure(4), 4)
    assert rep.passed, rep.failures()
    assert rep.status("comult.counit") == "pass"
    rep = validate(identity_scheme(0), 4)
    assert rep.passed and rep.status("coadd.cocommutative") == "pass"


def test_validate_small_schemes_depth_four():
    for name, S in small_schemes().items():
        rep = validate(S, 4)
        assert rep.passed, (name, rep.failures())


def test_divided_powers_pass_except_unit():
    rep = validate(divided_powers(6), 6)
    assert rep.passed
    assert rep.status("comult.counit") == "skip"


def test_mutant_coaddition_reports_witness():
    S = lambda_structure(3)

    def corrupt(L):
        T = L.coadd.target
        return L.replace(coadd=replace_image(L.coadd, 1, T.inject(0, L.algebra.gen(1))))
    rep = validate(S.mutate("broken", corrupt), 3)
    assert not rep.passed
    assert all(f.witness for f in rep.failures())
    assert any(f.witness["element"] == "c2" for f in rep.failures())


def test_mutant_comultiplication_fails():
    S = lambda_structure(3)

    def corrupt(L):
        return L.replace(comult=replace_image(L.comult, 1, L.comult.images[1] * 2))
    rep = validate(S.mutate("broken", corrupt), 3)
    assert {r.axiom for r in rep.failures()} >= {"comult.distributive"}


def test_missing_level_is_structural_error():
    def build(d):
        raise KeyError(d)
    S = SchemeStructure("empty", ZZ, build)
    with pytest.raises(StructuralError):
        validate(S, 2)


def test_report_json_shape():
    rep = validate(identity_scheme(1), 3)
    d = rep.to_json()
    assert d["passed"] is True
    assert all(set(r) >= {"axiom", "status"} for r in d["results"])


def test_gamma_rank_one_is_divided_powers():
    M = GradedFreeModule.make(ZZ, {1: ["y"]})
    G = gamma_cofree(M, 4)
    gam = {n: G.basis(n)[0] for n in range(5)}
    assert all(len(G.basis(n)) == 1 for n in range(5))
    for m in range(3):
        for n in range(3):
            if m + n <= 4:
                assert G.product(gam[m], gam[n]) == {gam[m + n]: comb(m + n, n)}
    assert G.basis(0) == [("G", 0, 0, 0)]
    assert [gamma_projection(G, gam[1])] == [{"y": 1}]


def test_gamma_symmetric_square_rank():
    M = GradedFreeModule.make(QQ, {1: ["a", "b"]})
    G = Gamma(M, 2, 2)
    assert len(G._component(2, 2)) == 3


def test_gamma_bialgebra_axioms():
    M = GradedFreeModule.make(ZZ, {1: ["a", "b"], 2: ["c"]})
    G = Gamma(M, 4, 4)

    def mul(x, y):
        return G.product(x, y)

    def cop(x):
        return G.coproduct(x)
    for w1 in range(3):
        for w2 in range(3 - w1):
            for x in G.basis(w1):
                for y in G.basis(w2):
                    # psi(xy) = psi(x) psi(y)
                    lhs: dict = {}
                    for z, c in mul(x, y).items():
                        for pr, d in cop(z).items():
                            lhs[pr] = lhs.get(pr, 0) + c * d
                    rhs: dict = {}
                    for (x1, x2), c in cop(x).items():
                        for (y1, y2), d in cop(y).items():
                            for z1, e in mul(x1, y1).items():
                                for z2, f in mul(x2, y2).items():
                                    rhs[(z1, z2)] = rhs.get((z1, z2), 0) + c * d * e * f
                    assert {k: v for k, v in lhs.items() if v} == {k: v for k, v in rhs.items() if v}
                    assert mul(x, y) == mul(y, x)


def test_cofree_lift_examples():
    M = GradedFreeModule.make(ZZ, {1: ["y"]})
    G = Gamma(M, 3, 3)
    H = AlgebraView(divided_powers(3).level(3))
    lift = cofree_lift(H, G, lambda a: {})
    assert lift(H.unit()) == {G.basis(0)[0]: 1}
    proj = cofree_lift_checked(H, G, lambda a: {"y": 1} if H.weight(a) == 1 else {}, range(4))
    M_ = [[proj(a).get(g, 0) for a in [x for w in range(4) for x in H.basis(w)]]
          for g in [x for w in range(4) for x in G.basis(w)]]
    assert linalg.is_invertible(M_, ZZ)


def test_cofree_lift_rejects_non_cocommutative():
    class Skew(AlgebraView):
        def coproduct(self, label):
            out = dict(super().coproduct(label))
            if self.weight(label) == 2:
                top = [k for k in out if self.weight(k[0]) == 2]
                out[top[0]] = out[top[0]] + 1
            return out
    C = Skew(lambda_structure(2, with_comult=False).level(2))
    G = Gamma(GradedFreeModule.make(ZZ, {1: ["m"]}), 2, 2)
    with pytest.raises(ValidationError):
        cofree_lift_checked(C, G, lambda a: {}, range(3))


def test_triangle_identities_random():
    rep = triangle_instances(20, random.Random(5))
    assert rep.passed, rep.failures()


def test_sym_free_examples():
    S = sym_free(free_bimodule(ZZ, [1]), 4)
    Q = indecomposables(S, 4, range(1, 5))
    assert Q.rank(1) == 1 and all(Q.rank(w) == 0 for w in range(2, 5))
    S0 = sym_free(free_bimodule(ZZ, []), 3)
    assert S0.level(3).algebra.ngens == 0
    S2 = sym_free(free_bimodule(ZZ, [1, 1]), 4)
    assert len(S2.level(4).algebra.basis(2)) == 3


def test_primitives_examples():
    P = primitives(identity_scheme(0, QQ), 3, range(1, 4))
    assert P.rank(1) == 1 and P.rank(2) == 0
    P = primitives(divided_powers(4), 4, range(1, 5))
    assert P.rank(1) == 1 and all(P.rank(w) == 0 for w in range(2, 5))
    prims = primitive_polynomials(lambda_structure(3), 3)
    A = lambda_structure(3).level(3).algebra
    c1, c2, c3 = A.gens()
    assert prims[2][0] in (c1 * c1 - 2 * c2, 2 * c2 - c1 * c1)
    assert prims[3][0] in (c1 ** 3 - 3 * c1 * c2 + 3 * c3, -(c1 ** 3 - 3 * c1 * c2 + 3 * c3))


def test_indecomposables_examples():
    Q = indecomposables(identity_scheme(0), 3, range(1, 4))
    assert Q.rank(1) == 1
    Q = indecomposables(lambda_structure(5), 5, range(1, 6))
    assert Q.is_free() and all(Q.rank(w) == 1 for w in range(1, 6))
    Qd = indecomposables(divided_powers(4), 4, range(1, 5))
    assert not Qd.is_free()


def test_indecomposables_of_idempotent_pair_vanish():
    Q = indecomposables(idempotent_scheme(2), 2, [0, 1, 2])
    assert all(r == 0 for r in Q.ranks().values())


def test_primitive_injects_into_indecomposables_over_q():
    S = lambda_structure(5, QQ)
    Q = indecomposables(S, 5, range(1, 6))
    A = S.level(5).algebra
    for n in range(1, 6):
        p = newton_primitive(n, A)
        assert any(project_indecomposable(Q, n, A.coordinates(p, n)))


def test_adjunction_examples():
    for ring in (ZZ, CoefficientRing.mod(3)):
        assert check_adjunction_for(free_bimodule(ring, [1]), 3).passed
        assert check_adjunction_for(free_bimodule(ring, []), 3).passed
        assert check_adjunction_for(free_bimodule(ring, [1, 2]), 3).passed


def test_adjunctions_small_family():
    rep = check_adjunctions(3, [ZZ], max_rank=2)
    assert rep.passed


def test_free_tensor_point_and_two_point():
    assert free_tensor(["p"], ["q"], 3).passed
    assert free_tensor(["p"], ["a", "b"], 3).passed
    assert free_tensor(["a", "b"], ["c", "d"], 3).passed
    assert check_free_on_point(3).passed


def test_formal_bimodule_check():
    B = free_bimodule(ZZ, [1, 2])
    assert isinstance(B, FormalBimodule) and B.check()
    assert isinstance(lambda_structure(2).level(2), LevelStructure)
