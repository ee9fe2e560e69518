from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from plethcalc import linalg
from plethcalc.exact_algebra import (QQ, ZZ, AlgebraMap, CoefficientRing, Generator, LinearMapByWeight, Polynomial,
                                     StructuralError, TruncatedAlgebra, ValidationError, apply_map, binomial,
                                     format_polynomial, identity_map, multiply, parse_polynomial, polynomial_algebra,
                                     tensor_algebra, weight_component_matrix)
from plethcalc.plethory_examples import divided_power_algebra, lambda_structure


def mixed_algebra(bound=8):
    # two even and two odd generators
    return polynomial_algebra(ZZ, [("a", 1), ("b", 2), ("x", 1), ("y", 3)], bound, odd=["x", "y"])


def poly_strategy(A, max_terms=4):
    mono = st.tuples(*[st.integers(0, 1 if odd else 2) for odd in A.odd])
    return st.dictionaries(mono, st.integers(-3, 3), max_size=max_terms).map(lambda t: Polynomial.from_terms(A, {
        m: c for m, c in t.items() if A.bound is None or A.weight_of(m) <= A.bound}))


def test_coefficient_rings_are_exact():
    assert QQ(Fraction(6, 4)) == Fraction(3, 2)
    assert CoefficientRing.mod(5)(-1) == 4
    assert CoefficientRing.mod(7)(Fraction(1, 3)) == 5
    assert CoefficientRing.parse("Z/3") == CoefficientRing.mod(3)
    assert CoefficientRing.parse("F2") == CoefficientRing.mod(2)
    with pytest.raises(ValidationError):
        ZZ(Fraction(1, 2))
    with pytest.raises(StructuralError):
        CoefficientRing.parse("R")


def test_even_generators_commute_and_odd_square_to_zero():
    A = polynomial_algebra(ZZ, [("c1", 1), ("c2", 2)], 4)
    c1 = A.gen("c1")
    assert c1 * c1 == A.monomial((2, 0))
    E = polynomial_algebra(ZZ, [("x", 1)], 4, odd=["x"])
    x = E.gen("x")
    assert (x * x).is_zero()


def test_truncation_drops_high_weight():
    A = polynomial_algebra(ZZ, [("c1", 1), ("c2", 2)], 3)
    c1, c2 = A.gens()
    assert (c2 * c2).is_zero()
    assert c1 * c2 == A.monomial((1, 1))


def test_divided_power_product():
    H = divided_power_algebra(4)
    x1, x2, x3 = H.gen("x1"), H.gen("x2"), H.gen("x3")
    assert x1 * x2 == 3 * x3
    assert x1 * x1 == 2 * x2


def test_exterior_tensor_signs_against_table():
    E1 = polynomial_algebra(ZZ, [("x", 1)], 4, odd=["x"])
    E2 = polynomial_algebra(ZZ, [("y", 1)], 4, odd=["y"])
    T = tensor_algebra(E1, E2)
    x, y = T.gens()
    assert y * x == -(x * y)
    assert ((x * y) * (x * y)).is_zero()
    # brute-force sign table: moving parity a past parity b gives (-1)^(ab)
    for pa in (0, 1):
        for pb in (0, 1):
            B = polynomial_algebra(ZZ, [("u", 2 - pa), ("v", 2 - pb)], 8,
                                   odd=[n for n, p in (("u", pa), ("v", pb)) if p])
            u, v = B.gens()
            assert v * u == (-1) ** (pa * pb) * (u * v)


def test_tensor_monomial_count():
    A = polynomial_algebra(ZZ, [("c1", 1)], 2)
    T = tensor_algebra(A, A)
    assert sum(len(T.basis(w)) for w in range(3)) == 6
    k = TruncatedAlgebra(ZZ, [], None)
    assert tensor_algebra(A, k).ngens == A.ngens


def test_mismatched_algebras_raise():
    A = polynomial_algebra(ZZ, [("a", 1)], 3)
    B = polynomial_algebra(ZZ, [("b", 1)], 3)
    with pytest.raises(StructuralError):
        multiply(A.gen("a"), B.gen("b"))
    with pytest.raises(StructuralError):
        tensor_algebra(A, polynomial_algebra(QQ, [("b", 1)], 3))


def test_apply_map_examples():
    L = lambda_structure(2).level(2)
    A = L.algebra
    c1, c2 = A.gens()
    p = 1 + c1 + c1 * c2
    assert apply_map(L.cozero, p) == L.cozero.target.one()
    assert apply_map(identity_map(A), p) == p
    T = L.coadd.target
    l1, r1 = T.gen(0), T.gen(2)
    assert apply_map(L.coadd, c1 * c1) == l1 * l1 + 2 * l1 * r1 + r1 * r1


def test_apply_map_rejects_bad_images():
    A = polynomial_algebra(ZZ, [("a", 1), ("b", 2)], 4)
    with pytest.raises(ValidationError):
        AlgebraMap(A, A, [A.gen("b"), A.gen("b")])
    E = polynomial_algebra(ZZ, [("x", 1), ("z", 1)], 4, odd=["x"])
    with pytest.raises(ValidationError):
        AlgebraMap(E, E, [E.gen("z"), E.gen("z")])


def test_weight_component_matrix_examples():
    L = lambda_structure(2).level(2)
    A = L.algebra
    assert weight_component_matrix(identity_map(A), 2) == [[1, 0], [0, 1]]
    k1 = polynomial_algebra(ZZ, [("c1", 1)], 2)
    eps = AlgebraMap(k1, k1, [k1.zero()], graded=False)
    assert weight_component_matrix(eps, 1, 1) == [[0]]
    M = weight_component_matrix(L.coadd, 2)
    src = A.basis(2)
    T = L.coadd.target
    cols = {src[j]: {T.basis(2)[i]: M[i][j] for i in range(len(M)) if M[i][j]} for j in range(len(src))}
    assert sorted(cols[(0, 1)].values()) == [1, 1, 1]
    assert sorted(cols[(2, 0)].values()) == [1, 1, 2]


def test_smith_form_examples():
    U, D, V = linalg.smith_form([[2, 0], [0, 3]])
    assert [D[0][0], D[1][1]] == [1, 6]
    assert linalg.smith_invariants([[0, 0], [0, 0]]) == [0, 0]
    assert len(linalg.kernel([[0, 0], [0, 0]], ZZ, 2)) == 2
    assert linalg.smith_invariants([[1, 1], [0, 0]]) == [1, 0]
    cok = linalg.cokernel([[1, 1], [0, 0]], ZZ, 2, 2)
    assert cok.orders == (0,)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(-6, 6), min_size=3, max_size=3), min_size=1, max_size=4))
def test_smith_form_properties(M):
    U, D, V = linalg.smith_form(M)
    assert linalg.matmul(linalg.matmul(U, M), V) == D
    assert abs(linalg.determinant(U)) == 1 and abs(linalg.determinant(V)) == 1
    diag = [D[i][i] for i in range(min(len(D), 3))]
    assert all(D[i][j] == 0 for i in range(len(D)) for j in range(3) if i != j)
    for a, b in zip(diag, diag[1:]):
        assert (a == 0 and b == 0) or (a != 0 and b % a == 0)


A8 = mixed_algebra()


@settings(max_examples=100, deadline=None)
@given(poly_strategy(A8), poly_strategy(A8))
def test_graded_commutativity(p, q):
    for ma, ca in p.terms.items():
        for mb, cb in q.terms.items():
            a, b = A8.monomial(ma, ca), A8.monomial(mb, cb)
            assert multiply(a, b) == (-1) ** (a.parity() * b.parity()) * multiply(b, a)


@settings(max_examples=100, deadline=None)
@given(poly_strategy(A8), poly_strategy(A8), poly_strategy(A8))
def test_associativity_and_distributivity(p, q, r):
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert (p + q) * r == p * r + q * r


B4 = polynomial_algebra(ZZ, [("a", 1), ("b", 2)], 6)


def map_strategy(A):
    def images(coefs):
        a, b = A.gens()
        return AlgebraMap(A, A, [coefs[0] * a, coefs[1] * b + coefs[2] * a * a])
    return st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3)).map(images)


@settings(max_examples=60, deadline=None)
@given(map_strategy(B4), map_strategy(B4), poly_strategy(B4))
def test_apply_map_composition(f, g, p):
    assert apply_map(f.compose(g), p) == apply_map(f, apply_map(g, p))
    for w in range(1, 5):
        lhs = LinearMapByWeight.from_algebra_map(f.compose(g), [w])
        rhs = LinearMapByWeight.from_algebra_map(f, [w]).compose(LinearMapByWeight.from_algebra_map(g, [w]))
        assert lhs == rhs


def test_json_round_trips():
    L = lambda_structure(3).level(3)
    A = L.algebra
    p = A.gen(0) ** 2 - 3 * A.gen(2)
    assert TruncatedAlgebra.from_json(A.to_json()) == A
    assert Polynomial.from_json(A, p.to_json()) == p
    assert AlgebraMap.from_json(L.coadd.to_json()).images == L.coadd.images
    assert Generator.from_json(Generator("x", 3, True).to_json()) == Generator("x", 3, True)
    assert parse_polynomial(A, format_polynomial(p)) == p
    T = L.comult.target
    q = L.comult.images[1]
    assert parse_polynomial(T, format_polynomial(q)) == q
    assert parse_polynomial(T, format_polynomial(q, "latex")) == q


def test_binomial_negative_arguments():
    assert [binomial(-1, n) for n in range(4)] == [1, -1, 1, -1]
    assert binomial(-3, 2) == 6
    assert binomial(2, 3) == 0
