import random
import threading

import pytest
from hypothesis import given, settings, strategies as st

from plethcalc import linalg
from plethcalc.exact_algebra import ZZ, AlgebraMap, StructuralError, polynomial_algebra, tensor_algebra
from plethcalc.pro_tower import (UNDECIDED, GradedFreeModule, ModuleMap, NotDualizable, ProMorphism, check_free,
                                 constant_tower, double_dual_iso, dual_level, explicit_tower, identity_pro,
                                 module_map_tensor, module_truncation_tower, pro_equal, tower_dual, tower_tensor, truncation_tower)


def power_series_tower():
    return truncation_tower(polynomial_algebra(ZZ, [("c", 1)]), "k[[c]]")


def substitution(T, extra_power=None, shift=0):
    """c -> c (+ c^extra_power), reindexed by n -> n + shift."""
    def comp(n):
        src, tgt = T.level(n + shift), T.level(n)
        c = tgt.gen(0)
        img = c if extra_power is None else c + c ** extra_power
        return AlgebraMap(src, tgt, [img], graded=extra_power is None)
    return ProMorphism(T, T, lambda n: n + shift, comp)


def random_module(rng, ring=ZZ, max_weight=4, max_rank=3, name="e"):
    basis = {}
    for w in range(1, max_weight + 1):
        r = rng.randint(0, max_rank)
        if r:
            basis[w] = [f"{name}{w}_{i}" for i in range(r)]
    return GradedFreeModule.make(ring, basis)


def random_map(rng, A, B):
    return ModuleMap(A, B, {w: [[rng.randint(-3, 3) for _ in range(A.rank(w))] for _ in range(B.rank(w))]
                            for w in set(A.weights) | set(B.weights)})


def test_transitions_compose():
    T = power_series_tower()
    assert T.transition(2, 2) == identity_pro(T).component(2)
    assert T.transition(1, 4) == T.transition(1, 2).compose(T.transition(2, 4))
    assert T.transition(0, 3).images[0].is_zero()
    with pytest.raises(StructuralError):
        T.transition(3, 1)


def test_pro_equal_examples():
    T = power_series_tower()
    f = substitution(T)
    assert pro_equal(f, substitution(T), 6) is True
    assert pro_equal(f.restrict(1), f.restrict(2), 6) is True
    D = 4
    g = substitution(T, extra_power=D + 1)
    assert pro_equal(f, g, D) is True
    assert pro_equal(f, g, D + 1) is False


def test_pro_equal_undecided_on_non_surjective_tower():
    M = GradedFreeModule.make(ZZ, {1: ["a"]})
    doubling = ModuleMap(M, M, {1: [[2]]})
    T = explicit_tower([M, M, M], [doubling, doubling])
    zero = ProMorphism(T, T, lambda n: n, lambda n: ModuleMap(M, M, {1: [[0]]}))
    ident = identity_pro(T)
    assert pro_equal(zero, ident, 1) is UNDECIDED
    with pytest.raises(TypeError):
        bool(pro_equal(zero, ident, 1))


def test_pro_equal_monotone_in_depth():
    T = power_series_tower()
    f = substitution(T)
    for D in range(1, 5):
        g = substitution(T, extra_power=D + 1)
        results = [pro_equal(f, g, d) for d in range(D + 4)]
        first_false = results.index(False)
        assert all(results[:first_false]) and not any(results[first_false:])


def test_tower_tensor_ranks():
    T = power_series_tower()
    TT = tower_tensor(T, T)
    L = TT.level(2)
    assert sum(len(L.basis(w)) for w in range(3)) == 6
    # levelwise tensor at level 3 has ranks 1, 2, 3, 4 in weights 0..3 (monomials in two weight-1 variables)
    L3 = TT.level(3)
    assert [len(L3.basis(w)) for w in range(4)] == [1, 2, 3, 4]
    base = L3.factor_list()[0]
    brute = [sum(1 for i in range(w + 1) for j in range(w + 1) if i + j == w) for w in range(4)]
    assert [len(L3.basis(w)) for w in range(4)] == brute
    k = constant_tower(polynomial_algebra(ZZ, [], None))
    assert tower_tensor(T, k).level(3).ngens == base.ngens


def test_dual_examples():
    M = GradedFreeModule.make(ZZ, {2: ["a", "b", "c"]})
    assert dual_level(M).rank(2) == 3
    rng = random.Random(3)
    A = GradedFreeModule.make(ZZ, {1: ["a0", "a1", "a2", "a3"]})
    B = GradedFreeModule.make(ZZ, {1: ["b0", "b1", "b2"]})
    f = random_map(rng, A, B)
    assert f.transpose().transpose().matrices == f.matrices
    T = module_truncation_tower(lambda n: GradedFreeModule.make(ZZ, {w: [f"x{w}"] for w in range(1, n + 1)}))
    drop = T.step(2)
    incl = tower_dual(T).step(2)
    assert incl.matrices == {w: linalg.transpose(drop.matrices[w], drop.source.rank(w)) for w in drop.matrices}
    assert incl.matrices[3] == [[]]
    assert incl.matrices[1] == [[1]]


def test_torsion_is_not_dualizable():
    with pytest.raises(NotDualizable):
        check_free([[2]], ZZ, 1)
    check_free([[1, 0]], ZZ, 1)


def test_double_dual_iso_is_identity_matrix():
    T = module_truncation_tower(lambda n: GradedFreeModule.make(ZZ, {w: [f"x{w}", f"y{w}"] for w in range(1, n + 1)}))
    iso = double_dual_iso(T)
    for n in range(4):
        comp = iso.component(n)
        assert all(M == linalg.identity(len(M)) for M in comp.matrices.values())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_tensor_and_dual_functorial(seed):
    rng = random.Random(seed)
    A, B, C = (random_module(rng, name=n) for n in "abc")
    f, g = random_map(rng, A, B), random_map(rng, B, C)
    assert g.compose(f).transpose().matrices == f.transpose().compose(g.transpose()).matrices
    X = random_module(rng, name="x")
    h = random_map(rng, X, X)
    lhs = module_map_tensor(g.compose(f), h.compose(h))
    rhs = module_map_tensor(g, h).compose(module_map_tensor(f, h))
    assert lhs.matrices == rhs.matrices


def test_algebra_tensor_functorial_through_tower():
    T = power_series_tower()
    TT = tower_tensor(T, T)
    L = TT.level(3)
    assert L == tensor_algebra(T.level(3), T.level(3))
    assert TT.step(2).source == L


def test_concurrent_level_access_is_consistent():
    T = power_series_tower()
    seen = []

    def grab():
        seen.append(T.level(5))
    threads = [threading.Thread(target=grab) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(x is seen[0] for x in seen)


def test_json_shape():
    T = power_series_tower()
    d = T.to_json(2)
    assert d["kind"] == "truncation" and len(d["levels"]) == 3 and len(d["transitions"]) == 2
    M = GradedFreeModule.make(ZZ, {1: [("*", "a")], 2: ["b"]})
    assert GradedFreeModule.from_json(M.to_json()) == M
