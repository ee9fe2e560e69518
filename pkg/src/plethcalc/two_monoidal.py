"""The two monoidal structures, composite schemes, bimonoid and bilax checkers, duality."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import linalg
from .exact_algebra import (ZZ, AlgebraMap, CoefficientRing, Generator, Polynomial, Rule, StructuralError,
                            TruncatedAlgebra, ValidationError, ground_algebra, tensor_product)
from .pro_tower import GradedFreeModule, ModuleMap, NotDualizable, dual_level
from .schemes_hopf import (AlgebraView, FiniteRing, FormalBimodule, LevelStructure, Report, SchemeStructure,
                           dual_numbers, finite_point_ring, indecomposables, points, prime_field, primitives,
                           project_indecomposable)

UNIT = "1"


# ---------------------------------------------------------------- linear layer

@dataclass(frozen=True)
class Obj:
    """A free module with an ordered labelled basis; weight None marks a unit label."""
    ring: CoefficientRing
    labels: tuple
    weights: tuple
    name: str = ""

    @staticmethod
    def make(ring: CoefficientRing, pairs: Sequence, name: str = "") -> "Obj":
        pairs = list(pairs)
        return Obj(ring, tuple(l for l, _ in pairs), tuple(w for _, w in pairs), name)

    @staticmethod
    def from_module(M: GradedFreeModule, name: str = "") -> "Obj":
        return Obj.make(M.ring, [(l, w) for w, l in M.all_labels()], name)

    def weight(self, label):
        return self.weights[self.labels.index(label)]

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return label in self._index()

    def _index(self) -> dict:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {l: i for i, l in enumerate(self.labels)}
            object.__setattr__(self, "_idx", idx)
        return idx


def unit_obj(ring: CoefficientRing, name: str = "k") -> Obj:
    return Obj(ring, (UNIT,), (None,), name)


class LinMap:
    """A linear map between Objs, stored as sparse columns."""

    def __init__(self, src: Obj, tgt: Obj, cols: Mapping, name: str = ""):
        self.src, self.tgt, self.name = src, tgt, name
        ring = src.ring
        self.cols = {}
        for l in src.labels:
            col = {}
            for l2, c in cols.get(l, {}).items():
                c = ring(c)
                if c and l2 in tgt:
                    col[l2] = ring(col.get(l2, 0) + c)
            self.cols[l] = {k: v for k, v in col.items() if v}

    @staticmethod
    def from_function(src: Obj, tgt: Obj, fn: Callable, name: str = "") -> "LinMap":
        return LinMap(src, tgt, {l: fn(l) for l in src.labels}, name)

    @staticmethod
    def relabel(src: Obj, tgt: Obj, fn: Callable, name: str = "") -> "LinMap":
        return LinMap(src, tgt, {l: {fn(l): 1} for l in src.labels}, name)

    @staticmethod
    def identity(X: Obj) -> "LinMap":
        return LinMap(X, X, {l: {l: 1} for l in X.labels}, "id")

    @staticmethod
    def zero(src: Obj, tgt: Obj) -> "LinMap":
        return LinMap(src, tgt, {}, "0")

    def __call__(self, vec: Mapping) -> dict:
        out: dict = {}
        for l, c in vec.items():
            for l2, d in self.cols.get(l, {}).items():
                out[l2] = out.get(l2, 0) + c * d
        ring = self.src.ring
        return {k: ring(v) for k, v in out.items() if ring(v)}

    def after(self, inner: "LinMap") -> "LinMap":
        if inner.tgt.labels != self.src.labels:
            raise StructuralError(f"maps {self.name} and {inner.name} are not composable")
        return LinMap(inner.src, self.tgt, {l: self(inner.cols[l]) for l in inner.src.labels},
                      f"{self.name}.{inner.name}")

    def scaled(self, c) -> "LinMap":
        return LinMap(self.src, self.tgt, {l: {k: v * c for k, v in col.items()} for l, col in self.cols.items()})

    def matrix(self) -> list:
        M = [[0] * len(self.src) for _ in self.tgt.labels]
        ti = self.tgt._index()
        for j, l in enumerate(self.src.labels):
            for l2, c in self.cols[l].items():
                M[ti[l2]][j] = c
        return M

    def transpose(self) -> "LinMap":
        cols: dict = {l: {} for l in self.tgt.labels}
        for l, col in self.cols.items():
            for l2, c in col.items():
                cols[l2][l] = c
        return LinMap(self.tgt, self.src, cols, f"{self.name}^T")

    def difference(self, other: "LinMap"):
        """None when equal, else a witness naming the first differing entry."""
        if self.src.labels != other.src.labels or self.tgt.labels != other.tgt.labels:
            return {"reason": "shape mismatch"}
        for l in self.src.labels:
            a, b = self.cols[l], other.cols[l]
            if a != b:
                for l2 in self.tgt.labels:
                    if a.get(l2, 0) != b.get(l2, 0):
                        return {"column": repr(l), "row": repr(l2), "left": str(a.get(l2, 0)),
                                "right": str(b.get(l2, 0))}
        return None

    def mutated(self, label=None, target=None, delta=1) -> "LinMap":
        """A copy with one entry changed by delta (the first nonzero entry by default)."""
        cols = {l: dict(c) for l, c in self.cols.items()}
        if not self.src.labels or not self.tgt.labels:
            return LinMap(self.src, self.tgt, cols, self.name + "*")
        if label is None:
            label = next((l for l in self.src.labels if cols[l]), self.src.labels[0])
        if target is None:
            target = next(iter(cols[label]), self.tgt.labels[0])
        cols[label][target] = cols[label].get(target, 0) + delta
        return LinMap(self.src, self.tgt, cols, self.name + "*")


@dataclass(frozen=True)
class Grading:
    """How weights combine under the two products; None is neutral."""
    otimes: str = "additive"  # additive | diagonal
    circ: str = "additive"  # additive | multiplicative
    bound: Optional[int] = None

    def combine(self, kind: str, a, b):
        if a is None:
            return b
        if b is None:
            return a
        if kind == "additive":
            w = a + b
        elif kind == "multiplicative":
            w = a * b
        elif kind == "diagonal":
            if a != b:
                return False
            w = a
        else:
            raise ValidationError(f"unknown grading rule {kind}")
        if self.bound is not None and w > self.bound:
            return False
        return w


def _product_obj(A: Obj, B: Obj, kind: str, G: Grading, sym: str) -> Obj:
    pairs = []
    for a, wa in zip(A.labels, A.weights):
        for b, wb in zip(B.labels, B.weights):
            w = G.combine(kind, wa, wb)
            if w is not False:
                pairs.append(((a, b), w))
    return Obj.make(A.ring, pairs, f"({A.name}{sym}{B.name})")


def otimes(A: Obj, B: Obj, G: Grading) -> Obj:
    return _product_obj(A, B, G.otimes, G, "(x)")


def circ(A: Obj, B: Obj, G: Grading) -> Obj:
    return _product_obj(A, B, G.circ, G, "o")


def pair_map(f: LinMap, g: LinMap, src: Obj, tgt: Obj) -> LinMap:
    """f (x) g on pair labels (both products act this way on free modules over l = k)."""
    cols = {}
    for (a, b) in src.labels:
        col = {}
        for a2, c in f.cols[a].items():
            for b2, d in g.cols[b].items():
                col[(a2, b2)] = col.get((a2, b2), 0) + c * d
        cols[(a, b)] = col
    return LinMap(src, tgt, cols, f"({f.name},{g.name})")


def otimes_map(f: LinMap, g: LinMap, G: Grading) -> LinMap:
    return pair_map(f, g, otimes(f.src, g.src, G), otimes(f.tgt, g.tgt, G))


def circ_map(f: LinMap, g: LinMap, G: Grading) -> LinMap:
    return pair_map(f, g, circ(f.src, g.src, G), circ(f.tgt, g.tgt, G))


def assoc(src: Obj, tgt: Obj) -> LinMap:
    """((a, b), c) -> (a, (b, c))."""
    return LinMap.relabel(src, tgt, lambda l: (l[0][0], (l[0][1], l[1])), "alpha")


def assoc_inv(src: Obj, tgt: Obj) -> LinMap:
    return LinMap.relabel(src, tgt, lambda l: ((l[0], l[1][0]), l[1][1]), "alpha^-1")


def left_unitor(src: Obj, tgt: Obj) -> LinMap:
    return LinMap.relabel(src, tgt, lambda l: l[1], "lambda")


def right_unitor(src: Obj, tgt: Obj) -> LinMap:
    return LinMap.relabel(src, tgt, lambda l: l[0], "rho")


def _compare(rep: Report, axiom: str, f: LinMap, g: LinMap):
    wit = f.difference(g)
    rep.add(axiom, wit is None, wit)


# ---------------------------------------------------------------- bimodule products

def sweedler_product(M: FormalBimodule, N: FormalBimodule) -> FormalBimodule:
    """Per weight, the equalizer of the left-factor and right-factor l-actions on M (x) N."""
    ring = M.ring
    names = sorted(set(M.actions) | set(N.actions))
    if set(M.actions) != set(N.actions):
        raise ValidationError("both bimodules need actions of the same generators of l")
    basis, incl = {}, {}
    for wa in M.module.weights:
        for wb in N.module.weights:
            w = wa + wb
            basis.setdefault(w, [])
    pieces = {}
    for w in sorted(basis):
        amb = [(a, b, wa) for wa in M.module.weights for wb in N.module.weights if wa + wb == w
               for a in M.module.labels(wa) for b in N.module.labels(wb)]
        if not amb:
            continue
        index = {(a, b): i for i, (a, b, _) in enumerate(amb)}
        rows = []
        for nm in names:
            block = [[0] * len(amb) for _ in amb]
            for j, (a, b, wa) in enumerate(amb):
                for a2, c in M.actions[nm].apply_label(wa, a).items():
                    block[index[(a2, b)]][j] += c
                for b2, c in N.actions[nm].apply_label(w - wa, b).items():
                    block[index[(a, b2)]][j] -= c
            rows.extend(block)
        ker = linalg.kernel([[ring(x) for x in r] for r in rows], ring, len(amb)) if rows \
            else linalg.identity(len(amb))
        if ker:
            pieces[w] = (amb, ker)
    for w, (amb, ker) in pieces.items():
        if not names:
            basis[w] = [(a, b) for a, b, _ in amb]
        else:
            basis[w] = [("k", w, i) for i in range(len(ker))]
        incl[w] = (amb, ker)
    module = GradedFreeModule.make(ring, {w: ls for w, ls in basis.items() if ls})
    actions = {}
    for nm in names:
        mats = {}
        for w, (amb, ker) in incl.items():
            index = {(a, b): i for i, (a, b, _) in enumerate(amb)}
            cols = []
            for v in ker:
                img = [0] * len(amb)
                for (a, b, wa), c in zip(amb, v):
                    if c:
                        for a2, d in M.actions[nm].apply_label(wa, a).items():
                            img[index[(a2, b)]] += c * d
                K = linalg.transpose(ker, len(amb))
                sol = linalg.solve(K, [ring(x) for x in img], ring)
                if sol is None:
                    raise StructuralError("induced action does not preserve the equalizer")
                cols.append(sol)
            mats[w] = linalg.transpose(cols, len(ker))
        actions[nm] = ModuleMap(module, module, mats)
    out = FormalBimodule(module, actions, f"({M.name}><{N.name})")
    out.inclusion = incl  # type: ignore[attr-defined]
    return out


def hom_l_k(ring: CoefficientRing = ZZ, idempotent: bool = True) -> FormalBimodule:
    """hom_Z(l, k) in weight 0; for l = Z[s]/(s^2 - s) with s acting by precomposition."""
    if not idempotent:
        return FormalBimodule(GradedFreeModule.make(ring, {0: ["phi1"]}), {}, "hom(Z,k)")
    M = GradedFreeModule.make(ring, {0: ["phi1", "phis"]})
    # (s.phi)(x) = phi(s x): s.phi1 = 0, s.phis = phi1 + phis
    act = ModuleMap(M, M, {0: [[0, 1], [0, 1]]})
    return FormalBimodule(M, {"s": act}, "hom(l,k)")


def compose_bimodules(B: FormalBimodule, C: FormalBimodule, grading: str = "additive",
                      bound: Optional[int] = None) -> FormalBimodule:
    """B o C as the tensor of the levels, outer l-action on the left factor."""
    ring = B.ring
    basis: dict = {}
    for wb, b in B.module.all_labels():
        for wc, c in C.module.all_labels():
            w = wb + wc if grading == "additive" else wb * wc
            if bound is not None and w > bound:
                continue
            basis.setdefault(w, []).append((b, c))
    module = GradedFreeModule.make(ring, basis)
    weight_of = {l: w for w, l in B.module.all_labels()}
    actions = {}
    for nm, f in B.actions.items():
        def fn(w, l, f=f):
            b, c = l
            return {(b2, c): d for b2, d in f.apply_label(weight_of[b], b).items()}
        actions[nm] = ModuleMap.from_function(module, module, fn)
    return FormalBimodule(module, actions, f"({B.name}o{C.name})")


def classical_compose(B, C):
    """B o C = B (x) C over k, the outer action on the left factor.

    Accepts two classical bimodules, or two plain label lists (then returns the label pairs).
    """
    if not isinstance(B, FormalBimodule):
        return [(b, c) for b in B for c in C]
    return compose_bimodules(B, C, "additive")


# ---------------------------------------------------------------- composite schemes

class PointArith:
    """Arithmetic of G-points whose coordinates are elements of an algebra T."""

    def __init__(self, LG: LevelStructure, T: TruncatedAlgebra):
        self.LG, self.T = LG, T

    def _apply(self, f: AlgebraMap, pts: Sequence) -> list:
        h = AlgebraMap(f.target, self.T, [x for p in pts for x in p], graded=False)
        return [h(img) for img in f.images]

    def add(self, P, Q):
        return self._apply(self.LG.coadd, (P, Q))

    def mul(self, P, Q):
        if self.LG.comult is None:
            raise StructuralError("the inner scheme has no multiplication")
        return self._apply(self.LG.comult, (P, Q))

    def zero(self):
        return [self.T.scalar(img.constant_term()) for img in self.LG.cozero.images]

    def one(self):
        if not self.LG.unital or 1 not in self.LG.counits:
            raise StructuralError("the inner scheme has no unit")
        return [self.T.scalar(img.constant_term()) for img in self.LG.counits[1].images]

    def neg(self, P):
        if -1 not in self.LG.actions:
            raise StructuralError("the inner scheme has no negation")
        return self._apply(self.LG.actions[-1], (P,))

    def scale(self, n: int, P):
        n = int(n)
        if n < 0:
            n, P = -n, self.neg(P)
        out = self.zero()
        while n:
            if n & 1:
                out = self.add(out, P)
            n >>= 1
            if n:
                P = self.add(P, P)
        return out

    def evaluate(self, p: Polynomial, pts: Sequence) -> list:
        """The G-point p(pts), pts holding one G-point per generator of p's algebra."""
        total = self.zero()
        for m, c in sorted(p.terms.items()):
            if not any(m):
                total = self.add(total, self.scale(c, self.one()))
                continue
            v = None
            for P, e in zip(pts, m):
                for _ in range(e):
                    v = P if v is None else self.mul(v, P)
            total = self.add(total, self.scale(c, v))
        return total


def composite_algebra(AF: TruncatedAlgebra, AG: TruncatedAlgebra, bound: Optional[int] = None) -> tuple:
    """Tensor of copies of AG, one per generator g_m of AF, weights scaled by weight(g_m).

    Returns (T, offsets); generator d{m}_{i} is generator i of the copy attached to g_m.
    """
    gens, rules, offsets = [], [], []
    r = AG.ngens
    n = AF.ngens * r
    copy_rules = list(AG.rules) + [Rule(tuple(o), ()) for o in AG.overflow_monomials()]
    for m, g in enumerate(AF.generators):
        if g.odd:
            raise StructuralError("odd outer generators are not supported")
        off = m * r
        offsets.append(off)
        for i, h in enumerate(AG.generators):
            gens.append(Generator(f"d{m + 1}_{i + 1}", g.weight * h.weight, h.odd))
        for rule in copy_rules:
            pad = lambda x: (0,) * off + tuple(x) + (0,) * (n - off - r)  # noqa: E731
            rules.append(Rule(pad(rule.lead), tuple((pad(t), c) for t, c in rule.tail)))
    return TruncatedAlgebra(AF.ring, gens, bound, rules), offsets


def compose_levels(LF: LevelStructure, LG: LevelStructure, bound: Optional[int] = None) -> LevelStructure:
    """Level of F o G built from one level of each factor, optionally truncated by weight."""
    AF, AG = LF.algebra, LG.algebra
    if AF.ring != AG.ring:
        raise StructuralError("coefficient ring mismatch")
    T, offsets = composite_algebra(AF, AG, bound)
    r = AG.ngens
    k = ground_algebra(AF.ring)
    T2 = tensor_product([T, T], bound)
    symb = [[T.gen(off + i) for i in range(r)] for off in offsets]
    left = [[T2.inject(0, x) for x in P] for P in symb]
    right = [[T2.inject(1, x) for x in P] for P in symb]
    arith, arith2, arithk = PointArith(LG, T), PointArith(LG, T2), PointArith(LG, k)

    def lift(f: AlgebraMap, ar: PointArith, pts) -> list:
        return [x for img in f.images for x in ar.evaluate(img, pts)]

    coadd = AlgebraMap(T, T2, lift(LF.coadd, arith2, left + right), graded=False, name="psi_+")
    comult = None
    if LF.comult is not None and LG.comult is not None:
        comult = AlgebraMap(T, T2, lift(LF.comult, arith2, left + right), graded=False, name="psi_x")
    cozero = AlgebraMap(T, k, lift(LF.cozero, arithk, []), graded=False, name="eps_0")
    counits = {0: cozero}
    unital = bool(LF.unital and LG.unital and comult is not None)
    if unital and 1 in LF.counits:
        counits[1] = AlgebraMap(T, k, lift(LF.counits[1], arithk, []), graded=False, name="eps_1")
    ideal = []
    for rel in AF.relations():
        ideal.extend(arith.evaluate(rel, symb))
    free = TruncatedAlgebra(AF.ring, AF.generators, None)
    positive = all(w >= 1 for w in AG.weights)
    for o in AF.overflow_monomials():
        if bound is not None and positive and AF.weight_of(o) > bound:
            continue  # every coordinate already vanishes in the truncation
        ideal.extend(arith.evaluate(free.monomial(o), symb))
    for eq in LF.ideal:
        ideal.extend(arith.evaluate(eq, symb))
    ideal = tuple(p for p in ideal if p.terms)
    return LevelStructure(T, coadd, cozero, comult, counits, {}, unital, ideal)


def compose_schemes(F: SchemeStructure, G: SchemeStructure, weight_bound: bool = False) -> SchemeStructure:
    """F o G: Reg is a tensor of copies of Reg G, one per generator of Reg F.

    When Reg F has relations or a truncation, they are imposed on G-points as extra equations.
    With weight_bound, level d is also truncated above weight d.
    """
    if F.ring != G.ring:
        raise StructuralError("coefficient ring mismatch")

    def build(d):
        return compose_levels(F.level(d), G.level(d), d if weight_bound else None)
    return SchemeStructure(f"({F.name}o{G.name})", F.ring, build, F.l_ring,
                           {"kind": "composite", "outer": F.name, "inner": G.name})


# ---------------------------------------------------------------- evaluation on finite rings

class _VecRing:
    """Numpy tables of a FiniteRing for evaluating polynomials on many points at once."""

    def __init__(self, R: FiniteRing):
        self.R = R
        self.add = np.array(R.add_t, dtype=np.int64)
        self.mul = np.array(R.mul_t, dtype=np.int64)
        self.neg = np.array(R.neg_t, dtype=np.int64)

    def scale(self, c: int, v):
        c = int(c)
        if c < 0:
            c, v = -c, self.neg[v]
        out = np.full_like(v, self.R.zero)
        while c:
            if c & 1:
                out = self.add[out, v]
            c >>= 1
            if c:
                v = self.add[v, v]
        return out

    def evaluate(self, p: Polynomial, cols: Sequence, size: int):
        total = np.full(size, self.R.zero, dtype=np.int64)
        for m, c in p.terms.items():
            if not any(m):
                total = self.add[total, np.full(size, self.R.from_int(int(c)), dtype=np.int64)]
                continue
            v = None
            for x, e in zip(cols, m):
                for _ in range(e):
                    v = x if v is None else self.mul[v, x]
            total = self.add[total, self.scale(int(c), v)]
        return total


def _all_pairs(pts: np.ndarray):
    n = len(pts)
    I, J = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return I.ravel(), J.ravel()


def _apply_pairs(f: AlgebraMap, pts: np.ndarray, V: _VecRing):
    """f: A -> A (x) A evaluated on all pairs of points (rows of pts)."""
    I, J = _all_pairs(pts)
    cols = [pts[I, i] for i in range(pts.shape[1])] + [pts[J, i] for i in range(pts.shape[1])]
    return np.stack([V.evaluate(img, cols, len(I)) for img in f.images], axis=1)


def compare_with_nested(F: SchemeStructure, G: SchemeStructure, R: FiniteRing, depth: int = 2) -> Report:
    """(F o G)(R) against F(G(R)): point sets, addition and multiplication on all pairs."""
    rep = Report(f"{F.name}o{G.name} on {R.name}")
    LF, LG = F.level(depth), G.level(depth)
    L = compose_levels(LF, LG)
    T = L.algebra
    S = finite_point_ring(LG, R, f"{G.name}({R.name})")
    comp = points(T, R, L.ideal)
    nested = points(LF.algebra, S, LF.ideal)
    r = LG.algebra.ngens

    def phi(pt):
        return tuple(S.index[tuple(pt[k * r:(k + 1) * r])] for k in range(LF.algebra.ngens))

    image = [phi(p) for p in comp]
    ok = sorted(image) == sorted(nested) and len(set(image)) == len(image)
    rep.add("points.bijective", ok, None if ok else {"composite": len(comp), "nested": len(nested)})
    if not ok or not comp:
        return rep
    VR, VS = _VecRing(R), _VecRing(S)
    C = np.array(comp, dtype=np.int64)
    Nst = np.array(image, dtype=np.int64)
    # code each copy's coordinate tuple to an element of S
    base = R.size ** np.arange(r)
    lookup = np.full(R.size ** r, -1, dtype=np.int64)
    for idx, el in enumerate(S.elements):
        lookup[int(np.dot(np.array(el), base))] = idx

    def to_nested(coords):
        return np.stack([lookup[coords[:, k * r:(k + 1) * r] @ base] for k in range(LF.algebra.ngens)], axis=1)

    for nm, fc, fn in (("add", L.coadd, LF.coadd), ("mul", L.comult, LF.comult)):
        if fc is None or fn is None:
            rep.add(f"{nm}.agrees", None)
            continue
        lhs = to_nested(_apply_pairs(fc, C, VR))
        rhs = _apply_pairs(fn, Nst, VS)
        bad = np.nonzero(np.any(lhs != rhs, axis=1))[0]
        wit = None
        if len(bad):
            i, j = divmod(int(bad[0]), len(comp))
            wit = {"x": list(map(int, comp[i])), "y": list(map(int, comp[j]))}
        rep.add(f"{nm}.agrees", not len(bad), wit)
    return rep


def composition_test_schemes(ring: CoefficientRing = ZZ) -> dict:
    from .plethory_examples import divided_powers, identity_scheme, lambda_structure
    return {"identity": identity_scheme(0, ring), "lambda2": lambda_structure(2, ring),
            "divided2": divided_powers(2, ring)}


def finite_test_rings() -> list:
    return [prime_field(2), dual_numbers(2), prime_field(3)]


def check_composition(depth: int = 2) -> Report:
    """compose_schemes against nested evaluation for all ordered pairs of test schemes and rings."""
    rep = Report("composition")
    schemes = composition_test_schemes()
    for (a, F), (b, G) in itertools.product(schemes.items(), repeat=2):
        for R in finite_test_rings():
            rep.extend(compare_with_nested(F, G, R, depth), f"{a}o{b}[{R.name}].")
    return rep


# ---------------------------------------------------------------- 2-monoidal structure data

@dataclass
class TwoMonoidalData:
    """Units and structure maps of a 2-monoidal category on free modules.

    iota_J doubles as the counit of I (a single stored map).
    """
    category: str
    ring: CoefficientRing
    grading: Grading
    I: Obj
    J: Obj
    zeta: Callable  # (A, B, C, D, grading) -> LinMap (A o B) (x) (C o D) -> (A (x) C) o (B (x) D)
    Delta_I: LinMap  # I -> I o I
    mu_J: LinMap  # J (x) J -> J
    iota_J: LinMap  # I -> J

    def __post_init__(self):
        for nm in ("zeta", "Delta_I", "mu_J", "iota_J"):
            if getattr(self, nm) is None:
                raise StructuralError(f"missing structure map {nm}")


def interchange_zeta(A: Obj, B: Obj, C: Obj, D: Obj, G: Grading) -> LinMap:
    """((a, b), (c, d)) -> ((a, c), (b, d)); for l = k this realizes the interchange."""
    src = otimes(circ(A, B, G), circ(C, D, G), G)
    tgt = circ(otimes(A, C, G), otimes(B, D, G), G)
    return LinMap.relabel(src, tgt, lambda l: ((l[0][0], l[1][0]), (l[0][1], l[1][1])), "zeta")


def unit_structure(ring: CoefficientRing, G: Grading, category: str = "fBimod(k,k)") -> TwoMonoidalData:
    I, J = unit_obj(ring, "I"), unit_obj(ring, "J")
    Delta_I = LinMap.relabel(I, circ(I, I, G), lambda l: (l, l), "Delta_I")
    mu_J = LinMap.relabel(otimes(J, J, G), J, lambda l: l[0], "mu_J")
    iota_J = LinMap.relabel(I, J, lambda l: l, "iota_J")
    return TwoMonoidalData(category, ring, G, I, J, interchange_zeta, Delta_I, mu_J, iota_J)


def bimodule_two_monoidal(ring: CoefficientRing = ZZ, bound: Optional[int] = None) -> TwoMonoidalData:
    return unit_structure(ring, Grading("additive", "additive", bound))


def random_obj(rng: random.Random, ring: CoefficientRing, name: str, max_rank: int = 2,
               max_weight: int = 3) -> Obj:
    r = rng.randint(1, max_rank)
    return Obj.make(ring, [(f"{name}{i}", rng.randint(0, max_weight)) for i in range(r)], name)


def random_endo(rng: random.Random, X: Obj) -> LinMap:
    """A random weight-preserving endomorphism."""
    cols = {}
    for l, w in zip(X.labels, X.weights):
        cols[l] = {l2: rng.randint(-2, 2) for l2, w2 in zip(X.labels, X.weights) if w2 == w}
    return LinMap(X, X, cols, "f")


def check_two_monoidal(T: TwoMonoidalData, depth: int, samples: int = 3, seed: int = 0) -> Report:
    """Interchange coherence, J a (x)-monoid, I a o-comonoid, evaluated on random free samples."""
    rep = Report(f"2-monoidal {T.category} over {T.ring}")
    G = Grading(T.grading.otimes, T.grading.circ, depth)
    rng = random.Random(seed)

    def z(A, B, C, D):
        return T.zeta(A, B, C, D, G)
    I, J = T.I, T.J
    for s in range(samples):
        A, B, C, D, E, F = (random_obj(rng, T.ring, nm, 2, max(1, depth // 2)) for nm in "ABCDEF")
        # (x)-associativity of zeta
        ab, cd, ef = circ(A, B, G), circ(C, D, G), circ(E, F, G)
        src = otimes(otimes(ab, cd, G), ef, G)
        ace = otimes(otimes(A, C, G), E, G)
        bdf = otimes(otimes(B, D, G), F, G)
        p1 = z(otimes(A, C, G), otimes(B, D, G), E, F).after(
            otimes_map(z(A, B, C, D), LinMap.identity(ef), G))
        a_src = otimes(ab, otimes(cd, ef, G), G)
        inner = z(C, D, E, F)
        right = z(A, B, otimes(C, E, G), otimes(D, F, G))
        back = circ_map(assoc_inv(otimes(A, otimes(C, E, G), G), ace),
                        assoc_inv(otimes(B, otimes(D, F, G), G), bdf), G)
        p2 = back.after(right.after(otimes_map(LinMap.identity(ab), inner, G)).after(assoc(src, a_src)))
        _compare(rep, f"zeta.otimes_associative[{s}]", p1, p2)
        # o-associativity of zeta
        abc, def_ = circ(circ(A, B, G), C, G), circ(circ(D, E, G), F, G)
        src = otimes(abc, def_, G)
        q1 = circ_map(z(A, B, D, E), LinMap.identity(otimes(C, F, G)), G).after(
            z(circ(A, B, G), C, circ(D, E, G), F))
        bc, ef2 = circ(B, C, G), circ(E, F, G)
        a_abc = circ(A, bc, G)
        a_def = circ(D, ef2, G)
        pre = otimes_map(assoc(abc, a_abc), assoc(def_, a_def), G)
        mid = z(A, bc, D, ef2)
        post = circ_map(LinMap.identity(otimes(A, D, G)), z(B, C, E, F), G)
        tgt = q1.tgt
        q2 = assoc_inv(post.tgt, tgt).after(post).after(mid).after(pre)
        _compare(rep, f"zeta.circ_associative[{s}]", q1, q2)
        # naturality in the first argument
        f = random_endo(rng, A)
        n1 = z(A, B, C, D).after(otimes_map(circ_map(f, LinMap.identity(B), G), LinMap.identity(cd), G))
        n2 = circ_map(otimes_map(f, LinMap.identity(C), G), LinMap.identity(otimes(B, D, G)), G).after(
            z(A, B, C, D))
        _compare(rep, f"zeta.natural[{s}]", n1, n2)
        # J on the right argument: zeta followed by unit isomorphisms is the identity
        zj = z(A, J, C, J)
        lhs = circ_map(LinMap.identity(otimes(A, C, G)), T.mu_J, G).after(zj)
        ac = otimes(A, C, G)
        lhs = right_unitor(lhs.tgt, ac).after(lhs)
        rhs = otimes_map(right_unitor(circ(A, J, G), A), right_unitor(circ(C, J, G), C), G)
        _compare(rep, f"zeta.right_unit[{s}]", lhs, rhs)
    # unit diagrams for zeta
    II = otimes(I, I, G)
    u1 = z(I, I, I, I).after(otimes_map(T.Delta_I, T.Delta_I, G))
    lam = left_unitor(II, I)
    u2 = circ_map(LinMap.relabel(I, II, lambda l: (l, l)), LinMap.relabel(I, II, lambda l: (l, l)), G).after(
        T.Delta_I).after(lam)
    _compare(rep, "zeta.unit_I", u1, u2)
    JJ = circ(J, J, G)
    v1 = circ_map(T.mu_J, T.mu_J, G).after(z(J, J, J, J))
    rhoJ = right_unitor(JJ, J)
    v2 = LinMap.relabel(J, JJ, lambda l: (l, l)).after(T.mu_J).after(otimes_map(rhoJ, rhoJ, G))
    _compare(rep, "zeta.unit_J", v1, v2)
    # J is a (x)-monoid
    JJJ = otimes(otimes(J, J, G), J, G)
    m1 = T.mu_J.after(otimes_map(T.mu_J, LinMap.identity(J), G))
    m2 = T.mu_J.after(otimes_map(LinMap.identity(J), T.mu_J, G)).after(assoc(JJJ, otimes(J, otimes(J, J, G), G)))
    _compare(rep, "J.associative", m1, m2)
    _compare(rep, "J.unit_left", T.mu_J.after(otimes_map(T.iota_J, LinMap.identity(J), G)),
             left_unitor(otimes(I, J, G), J))
    _compare(rep, "J.unit_right", T.mu_J.after(otimes_map(LinMap.identity(J), T.iota_J, G)),
             right_unitor(otimes(J, I, G), J))
    # I is a o-comonoid with counit iota_J
    c1 = circ_map(T.Delta_I, LinMap.identity(I), G).after(T.Delta_I)
    III = circ(I, circ(I, I, G), G)
    c2 = assoc_inv(III, circ(circ(I, I, G), I, G)).after(circ_map(LinMap.identity(I), T.Delta_I, G)).after(T.Delta_I)
    _compare(rep, "I.coassociative", c1, c2)
    lhs = left_unitor(circ(J, I, G), I).after(circ_map(T.iota_J, LinMap.identity(I), G)).after(T.Delta_I)
    _compare(rep, "I.counit_left", lhs, LinMap.identity(I))
    rhs = right_unitor(circ(I, J, G), I).after(circ_map(LinMap.identity(I), T.iota_J, G)).after(T.Delta_I)
    _compare(rep, "I.counit_right", rhs, LinMap.identity(I))
    # invertibility on rank-one samples
    ones = [Obj.make(T.ring, [(f"x{i}", 1)]) for i in range(4)]
    Z = z(*ones)
    ok = len(Z.src) == len(Z.tgt) and linalg.is_invertible(Z.matrix(), T.ring) if len(Z.src) else True
    rep.add("zeta.invertible_rank_one", ok, None if ok else {"shape": [len(Z.tgt), len(Z.src)]})
    return rep


def mutated_two_monoidal(T: TwoMonoidalData, which: str) -> TwoMonoidalData:
    """A deliberately corrupted copy (for mutation tests)."""
    d = dict(category=T.category + "*", ring=T.ring, grading=T.grading, I=T.I, J=T.J, zeta=T.zeta,
             Delta_I=T.Delta_I, mu_J=T.mu_J, iota_J=T.iota_J)
    if which == "zeta":
        d["zeta"] = lambda A, B, C, D, G: T.zeta(A, B, C, D, G).mutated(delta=1)
    elif which == "mu_J":
        d["mu_J"] = T.mu_J.mutated(delta=1)
    elif which == "Delta_I":
        d["Delta_I"] = T.Delta_I.mutated(delta=1)
    elif which == "iota_J":
        d["iota_J"] = T.iota_J.mutated(delta=1)
    else:
        raise ValidationError(f"unknown mutation {which}")
    return TwoMonoidalData(**d)


# ---------------------------------------------------------------- linearization of a plethory

class Linearized:
    """Q or P of one scheme level as a free module with coordinates and lifts."""

    def __init__(self, L: LevelStructure, which: str, weights: Sequence[int], tag: Optional[str] = None):
        self.L, self.which = L, which
        self.A = L.algebra
        self.ring = self.A.ring
        view = AlgebraView(L)
        top = max(weights)
        if which == "Q":
            self.res = indecomposables(view, top, weights)
            if not self.res.is_free():
                tors = {w: p.orders for w, p in self.res.pieces.items() if not p.cokernel.is_free(self.ring)}
                raise NotDualizable(f"indecomposables have torsion {tors}: flatness hypothesis fails")
        elif which == "P":
            self.res = primitives(view, top, weights)
        else:
            raise ValidationError("which must be P or Q")
        tag = tag or which
        self.labels = [(tag, w, i) for w in sorted(self.res.pieces) for i in range(self.res.pieces[w].rank)]
        self.obj = Obj.make(self.ring, [(l, l[1]) for l in self.labels], tag)

    def lift(self, label) -> Polynomial:
        _, w, i = label
        return self.A.from_coordinates(self.res.pieces[w].vectors[i], w)

    def coords(self, p: Polynomial) -> dict:
        if p.algebra != self.A:
            p = Polynomial.from_terms(self.A, {m[:self.A.ngens]: c for m, c in p.terms.items()})
        out = {}
        for w in sorted(p.weights()):
            if w == 0:
                continue
            vec = self.A.coordinates(p.weight_part(w), w)
            piece = self.res.pieces.get(w)
            if self.which == "Q":
                if piece is None:
                    continue
                x = project_indecomposable(self.res, w, vec)
            else:
                if piece is None:
                    if any(vec):
                        raise StructuralError(f"element is not primitive in weight {w}")
                    continue
                x = linalg.solve(linalg.transpose(piece.vectors, len(vec)), vec, self.ring)
                if x is None:
                    raise StructuralError(f"element is not primitive in weight {w}")
            for i, c in enumerate(x):
                if self.ring(c):
                    out[(self.labels[0][0], w, i)] = self.ring(c)
        return out

    def linear_part(self, p: Polynomial) -> dict:
        """Coefficients of the single generators in p."""
        out = {}
        for m, c in p.terms.items():
            if sum(m) == 1:
                out[m.index(1)] = c
        return out


def composite_element(LF: LevelStructure, LG: LevelStructure, T: TruncatedAlgebra, x: Polynomial,
                      y: Polynomial) -> Polynomial:
    """y o x in Reg(F o G): x evaluated on the G-point copies, then y on the resulting G-point."""
    r = LG.algebra.ngens
    copies = [[T.gen(m * r + i) for i in range(r)] for m in range(LF.algebra.ngens)]
    pt = PointArith(LG, T).evaluate(x, copies)
    return AlgebraMap(LG.algebra, T, pt, graded=False)(y)


@dataclass
class BimonoidCandidate:
    """A formal bimodule with (x)-monoid (mu, iota) and o-comonoid (Delta, eps) structure."""
    name: str
    ring: CoefficientRing
    grading: Grading
    H: Obj
    mu: LinMap  # H (x) H -> H
    iota: LinMap  # I -> H
    Delta: LinMap  # H -> H o H
    eps: LinMap  # H -> J
    I: Obj = None
    J: Obj = None
    extra: dict = field(default_factory=dict)

    def replace(self, **kw) -> "BimonoidCandidate":
        d = dict(self.__dict__)
        d.update(kw)
        return BimonoidCandidate(**d)


def linearize_plethory(P, which: str, depth: int) -> BimonoidCandidate:
    """Q(F) or P(F) of a plethory with free Reg F, all four structure maps computed.

    The maps are computed on representing objects and transposed into the formal direction.
    """
    S = P.scheme
    ring = S.ring
    L = S.level(depth)
    G = Grading("diagonal", "multiplicative", depth)
    lin = Linearized(L, which, list(range(1, depth + 1)))
    V = lin.obj
    I, J = unit_obj(ring, "I"), unit_obj(ring, "J")
    VV = otimes(V, V, G)
    VoV = circ(V, V, G)
    A = L.algebra
    # (x)-structure from psi_x: rep map V -> V (x) V
    T2 = L.comult.target
    mono_cache: dict = {}

    def mono_coords(m):
        if m not in mono_cache:
            mono_cache[m] = lin.coords(A.monomial(m)) if any(m) else {}
        return mono_cache[m]

    delta_rep = {}
    for l in V.labels:
        img = L.comult(lin.lift(l))
        col: dict = {}
        if which == "Q":
            for m, c in img.terms.items():
                a, b = T2.split_monomial(m)
                for la, ca in mono_coords(a).items():
                    for lb, cb in mono_coords(b).items():
                        col[(la, lb)] = col.get((la, lb), 0) + c * ca * cb
        else:
            col = _tensor_coords(lin, img)
        delta_rep[l] = col
    mu = LinMap(V, VV, delta_rep, "delta_x").transpose()
    mu.name = "mu"
    # (x)-unit: zero for Q (the (x)-unit has no indecomposables), eps_1 restricted for P
    if which == "Q":
        iota = LinMap.zero(I, V)
    else:
        e1 = L.counits[1]
        iota = LinMap(V, I, {l: {UNIT: e1(lin.lift(l)).constant_term()} for l in V.labels}).transpose()
    iota.name = "iota"
    # o-structure from the plethory Delta: rep map V o V -> V
    Tc, _ = composite_algebra(A, A, depth)
    r = A.ngens
    target = next(iter(P.delta.values())).algebra
    images = []
    for m in range(1, r + 1):
        for i in range(1, r + 1):
            images.append(P.delta[(m, i)] if (m, i) in P.delta else target.zero())
    Delta_rep = AlgebraMap(Tc, target, images, graded=False)
    m_rep = {}
    for (a, b) in VoV.labels:
        z = composite_element(L, L, Tc, lin.lift(a), lin.lift(b))
        m_rep[(a, b)] = lin.coords(Delta_rep(z))
    Delta = LinMap(VoV, V, m_rep, "m_Delta").transpose()
    Delta.name = "Delta"
    # o-counit: rep map k e -> V, e -> the element named by the plethory counit
    u = A.zero()
    for nm, c in P.counit.items():
        if c and nm in A.index:
            u = u + A.gen(nm) * c
    eps = LinMap(J, V, {UNIT: lin.coords(u)}).transpose()
    eps.name = "eps"
    return BimonoidCandidate(f"{which}({S.name})", ring, G, V, mu, iota, Delta, eps, I, J,
                             {"linearized": lin, "delta_rep": delta_rep, "m_rep": m_rep})


def q_module_factorization(P, depth: int, delta_rep: Optional[Mapping] = None) -> Report:
    """Q(F) as a two-sided P(F)-module: the (x)-structure of Q lifts through Q (x) P and P (x) Q.

    On representing objects, delta_x: Q -> Q (x) Q must lift along id (x) i and i (x) id,
    where i: P -> Q sends a primitive to its class. Each lift is a linear solve per weight.
    delta_rep overrides the computed structure map (for mutation tests).
    """
    S = P.scheme
    ring = S.ring
    HQ = linearize_plethory(P, "Q", depth)
    linQ = HQ.extra["linearized"]
    linP = Linearized(S.level(depth), "P", list(range(1, depth + 1)))
    delta = HQ.extra["delta_rep"] if delta_rep is None else delta_rep
    rep = Report(f"Q(x)P factorization for {S.name}")
    # i: P -> Q per weight, columns indexed by P labels
    iota = {}
    for p in linP.labels:
        iota.setdefault(p[1], []).append(linQ.coords(linP.lift(p)))
    qlabels: dict = {}
    for q in linQ.labels:
        qlabels.setdefault(q[1], []).append(q)
    for side in ("right", "left"):
        for w in sorted(qlabels):
            bad = None
            for l in qlabels[w]:
                col = delta.get(l, {})
                for outer in linQ.labels:
                    inner = qlabels.get(w, [])
                    key = (lambda lb: (outer, lb)) if side == "right" else (lambda lb: (lb, outer))
                    v = [ring(col.get(key(lb), 0)) for lb in inner]
                    if not any(v):
                        continue
                    cols = iota.get(w, [])
                    M = [[ring(c.get(lb, 0)) for c in cols] for lb in inner]
                    if not cols or linalg.solve(M, v, ring) is None:
                        bad = {"weight": w, "element": repr(l), "outer": repr(outer),
                               "target": [str(x) for x in v]}
                        break
                if bad:
                    break
            rep.add(f"{side}[{w}]", bad is None, bad)
    return rep


def _tensor_coords(lin: Linearized, img: Polynomial) -> dict:
    """Coordinates of an element of A (x) A lying in P (x) P."""
    T2 = img.algebra
    A = lin.A
    blocks: dict = {}
    for m, c in img.terms.items():
        a, b = T2.split_monomial(m)
        wa, wb = A.weight_of(a), A.weight_of(b)
        if wa == 0 or wb == 0:
            raise StructuralError("element does not lie in P (x) P")
        blocks.setdefault((wa, wb), {}).setdefault(b, {})[a] = c
    out: dict = {}
    for (wa, wb), cols in blocks.items():
        inner: dict = {}
        for b, col in cols.items():
            ca = lin.coords(Polynomial.from_terms(A, col))
            for la, x in ca.items():
                inner.setdefault(la, {})[b] = x
        for la, col in inner.items():
            for lb, y in lin.coords(Polynomial.from_terms(A, col)).items():
                out[(la, lb)] = out.get((la, lb), 0) + y
    return out


def compose_comult(H: BimonoidCandidate, scale: Optional[Mapping] = None) -> dict:
    """Delta as {n: {(d, e): coefficient}}, optionally in a rescaled basis.

    scale[w] = s means the new representing basis vector in weight w is s times the old one;
    Delta is written in the dual of that basis.
    """
    ring = H.ring
    s = scale or {}
    m_rep = H.extra["m_rep"]
    out: dict = {l[1]: {} for l in H.H.labels}
    for (a, b), col in m_rep.items():
        for l, c in col.items():
            x = ring(c)
            if s:
                x = ring(x * ring(s[a[1]]) * ring(s[b[1]]) * ring.inverse(ring(s[l[1]])))
            if x:
                out[l[1]][(a[1], b[1])] = x
    return out


def check_bimonoid(Hc: BimonoidCandidate, depth: Optional[int] = None) -> Report:
    """Every bimonoid diagram as two composite maps compared entrywise."""
    rep = Report(f"bimonoid {Hc.name}")
    for nm in ("mu", "iota", "Delta", "eps"):
        if getattr(Hc, nm) is None:
            raise StructuralError(f"missing structure map {nm}")
    G = Hc.grading if depth is None else Grading(Hc.grading.otimes, Hc.grading.circ, depth)
    H, I, J = Hc.H, Hc.I, Hc.J
    U = unit_structure(Hc.ring, G)
    idH = LinMap.identity(H)
    HH = otimes(H, H, G)
    mu, iota, Delta, eps = Hc.mu, Hc.iota, Hc.Delta, Hc.eps
    # (x)-monoid
    HHH = otimes(HH, H, G)
    _compare(rep, "mu.associative", mu.after(otimes_map(mu, idH, G)),
             mu.after(otimes_map(idH, mu, G)).after(assoc(HHH, otimes(H, HH, G))))
    _compare(rep, "mu.commutative", mu, mu.after(LinMap.relabel(HH, HH, lambda l: (l[1], l[0]))))
    _compare(rep, "mu.unit_left", mu.after(otimes_map(iota, idH, G)), left_unitor(otimes(I, H, G), H))
    _compare(rep, "mu.unit_right", mu.after(otimes_map(idH, iota, G)), right_unitor(otimes(H, I, G), H))
    # o-comonoid
    HoH = circ(H, H, G)
    _compare(rep, "Delta.coassociative", circ_map(Delta, idH, G).after(Delta),
             assoc_inv(circ(H, HoH, G), circ(HoH, H, G)).after(circ_map(idH, Delta, G)).after(Delta))
    _compare(rep, "Delta.counit_left", left_unitor(circ(J, H, G), H).after(circ_map(eps, idH, G)).after(Delta),
             idH)
    _compare(rep, "Delta.counit_right", right_unitor(circ(H, J, G), H).after(circ_map(idH, eps, G)).after(Delta),
             idH)
    # compatibility
    lhs = Delta.after(mu)
    rhs = circ_map(mu, mu, G).after(U.zeta(H, H, H, H, G)).after(otimes_map(Delta, Delta, G))
    _compare(rep, "compat.mu_Delta", lhs, rhs)
    _compare(rep, "compat.iota_Delta", Delta.after(iota), circ_map(iota, iota, G).after(U.Delta_I))
    _compare(rep, "compat.mu_eps", eps.after(mu), U.mu_J.after(otimes_map(eps, eps, G)))
    _compare(rep, "compat.iota_eps", eps.after(iota), U.iota_J)
    return rep


def mutated_bimonoid(Hc: BimonoidCandidate, which: str) -> BimonoidCandidate:
    """Flip the sign of (or perturb) one entry of a structure map."""
    f = getattr(Hc, which)
    label = next((l for l in f.src.labels if f.cols[l]), f.src.labels[0])
    target = next(iter(f.cols[label]), f.tgt.labels[0])
    c = f.cols[label].get(target, 0)
    delta = -2 * c if c and Hc.ring.characteristic != 2 else 1
    return Hc.replace(**{which: f.mutated(label, target, delta)}, name=Hc.name + "*")


# ---------------------------------------------------------------- Q as a bilax functor

@dataclass
class BilaxData:
    """The bilax structure of Q on the sample (F, F, F, F) with all objects computed."""
    ring: CoefficientRing
    grading: Grading
    V: Obj  # QF
    psi: LinMap  # Q(F o F) -> QF o QF
    psi_sym: LinMap  # Q(X o Y) -> QX o QY, X = Y = Cof(QF (x) QF)
    phi: LinMap  # QF (x) QF -> QX
    F_zeta: LinMap  # Q(F o F) (x) Q(F o F) -> Q(X o Y)
    phi0: LinMap  # I -> Q(I) (the zero module)
    psi0: LinMap  # Q(J) -> J
    phiJ: LinMap  # QJ (x) QJ -> Q(J (x) J)
    F_muJ: LinMap  # Q(J (x) J) -> QJ
    F_iotaJ: LinMap  # Q(I) -> QJ
    F_DeltaI: LinMap  # Q(I) -> Q(I o I)
    psiI: LinMap  # Q(I o I) -> QI o QI


def _q_of_sym(M: Obj, ring: CoefficientRing, depth: int):
    """Q of Cof M: its level, the Linearized result and the rep map Q -> M read off linear parts."""
    from .schemes_hopf import sym_free
    B = FormalBimodule(GradedFreeModule.make(ring, {}), {}, M.name)
    mod: dict = {}
    for l, w in zip(M.labels, M.weights):
        mod.setdefault(w, []).append(l)
    B = FormalBimodule(GradedFreeModule.make(ring, mod), {}, M.name)
    S = sym_free(B, depth)
    L = S.level(depth)
    lin = Linearized(L, "Q", list(range(1, depth + 1)), tag=f"Q{M.name}")
    order = [l for _, l in B.module.all_labels()]
    rep = {}
    for q in lin.labels:
        rep[q] = {order[i]: c for i, c in lin.linear_part(lin.lift(q)).items()}
    return L, lin, order, rep


def bilax_q_data(depth: int, ring: CoefficientRing = ZZ) -> BilaxData:
    from .plethory_examples import identity_scheme, lambda_structure
    G = Grading("diagonal", "multiplicative", depth)
    S = lambda_structure(depth, ring)
    L = S.level(depth)
    lin = Linearized(L, "Q", list(range(1, depth + 1)), tag="QL")
    V = lin.obj
    # Q(F o F) and the strict comparison psi
    LC = compose_levels(L, L, depth)
    linC = Linearized(LC, "Q", list(range(1, depth + 1)), tag="QLL")
    QC = linC.obj
    VoV = circ(V, V, G)
    psi_rep = {(a, b): linC.coords(composite_element(L, L, LC.algebra, lin.lift(a), lin.lift(b)))
               for (a, b) in VoV.labels}
    psi = LinMap(VoV, QC, psi_rep).transpose()
    psi.name = "psi"
    # free replacements X = Y = Cof(QF (x) QF) and phi
    VV = otimes(V, V, G)
    LX, linX, orderX, phi_rep = _q_of_sym(VV, ring, depth)
    QX = linX.obj
    phi = LinMap(QX, VV, phi_rep).transpose()
    phi.name = "phi"
    # Q(X o Y) and its strict comparison
    LXY = compose_levels(LX, LX, depth)
    linXY = Linearized(LXY, "Q", list(range(1, depth + 1)), tag="QXY")
    QXoQY = circ(QX, QX, G)
    psi_sym_rep = {(u, v): linXY.coords(composite_element(LX, LX, LXY.algebra, linX.lift(u), linX.lift(v)))
                   for (u, v) in QXoQY.labels}
    psi_sym = LinMap(QXoQY, linXY.obj, psi_sym_rep).transpose()
    psi_sym.name = "psi_XY"
    # Q(zeta): generator d_(x, y) of X o Y goes to d_(a, b) (x) d_(c, d)
    QCQC = otimes(QC, QC, G)
    nX = len(orderX)
    zeta_rep = {}
    for q in linXY.labels:
        col: dict = {}
        for idx, c in linXY.linear_part(linXY.lift(q)).items():
            x, y = orderX[idx // nX], orderX[idx % nX]
            (a, cc), (b, d) = x, y
            left = psi_rep.get((a, b), {})
            right = psi_rep.get((cc, d), {})
            for l1, c1 in left.items():
                for l2, c2 in right.items():
                    col[(l1, l2)] = col.get((l1, l2), 0) + c * c1 * c2
        zeta_rep[q] = col
    F_zeta = LinMap(linXY.obj, QCQC, zeta_rep).transpose()
    F_zeta.name = "Q(zeta)"
    # units: Q(I) = 0, Q(J) = k e
    I, Jo = unit_obj(ring, "I"), unit_obj(ring, "J")
    QI = Obj(ring, (), (), "QI")
    LJ = identity_scheme(0, ring).level(1)
    linJ = Linearized(LJ, "Q", [1], tag="QJ")
    QJ = linJ.obj
    psi0 = LinMap(Jo, QJ, {UNIT: linJ.coords(LJ.algebra.gen(0))}).transpose()
    psi0.name = "psi_0"
    QJQJ = otimes(QJ, QJ, G)
    LJJ, linJJ, orderJJ, phiJ_rep = _q_of_sym(QJQJ, ring, depth)
    phiJ = LinMap(linJJ.obj, QJQJ, phiJ_rep).transpose()
    phiJ.name = "phi_J"
    # mu_J on Id: e -> e (x) e, i.e. the generator of Cof(QJ (x) QJ)
    F_muJ = LinMap(QJ, linJJ.obj, {q: linJJ.coords(LJJ.algebra.gen(0)) for q in QJ.labels}).transpose()
    F_muJ.name = "Q(mu_J)"
    phi0 = LinMap.zero(I, QI)
    F_iotaJ = LinMap.zero(QI, QJ)
    QIoQI = circ(QI, QI, G)
    F_DeltaI = LinMap.zero(QI, QI)
    psiI = LinMap.zero(QI, QIoQI)
    return BilaxData(ring, G, V, psi, psi_sym, phi, F_zeta, phi0, psi0, phiJ, F_muJ, F_iotaJ, F_DeltaI, psiI)


def check_bilax(D: BilaxData) -> Report:
    """The unitality diagrams and the compatibility hexagon for the sample."""
    rep = Report("bilax Q")
    for nm in ("psi", "psi_sym", "phi", "F_zeta", "phi0", "psi0"):
        if getattr(D, nm) is None:
            raise StructuralError(f"missing structure map {nm}")
    G = D.grading
    U = unit_structure(D.ring, G)
    # first unitality diagram: I -> Q(I) -> Q(I o I) -> QI o QI against I -> I o I -> QI o QI
    lhs = D.psiI.after(D.F_DeltaI).after(D.phi0)
    rhs = circ_map(D.phi0, D.phi0, G).after(U.Delta_I)
    _compare(rep, "unitality.Delta_I", lhs, rhs)
    # second: QJ (x) QJ -> J two ways
    lhs = U.mu_J.after(otimes_map(D.psi0, D.psi0, G))
    rhs = D.psi0.after(D.F_muJ).after(D.phiJ)
    _compare(rep, "unitality.mu_J", lhs, rhs)
    # third: iota_J against psi_0 Q(iota_J) phi_0
    _compare(rep, "unitality.iota_J", U.iota_J, D.psi0.after(D.F_iotaJ).after(D.phi0))
    for nm in ("psi", "psi_sym"):
        f = getattr(D, nm)
        ok = len(f.src) == len(f.tgt) and (not len(f.src) or linalg.is_invertible(f.matrix(), D.ring))
        rep.add(f"{nm}.invertible", ok, None if ok else {"shape": [len(f.tgt), len(f.src)]})
    # compatibility
    p1 = D.psi_sym.after(D.F_zeta)
    p2 = circ_map(D.phi, D.phi, G).after(U.zeta(D.V, D.V, D.V, D.V, G)).after(otimes_map(D.psi, D.psi, G))
    _compare(rep, "compat.hexagon", p1, p2)
    return rep


def mutated_bilax(D: BilaxData, which: str) -> BilaxData:
    d = dict(D.__dict__)
    f = d[which]
    label = next((l for l in f.src.labels if f.cols[l]), None)
    if label is None:
        raise ValidationError(f"{which} has no nonzero entry to perturb")
    d[which] = f.mutated(label, next(iter(f.cols[label])), 1)
    return BilaxData(**d)


# ---------------------------------------------------------------- duality

def dualize(B: FormalBimodule, relations: Optional[Mapping] = None) -> FormalBimodule:
    """Levelwise dual of a classical bimodule; actions act by precomposition (transpose).

    relations maps a weight to a presentation matrix; torsion in the presented module is refused.
    """
    for w, M in (relations or {}).items():
        cok = linalg.cokernel(M, B.ring, B.module.rank(w))
        if not cok.is_free(B.ring):
            raise NotDualizable(f"not in the flat subcategory: torsion {cok.orders} in weight {w}")
    mod = dual_level(B.module)
    actions = {nm: f.transpose() for nm, f in B.actions.items()}
    return FormalBimodule(mod, actions, f"{B.name}*")


def predualize(F: FormalBimodule) -> FormalBimodule:
    """The classical bimodule whose dual is F (levels free)."""
    mod = dual_level(F.module)
    return FormalBimodule(mod, {nm: f.transpose() for nm, f in F.actions.items()}, f"{F.name}_*")



def bimodules_equal(B: FormalBimodule, C: FormalBimodule, relabel: Callable = lambda l: l):
    """None if C is B after relabelling labels, else a witness."""
    if [(w, tuple(map(relabel, ls))) for w, ls in B.module.basis] != [(w, tuple(ls)) for w, ls in C.module.basis]:
        return {"reason": "bases differ"}
    if set(B.actions) != set(C.actions):
        return {"reason": "action names differ"}
    for nm in B.actions:
        if B.actions[nm].matrices != C.actions[nm].matrices:
            return {"reason": f"action {nm} differs"}
    return None


def _elementary_pair(rng: random.Random, n: int, steps: int = 4):
    """A random unimodular matrix with its inverse."""
    P, Pinv = linalg.identity(n), linalg.identity(n)
    for _ in range(steps if n > 1 else 0):
        i, j = rng.sample(range(n), 2)
        c = rng.choice((-1, 1))
        for r in range(n):
            P[r][j] += c * P[r][i]
        Pinv[i] = [a - c * b for a, b in zip(Pinv[i], Pinv[j])]
    return P, Pinv


def random_classical(rng: random.Random, ring: CoefficientRing = ZZ, max_rank: int = 3, max_weight: int = 5,
                     name: str = "b", idempotent: bool = True) -> FormalBimodule:
    """A free graded bimodule over l = Z[s]/(s^2 - s): s acts by a random idempotent per weight."""
    total = rng.randint(1, max_rank)
    weights = sorted(rng.randint(0, max_weight) for _ in range(total))
    basis: dict = {}
    for i, w in enumerate(weights):
        basis.setdefault(w, []).append(f"{name}{i}")
    M = GradedFreeModule.make(ring, basis)
    if not idempotent:
        return FormalBimodule(M, {}, name)
    mats = {}
    for w in M.weights:
        n = M.rank(w)
        P, Pinv = _elementary_pair(rng, n)
        Dg = [[(1 if i == j and rng.random() < 0.5 else 0) for j in range(n)] for i in range(n)]
        mats[w] = linalg.matmul(linalg.matmul(P, Dg, n), Pinv, n)
    return FormalBimodule(M, {"s": ModuleMap(M, M, mats)}, name)


def classical_tensor(B: FormalBimodule, C: FormalBimodule) -> dict:
    """B (x)_l C per weight as (ambient pairs, cokernel) of the balancing relations."""
    ring = B.ring
    out = {}
    ws = sorted({wb + wc for wb in B.module.weights for wc in C.module.weights})
    for w in ws:
        amb = [(b, c, wb) for wb in B.module.weights for wc in C.module.weights if wb + wc == w
               for b in B.module.labels(wb) for c in C.module.labels(wc)]
        index = {(b, c): i for i, (b, c, _) in enumerate(amb)}
        cols = []
        for nm in B.actions:
            for j, (b, c, wb) in enumerate(amb):
                v = [0] * len(amb)
                for b2, x in B.actions[nm].apply_label(wb, b).items():
                    v[index[(b2, c)]] += x
                for c2, x in C.actions[nm].apply_label(w - wb, c).items():
                    v[index[(b, c2)]] -= x
                if any(v):
                    cols.append(v)
        M = linalg.transpose(cols, len(amb)) if cols else [[] for _ in amb]
        out[w] = (amb, linalg.cokernel(M, ring, len(amb), len(cols)))
    return out


def _span_contains(vectors: list, v: list, ring) -> bool:
    if not vectors:
        return not any(v)
    return linalg.solve(linalg.transpose(vectors, len(v)), v, ring) is not None


def otimes_comparison(B: FormalBimodule, C: FormalBimodule) -> Optional[dict]:
    """The dual of B (x)_l C against the Sweedler product of the duals; None when the map is an iso."""
    ring = B.ring
    cl = classical_tensor(B, C)
    sw = sweedler_product(dualize(B), dualize(C))
    incl = getattr(sw, "inclusion")
    for w, (amb, cok) in cl.items():
        if not cok.is_free(ring):
            return {"weight": w, "reason": "classical tensor has torsion"}
        forms = [list(r) for r in cok.projection]
        damb, ker = incl.get(w, ([], []))
        pos = {(a, b): i for i, (a, b, _) in enumerate(damb)}
        # express the dual forms in the dual ambient ordering
        dforms = []
        for f in forms:
            v = [0] * len(damb)
            for (b, c, _), x in zip(amb, f):
                v[pos[(("*", b), ("*", c))]] = x
            dforms.append(v)
        if len(dforms) != len(ker):
            return {"weight": w, "reason": "ranks differ", "classical": len(dforms), "sweedler": len(ker)}
        for v in dforms:
            if not _span_contains(ker, v, ring):
                return {"weight": w, "reason": "dual form outside the equalizer"}
        for v in ker:
            if not _span_contains(dforms, list(v), ring):
                return {"weight": w, "reason": "equalizer not spanned by the dual"}
    return None


def circ_comparison(B: FormalBimodule, C: FormalBimodule) -> Optional[dict]:
    """dualize(B o C) against dualize(B) o dualize(C) under (b, c)* -> (b*, c*); None when an iso."""
    left = dualize(classical_compose(B, C))
    right = compose_bimodules(dualize(B), dualize(C))
    relabel = lambda l: (("*", l[1][0]), ("*", l[1][1]))  # noqa: E731
    lw = {relabel(l): w for w, l in left.module.all_labels()}
    rw = {l: w for w, l in right.module.all_labels()}
    if lw != rw:
        return {"reason": "bases do not correspond"}
    for w in right.module.weights:
        perm = [[1 if relabel(a) == b else 0 for a in left.module.labels(w)] for b in right.module.labels(w)]
        if not linalg.is_invertible(perm, B.ring):
            return {"weight": w, "reason": "comparison not invertible"}
        for nm in right.actions:
            A1 = linalg.matmul(perm, left.actions[nm].matrices[w], len(perm))
            A2 = linalg.matmul(right.actions[nm].matrices[w], perm, len(perm))
            if A1 != A2:
                return {"weight": w, "reason": f"action {nm} not intertwined"}
    return None


def duality_roundtrip(samples: int = 50, seed: int = 0, ring: CoefficientRing = ZZ, max_rank: int = 3,
                      max_weight: int = 5) -> Report:
    """Roundtrips and the two comparison isomorphisms on random free bimodules."""
    rep = Report(f"duality over {ring}")
    rng = random.Random(seed)
    for i in range(samples):
        B = random_classical(rng, ring, max_rank, max_weight, "b")
        C = random_classical(rng, ring, max_rank, max_weight, "c")
        rep.add(f"predual_dual[{i}]", *_ok(bimodules_equal(B, predualize(dualize(B)), lambda l: ("**", l))))
        Fm = dualize(B)
        rep.add(f"dual_predual[{i}]", *_ok(bimodules_equal(Fm, dualize(predualize(Fm)))))
        rep.add(f"circ_comparison[{i}]", *_ok(circ_comparison(B, C)))
        rep.add(f"otimes_comparison[{i}]", *_ok(otimes_comparison(B, C)))
    return rep


def _ok(witness):
    return (witness is None, witness)

