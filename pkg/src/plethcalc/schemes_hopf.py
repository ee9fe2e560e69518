"""Formal module and algebra schemes on towers: structure data, axiom checks,
primitives, indecomposables, the cofree coalgebra and the free/cofree adjunctions.
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

from . import linalg
from .exact_algebra import (AlgebraMap, CoefficientRing, Polynomial, StructuralError, TruncatedAlgebra,
                            ValidationError, ground_algebra, identity_map, kron, permutation_map,
                            polynomial_algebra, tensor_product)
from .pro_tower import GradedFreeModule, ProMorphism, Tower


# ---------------------------------------------------------------- reports

@dataclass
class AxiomResult:
    axiom: str
    status: str  # "pass" | "fail" | "skip"
    witness: Optional[dict] = None

    def to_json(self) -> dict:
        d = {"axiom": self.axiom, "status": self.status}
        if self.witness is not None:
            d["witness"] = self.witness
        return d


@dataclass
class Report:
    subject: str
    results: list = field(default_factory=list)

    def add(self, axiom: str, ok: Optional[bool], witness: Optional[dict] = None):
        status = "skip" if ok is None else ("pass" if ok else "fail")
        self.results.append(AxiomResult(axiom, status, None if ok else witness))

    @property
    def passed(self) -> bool:
        return all(r.status != "fail" for r in self.results)

    def failures(self) -> list:
        return [r for r in self.results if r.status == "fail"]

    def status(self, axiom: str) -> str:
        for r in self.results:
            if r.axiom == axiom:
                return r.status
        raise KeyError(axiom)

    def extend(self, other: "Report", prefix: str = ""):
        for r in other.results:
            self.results.append(AxiomResult(prefix + r.axiom, r.status, r.witness))

    def to_json(self) -> dict:
        return {"subject": self.subject, "passed": self.passed, "results": [r.to_json() for r in self.results]}


# ---------------------------------------------------------------- structure data

@dataclass
class LevelStructure:
    """Co-operations on one level A of a scheme tower."""
    algebra: TruncatedAlgebra
    coadd: AlgebraMap  # A -> A (x) A
    cozero: AlgebraMap  # A -> k
    comult: Optional[AlgebraMap] = None
    counits: dict = field(default_factory=dict)  # a -> (A -> k)
    actions: dict = field(default_factory=dict)  # a -> (A -> A)
    unital: bool = True
    ideal: tuple = ()  # extra equations on points (composites with a non-free outer factor)

    @property
    def ground(self) -> TruncatedAlgebra:
        return self.cozero.target

    @property
    def square(self) -> TruncatedAlgebra:
        return self.coadd.target

    def replace(self, **kw) -> "LevelStructure":
        d = dict(algebra=self.algebra, coadd=self.coadd, cozero=self.cozero, comult=self.comult,
                 counits=dict(self.counits), actions=dict(self.actions), unital=self.unital,
                 ideal=self.ideal)
        d.update(kw)
        return LevelStructure(**d)


class SchemeStructure:
    """A formal module (or algebra) scheme: a tower of levels with co-operations.

    build_level(d) returns the LevelStructure at depth d. l_elements lists the
    elements a of l for which counits and actions are stored.
    """

    def __init__(self, name: str, ring: CoefficientRing, build_level: Callable[[int], LevelStructure],
                 l_ring: str = "ZZ", metadata: Optional[dict] = None):
        self.name = name
        self.ring = ring
        self._build = build_level
        self.l_ring = l_ring
        self.metadata = dict(metadata or {})
        self._levels: dict = {}
        self._lock = threading.RLock()

    def level(self, d: int) -> LevelStructure:
        with self._lock:
            if d not in self._levels:
                try:
                    self._levels[d] = self._build(d)
                except (KeyError, IndexError) as exc:
                    raise StructuralError(f"{self.name}: structure maps undefined at depth {d}: {exc}") from exc
            return self._levels[d]

    @property
    def carrier(self) -> Tower:
        def step(n):
            src, tgt = self.level(n + 1).algebra, self.level(n).algebra
            return AlgebraMap(src, tgt, [tgt.gen(g.name) if g.name in tgt.index else tgt.zero()
                                         for g in src.generators], graded=False)
        return Tower(lambda n: self.level(n).algebra, step, kind="scheme", name=self.name)

    def structure_map(self, which: str) -> ProMorphism:
        """coadd, cozero or comult as a pro-morphism with identity reindexing."""
        C = self.carrier
        tgt = Tower(lambda n: getattr(self.level(n), which).target, lambda n: None, kind="image")
        return ProMorphism(C, tgt, lambda n: n, lambda n: getattr(self.level(n), which))

    def mutate(self, name: str, fn: Callable[[LevelStructure], LevelStructure]) -> "SchemeStructure":
        return SchemeStructure(name, self.ring, lambda d: fn(self.level(d)), self.l_ring, self.metadata)


# ---------------------------------------------------------------- map helpers

def scalar_through(f: AlgebraMap, B: TruncatedAlgebra) -> AlgebraMap:
    """eta o f for f: A -> k, landing in B."""
    return AlgebraMap(f.source, B, [B.scalar(img.constant_term()) for img in f.images], graded=False)


def pair_map(T: TruncatedAlgebra, maps: Sequence[AlgebraMap], target: TruncatedAlgebra) -> AlgebraMap:
    """T = F_0 (x) F_1 (x) ... -> target, applying maps[i] on factor i and multiplying."""
    imgs = []
    for f in maps:
        imgs.extend(f.images)
    return AlgebraMap(T, target, imgs, graded=all(f.graded for f in maps))


def injection(T: TruncatedAlgebra, i: int) -> AlgebraMap:
    F = T.factor_list()[i]
    off = T.factor_offsets()[i]
    return AlgebraMap(F, T, [T.embed(g, off) for g in F.gens()])


def _differs(A: TruncatedAlgebra, f: Callable, g: Callable, what: str):
    """First generator where f and g disagree, as a witness dict."""
    for x in A.gens():
        a, b = f(x), g(x)
        if a != b:
            return {"element": str(x), "lhs": str(a), "rhs": str(b), "diagram": what}
    return None


def _check(report: Report, axiom: str, A: TruncatedAlgebra, f: Callable, g: Callable):
    w = _differs(A, f, g, axiom)
    report.add(axiom, w is None, w)


def _well_defined(f: AlgebraMap):
    """f respects the rewrite rules and kills the truncation ideal of its source."""
    A = f.source
    for r in A.rules:
        lhs = f.apply_monomial(r.lead)
        rhs = f.target.zero()
        for m, c in r.tail:
            rhs = rhs + f.apply_monomial(m) * c
        if lhs != rhs:
            return {"element": f"relation {r.lead}", "lhs": str(lhs), "rhs": str(rhs)}
    for m in A.overflow_monomials():
        img = f.apply_monomial(m)
        if img:
            return {"element": f"overflow {m}", "lhs": str(img), "rhs": "0"}
    return None


# ---------------------------------------------------------------- validation

def validate(S: SchemeStructure, depth: int) -> Report:
    """Check the co-ring axioms on the generators of level depth."""
    L = S.level(depth)
    A, T2, k = L.algebra, L.square, L.ground
    rep = Report(f"{S.name} at depth {depth}")
    idA = identity_map(A)
    T3 = tensor_product([A, A, A], A.bound)

    maps = {"coadd": L.coadd, "cozero": L.cozero}
    if L.comult is not None:
        maps["comult"] = L.comult
    for a, f in sorted(L.counits.items()):
        maps[f"counit[{a}]"] = f
    for a, f in sorted(L.actions.items()):
        maps[f"action[{a}]"] = f
    bad = None
    for nm, f in maps.items():
        w = _well_defined(f)
        if w is not None:
            bad = dict(w, map=nm)
            break
    rep.add("maps.well_defined", bad is None, bad)

    coadd = L.coadd
    _check(rep, "coadd.coassociative", A, lambda x: kron([coadd, idA], A.bound)(coadd(x)),
           lambda x: kron([idA, coadd], A.bound)(coadd(x)))
    tw = permutation_map(T2, [1, 0])
    _check(rep, "coadd.cocommutative", A, lambda x: tw(coadd(x)), coadd)
    e0 = scalar_through(L.cozero, A)
    left = pair_map(T2, [e0, idA], A)
    right = pair_map(T2, [idA, e0], A)
    _check(rep, "coadd.counit", A, lambda x: (left(coadd(x)), right(coadd(x))), lambda x: (x, x))

    anti = L.actions.get(-1)
    if anti is not None:
        nab = pair_map(T2, [idA, anti], A)
        nab2 = pair_map(T2, [anti, idA], A)
        _check(rep, "coadd.antipode", A, lambda x: (nab(coadd(x)), nab2(coadd(x))), lambda x: (e0(x), e0(x)))
    else:
        rep.add("coadd.antipode", None)

    mult = L.comult
    if mult is not None:
        _check(rep, "comult.coassociative", A, lambda x: kron([mult, idA], A.bound)(mult(x)),
               lambda x: kron([idA, mult], A.bound)(mult(x)))
        _check(rep, "comult.cocommutative", A, lambda x: tw(mult(x)), mult)
        if L.unital and 1 in L.counits:
            e1 = scalar_through(L.counits[1], A)
            l1, r1 = pair_map(T2, [e1, idA], A), pair_map(T2, [idA, e1], A)
            _check(rep, "comult.counit", A, lambda x: (l1(mult(x)), r1(mult(x))), lambda x: (x, x))
        else:
            rep.add("comult.counit", None)
        # (x + y) z = x z + y z
        T4 = tensor_product([A] * 4, A.bound)
        inj = [injection(T3, i) for i in range(3)]
        shuffle = pair_map(T4, [inj[0], inj[2], inj[1], inj[2]], T3)
        mm = kron([mult, mult], A.bound)
        _check(rep, "comult.distributive", A, lambda x: kron([coadd, idA], A.bound)(mult(x)),
               lambda x: shuffle(mm(coadd(x))))
        z = pair_map(T2, [e0, idA], A)
        _check(rep, "comult.zero_absorbing", A, lambda x: z(mult(x)), e0)
    else:
        for ax in ("comult.coassociative", "comult.cocommutative", "comult.counit",
                   "comult.distributive", "comult.zero_absorbing"):
            rep.add(ax, None)

    # counit family
    ks = sorted(L.counits)
    if 0 in L.counits:
        _check(rep, "counits.zero", A, L.counits[0], L.cozero)
    fails = None
    for a in ks:
        for b in ks:
            if a + b in L.counits:
                pm = pair_map(T2, [L.counits[a], L.counits[b]], k)
                w = _differs(A, lambda x: pm(coadd(x)), L.counits[a + b], f"eps_{a} + eps_{b}")
                if w and fails is None:
                    fails = w
    rep.add("counits.additive", fails is None if ks else None, fails)
    fails = None
    if mult is not None and ks:
        for a in ks:
            for b in ks:
                if a * b in L.counits:
                    pm = pair_map(T2, [L.counits[a], L.counits[b]], k)
                    w = _differs(A, lambda x: pm(mult(x)), L.counits[a * b], f"eps_{a} * eps_{b}")
                    if w and fails is None:
                        fails = w
        rep.add("counits.multiplicative", fails is None, fails)
    else:
        rep.add("counits.multiplicative", None)

    # action of l
    fails_formula = fails_add = fails_mul = None
    for a, lam in sorted(L.actions.items()):
        if mult is not None and a in L.counits:
            pm = pair_map(T2, [scalar_through(L.counits[a], A), idA], A)
            w = _differs(A, lambda x: pm(mult(x)), lam, f"lambda_{a}")
            fails_formula = fails_formula or w
        ll = kron([lam, lam], A.bound)
        w = _differs(A, lambda x: coadd(lam(x)), lambda x: ll(coadd(x)), f"lambda_{a} additive")
        fails_add = fails_add or w
        if mult is not None:
            lm = kron([lam, idA], A.bound)
            w = _differs(A, lambda x: mult(lam(x)), lambda x: lm(mult(x)), f"lambda_{a} linear")
            fails_mul = fails_mul or w
    has = bool(L.actions)
    rep.add("action.counit_formula", (fails_formula is None) if has and mult is not None else None, fails_formula)
    rep.add("action.additive", (fails_add is None) if has else None, fails_add)
    rep.add("action.linear", (fails_mul is None) if has and mult is not None else None, fails_mul)
    if 1 in L.actions:
        _check(rep, "action.unit", A, L.actions[1], idA)
    return rep


# ---------------------------------------------------------------- graded coalgebra views

class GradedBialgebra:
    """Minimal interface used by primitives/indecomposables.

    Labels are opaque hashables; weight(label) gives their weight.
    """
    ring: CoefficientRing

    def basis(self, w: int) -> list: ...
    def weight(self, label) -> int: ...
    def counit(self, label): ...
    def coproduct(self, label) -> dict: ...  # {(l1, l2): c}
    def product(self, a, b) -> dict: ...
    def unit(self): ...


class AlgebraView(GradedBialgebra):
    """A scheme level read as a bialgebra-like object (product + coaddition)."""

    def __init__(self, L: LevelStructure):
        self.L = L
        self.A = L.algebra
        self.ring = self.A.ring

    def basis(self, w):
        return list(self.A.basis(w))

    def weight(self, label):
        return self.A.weight_of(label)

    def counit(self, label):
        return self.L.cozero(self.A.monomial(label)).constant_term()

    def coproduct(self, label):
        img = self.L.coadd(self.A.monomial(label))
        T = img.algebra
        out = {}
        for m, c in img.terms.items():
            a, b = T.split_monomial(m)
            out[(a, b)] = out.get((a, b), 0) + c
        return out

    def product(self, a, b):
        return (self.A.monomial(a) * self.A.monomial(b)).terms

    def unit(self):
        return (0,) * self.A.ngens

    def element(self, vec, w) -> Polynomial:
        return self.A.from_coordinates(vec, w)


def _pair_basis(C: GradedBialgebra, w: int, include_units: bool = True) -> list:
    out = []
    for u in range(0, w + 1):
        for a in C.basis(u):
            for b in C.basis(w - u):
                out.append((a, b))
    return out


@dataclass
class LinearPiece:
    """A computed submodule or quotient in one weight."""
    weight: int
    rank: int
    vectors: list  # kernel basis vectors or quotient lifts, in ambient coordinates
    orders: tuple = ()  # cokernel summand orders when this is a quotient
    cokernel: Optional[linalg.Cokernel] = None


@dataclass
class ModuleResult:
    ring: CoefficientRing
    pieces: dict  # weight -> LinearPiece
    ambient: Callable[[int], list]  # weight -> ambient basis labels
    kind: str

    def rank(self, w: int) -> int:
        p = self.pieces.get(w)
        return p.rank if p else 0

    def ranks(self) -> dict:
        return {w: p.rank for w, p in sorted(self.pieces.items())}

    def is_free(self) -> bool:
        if self.kind != "quotient":
            return True
        return all(p.cokernel.is_free(self.ring) for p in self.pieces.values())

    def as_module(self, name: str = "v") -> GradedFreeModule:
        return GradedFreeModule.make(self.ring, {w: [(name, w, i) for i in range(p.rank)]
                                                 for w, p in self.pieces.items()})


def primitives(S, depth: int, weights: Optional[Iterable[int]] = None) -> ModuleResult:
    """Per weight, the kernel of a -> psi(a) - a (x) 1 - 1 (x) a (saturated over Z)."""
    C = S if isinstance(S, GradedBialgebra) else AlgebraView(S.level(depth))
    ring = C.ring
    ws = list(weights) if weights is not None else list(range(0, depth + 1))
    pieces = {}
    one = C.unit()
    for w in ws:
        src = C.basis(w)
        if not src:
            continue
        tgt = _pair_basis(C, w)
        tindex = {p: i for i, p in enumerate(tgt)}
        M = [[0] * len(src) for _ in tgt]
        for j, a in enumerate(src):
            img = dict(C.coproduct(a))
            img[(a, one)] = img.get((a, one), 0) - 1
            img[(one, a)] = img.get((one, a), 0) - 1
            for pr, c in img.items():
                if c:
                    M[tindex[pr]][j] += c
        M = [[ring(x) for x in row] for row in M]
        ker = linalg.kernel(M, ring, len(src)) if tgt else linalg.identity(len(src))
        ker = [_integral(v, ring) for v in ker]
        if ker:
            pieces[w] = LinearPiece(w, len(ker), ker)
    return ModuleResult(ring, pieces, lambda w: C.basis(w), "sub")


def _integral(v: Sequence, ring: CoefficientRing) -> list:
    """Over Q, rescale a kernel vector to a primitive integer vector with positive leading entry."""
    if ring.kind != "QQ":
        return [ring(x) for x in v]
    from fractions import Fraction
    from math import gcd, lcm
    fr = [Fraction(x) for x in v]
    den = lcm(*[f.denominator for f in fr]) if fr else 1
    ints = [int(f * den) for f in fr]
    g = 0
    for x in ints:
        g = gcd(g, x)
    g = g or 1
    lead = next((x for x in ints if x), 1)
    s = 1 if lead > 0 else -1
    return [ring(s * x // g) for x in ints]


def indecomposables(S, depth: int, weights: Optional[Iterable[int]] = None) -> ModuleResult:
    """Per weight, A_+ / (A_+)^2 as the cokernel of the decomposables (Smith form over Z)."""
    C = S if isinstance(S, GradedBialgebra) else AlgebraView(S.level(depth))
    ring = C.ring
    ws = list(weights) if weights is not None else list(range(0, depth + 1))
    one = C.unit()

    def aug_basis(u):
        """Basis of the augmentation ideal in weight u, as coordinate dicts."""
        b = C.basis(u)
        eps = [ring(C.counit(x)) for x in b]
        if not any(eps):
            return [{x: 1} for x in b]
        ker = linalg.kernel([eps], ring, len(b))
        return [{x: c for x, c in zip(b, v) if c} for v in ker]

    pieces = {}
    for w in ws:
        amb = C.basis(w)
        if not amb:
            continue
        index = {x: i for i, x in enumerate(amb)}
        cols = []
        for u in range(0, w + 1):
            left = aug_basis(u)
            right = aug_basis(w - u)
            for a in left:
                for b in right:
                    v = [0] * len(amb)
                    for x, c in a.items():
                        for y, d in b.items():
                            for z, e in C.product(x, y).items():
                                v[index[z]] += c * d * e
                    if any(ring(t) for t in v):
                        cols.append([ring(t) for t in v])
        if w == 0 or any(C.counit(x) for x in amb):
            # quotient also by the unit line so that only the augmentation ideal remains
            unit_vec = [1 if x == one else 0 for x in amb]
            if any(unit_vec):
                cols.append(unit_vec)
        M = linalg.transpose(cols, len(amb)) if cols else [[] for _ in amb]
        cok = linalg.cokernel(M, ring, len(amb), len(cols))
        if cok.rank:
            pieces[w] = LinearPiece(w, cok.rank, [list(v) for v in cok.lifts], cok.orders, cok)
    return ModuleResult(ring, pieces, lambda w: C.basis(w), "quotient")


def project_indecomposable(Q: ModuleResult, w: int, vec: Sequence) -> list:
    piece = Q.pieces.get(w)
    if piece is None:
        return []
    return [Q.ring(x) for x in piece.cokernel.project(vec)]


def primitive_polynomials(S: SchemeStructure, depth: int) -> dict:
    """weight -> list of primitive Polynomials at the given depth."""
    L = S.level(depth)
    P = primitives(S, depth)
    return {w: [L.algebra.from_coordinates(v, w) for v in p.vectors] for w, p in P.pieces.items()}


# ---------------------------------------------------------------- the cofree coalgebra

class Gamma(GradedBialgebra):
    """Symmetric tensors on a graded free module M, truncated by weight and tensor length.

    Elements are dicts {word: coefficient}, words are tuples of M-labels.
    Basis of Gamma^n is the kernel of the transposition actions on M^(x)n.
    The product is the shuffle product unless an algebra structure mu on M is given,
    in which case it is the coalgebra lift of mu o (pi (x) pi).
    """

    def __init__(self, M: GradedFreeModule, max_weight: int, max_length: Optional[int] = None,
                 mu: Optional[Callable] = None, mu_unit: Optional[dict] = None):
        self.M = M
        self.ring = M.ring
        self.max_weight = max_weight
        self.max_length = max_length if max_length is not None else max_weight
        self.mu = mu
        self.mu_unit = mu_unit
        self._wt = {l: w for w, l in M.all_labels()}
        self._basis: dict = {}
        self._lock = threading.RLock()

    def word_weight(self, word) -> int:
        return sum(self._wt[x] for x in word)

    def multisets(self, n: int, w: int) -> list:
        labels = [l for _, l in self.M.all_labels()]
        return [ms for ms in itertools.combinations_with_replacement(labels, n) if self.word_weight(ms) == w]

    def words(self, n: int, w: int) -> list:
        return [t for ms in self.multisets(n, w) for t in sorted(set(itertools.permutations(ms)), key=repr)]

    def _invariants(self, n: int, w: int) -> list:
        if n == 0:
            return [{(): 1}] if w == 0 else []
        out = []
        # the action preserves the multiset of letters, so the kernel splits into orbit blocks
        for ms in self.multisets(n, w):
            ws = sorted(set(itertools.permutations(ms)), key=repr)
            idx = {t: i for i, t in enumerate(ws)}
            rows = []
            for i in range(n - 1):
                # (sigma_i - 1) x = 0 for the adjacent transposition sigma_i
                for t in ws:
                    s = t[:i] + (t[i + 1], t[i]) + t[i + 2:]
                    if s == t:
                        continue
                    row = [0] * len(ws)
                    row[idx[s]] += 1
                    row[idx[t]] -= 1
                    rows.append(row)
            ker = linalg.kernel(rows, self.ring, len(ws)) if rows else linalg.identity(len(ws))
            out.extend({ws[j]: self.ring(c) for j, c in enumerate(v) if self.ring(c)} for v in ker)
        return out

    def basis(self, w: int) -> list:
        """Labels ("G", n, w, i)."""
        out = []
        for n in range(0, self.max_length + 1):
            out.extend(("G", n, w, i) for i in range(len(self._component(n, w))))
        return out

    def _component(self, n: int, w: int) -> list:
        with self._lock:
            key = (n, w)
            if key not in self._basis:
                self._basis[key] = self._invariants(n, w) if w <= self.max_weight else []
            return self._basis[key]

    def vector(self, label) -> dict:
        _, n, w, i = label
        return self._component(n, w)[i]

    def _lookup(self, n: int, w: int) -> dict:
        with self._lock:
            key = ("lookup", n, w)
            if key not in self._basis:
                table = {}
                for i, v in enumerate(self._component(n, w)):
                    for word, c in v.items():
                        table[word] = (i, c)
                self._basis[key] = table
            return self._basis[key]

    def _fast_coordinates(self, n: int, w: int, part: Mapping):
        """Read coordinates off disjoint orbit supports; None if that shortcut does not apply."""
        table = self._lookup(n, w)
        comp = self._component(n, w)
        sol = [0] * len(comp)
        seen = set()
        for word, c in part.items():
            hit = table.get(word)
            if hit is None:
                return None
            i, bc = hit
            if i in seen:
                continue
            seen.add(i)
            if self.ring.kind == "ZZ":
                if c % bc:
                    return None
                sol[i] = c // bc
            else:
                sol[i] = self.ring(c * self.ring.inverse(bc)) if self.ring.is_field else None
                if sol[i] is None:
                    return None
        # verify exactly
        acc: dict = {}
        for i, x in enumerate(sol):
            if x:
                for word, c in comp[i].items():
                    acc[word] = acc.get(word, 0) + x * c
        if {k: self.ring(v) for k, v in acc.items() if self.ring(v)} != {k: self.ring(v) for k, v in part.items() if self.ring(v)}:
            return None
        return sol

    def weight(self, label) -> int:
        return label[2]

    def length(self, label) -> int:
        return label[1]

    def unit(self):
        return ("G", 0, 0, 0)

    def counit(self, label):
        return 1 if label[1] == 0 else 0

    def coordinates(self, elem: Mapping) -> dict:
        """Express a symmetric tensor (sum over lengths) in the basis."""
        by: dict = {}
        for word, c in elem.items():
            if c:
                by.setdefault((len(word), self.word_weight(word)), {})[word] = c
        out = {}
        for (n, w), part in by.items():
            comp = self._component(n, w)
            if not comp:
                raise ValidationError("element is outside the truncation")
            sol = self._fast_coordinates(n, w, part)
            if sol is None:
                sol = _solve_in_span(comp, part, self.ring)
            if sol is None:
                raise ValidationError("element is not a symmetric tensor")
            for i, c in enumerate(sol):
                if c:
                    out[("G", n, w, i)] = c
        return out

    def coproduct(self, label) -> dict:
        v = self.vector(label)
        n = label[1]
        parts: dict = {}
        for k in range(n + 1):
            acc: dict = {}
            for word, c in v.items():
                key = (word[:k], word[k:])
                acc[key] = acc.get(key, 0) + c
            # split into (left length k) (x) (right length n-k) and express in basis pairs
            out = _tensor_coordinates(self, self, acc)
            for pr, c in out.items():
                parts[pr] = parts.get(pr, 0) + c
        return {k: self.ring(c) for k, c in parts.items() if self.ring(c)}

    def product(self, a, b) -> dict:
        if self.mu is None:
            va, vb = self.vector(a), self.vector(b)
            acc: dict = {}
            for x, c in va.items():
                for y, d in vb.items():
                    for sh in _shuffles(x, y):
                        acc[sh] = acc.get(sh, 0) + c * d
            if a[1] + b[1] > self.max_length or a[2] + b[2] > self.max_weight:
                return {}
            return self.coordinates({k: self.ring(v) for k, v in acc.items()})
        return self._mu_product(a, b)

    def _mu_product(self, a, b) -> dict:
        # lift of mu o (pi (x) pi) from Gamma (x) Gamma, evaluated on a (x) b
        C = TensorCoalgebra(self, self)
        mu = self.mu

        def f(label):
            x, y = label
            if x[1] != 1 or y[1] != 1:
                return {}
            (wx, cx), = self.vector(x).items()
            (wy, cy), = self.vector(y).items()
            return {l: cx * cy * c for l, c in mu(wx[0], wy[0]).items()}

        lift = cofree_lift(C, self, f, self.max_length)
        return lift((a, b))


def _shuffles(x: tuple, y: tuple):
    n, m = len(x), len(y)
    for pos in itertools.combinations(range(n + m), n):
        out, i, j = [], 0, 0
        ps = set(pos)
        for k in range(n + m):
            if k in ps:
                out.append(x[i])
                i += 1
            else:
                out.append(y[j])
                j += 1
        yield tuple(out)


def _solve_in_span(comp: list, part: Mapping, ring: CoefficientRing):
    words = sorted({w for v in comp for w in v} | set(part), key=repr)
    idx = {w: i for i, w in enumerate(words)}
    M = [[0] * len(comp) for _ in words]
    for j, v in enumerate(comp):
        for w, c in v.items():
            M[idx[w]][j] = c
    b = [0] * len(words)
    for w, c in part.items():
        b[idx[w]] = c
    x = linalg.solve(M, b, ring, len(comp))
    return None if x is None else [ring(t) for t in x]


def _tensor_coordinates(G1: "Gamma", G2: "Gamma", acc: Mapping) -> dict:
    """acc: {(word1, word2): c} symmetric in each slot -> {(label1, label2): c}."""
    by_left: dict = {}
    for (x, y), c in acc.items():
        if c:
            by_left.setdefault(x, {})[y] = c
    # first express each right part, then the left parts column by column
    right_coords: dict = {}
    for x, ys in by_left.items():
        for l2, c in G2.coordinates(ys).items():
            right_coords.setdefault(l2, {})[x] = c
    out = {}
    for l2, xs in right_coords.items():
        for l1, c in G1.coordinates(xs).items():
            out[(l1, l2)] = c
    return out


class TensorCoalgebra(GradedBialgebra):
    """C1 (x) C2 with the tensor coalgebra structure (no signs: even labels only)."""

    def __init__(self, C1: GradedBialgebra, C2: GradedBialgebra):
        self.C1, self.C2 = C1, C2
        self.ring = C1.ring

    def basis(self, w):
        return [(a, b) for u in range(w + 1) for a in self.C1.basis(u) for b in self.C2.basis(w - u)]

    def weight(self, label):
        return self.C1.weight(label[0]) + self.C2.weight(label[1])

    def counit(self, label):
        return self.C1.counit(label[0]) * self.C2.counit(label[1])

    def coproduct(self, label):
        out = {}
        for (a1, a2), c in self.C1.coproduct(label[0]).items():
            for (b1, b2), d in self.C2.coproduct(label[1]).items():
                k = ((a1, b1), (a2, b2))
                out[k] = out.get(k, 0) + c * d
        return out

    def product(self, a, b):
        out = {}
        for x, c in self.C1.product(a[0], b[0]).items():
            for y, d in self.C2.product(a[1], b[1]).items():
                out[(x, y)] = out.get((x, y), 0) + c * d
        return out

    def unit(self):
        return (self.C1.unit(), self.C2.unit())


def gamma_cofree(M: GradedFreeModule, n_max: int, max_weight: Optional[int] = None,
                 mu: Optional[Callable] = None) -> Gamma:
    return Gamma(M, max_weight if max_weight is not None else n_max * max([w for w in M.weights] + [1]),
                 n_max, mu)


def iterated_coproduct(C: GradedBialgebra, label, n: int) -> dict:
    """psi^n(label) as {(l_1, ..., l_n): c}; n = 0 gives {(): counit}."""
    if n == 0:
        e = C.counit(label)
        return {(): e} if e else {}
    cur = {(label,): 1}
    for _ in range(n - 1):
        nxt: dict = {}
        for word, c in cur.items():
            for (x, y), d in C.coproduct(word[-1]).items():
                k = word[:-1] + (x, y)
                nxt[k] = nxt.get(k, 0) + c * d
        cur = nxt
    return {k: v for k, v in cur.items() if v}


def cofree_lift(C: GradedBialgebra, G: Gamma, f: Callable, n_max: Optional[int] = None) -> Callable:
    """Coalgebra map C -> Gamma(M) lifting f: C -> M (f(label) -> {M-label: c}).

    The n-th component is (f (x) ... (x) f) o psi^n.
    """
    n_max = G.max_length if n_max is None else n_max
    ring = G.ring

    def lift(label) -> dict:
        total: dict = {}
        for n in range(0, n_max + 1):
            for word, c in iterated_coproduct(C, label, n).items():
                # expand f on each letter
                terms = {(): c}
                for x in word:
                    fx = f(x)
                    terms = {t + (y,): a * b for t, a in terms.items() for y, b in fx.items() if a * b}
                    if not terms:
                        break
                for t, a in terms.items():
                    total[t] = total.get(t, 0) + a
        total = {k: ring(v) for k, v in total.items() if ring(v)}
        if any(len(k) > G.max_length or G.word_weight(k) > G.max_weight for k in total):
            total = {k: v for k, v in total.items()
                     if len(k) <= G.max_length and G.word_weight(k) <= G.max_weight}
        return G.coordinates(total)
    return lift


def check_cocommutative(C: GradedBialgebra, weights: Iterable[int]) -> bool:
    for w in weights:
        for a in C.basis(w):
            cp = C.coproduct(a)
            sw = {(y, x): c for (x, y), c in cp.items()}
            if {k: v for k, v in cp.items() if v} != {k: v for k, v in sw.items() if v}:
                return False
    return True


def cofree_lift_checked(C: GradedBialgebra, G: Gamma, f: Callable, weights: Iterable[int]) -> Callable:
    if not check_cocommutative(C, weights):
        raise ValidationError("cofree_lift needs a cocommutative coalgebra")
    return cofree_lift(C, G, f)


def gamma_projection(G: Gamma, label) -> dict:
    """pi: Gamma(M) -> M."""
    if label[1] != 1:
        return {}
    return {w[0]: c for w, c in G.vector(label).items()}


# ---------------------------------------------------------------- formal bimodules

@dataclass
class FormalBimodule:
    """A level of a formal bimodule: free graded module plus actions of the generators of l."""
    module: GradedFreeModule
    actions: dict = field(default_factory=dict)  # name -> ModuleMap endomorphism
    name: str = ""

    @property
    def ring(self):
        return self.module.ring

    def check(self) -> bool:
        return all(f.source == self.module and f.target == self.module for f in self.actions.values())


def free_bimodule(ring: CoefficientRing, weights: Sequence[int], name: str = "b") -> FormalBimodule:
    basis: dict = {}
    for i, w in enumerate(weights):
        basis.setdefault(w, []).append(f"{name}{i}")
    return FormalBimodule(GradedFreeModule.make(ring, basis), {}, name)


def sym_free(B: FormalBimodule, n_max: int) -> SchemeStructure:
    """Reg(Cof B): the free graded-commutative algebra on a basis of B, generators primitive."""
    labels = B.module.all_labels()
    ring = B.ring

    def build(d):
        A = polynomial_algebra(ring, [(str(l), w) for w, l in labels], bound=min(d, n_max))
        k = ground_algebra(ring)
        T2 = tensor_product([A, A])
        coadd = AlgebraMap(A, T2, [T2.inject(0, g) + T2.inject(1, g) for g in A.gens()])
        cozero = AlgebraMap(A, k, [k.zero() for _ in A.gens()], graded=False)
        actions = {a: AlgebraMap(A, A, [g * a for g in A.gens()]) for a in (-1, 0, 1, 2)}
        for nm, f in B.actions.items():
            imgs = []
            for w, l in labels:
                img = A.zero()
                for l2, c in f.apply_label(w, l).items():
                    img = img + A.gen(str(l2)) * c
                imgs.append(img)
            actions[nm] = AlgebraMap(A, A, imgs)
        return LevelStructure(A, coadd, cozero, None, {}, actions, unital=False)
    return SchemeStructure(f"Sym({B.name})", ring, build, metadata={"kind": "cofree scheme"})


def sym_extend(S: SchemeStructure, d: int, images: Sequence[Polynomial]) -> AlgebraMap:
    """The algebra map Sym B -> R determined by a module map B -> R (images of the basis)."""
    A = S.level(d).algebra
    return AlgebraMap(A, images[0].algebra, list(images), graded=False)


def fr_free(B: FormalBimodule, depth: int) -> Gamma:
    """Reg(Fr B) for l = Z: the cofree coalgebra Gamma(B) with deconcatenation."""
    return Gamma(B.module, depth, depth)


# ---------------------------------------------------------------- adjunction identities

def _iso_report(rep: Report, axiom: str, M: list, ring: CoefficientRing, witness: dict):
    ok = linalg.is_invertible(M, ring)
    rep.add(axiom, ok, None if ok else witness)


def check_adjunction_for(B: FormalBimodule, depth: int) -> Report:
    """P(Fr B) = B and Q(Cof B) = B via the canonical maps, weight by weight."""
    ring = B.ring
    rep = Report(f"adjunctions for ranks {B.module.basis} over {ring}")
    G = fr_free(B, depth)
    P = primitives(G, depth, range(1, depth + 1))
    bad = None
    for w in range(1, depth + 1):
        labels = B.module.labels(w)
        piece = P.pieces.get(w)
        rank_p = piece.rank if piece else 0
        if rank_p != len(labels):
            bad = bad or {"weight": w, "rank P(Fr B)": rank_p, "rank B": len(labels)}
            continue
        if not labels:
            continue
        # canonical map B_w -> P_w: b -> the length-one word (b); express in the kernel basis
        amb = G.basis(w)
        idx = {l: i for i, l in enumerate(amb)}
        K = linalg.transpose(piece.vectors, len(amb))
        cols = []
        for l in labels:
            e = [0] * len(amb)
            for lab, c in G.coordinates({(l,): 1}).items():
                e[idx[lab]] = c
            x = linalg.solve(K, e, ring, piece.rank)
            if x is None:
                bad = bad or {"weight": w, "element": str(l), "reason": "not primitive"}
                break
            cols.append(x)
        else:
            M = linalg.transpose(cols, piece.rank)
            if not linalg.is_invertible(M, ring):
                bad = bad or {"weight": w, "reason": "canonical map not invertible"}
    rep.add("P(Fr B) = B", bad is None, bad)

    S = sym_free(B, depth)
    Q = indecomposables(S, depth, range(1, depth + 1))
    A = S.level(depth).algebra
    bad = None
    for w in range(1, depth + 1):
        labels = B.module.labels(w)
        piece = Q.pieces.get(w)
        rank_q = piece.rank if piece else 0
        if rank_q != len(labels) or (piece and not piece.cokernel.is_free(ring)):
            bad = bad or {"weight": w, "rank Q(Cof B)": rank_q, "rank B": len(labels)}
            continue
        if not labels:
            continue
        cols = [project_indecomposable(Q, w, A.coordinates(A.gen(str(l)), w)) for l in labels]
        M = linalg.transpose(cols, len(labels))
        if not linalg.is_invertible(M, ring):
            bad = bad or {"weight": w, "reason": "canonical map not invertible"}
    rep.add("Q(Cof B) = B", bad is None, bad)
    return rep


def random_bimodules(ring: CoefficientRing, max_rank: int, max_weight: int, rng) -> list:
    out = []
    for r in range(0, max_rank + 1):
        weights = sorted(rng.randint(1, max_weight) for _ in range(r))
        out.append(free_bimodule(ring, weights))
    return out


def check_adjunctions(depth: int, rings: Sequence[CoefficientRing] = (), max_rank: int = 3,
                      samples: Optional[Sequence] = None) -> Report:
    """Adjunction identities on a family of free bimodules (rank <= max_rank, weights <= depth)."""
    from .exact_algebra import QQ, ZZ
    rings = list(rings) or [ZZ, CoefficientRing.mod(3), QQ]
    rep = Report(f"adjunction identities through depth {depth}")
    if samples is None:
        samples = []
        for r in range(0, max_rank + 1):
            for ws in itertools.combinations_with_replacement(range(1, depth + 1), r):
                samples.append(list(ws))
    for ring in rings:
        for ws in samples:
            B = free_bimodule(ring, ws)
            sub = check_adjunction_for(B, depth)
            rep.extend(sub, prefix=f"{ring} {tuple(ws)}: ")
    return rep


def triangle_instances(count: int, rng, ring: Optional[CoefficientRing] = None) -> Report:
    """Random instances of the Gamma and Sym triangle identities."""
    from .exact_algebra import ZZ
    ring = ring or ZZ
    rep = Report("triangle identities")
    for t in range(count):
        kind = t % 2
        if kind == 0:
            # Gamma: pi o lift(f) = f, and lift is a coalgebra map
            d = rng.randint(2, 3)
            C = AlgebraView(_random_coalgebra_level(rng, ring, d))
            M = GradedFreeModule.make(ring, {w: [f"m{w}_{i}" for i in range(rng.randint(0, 2))]
                                             for w in range(1, d + 1)})
            G = Gamma(M, d, d)
            table = {}
            for w in range(0, d + 1):
                for a in C.basis(w):
                    table[a] = {l: rng.randint(-3, 3) for l in M.labels(w)} if w > 0 else {}
            f = lambda a: {l: c for l, c in table[a].items() if ring(c)}  # noqa: E731
            lift = cofree_lift(C, G, f)
            ok, wit = True, None
            for w in range(0, d + 1):
                for a in C.basis(w):
                    img = lift(a)
                    proj: dict = {}
                    for lab, c in img.items():
                        for m, e in gamma_projection(G, lab).items():
                            proj[m] = proj.get(m, 0) + c * e
                    proj = {k: ring(v) for k, v in proj.items() if ring(v)}
                    want = {k: ring(v) for k, v in f(a).items() if ring(v)}
                    if proj != want:
                        ok, wit = False, {"element": str(a), "pi(lift)": str(proj), "f": str(want)}
                        break
                    lhs = {}
                    for (x, y), c in C.coproduct(a).items():
                        for lx, cx in lift(x).items():
                            for ly, cy in lift(y).items():
                                lhs[(lx, ly)] = lhs.get((lx, ly), 0) + c * cx * cy
                    rhs = {}
                    for lab, c in img.items():
                        for pr, e in G.coproduct(lab).items():
                            rhs[pr] = rhs.get(pr, 0) + c * e
                    if {k: ring(v) for k, v in lhs.items() if ring(v)} != {k: ring(v) for k, v in rhs.items() if ring(v)}:
                        ok, wit = False, {"element": str(a), "reason": "lift is not a coalgebra map"}
                        break
                if not ok:
                    break
            rep.add(f"gamma triangle #{t}", ok, wit)
        else:
            # Sym: restricting the extension of g recovers g, extending a restriction recovers h
            weights = sorted(rng.randint(1, 3) for _ in range(rng.randint(1, 3)))
            B = free_bimodule(ring, weights)
            S = sym_free(B, 4)
            A = S.level(4).algebra
            R = polynomial_algebra(ring, [("y1", 1), ("y2", 2), ("y3", 3)], bound=6)
            imgs = []
            for w in weights:
                basis = R.basis(w)
                imgs.append(R.element({m: rng.randint(-3, 3) for m in basis}))
            h = sym_extend(S, 4, imgs)
            restricted = [h(g) for g in A.gens()]
            ok = restricted == imgs and sym_extend(S, 4, restricted) == h
            rep.add(f"sym triangle #{t}", ok, None if ok else {"images": [str(x) for x in imgs]})
    return rep


def _random_coalgebra_level(rng, ring, d) -> LevelStructure:
    from .plethory_examples import divided_powers, lambda_structure, identity_scheme
    choice = rng.randint(0, 2)
    if choice == 0:
        return divided_powers(d, ring).level(d)
    if choice == 1:
        S = lambda_structure(d, ring, with_comult=False)
        L = S.level(d)
        return L.replace(algebra=L.algebra)
    return identity_scheme(0, ring).level(d)


# ---------------------------------------------------------------- free tensor

def free_tensor(X: Sequence, Y: Sequence, depth: int, ring: Optional[CoefficientRing] = None) -> Report:
    """Fr(X) (x) Fr(Y) = Fr(X x Y) for finite sets X, Y (schemes Spf k^X, Spf k^Y).

    For each tensor length n <= depth the canonical map is the shuffle
    (A (x) B)^(x)n -> A^(x)n (x) B^(x)n restricted to symmetric tensors. Its image is
    compared with the separately computed diagonal invariants of A^(x)n (x) B^(x)n.
    """
    from .exact_algebra import ZZ
    ring = ring or ZZ
    rep = Report(f"free tensor |X|={len(X)} |Y|={len(Y)}")
    A = GradedFreeModule.make(ring, {0: [("x", x) for x in X]})
    B = GradedFreeModule.make(ring, {0: [("y", y) for y in Y]})
    AB = GradedFreeModule.make(ring, {0: [(a, b) for a in A.labels(0) for b in B.labels(0)]})
    G_ab = Gamma(AB, 0, depth)
    ok_rank = ok_iso = True
    wit = None
    for n in range(0, depth + 1):
        src = G_ab._component(n, 0)
        # diagonal invariants of A^n (x) B^n: words (a-word, b-word) fixed by simultaneous permutations
        pairs = [(s, t) for s in itertools.product(A.labels(0), repeat=n)
                 for t in itertools.product(B.labels(0), repeat=n)]
        idx = {p: i for i, p in enumerate(pairs)}
        rows = []
        for i in range(n - 1):
            for s, t in pairs:
                s2 = s[:i] + (s[i + 1], s[i]) + s[i + 2:]
                t2 = t[:i] + (t[i + 1], t[i]) + t[i + 2:]
                if (s2, t2) == (s, t):
                    continue
                row = [0] * len(pairs)
                row[idx[(s2, t2)]] += 1
                row[idx[(s, t)]] -= 1
                rows.append(row)
        inv = linalg.kernel(rows, ring, len(pairs)) if rows else linalg.identity(len(pairs))
        if len(inv) != len(src):
            ok_rank = False
            wit = wit or {"length": n, "rank Fr(XxY)": len(src), "rank Fr(X)(x)Fr(Y)": len(inv)}
            continue
        # canonical map in the two bases
        K = linalg.transpose(inv, len(pairs)) if inv else [[] for _ in pairs]
        cols = []
        for v in src:
            e = [0] * len(pairs)
            for word, c in v.items():
                s = tuple(p[0] for p in word)
                t = tuple(p[1] for p in word)
                e[idx[(s, t)]] += c
            x = linalg.solve(K, e, ring, len(inv))
            if x is None:
                ok_iso = False
                wit = wit or {"length": n, "reason": "image outside the diagonal invariants"}
                break
            cols.append(x)
        else:
            if cols and not linalg.is_invertible(linalg.transpose(cols, len(inv)), ring):
                ok_iso = False
                wit = wit or {"length": n, "reason": "canonical map not unimodular"}
    rep.add("level ranks agree", ok_rank, wit if not ok_rank else None)
    rep.add("canonical map is an isomorphism", ok_iso, wit if not ok_iso else None)
    return rep


def free_on_point(depth: int, ring: Optional[CoefficientRing] = None) -> Gamma:
    """Fr(Spf k) = Gamma(k) with the product lifted from k's multiplication."""
    from .exact_algebra import ZZ
    ring = ring or ZZ
    M = GradedFreeModule.make(ring, {0: ["pt"]})
    return Gamma(M, 0, depth, mu=lambda a, b: {"pt": 1})


def check_free_on_point(depth: int, ring: Optional[CoefficientRing] = None) -> Report:
    """Gamma(k) agrees with functions on N under convolution: gamma_m gamma_n = delta_mn gamma_n,
    psi(gamma_n) = sum gamma_i (x) gamma_(n-i)."""
    G = free_on_point(depth, ring)
    rep = Report(f"Fr(point) through length {depth}")
    gam = {n: ("G", n, 0, 0) for n in range(depth + 1)}
    bad = None
    for m in range(depth + 1):
        for n in range(depth + 1):
            got = {k: v for k, v in G.product(gam[m], gam[n]).items() if v}
            want = {gam[n]: 1} if m == n else {}
            if got != want:
                bad = bad or {"m": m, "n": n, "product": str(got)}
    rep.add("orthogonal idempotents", bad is None, bad)
    bad = None
    for n in range(depth + 1):
        got = G.coproduct(gam[n])
        want = {(gam[i], gam[n - i]): 1 for i in range(n + 1)}
        if got != want:
            bad = bad or {"n": n, "coproduct": str(got)}
    rep.add("convolution coproduct", bad is None, bad)
    return rep


# ---------------------------------------------------------------- points over finite rings

class FiniteRing:
    """A finite commutative ring (possibly without unit) given by elements and operation tables."""

    def __init__(self, name: str, elements: Sequence, add: Callable, mul: Callable, zero, one=None):
        self.name = name
        self.elements = list(elements)
        self.index = {x: i for i, x in enumerate(self.elements)}
        n = len(self.elements)
        self.add_t = [[self.index[add(a, b)] for b in self.elements] for a in self.elements]
        self.mul_t = [[self.index[mul(a, b)] for b in self.elements] for a in self.elements]
        self.zero = self.index[zero]
        self.one = None if one is None else self.index[one]
        self.size = n
        self.neg_t = [next(j for j in range(n) if self.add_t[i][j] == self.zero) for i in range(n)]

    def scale(self, c: int, x: int) -> int:
        """c * x by double-and-add."""
        c = int(c)
        if c < 0:
            c, x = -c, self.neg_t[x]
        out = self.zero
        while c:
            if c & 1:
                out = self.add_t[out][x]
            x = self.add_t[x][x]
            c >>= 1
        return out

    def from_int(self, c: int) -> int:
        if int(c) == 0:
            return self.zero
        if self.one is None:
            raise StructuralError(f"{self.name} has no unit")
        return self.scale(c, self.one)

    def __repr__(self):
        return self.name


def prime_field(p: int) -> FiniteRing:
    return FiniteRing(f"F_{p}", range(p), lambda a, b: (a + b) % p, lambda a, b: a * b % p, 0, 1)


def dual_numbers(p: int) -> FiniteRing:
    """F_p[u]/(u^2)."""
    els = [(a, b) for a in range(p) for b in range(p)]
    return FiniteRing(f"F_{p}[u]/(u^2)", els, lambda x, y: ((x[0] + y[0]) % p, (x[1] + y[1]) % p),
                      lambda x, y: (x[0] * y[0] % p, (x[0] * y[1] + x[1] * y[0]) % p), (0, 0), (1, 0))


def product_ring(R: FiniteRing, S: FiniteRing) -> FiniteRing:
    els = [(a, b) for a in range(R.size) for b in range(S.size)]
    return FiniteRing(f"{R.name}x{S.name}", els,
                      lambda x, y: (R.add_t[x[0]][y[0]], S.add_t[x[1]][y[1]]),
                      lambda x, y: (R.mul_t[x[0]][y[0]], S.mul_t[x[1]][y[1]]), (R.zero, S.zero),
                      None if R.one is None or S.one is None else (R.one, S.one))


def evaluate(p: Polynomial, point: Sequence[int], R: FiniteRing) -> int:
    """Value of p at a point (element indices of R per generator)."""
    total = R.zero
    for m, c in p.terms.items():
        if not any(m):
            total = R.add_t[total][R.from_int(int(c))]
            continue
        v = None
        for x, e in zip(point, m):
            for _ in range(e):
                v = x if v is None else R.mul_t[v][x]
        total = R.add_t[total][R.scale(int(c), v)]
    return total


def points(A: TruncatedAlgebra, R: FiniteRing, extra: Sequence[Polynomial] = ()) -> list:
    """Algebra maps A -> R: tuples satisfying the rules, the truncation and extra equations."""
    free = TruncatedAlgebra(A.ring, A.generators, None)
    eqs = [r for r in A.relations()]
    eqs += [free.monomial(m) for m in A.overflow_monomials()]
    eqs += list(extra)
    out = []
    for pt in itertools.product(range(R.size), repeat=A.ngens):
        if all(evaluate(e, pt, R) == R.zero for e in eqs):
            out.append(pt)
    return out


def split_point(T: TruncatedAlgebra, pt: Sequence[int]) -> list:
    out, k = [], 0
    for f in T.factor_list():
        out.append(tuple(pt[k:k + f.ngens]))
        k += f.ngens
    return out


def point_operation(f: AlgebraMap, R: FiniteRing) -> Callable:
    """A map f: A -> B (x) C (or -> k) read as an operation on points."""
    def op(*pts):
        flat = tuple(x for p in pts for x in p)
        return tuple(evaluate(img, flat, R) for img in f.images)
    return op


def point_ring(L: LevelStructure, R: FiniteRing) -> dict:
    """The ring of points of a level over R with add, mul, zero, one (one may be None)."""
    pts = points(L.algebra, R, L.ideal)
    add = point_operation(L.coadd, R)
    out = {"points": pts, "add": add,
           "zero": tuple(R.from_int(int(img.constant_term())) for img in L.cozero.images)}
    if L.comult is not None:
        out["mul"] = point_operation(L.comult, R)
    if L.unital and 1 in L.counits:
        out["one"] = tuple(R.from_int(int(img.constant_term())) for img in L.counits[1].images)
    return out


def finite_point_ring(L: LevelStructure, R: FiniteRing, name: str = "") -> FiniteRing:
    """The points of a level over R as a finite ring (non-unital when the level is)."""
    data = point_ring(L, R)
    if "mul" not in data:
        raise StructuralError("level has no comultiplication")
    return FiniteRing(name or f"pts({R.name})", data["points"], data["add"], data["mul"],
                      data["zero"], data.get("one"))

