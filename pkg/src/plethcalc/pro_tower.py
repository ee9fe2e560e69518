"""N-indexed towers standing in for pro-objects, with levelwise constructions.

A Tower has levels (truncated algebras or graded free modules) and transition
maps level(m) -> level(n) for n <= m. Ind-towers (duals) carry maps the other way.
A ProMorphism has a monotone reindexing and components source.level(r(n)) -> target.level(n).
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

from . import linalg
from .exact_algebra import (AlgebraMap, CoefficientRing, StructuralError, TruncatedAlgebra,
                            identity_map, kron, tensor_algebra)


class _Undecided:
    """Third outcome of pro_equal: the depth budget ran out before a decision."""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __bool__(self):
        raise TypeError("pro_equal was undecided; compare against UNDECIDED explicitly")

    def __repr__(self):
        return "UNDECIDED"


UNDECIDED = _Undecided()


class NotDualizable(ValueError):
    pass


# ---------------------------------------------------------------- graded free modules

@dataclass(frozen=True)
class GradedFreeModule:
    """Finitely generated free module with a labelled basis in each weight."""
    ring: CoefficientRing
    basis: tuple  # tuple of (weight, tuple of labels), weights increasing

    @staticmethod
    def make(ring: CoefficientRing, basis: Mapping) -> "GradedFreeModule":
        return GradedFreeModule(ring, tuple(sorted((w, tuple(ls)) for w, ls in basis.items() if ls)))

    @property
    def weights(self) -> list:
        return [w for w, _ in self.basis]

    def labels(self, w: int) -> tuple:
        for w2, ls in self.basis:
            if w2 == w:
                return ls
        return ()

    def rank(self, w: Optional[int] = None) -> int:
        if w is None:
            return sum(len(ls) for _, ls in self.basis)
        return len(self.labels(w))

    def all_labels(self) -> list:
        return [(w, l) for w, ls in self.basis for l in ls]

    def truncate(self, n: int) -> "GradedFreeModule":
        return GradedFreeModule(self.ring, tuple((w, ls) for w, ls in self.basis if w <= n))

    def to_json(self) -> dict:
        return {"ring": self.ring.to_json(), "basis": [[w, [_label_json(l) for l in ls]] for w, ls in self.basis]}

    @staticmethod
    def from_json(d: Mapping) -> "GradedFreeModule":
        return GradedFreeModule(CoefficientRing.from_json(d["ring"]),
                                tuple((w, tuple(_label_from_json(l) for l in ls)) for w, ls in d["basis"]))


def _label_json(l):
    if isinstance(l, tuple):
        return {"t": [_label_json(x) for x in l]}
    return l


def _label_from_json(l):
    if isinstance(l, dict):
        return tuple(_label_from_json(x) for x in l["t"])
    if isinstance(l, list):
        return tuple(_label_from_json(x) for x in l)
    return l


class ModuleMap:
    """Weight-preserving map of graded free modules; one matrix per source weight."""

    def __init__(self, source: GradedFreeModule, target: GradedFreeModule, matrices: Mapping):
        self.source = source
        self.target = target
        ring = source.ring
        self.matrices = {}
        for w in set(source.weights) | set(target.weights):
            M = matrices.get(w)
            r, c = target.rank(w), source.rank(w)
            if M is None:
                M = [[0] * c for _ in range(r)]
            if len(M) != r or any(len(row) != c for row in M):
                raise StructuralError(f"matrix shape mismatch in weight {w}")
            self.matrices[w] = [[ring(a) for a in row] for row in M]

    @staticmethod
    def from_function(source: GradedFreeModule, target: GradedFreeModule, fn: Callable) -> "ModuleMap":
        """fn(weight, label) -> dict {target label: coefficient} in the same weight."""
        mats = {}
        for w in source.weights:
            tl = {l: i for i, l in enumerate(target.labels(w))}
            M = [[0] * source.rank(w) for _ in range(target.rank(w))]
            for j, l in enumerate(source.labels(w)):
                for l2, c in fn(w, l).items():
                    if l2 not in tl:
                        raise StructuralError(f"label {l2!r} not in target weight {w}")
                    M[tl[l2]][j] += c
            mats[w] = M
        return ModuleMap(source, target, mats)

    @staticmethod
    def identity(M: GradedFreeModule) -> "ModuleMap":
        return ModuleMap(M, M, {w: linalg.identity(M.rank(w)) for w in M.weights})

    def compose(self, inner: "ModuleMap") -> "ModuleMap":
        if inner.target != self.source:
            raise StructuralError("module maps are not composable")
        def outer(w):
            return self.matrices.get(w) or linalg.zeros(self.target.rank(w), self.source.rank(w))
        mats = {w: linalg.matmul(outer(w), inner.matrices.get(w, []), inner.source.rank(w))
                if inner.source.rank(w) else [[] for _ in range(self.target.rank(w))]
                for w in set(inner.source.weights) | set(self.target.weights)}
        return ModuleMap(inner.source, self.target, mats)

    def __call__(self, w: int, vec: Sequence) -> list:
        return [self.source.ring(x) for x in linalg.matvec(self.matrices[w], vec)]

    def apply_label(self, w: int, label) -> dict:
        j = self.source.labels(w).index(label)
        col = [row[j] for row in self.matrices[w]]
        return {l: c for l, c in zip(self.target.labels(w), col) if c}

    def __eq__(self, other):
        return (isinstance(other, ModuleMap) and self.source == other.source and self.target == other.target
                and all(self.matrices[w] == other.matrices[w] for w in self.matrices))

    def __hash__(self):
        return hash((self.source, self.target))

    def first_difference(self, other: "ModuleMap"):
        for w in sorted(self.matrices):
            A, B = self.matrices[w], other.matrices[w]
            for i, (ra, rb) in enumerate(zip(A, B)):
                for j, (a, b) in enumerate(zip(ra, rb)):
                    if a != b:
                        return {"weight": w, "row": repr(self.target.labels(w)[i]),
                                "column": repr(self.source.labels(w)[j]), "left": str(a), "right": str(b)}
        return None

    def transpose(self) -> "ModuleMap":
        return ModuleMap(dual_level(self.target), dual_level(self.source),
                         {w: linalg.transpose(M, self.source.rank(w)) for w, M in self.matrices.items()})

    def to_json(self) -> dict:
        return {"source": self.source.to_json(), "target": self.target.to_json(),
                "matrices": [[w, [[str(a) for a in row] for row in M]] for w, M in sorted(self.matrices.items())]}


def dual_level(M: GradedFreeModule, negate: bool = False) -> GradedFreeModule:
    """Levelwise dual: same weights (or negated), labels wrapped as ("*", label)."""
    basis = {}
    for w, ls in M.basis:
        basis[-w if negate else w] = tuple(_dual_label(l) for l in ls)
    return GradedFreeModule.make(M.ring, basis)


def _dual_label(l):
    if isinstance(l, tuple) and len(l) == 2 and l[0] == "*":
        return ("**", l[1])
    if isinstance(l, tuple) and len(l) == 2 and l[0] == "**":
        return ("*", l[1])
    return ("*", l)


def check_free(M: list, ring: CoefficientRing, rows: int) -> None:
    """Raise NotDualizable if coker(M) has torsion."""
    cok = linalg.cokernel(M, ring, rows)
    if not cok.is_free(ring):
        raise NotDualizable(f"not dualizable levelwise: torsion orders {cok.orders}")


# ---------------------------------------------------------------- towers

class Tower:
    """Lazily evaluated N-indexed tower.

    direction "pro": transition(n, m) : level(m) -> level(n) for n <= m.
    direction "ind": transition(n, m) : level(n) -> level(m) for n <= m.
    """

    def __init__(self, level_fn: Callable[[int], object], step_fn: Callable[[int], object],
                 kind: str = "explicit", direction: str = "pro", surjective: bool = False, name: str = ""):
        self._level_fn = level_fn
        self._step_fn = step_fn
        self.kind = kind
        self.direction = direction
        self.surjective = surjective
        self.name = name
        self._levels: dict = {}
        self._steps: dict = {}
        self._lock = threading.RLock()

    def level(self, n: int):
        if n < 0:
            raise StructuralError("levels are indexed by N")
        with self._lock:
            if n not in self._levels:
                self._levels[n] = self._level_fn(n)
            return self._levels[n]

    def step(self, n: int):
        """The transition between level n+1 and level n."""
        with self._lock:
            if n not in self._steps:
                self._steps[n] = self._step_fn(n)
            return self._steps[n]

    def transition(self, n: int, m: int):
        if n > m:
            raise StructuralError("transition needs n <= m")
        if n == m:
            return _identity(self.level(n))
        out = None
        if self.direction == "pro":
            for k in range(n, m):
                out = self.step(k) if out is None else out.compose(self.step(k))
        else:
            for k in range(n, m):
                out = self.step(k) if out is None else self.step(k).compose(out)
        return out

    def to_json(self, depth: int) -> dict:
        return {"kind": self.kind, "direction": self.direction,
                "levels": [self.level(n).to_json() for n in range(depth + 1)],
                "transitions": [self.step(n).to_json() for n in range(depth)]}


def _identity(obj):
    if isinstance(obj, TruncatedAlgebra):
        return identity_map(obj)
    return ModuleMap.identity(obj)


def _drop_map(src: TruncatedAlgebra, tgt: TruncatedAlgebra) -> AlgebraMap:
    return AlgebraMap(src, tgt, tgt.gens())


def truncation_tower(base: TruncatedAlgebra, name: str = "") -> Tower:
    """level(n) = base truncated at weight n; transitions drop weight > n."""
    return Tower(lambda n: base.with_bound(n), None, kind="truncation", surjective=True, name=name) \
        ._with_step(lambda t, n: _drop_map(t.level(n + 1), t.level(n)))


def module_truncation_tower(M_fn: Callable[[int], GradedFreeModule], name: str = "") -> Tower:
    """Graded free module M with level(n) = weights <= n; M_fn(n) returns that truncation."""
    def step(t, n):
        src, tgt = t.level(n + 1), t.level(n)
        return ModuleMap.from_function(src, tgt, lambda w, l: {l: 1} if w <= n else {})
    return Tower(M_fn, None, kind="truncation", surjective=True, name=name)._with_step(step)


def constant_tower(obj, name: str = "") -> Tower:
    return Tower(lambda n: obj, lambda n: _identity(obj), kind="constant", surjective=True, name=name)


def explicit_tower(levels: Sequence, steps: Sequence, name: str = "") -> Tower:
    """levels[0..L] and steps[n]: level(n+1) -> level(n); constant beyond the last level."""
    last = len(levels) - 1

    def lvl(n):
        return levels[min(n, last)]

    def stp(n):
        return steps[n] if n < last else _identity(levels[last])
    return Tower(lvl, stp, kind="explicit", name=name)


def _with_step(self: Tower, fn):
    self._step_fn = lambda n: fn(self, n)
    return self


Tower._with_step = _with_step


# ---------------------------------------------------------------- pro-morphisms

class ProMorphism:
    def __init__(self, source: Tower, target: Tower, reindex: Callable[[int], int],
                 component: Callable[[int], object], name: str = ""):
        self.source = source
        self.target = target
        self.reindex = reindex
        self._component = component
        self.name = name
        self._cache: dict = {}
        self._lock = threading.RLock()

    def component(self, n: int):
        with self._lock:
            if n not in self._cache:
                self._cache[n] = self._component(n)
            return self._cache[n]

    def at(self, n: int, m: int):
        """Component at target level n, precomposed with the source transition from level m."""
        r = self.reindex(n)
        if m < r:
            raise StructuralError("level below the reindexing")
        return self.component(n).compose(self.source.transition(r, m))

    def restrict(self, shift: int) -> "ProMorphism":
        """Same morphism, reindexed n -> reindex(n) + shift."""
        return ProMorphism(self.source, self.target, lambda n: self.reindex(n) + shift,
                           lambda n: self.at(n, self.reindex(n) + shift))

    def compose(self, inner: "ProMorphism") -> "ProMorphism":
        """self after inner."""
        def comp(n):
            r = self.reindex(n)
            return self.component(n).compose(inner.component(r))
        return ProMorphism(inner.source, self.target, lambda n: inner.reindex(self.reindex(n)), comp)

    def to_json(self, depth: int) -> dict:
        return {"reindex": [[n, self.reindex(n)] for n in range(depth + 1)],
                "components": [self.component(n).to_json() for n in range(depth + 1)]}


def identity_pro(T: Tower) -> ProMorphism:
    return ProMorphism(T, T, lambda n: n, lambda n: _identity(T.level(n)))


def pro_equal(f: ProMorphism, g: ProMorphism, depth: int, slack: int = 0):
    """True, False or UNDECIDED: agreement in the colimit at every target level n <= depth.

    For each n we look for m in [max(r_f(n), r_g(n)), that + slack] where both components
    agree after precomposing with source transitions. Surjective source transitions make
    the first comparison decisive.
    """
    if f.source is not g.source or f.target is not g.target:
        raise StructuralError("pro_equal needs the same source and target towers")
    for n in range(depth + 1):
        m0 = max(f.reindex(n), g.reindex(n))
        if f.source.surjective:
            if f.at(n, m0) != g.at(n, m0):
                return False
            continue
        if not any(f.at(n, m) == g.at(n, m) for m in range(m0, m0 + slack + 1)):
            return UNDECIDED
    return True


def first_disagreement(f: ProMorphism, g: ProMorphism, depth: int):
    for n in range(depth + 1):
        m0 = max(f.reindex(n), g.reindex(n))
        a, b = f.at(n, m0), g.at(n, m0)
        if a != b:
            return n, a, b
    return None


# ---------------------------------------------------------------- levelwise constructions

def tower_tensor(S: Tower, T: Tower) -> Tower:
    """Diagonal levelwise tensor: level(n) = S.level(n) (x) T.level(n)."""
    def lvl(n):
        a, b = S.level(n), T.level(n)
        if isinstance(a, TruncatedAlgebra):
            return tensor_algebra(a, b)
        return module_tensor(a, b)

    def stp(n):
        f, g = S.step(n), T.step(n)
        if isinstance(f, AlgebraMap):
            src, tgt = lvl(n + 1), lvl(n)
            k = kron([f, g], target_bound=tgt.bound, source_bound=src.bound)
            return AlgebraMap(src, tgt, k.images)
        return module_map_tensor(f, g)
    out = Tower(lvl, stp, kind="tensor", surjective=S.surjective and T.surjective)
    return out


def module_tensor(A: GradedFreeModule, B: GradedFreeModule) -> GradedFreeModule:
    """Labels (a, b) with weight |a| + |b|, ordered by (weight of a, label order)."""
    basis: dict = {}
    for wa, la in A.basis:
        for wb, lb in B.basis:
            basis.setdefault(wa + wb, []).extend((x, y) for x in la for y in lb)
    return GradedFreeModule.make(A.ring, basis)


def module_map_tensor(f: ModuleMap, g: ModuleMap) -> ModuleMap:
    src, tgt = module_tensor(f.source, g.source), module_tensor(f.target, g.target)
    wa = {l: w for w, l in f.source.all_labels()}
    wb = {l: w for w, l in g.source.all_labels()}

    def fn(w, lab):
        a, b = lab
        out = {}
        for x, c in f.apply_label(wa[a], a).items():
            for y, d in g.apply_label(wb[b], b).items():
                out[(x, y)] = out.get((x, y), 0) + c * d
        return out
    return ModuleMap.from_function(src, tgt, fn)


def tower_dual(T: Tower, negate: bool = False) -> Tower:
    """Levelwise duals of a tower of free modules; pro becomes ind and vice versa."""
    direction = "ind" if T.direction == "pro" else "pro"
    return Tower(lambda n: dual_level(T.level(n), negate), lambda n: T.step(n).transpose(),
                 kind="dual", direction=direction, surjective=direction == "pro")


def double_dual_iso(T: Tower) -> ProMorphism:
    """Canonical evaluation isomorphism T -> T** on free levels."""
    DD = tower_dual(tower_dual(T))

    def comp(n):
        src, tgt = T.level(n), DD.level(n)
        return ModuleMap.from_function(src, tgt, lambda w, l: {_dual_label(_dual_label(l)): 1})
    return ProMorphism(T, DD, lambda n: n, comp)
