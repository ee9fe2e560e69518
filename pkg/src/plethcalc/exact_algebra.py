"""Sparse graded-commutative polynomial algebras with weight truncation.

A TruncatedAlgebra is a free graded-commutative algebra on weighted generators,
optionally cut down by rewrite rules (lead monomial -> tail) and a weight bound.
Polynomials are dicts {exponent tuple: coefficient}. Odd generators anticommute.
Tensor products are flattened: their generators are the tagged union of the factors'.
"""
from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import comb
from typing import Iterable, Mapping, Optional, Sequence

from . import linalg
from .linalg import Cokernel, smith_form  # noqa: F401  (re-exported)


class StructuralError(ValueError):
    """Objects that do not fit together (different algebras, rings, shapes)."""


class ValidationError(ValueError):
    """A map or structure violates a declared constraint (weight, parity)."""


# ---------------------------------------------------------------- coefficients

@dataclass(frozen=True)
class CoefficientRing:
    kind: str  # "ZZ", "QQ" or "ZZ/m"
    modulus: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("ZZ", "QQ", "ZZ/m"):
            raise StructuralError(f"unknown coefficient ring {self.kind!r}")
        if self.kind == "ZZ/m" and (self.modulus is None or self.modulus < 1):
            raise StructuralError("IntegersMod needs a positive modulus")

    @staticmethod
    def integers() -> "CoefficientRing":
        return CoefficientRing("ZZ")

    @staticmethod
    def rationals() -> "CoefficientRing":
        return CoefficientRing("QQ")

    @staticmethod
    def mod(m: int) -> "CoefficientRing":
        return CoefficientRing("ZZ/m", m)

    @staticmethod
    def parse(text: str) -> "CoefficientRing":
        t = text.strip().upper().replace("Z/", "ZZ/").replace("ZZZ", "ZZ")
        if t in ("ZZ", "Z"):
            return CoefficientRing.integers()
        if t in ("QQ", "Q"):
            return CoefficientRing.rationals()
        m = re.fullmatch(r"(?:ZZ/|F|GF\()(\d+)\)?", t)
        if m:
            return CoefficientRing.mod(int(m.group(1)))
        raise StructuralError(f"cannot parse coefficient ring {text!r}")

    @property
    def is_field(self) -> bool:
        if self.kind == "QQ":
            return True
        if self.kind == "ZZ":
            return False
        m = self.modulus
        return m > 1 and all(m % d for d in range(2, int(m ** 0.5) + 1))

    @property
    def characteristic(self) -> int:
        return self.modulus if self.kind == "ZZ/m" else 0

    def __call__(self, x):
        if self.kind == "ZZ":
            if isinstance(x, Fraction):
                if x.denominator != 1:
                    raise ValidationError(f"{x} is not an integer")
                return int(x)
            return int(x)
        if self.kind == "QQ":
            x = Fraction(x)
            return int(x) if x.denominator == 1 else x
        m = self.modulus
        if isinstance(x, Fraction):
            return x.numerator * pow(x.denominator, -1, m) % m
        return int(x) % m

    def inverse(self, x):
        x = self(x)
        if self.kind == "QQ":
            return self(1 / Fraction(x))
        if self.kind == "ZZ":
            if x in (1, -1):
                return x
            raise ValidationError(f"{x} is not a unit in ZZ")
        return pow(x, -1, self.modulus)

    def __str__(self) -> str:
        return f"ZZ/{self.modulus}" if self.kind == "ZZ/m" else self.kind

    def to_json(self) -> dict:
        return {"kind": self.kind, "modulus": self.modulus} if self.kind == "ZZ/m" else {"kind": self.kind}

    @staticmethod
    def from_json(d: Mapping) -> "CoefficientRing":
        return CoefficientRing(d["kind"], d.get("modulus"))


ZZ = CoefficientRing.integers()
QQ = CoefficientRing.rationals()


def coef_to_json(c):
    return str(c) if isinstance(c, Fraction) else c


def coef_from_json(c):
    return Fraction(c) if isinstance(c, str) else c


# ---------------------------------------------------------------- generators and rules

@dataclass(frozen=True)
class Generator:
    name: str
    weight: int
    odd: bool = False

    def __post_init__(self):
        if self.weight < 0:
            raise ValidationError("generator weights are non-negative")

    def to_json(self) -> dict:
        return {"name": self.name, "weight": self.weight, "parity": "odd" if self.odd else "even"}

    @staticmethod
    def from_json(d: Mapping) -> "Generator":
        return Generator(d["name"], d["weight"], d.get("parity", "even") == "odd")


@dataclass(frozen=True)
class Rule:
    """Rewrite lead -> tail, where tail is a tuple of (monomial, coefficient)."""
    lead: tuple
    tail: tuple = ()

    def to_json(self) -> dict:
        return {"lead": list(self.lead), "tail": [[list(m), coef_to_json(c)] for m, c in self.tail]}

    @staticmethod
    def from_json(d: Mapping) -> "Rule":
        return Rule(tuple(d["lead"]), tuple((tuple(m), coef_from_json(c)) for m, c in d["tail"]))


def monomial_key(weights: Sequence[int], m: Sequence[int]):
    """Sort key: weight, then total degree, then reverse lexicographic."""
    return (sum(w * e for w, e in zip(weights, m)), sum(m), tuple(-e for e in reversed(m)))


# ---------------------------------------------------------------- algebra

class TruncatedAlgebra:
    """Graded-commutative algebra on generators, modulo rewrite rules and a weight bound."""

    def __init__(self, ring: CoefficientRing, generators: Sequence[Generator],
                 bound: Optional[int] = None, rules: Sequence[Rule] = (),
                 factors: Sequence["TruncatedAlgebra"] = ()):
        self.ring = ring
        self.generators = tuple(generators)
        self.bound = bound
        self.rules = tuple(rules)
        self.factors = tuple(factors)
        names = [g.name for g in self.generators]
        if len(set(names)) != len(names):
            raise StructuralError("generator names must be distinct")
        self.weights = tuple(g.weight for g in self.generators)
        self.odd = tuple(g.odd for g in self.generators)
        self.index = {g.name: i for i, g in enumerate(self.generators)}
        for r in self.rules:
            if len(r.lead) != len(self.generators):
                raise StructuralError("rule length does not match generator count")
            if any(self.odd[i] and (r.lead[i] or any(m[i] for m, _ in r.tail)) for i in range(len(self.odd))):
                raise StructuralError("rewrite rules may only involve even generators")
        self._key = (ring, self.generators, bound, self.rules, tuple(f._key for f in self.factors))
        self._hash = hash(self._key)
        self._lock = threading.Lock()
        self._nf_cache: dict = {}
        self._basis_cache: dict = {}

    # identity
    def __eq__(self, other):
        return isinstance(other, TruncatedAlgebra) and (self is other or self._key == other._key)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        b = "inf" if self.bound is None else self.bound
        return f"TruncatedAlgebra({self.ring}, [{', '.join(g.name for g in self.generators)}], bound={b})"

    @property
    def ngens(self) -> int:
        return len(self.generators)

    # monomials
    def weight_of(self, m: Sequence[int]) -> int:
        return sum(w * e for w, e in zip(self.weights, m))

    def _within_bound(self, m) -> bool:
        return self.bound is None or self.weight_of(m) <= self.bound

    def mul_monomials(self, a: tuple, b: tuple):
        """(sign, a*b) before rewriting, or None when the product vanishes."""
        sign = 1
        if any(self.odd):
            odd_a = 0
            for i in range(len(a) - 1, -1, -1):
                if self.odd[i]:
                    if a[i] and b[i]:
                        return None
                    if b[i] and odd_a % 2:
                        sign = -sign
                    odd_a += a[i]
        m = tuple(x + y for x, y in zip(a, b))
        if not self._within_bound(m):
            return None
        return sign, m

    def normal_form(self, m: tuple) -> dict:
        """Rewrite a single monomial to a combination of normal monomials."""
        if not self.rules:
            return {m: 1} if self._within_bound(m) else {}
        cached = self._nf_cache.get(m)
        if cached is not None:
            return cached
        out: dict = {}
        rule = next((r for r in self.rules if all(x >= y for x, y in zip(m, r.lead))), None)
        if rule is None:
            if self._within_bound(m):
                out[m] = 1
        else:
            q = tuple(x - y for x, y in zip(m, rule.lead))
            for t, c in rule.tail:
                prod = self.mul_monomials(q, t)
                if prod is None:
                    continue
                s, mt = prod
                for m2, c2 in self.normal_form(mt).items():
                    out[m2] = out.get(m2, 0) + s * c * c2
            out = {k: v for k, v in ((k, self.ring(v)) for k, v in out.items()) if v}
        self._nf_cache[m] = out
        return out

    def is_normal(self, m: Sequence[int]) -> bool:
        if any(o and e > 1 for o, e in zip(self.odd, m)):
            return False
        if not self._within_bound(m):
            return False
        return not any(all(x >= y for x, y in zip(m, r.lead)) for r in self.rules)

    def _exponent_cap(self, i: int) -> int:
        if self.odd[i]:
            return 1
        caps = [r.lead[i] - 1 for r in self.rules
                if r.lead[i] and all(e == 0 for j, e in enumerate(r.lead) if j != i)]
        if not caps:
            raise StructuralError(f"weight-0 generator {self.generators[i].name} has unbounded powers")
        return min(caps)

    def basis(self, w: int) -> tuple:
        """Normal monomials of weight exactly w, largest first."""
        cached = self._basis_cache.get(w)
        if cached is not None:
            return cached
        if self.bound is not None and w > self.bound:
            out: list = []
        else:
            n = self.ngens
            caps = [self._exponent_cap(i) if self.weights[i] == 0 else
                    (1 if self.odd[i] else w // self.weights[i]) for i in range(n)]
            out = []

            def rec(i, left, cur):
                if i == n:
                    if left == 0:
                        m = tuple(cur)
                        if self.is_normal(m):
                            out.append(m)
                    return
                wi = self.weights[i]
                top = caps[i] if wi == 0 else min(caps[i], left // wi)
                for e in range(top + 1):
                    cur.append(e)
                    rec(i + 1, left - e * wi, cur)
                    cur.pop()

            rec(0, w, [])
            out.sort(key=lambda m: monomial_key(self.weights, m), reverse=True)
        out = tuple(out)
        self._basis_cache[w] = out
        return out

    def max_weight(self, default: int) -> int:
        return default if self.bound is None else min(self.bound, default)

    # elements
    def zero(self) -> "Polynomial":
        return Polynomial(self, {})

    def one(self) -> "Polynomial":
        return self.monomial((0,) * self.ngens)

    def scalar(self, c) -> "Polynomial":
        return self.monomial((0,) * self.ngens, c)

    def monomial(self, m: Sequence[int], c=1) -> "Polynomial":
        m = tuple(m)
        if len(m) != self.ngens:
            raise StructuralError("exponent vector has wrong length")
        if any(o and e > 1 for o, e in zip(self.odd, m)):
            return self.zero()
        return Polynomial.from_terms(self, {m2: c * c2 for m2, c2 in self.normal_form(m).items()})

    def gen(self, which) -> "Polynomial":
        i = self.index[which] if isinstance(which, str) else which
        m = [0] * self.ngens
        m[i] = 1
        return self.monomial(m)

    def gens(self) -> list:
        return [self.gen(i) for i in range(self.ngens)]

    def element(self, terms: Mapping) -> "Polynomial":
        out = self.zero()
        for m, c in terms.items():
            out = out + self.monomial(m, c)
        return out

    def coordinates(self, p: "Polynomial", w: int) -> list:
        basis = self.basis(w)
        return [p.terms.get(m, 0) for m in basis]

    def from_coordinates(self, v: Sequence, w: int) -> "Polynomial":
        return Polynomial.from_terms(self, {m: c for m, c in zip(self.basis(w), v)})

    # tensor structure
    def factor_list(self) -> tuple:
        return self.factors if self.factors else (self,)

    def factor_offsets(self) -> list:
        offs, k = [], 0
        for f in self.factor_list():
            offs.append(k)
            k += f.ngens
        return offs

    def embed(self, p: "Polynomial", offset: int) -> "Polynomial":
        """Pad p's monomials into this algebra starting at generator slot offset."""
        right = self.ngens - offset - p.algebra.ngens
        if right < 0:
            raise StructuralError("embedding does not fit")
        out: dict = {}
        for m, c in p.terms.items():
            m2 = (0,) * offset + m + (0,) * right
            for m3, c3 in self.normal_form(m2).items():
                out[m3] = out.get(m3, 0) + c * c3
        return Polynomial.from_terms(self, out)

    def inject(self, i: int, p: "Polynomial") -> "Polynomial":
        return self.embed(p, self.factor_offsets()[i])

    def pure(self, parts: Sequence["Polynomial"]) -> "Polynomial":
        """a_0 (x) a_1 (x) ... as an element of this flat tensor algebra."""
        offs = self.factor_offsets()
        out = self.one()
        for k, p in enumerate(parts):
            out = out * self.embed(p, offs[k])
        return out

    def split_monomial(self, m: tuple) -> list:
        out, k = [], 0
        for f in self.factor_list():
            out.append(m[k:k + f.ngens])
            k += f.ngens
        return out

    def rescaled(self, factor: int, rename=None) -> "TruncatedAlgebra":
        gens = [Generator(rename(g.name) if rename else g.name, g.weight * factor, g.odd) for g in self.generators]
        bound = None if self.bound is None else self.bound * factor
        return TruncatedAlgebra(self.ring, gens, bound, self.rules)

    def with_bound(self, bound: Optional[int]) -> "TruncatedAlgebra":
        factors = [f.with_bound(bound) if f.bound is not None and bound is not None and f.bound > bound else f
                   for f in self.factors]
        return TruncatedAlgebra(self.ring, self.generators, bound, self.rules, factors)

    def overflow_monomials(self) -> list:
        """Minimal monomials above the bound (they generate the truncation ideal)."""
        if self.bound is None:
            return []
        out = []
        pos = [i for i in range(self.ngens) if self.weights[i] > 0]

        def rec(k, cur, wt):
            if k == len(pos):
                if wt > self.bound:
                    m = [0] * self.ngens
                    for i, e in zip(pos, cur):
                        m[i] = e
                    if all(wt - self.weights[i] <= self.bound for i, e in zip(pos, cur) if e):
                        out.append(tuple(m))
                return
            i = pos[k]
            top = 1 if self.odd[i] else (self.bound // self.weights[i]) + 1
            for e in range(top + 1):
                if wt + e * self.weights[i] > self.bound + self.weights[i]:
                    break
                cur.append(e)
                rec(k + 1, cur, wt + e * self.weights[i])
                cur.pop()

        rec(0, [], 0)
        return out

    # serialization
    def to_json(self) -> dict:
        return {"ring": self.ring.to_json(), "generators": [g.to_json() for g in self.generators],
                "bound": self.bound, "relations": [r.to_json() for r in self.rules],
                "factors": [f.to_json() for f in self.factors]}

    @staticmethod
    def from_json(d: Mapping) -> "TruncatedAlgebra":
        return TruncatedAlgebra(CoefficientRing.from_json(d["ring"]),
                                [Generator.from_json(g) for g in d["generators"]], d.get("bound"),
                                [Rule.from_json(r) for r in d.get("relations", [])],
                                [TruncatedAlgebra.from_json(f) for f in d.get("factors", [])])

    def relations(self) -> list:
        """The stored relations lead - tail as polynomials of the free algebra."""
        free = TruncatedAlgebra(self.ring, self.generators, None)
        out = []
        for r in self.rules:
            p = free.monomial(r.lead)
            for m, c in r.tail:
                p = p - free.monomial(m, c)
            out.append(p)
        return out


def polynomial_algebra(ring: CoefficientRing, names_weights: Iterable, bound: Optional[int] = None,
                       odd: Iterable[str] = ()) -> TruncatedAlgebra:
    odd = set(odd)
    gens = [Generator(n, w, n in odd) for n, w in names_weights]
    return TruncatedAlgebra(ring, gens, bound)


def _min_bound(bounds) -> Optional[int]:
    bs = [b for b in bounds if b is not None]
    return min(bs) if bs else None


_DEFAULT = object()


def tensor_product(algebras: Sequence[TruncatedAlgebra], bound=_DEFAULT) -> TruncatedAlgebra:
    """Flattened tensor product; bound defaults to the minimum of the factor bounds."""
    if not algebras:
        raise StructuralError("empty tensor product")
    ring = algebras[0].ring
    if any(a.ring != ring for a in algebras):
        raise StructuralError("coefficient ring mismatch")
    flat = [f for a in algebras for f in a.factor_list()]
    if bound is _DEFAULT:
        bound = _min_bound(a.bound for a in algebras)
    gens, rules, offset = [], [], 0
    n = sum(f.ngens for f in flat)
    for i, f in enumerate(flat):
        for g in f.generators:
            gens.append(Generator(f"{g.name}[{i}]", g.weight, g.odd))
        for r in f.rules:
            pad = lambda m: (0,) * offset + tuple(m) + (0,) * (n - offset - f.ngens)  # noqa: E731
            rules.append(Rule(pad(r.lead), tuple((pad(m), c) for m, c in r.tail)))
        offset += f.ngens
    return TruncatedAlgebra(ring, gens, bound, rules, flat)


def tensor_algebra(A: TruncatedAlgebra, B: TruncatedAlgebra, bound=_DEFAULT) -> TruncatedAlgebra:
    return tensor_product([A, B], bound)


def base_name(name: str) -> str:
    return name.split("[", 1)[0]


# ---------------------------------------------------------------- polynomials

class Polynomial:
    __slots__ = ("algebra", "terms", "_hash")

    def __init__(self, algebra: TruncatedAlgebra, terms: Mapping):
        self.algebra = algebra
        self.terms = dict(terms)
        self._hash = None

    @staticmethod
    def from_terms(algebra: TruncatedAlgebra, terms: Mapping) -> "Polynomial":
        ring = algebra.ring
        return Polynomial(algebra, {m: v for m, v in ((m, ring(c)) for m, c in terms.items()) if v})

    def _check(self, other: "Polynomial"):
        if other.algebra is not self.algebra and other.algebra != self.algebra:
            raise StructuralError("polynomials belong to different algebras")

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        return self.algebra.scalar(other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Polynomial.from_terms(self.algebra, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial.from_terms(self.algebra, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial.from_terms(self.algebra, {m: c * other for m, c in self.terms.items()})
        self._check(other)
        A = self.algebra
        out: dict = {}
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                prod = A.mul_monomials(a, b)
                if prod is None:
                    continue
                s, m = prod
                if A.rules:
                    for m2, c2 in A.normal_form(m).items():
                        out[m2] = out.get(m2, 0) + s * ca * cb * c2
                else:
                    out[m] = out.get(m, 0) + s * ca * cb
        return Polynomial.from_terms(A, out)

    def __rmul__(self, other):
        return self * other

    def __pow__(self, n: int):
        out = self.algebra.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.algebra == other.algebra and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == self.algebra.scalar(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.algebra, frozenset(self.terms.items())))
        return self._hash

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def coefficient(self, m: Sequence[int]):
        return self.terms.get(tuple(m), 0)

    def weights(self) -> set:
        return {self.algebra.weight_of(m) for m in self.terms}

    def weight_part(self, w: int) -> "Polynomial":
        A = self.algebra
        return Polynomial(A, {m: c for m, c in self.terms.items() if A.weight_of(m) == w})

    def is_homogeneous(self) -> bool:
        return len(self.weights()) <= 1

    def parity(self) -> Optional[int]:
        ps = {sum(e for e, o in zip(m, self.algebra.odd) if o) % 2 for m in self.terms}
        return ps.pop() if len(ps) == 1 else (0 if not ps else None)

    def constant_term(self):
        return self.terms.get((0,) * self.algebra.ngens, 0)

    def sorted_terms(self) -> list:
        w = self.algebra.weights
        return sorted(self.terms.items(), key=lambda t: monomial_key(w, t[0]), reverse=True)

    def __repr__(self):
        return format_polynomial(self)

    __str__ = __repr__

    def to_json(self) -> dict:
        return {"terms": [[list(m), coef_to_json(c)] for m, c in self.sorted_terms()]}

    @staticmethod
    def from_json(algebra: TruncatedAlgebra, d: Mapping) -> "Polynomial":
        return algebra.element({tuple(m): coef_from_json(c) for m, c in d["terms"]})


# ---------------------------------------------------------------- printing and parsing

def _format_monomial(names: Sequence[str], m: Sequence[int], style: str) -> str:
    parts = []
    for name, e in zip(names, m):
        if not e:
            continue
        if style == "latex":
            nm = re.sub(r"^([A-Za-z]+)(\d+)$", lambda g: g.group(1) + "_" + (g.group(2) if len(g.group(2)) == 1 else "{" + g.group(2) + "}"), name)
            parts.append(nm if e == 1 else f"{nm}^{e}" if e < 10 else f"{nm}^{{{e}}}")
        else:
            parts.append(name if e == 1 else f"{name}^{e}")
    if not parts:
        return "1"
    return (" " if style == "latex" else "*").join(parts)


def format_polynomial(p: Polynomial, style: str = "text") -> str:
    """Canonical rendering; style "text" (c1^2*c2 ⊗ c3) or "latex" (c_1^2 c_2 \\otimes c_3)."""
    A = p.algebra
    if not p.terms:
        return "0"
    tensor_sep = " \\otimes " if style == "latex" else " ⊗ "
    pieces = []
    for m, c in p.sorted_terms():
        chunks = []
        for f, sub in zip(A.factor_list(), A.split_monomial(m)):
            names = [base_name(g.name) for g in f.generators]
            chunks.append(_format_monomial(names, sub, style))
        mono = tensor_sep.join(chunks)
        neg = (c < 0) if not isinstance(c, Fraction) else c < 0
        mag = -c if neg else c
        if mono == "1" and A.ngens == 0 or all(ch == "1" for ch in chunks):
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag} {mono}" if style == "latex" else f"{mag}*{mono}"
        pieces.append((neg, body))
    out = ("-" if pieces[0][0] else "") + pieces[0][1]
    for neg, body in pieces[1:]:
        out += (" - " if neg else " + ") + body
    return out


_TOKEN = re.compile(r"\s*(\\otimes|⊗|\d+/\d+|\d+|[A-Za-z]+(?:_\{\d+\}|_?\d+)?|\^\{\d+\}|\^\d+|[+\-*()])")


def parse_polynomial(A: TruncatedAlgebra, text: str) -> Polynomial:
    """Parse text or LaTeX-style input: "c1^2*c2 - 2*c3", "c_1^2 \\otimes c_2"."""
    toks = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValidationError(f"cannot parse polynomial near {text[pos:]!r}")
        toks.append(m.group(1))
        pos = m.end()
    factors = A.factor_list()
    offs = A.factor_offsets()
    lookup = []
    for f in factors:
        lookup.append({base_name(g.name): i for i, g in enumerate(f.generators)})
    total = A.zero()
    sign = 1
    coef = None
    slot = 0
    mono = [0] * A.ngens
    seen_any = False

    def flush():
        nonlocal total, coef, mono, slot, seen_any
        if seen_any:
            c = sign * (coef if coef is not None else 1)
            total = total + A.monomial(mono, c)
        coef, mono, slot, seen_any = None, [0] * A.ngens, 0, False

    i = 0
    while i < len(toks):
        t = toks[i]
        if t in ("+", "-"):
            flush()
            sign = -1 if t == "-" else 1
        elif t in ("⊗", "\\otimes"):
            slot += 1
            if slot >= len(factors):
                raise ValidationError("too many tensor factors")
        elif t == "*":
            pass
        elif re.fullmatch(r"\d+(/\d+)?", t):
            val = Fraction(t)
            coef = val if coef is None else coef * val
            seen_any = True
        elif t[0].isalpha():
            name = re.sub(r"_\{?(\d+)\}?$", r"\1", t)
            e = 1
            if i + 1 < len(toks) and toks[i + 1].startswith("^"):
                e = int(toks[i + 1].strip("^{}"))
                i += 1
            table = lookup[slot]
            if name not in table:
                raise ValidationError(f"unknown generator {name!r}")
            mono[offs[slot] + table[name]] += e
            seen_any = True
        else:
            raise ValidationError(f"unexpected token {t!r}")
        i += 1
    flush()
    return total


# ---------------------------------------------------------------- algebra maps

class AlgebraMap:
    """Algebra homomorphism determined by images of generators.

    graded=True requires images homogeneous of the generator's weight and parity;
    structure maps like the counits or the comultiplication are filtered, not graded.
    """

    def __init__(self, source: TruncatedAlgebra, target: TruncatedAlgebra,
                 images: Sequence[Polynomial], graded: bool = True, name: str = ""):
        self.source = source
        self.target = target
        self.images = tuple(images)
        self.graded = graded
        self.name = name
        if len(self.images) != source.ngens:
            raise StructuralError("one image per source generator is required")
        for g, img in zip(source.generators, self.images):
            if img.algebra != target:
                raise StructuralError(f"image of {g.name} lies in the wrong algebra")
            par = img.parity()
            if img.terms and par is not None and par != int(g.odd):
                raise ValidationError(f"image of {g.name} has the wrong parity")
            if img.terms and par is None:
                raise ValidationError(f"image of {g.name} mixes parities")
            if graded and img.terms and img.weights() != {g.weight}:
                raise ValidationError(f"image of {g.name} has weight {sorted(img.weights())}, expected {g.weight}")
        self._cache: dict = {}

    def apply_monomial(self, m: tuple) -> Polynomial:
        hit = self._cache.get(m)
        if hit is not None:
            return hit
        out = self.target.one()
        for img, e in zip(self.images, m):
            if e:
                out = out * img ** e
        self._cache[m] = out
        return out

    def __call__(self, p: Polynomial) -> Polynomial:
        if p.algebra != self.source:
            raise StructuralError("argument is not in the source algebra")
        out: dict = {}
        for m, c in p.terms.items():
            for m2, c2 in self.apply_monomial(m).terms.items():
                out[m2] = out.get(m2, 0) + c * c2
        return Polynomial.from_terms(self.target, out)

    def compose(self, inner: "AlgebraMap") -> "AlgebraMap":
        """self after inner."""
        if inner.target != self.source:
            raise StructuralError("maps are not composable")
        return AlgebraMap(inner.source, self.target, [self(x) for x in inner.images],
                          self.graded and inner.graded)

    def __eq__(self, other):
        return (isinstance(other, AlgebraMap) and self.source == other.source
                and self.target == other.target and self.images == other.images)

    def __hash__(self):
        return hash((self.source, self.target, self.images))

    def __repr__(self):
        rows = [f"{g.name} -> {img}" for g, img in zip(self.source.generators, self.images)]
        return f"AlgebraMap({'; '.join(rows)})"

    def to_json(self) -> dict:
        return {"source": self.source.to_json(), "target": self.target.to_json(), "graded": self.graded,
                "images": [[g.name, img.to_json()] for g, img in zip(self.source.generators, self.images)]}

    @staticmethod
    def from_json(d: Mapping) -> "AlgebraMap":
        src = TruncatedAlgebra.from_json(d["source"])
        tgt = TruncatedAlgebra.from_json(d["target"])
        imgs = dict((n, Polynomial.from_json(tgt, p)) for n, p in d["images"])
        return AlgebraMap(src, tgt, [imgs[g.name] for g in src.generators], d.get("graded", True))


def apply_map(f: AlgebraMap, p: Polynomial) -> Polynomial:
    return f(p)


def multiply(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def identity_map(A: TruncatedAlgebra) -> AlgebraMap:
    return AlgebraMap(A, A, A.gens())


def kron(maps: Sequence[AlgebraMap], target_bound=_DEFAULT, source_bound=_DEFAULT) -> AlgebraMap:
    """f_0 (x) f_1 (x) ... between flattened tensor products."""
    source = tensor_product([f.source for f in maps], source_bound)
    target = tensor_product([f.target for f in maps], target_bound)
    images = []
    t_off = 0
    for f in maps:
        for img in f.images:
            images.append(target.embed(img, t_off))
        t_off += f.target.ngens
    return AlgebraMap(source, target, images, all(f.graded for f in maps))


def multiplication_map(A: TruncatedAlgebra, copies: int = 2, bound=_DEFAULT) -> AlgebraMap:
    """A (x) ... (x) A -> A."""
    T = tensor_product([A] * copies, bound)
    return AlgebraMap(T, A, A.gens() * copies)


def permutation_map(T: TruncatedAlgebra, perm: Sequence[int]) -> AlgebraMap:
    """Move factor i of a flat tensor to slot perm[i] (Koszul signs arise from reordering)."""
    facs = T.factor_list()
    target_facs = [None] * len(facs)
    for i, j in enumerate(perm):
        target_facs[j] = facs[i]
    target = tensor_product(target_facs, T.bound)
    offs = target.factor_offsets()
    images = []
    for i, f in enumerate(facs):
        for g in range(f.ngens):
            images.append(target.embed(f.gen(g), offs[perm[i]]))
    return AlgebraMap(T, target, images)


def twist_map(A: TruncatedAlgebra, B: TruncatedAlgebra, bound=_DEFAULT) -> AlgebraMap:
    return permutation_map(tensor_product([A, B], bound), [1, 0])


def unit_map(A: TruncatedAlgebra, k: TruncatedAlgebra) -> AlgebraMap:
    """k -> A when k has no generators."""
    return AlgebraMap(k, A, [])


def ground_algebra(ring: CoefficientRing) -> TruncatedAlgebra:
    return TruncatedAlgebra(ring, [], None)


# ---------------------------------------------------------------- per-weight linear maps

def weight_component_matrix(f, w: int, target_weight: Optional[int] = None) -> list:
    """Matrix of f on the weight-w basis; rows index the target basis at target_weight (default w)."""
    tw = w if target_weight is None else target_weight
    src = f.source.basis(w)
    tgt = f.target.basis(tw)
    tindex = {m: i for i, m in enumerate(tgt)}
    M = [[0] * len(src) for _ in tgt]
    for j, m in enumerate(src):
        img = f(f.source.monomial(m))
        for m2, c in img.terms.items():
            if f.target.weight_of(m2) != tw:
                if target_weight is None:
                    raise ValidationError("map does not preserve weight")
                continue
            M[tindex[m2]][j] = c
    return M


class LinearMapByWeight:
    """Per-weight matrices between weight-graded free modules with given bases."""

    def __init__(self, ring: CoefficientRing, matrices: Mapping, source_bases: Mapping, target_bases: Mapping):
        self.ring = ring
        self.matrices = dict(matrices)
        self.source_bases = dict(source_bases)
        self.target_bases = dict(target_bases)
        for w, M in self.matrices.items():
            if len(M) != len(self.target_bases[w]) or any(len(r) != len(self.source_bases[w]) for r in M):
                raise StructuralError(f"matrix shape mismatch in weight {w}")

    @staticmethod
    def from_algebra_map(f: AlgebraMap, weights: Iterable[int]) -> "LinearMapByWeight":
        ws = list(weights)
        return LinearMapByWeight(f.source.ring, {w: weight_component_matrix(f, w) for w in ws},
                                 {w: f.source.basis(w) for w in ws}, {w: f.target.basis(w) for w in ws})

    def compose(self, inner: "LinearMapByWeight") -> "LinearMapByWeight":
        mats = {}
        for w in self.matrices:
            if inner.target_bases[w] != self.source_bases[w]:
                raise StructuralError("bases do not match for composition")
            mats[w] = [[self.ring(x) for x in row] for row in
                       linalg.matmul(self.matrices[w], inner.matrices[w], len(inner.source_bases[w]))]
        return LinearMapByWeight(self.ring, mats, inner.source_bases, self.target_bases)

    def __eq__(self, other):
        return isinstance(other, LinearMapByWeight) and self.matrices == other.matrices


# ---------------------------------------------------------------- ring-aware linear algebra

def kernel(M: list, ring: CoefficientRing, ncols: Optional[int] = None) -> list:
    return [[ring(a) for a in v] for v in linalg.kernel(M, ring, ncols)]


def cokernel(M: list, ring: CoefficientRing, rows: int, ncols: Optional[int] = None) -> Cokernel:
    return linalg.cokernel(M, ring, rows, ncols)


def solve(M: list, b: Sequence, ring: CoefficientRing, ncols: Optional[int] = None):
    x = linalg.solve(M, list(b), ring, ncols)
    return None if x is None else [ring(a) for a in x]


def rank(M: list, ring: CoefficientRing, ncols: Optional[int] = None) -> int:
    return linalg.rank(M, ring, ncols)


def dumps(obj) -> str:
    return json.dumps(obj.to_json(), sort_keys=True)


def binomial(a: int, n: int) -> int:
    """binom(a, n) for any integer a, n >= 0."""
    if n < 0:
        return 0
    if a >= 0:
        return comb(a, n)
    return (-1) ** n * comb(n - a - 1, n)


def prod(xs: Iterable, start=1):
    return reduce(lambda a, b: a * b, xs, start)
