"""Example formal algebra schemes: Lambda (big Witt vectors), divided powers, the identity,
nil and formal completions, the idempotent scheme; plus the symmetric-function oracle,
Witt arithmetic and plethysm.
"""
from __future__ import annotations

import functools
import itertools
import threading
from dataclasses import dataclass, field
from math import comb, factorial
from typing import Optional, Sequence

from .exact_algebra import (ZZ, AlgebraMap, CoefficientRing, Generator, Polynomial, Rule, StructuralError,
                            TruncatedAlgebra, ValidationError, binomial, ground_algebra, polynomial_algebra,
                            tensor_product)
from .schemes_hopf import FiniteRing, LevelStructure, SchemeStructure, point_operation, points


# ---------------------------------------------------------------- partitions and 0-1 matrix counts

@functools.lru_cache(maxsize=None)
def partitions(n: int, max_part: Optional[int] = None, max_len: Optional[int] = None) -> tuple:
    """Partitions of n as non-increasing tuples, lexicographically decreasing."""
    max_part = n if max_part is None else max_part
    if n == 0:
        return ((),)
    if max_len == 0:
        return ()
    out = []
    for first in range(min(n, max_part), 0, -1):
        for rest in partitions(n - first, first, None if max_len is None else max_len - 1):
            out.append((first,) + rest)
    return tuple(out)


def conjugate(lam: Sequence[int]) -> tuple:
    if not lam:
        return ()
    return tuple(sum(1 for p in lam if p > i) for i in range(lam[0]))


@functools.lru_cache(maxsize=None)
def zero_one_count(rows: tuple, cols: tuple) -> int:
    """Number of 0-1 matrices with the given row and column sums."""
    if not rows:
        return 1 if not any(cols) else 0
    r, rest = rows[0], rows[1:]
    if sum(rows) != sum(cols):
        return 0
    total = 0
    idx = [i for i, c in enumerate(cols) if c > 0]
    for chosen in itertools.combinations(idx, r):
        nxt = list(cols)
        for i in chosen:
            nxt[i] -= 1
        total += zero_one_count(rest, tuple(sorted(nxt, reverse=True)))
    return total


def elementary_coefficient(nu: Sequence[int], lam: Sequence[int]) -> int:
    """Coefficient of x^lam in e_nu (products of elementary symmetric polynomials)."""
    return zero_one_count(tuple(nu), tuple(lam))


class SymmetricOracle:
    """Exact symmetric-function computations in v variables per alphabet.

    Symmetric polynomials are stored by their coefficients on dominant monomials
    (partitions of length <= v); conversion to the elementary basis is leading-term
    elimination in lexicographic order.
    """

    def __init__(self, v: int):
        if v < 1:
            raise ValidationError("need at least one variable")
        self.v = v

    def parts(self, n: int) -> tuple:
        return partitions(n, None, self.v)

    def to_elementary(self, dominant: dict, n: int) -> dict:
        """{lambda: coef} on dominant monomials of degree n -> {nu: coef} with sum coef e_nu."""
        cur = {lam: c for lam, c in dominant.items() if c}
        out = {}
        order = self.parts(n)
        for lam in order:
            c = cur.get(lam, 0)
            if not c:
                continue
            nu = conjugate(lam)
            if len(nu) and nu[0] > self.v:
                raise ValidationError("oracle has too few variables")
            out[nu] = out.get(nu, 0) + c
            for kappa in order:
                e = elementary_coefficient(nu, kappa)
                if e:
                    cur[kappa] = cur.get(kappa, 0) - c * e
        if any(cur.values()):
            raise ValidationError("input is not symmetric")
        return out

    def to_elementary2(self, dominant: dict, n: int, m: int) -> dict:
        """Two alphabets: {(lam, mu): coef} -> {(nu, rho): coef} in e_nu(x) e_rho(y)."""
        cur = {k: c for k, c in dominant.items() if c}
        out = {}
        lp, mp = self.parts(n), self.parts(m)
        for lam in lp:
            for mu in mp:
                c = cur.get((lam, mu), 0)
                if not c:
                    continue
                nu, rho = conjugate(lam), conjugate(mu)
                out[(nu, rho)] = out.get((nu, rho), 0) + c
                for kappa in lp:
                    a = elementary_coefficient(nu, kappa)
                    if not a:
                        continue
                    for tau in mp:
                        b = elementary_coefficient(rho, tau)
                        if b:
                            cur[(kappa, tau)] = cur.get((kappa, tau), 0) - c * a * b
        if any(cur.values()):
            raise ValidationError("input is not bisymmetric")
        return out

    def product_coefficient(self, n: int) -> dict:
        """[t^n] prod_{i,j}(1 + t x_i y_j) in e(x) e(y)."""
        dom = {}
        for lam in self.parts(n):
            for mu in self.parts(n):
                c = zero_one_count(lam, mu)
                if c:
                    dom[(lam, mu)] = c
        return self.to_elementary2(dom, n, n)

    def plethysm_basic(self, n: int, m: int) -> dict:
        """e_n evaluated on the monomials of e_m, in the elementary basis (weight n*m)."""
        w = n * m
        subsets = list(itertools.combinations(range(self.v), m))
        dom: dict = {}
        for choice in itertools.combinations(subsets, n):
            mult = [0] * self.v
            for s in choice:
                for i in s:
                    mult[i] += 1
            if all(mult[i] >= mult[i + 1] for i in range(self.v - 1)):
                lam = tuple(x for x in mult if x)
                dom[lam] = dom.get(lam, 0) + 1
        return self.to_elementary(dom, w)


@functools.lru_cache(maxsize=None)
def _product_coefficient(n: int) -> tuple:
    a = SymmetricOracle(n).product_coefficient(n)
    b = SymmetricOracle(n + 1).product_coefficient(n)
    if a != b:
        raise StructuralError(f"oracle unstable in weight {n}")
    return tuple(sorted(a.items()))


@functools.lru_cache(maxsize=None)
def _plethysm_basic(n: int, m: int) -> tuple:
    if n == 0:
        return (((), 1),)
    if m == 0:
        return ()
    v = n * m
    a = SymmetricOracle(v).plethysm_basic(n, m)
    b = SymmetricOracle(v + 1).plethysm_basic(n, m)
    if a != b:
        raise StructuralError(f"oracle unstable for e_{n}[e_{m}]")
    return tuple(sorted(a.items()))


def product_coefficients(n: int) -> dict:
    """psi_x(c_n) as {(nu, rho): coef}: c_nu (x) c_rho."""
    return dict(_product_coefficient(n))


def plethysm_table(n: int, m: int) -> dict:
    """c_n o c_m as {nu: coef}: c_nu."""
    return dict(_plethysm_basic(n, m))


# ---------------------------------------------------------------- Lambda

def lambda_algebra(d: int, ring: CoefficientRing = ZZ, bound: Optional[int] = None) -> TruncatedAlgebra:
    return polynomial_algebra(ring, [(f"c{i}", i) for i in range(1, d + 1)], bound)


def _c_monomial(nu: Sequence[int], d: int) -> list:
    m = [0] * d
    for part in nu:
        m[part - 1] += 1
    return m


def _series_power(A: TruncatedAlgebra, coeffs: list, a: int, d: int) -> list:
    """Coefficients t^0..t^d of (sum coeffs_i t^i)^a, coeffs_0 = 1."""
    def mul(p, q):
        return [sum((p[i] * q[k - i] for i in range(k + 1)), A.zero()) for k in range(d + 1)]

    if a < 0:
        inv = [A.one()] + [A.zero()] * d
        for k in range(1, d + 1):
            inv[k] = -sum((coeffs[i] * inv[k - i] for i in range(1, k + 1)), A.zero())
        base, a = inv, -a
    else:
        base = coeffs
    out = [A.one()] + [A.zero()] * d
    for _ in range(a):
        out = mul(out, base)
    return out


def lambda_structure(N: int, ring: CoefficientRing = ZZ, with_comult: bool = True,
                     counit_range: Sequence[int] = range(-3, 5),
                     action_range: Sequence[int] = (-1, 0, 1, 2, 3)) -> SchemeStructure:
    """Spf Lambda: level d is Z[c_1..c_min(d,N)], the functor of big Witt vectors of length d."""
    if N < 1:
        raise ValidationError("N must be at least 1")

    def build(d):
        d = min(max(d, 1), N)
        A = lambda_algebra(d, ring)
        T2 = tensor_product([A, A])
        k = ground_algebra(ring)
        cs = [A.one()] + A.gens()
        left = [T2.one()] + [T2.inject(0, c) for c in A.gens()]
        right = [T2.one()] + [T2.inject(1, c) for c in A.gens()]
        coadd = AlgebraMap(A, T2, [sum((left[i] * right[n - i] for i in range(n + 1)), T2.zero())
                                   for n in range(1, d + 1)], name="psi_+")
        cozero = AlgebraMap(A, k, [k.zero()] * d, graded=False, name="eps_0")
        comult = None
        if with_comult:
            imgs = []
            for n in range(1, d + 1):
                terms = {}
                for (nu, rho), c in product_coefficients(n).items():
                    terms[tuple(_c_monomial(nu, d) + _c_monomial(rho, d))] = c
                imgs.append(Polynomial.from_terms(T2, terms))
            comult = AlgebraMap(A, T2, imgs, graded=False, name="psi_x")
        counits = {a: AlgebraMap(A, k, [k.scalar(binomial(a, n)) for n in range(1, d + 1)], graded=False,
                                 name=f"eps_{a}") for a in counit_range}
        counits[0] = cozero
        actions = {}
        for a in action_range:
            ser = _series_power(A, cs, a, d)
            actions[a] = AlgebraMap(A, A, ser[1:], name=f"lambda_{a}")
        return LevelStructure(A, coadd, cozero, comult, counits, actions, unital=with_comult)
    return SchemeStructure(f"Lambda_{N}", ring, build, "ZZ", {"kind": "lambda", "bound": N, "bidegree": 0})


def newton_primitive(n: int, A: TruncatedAlgebra) -> Polynomial:
    """p_n = c_1 p_(n-1) - c_2 p_(n-2) + ... + (-1)^(n-1) n c_n."""
    p = [A.zero()]
    for k in range(1, n + 1):
        val = A.gen(f"c{k}") * ((-1) ** (k - 1) * k)
        for i in range(1, k):
            val = val + A.gen(f"c{i}") * p[k - i] * ((-1) ** (i - 1))
        p.append(val)
    return p[n]


# ---------------------------------------------------------------- Witt vectors

@dataclass(frozen=True)
class WittVector:
    components: tuple
    ring: CoefficientRing = ZZ

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.ring(x) for x in self.components))

    def __len__(self):
        return len(self.components)

    def __add__(self, other):
        return witt_add(self, other)

    def __mul__(self, other):
        return witt_mul(self, other)

    def __neg__(self):
        return witt_neg(self)


@functools.lru_cache(maxsize=None)
def _lambda_level(n: int, ring: CoefficientRing) -> LevelStructure:
    return lambda_structure(n, ring).level(n)


def _check_lengths(a: WittVector, b: WittVector):
    if len(a) != len(b):
        raise ValidationError("Witt vectors of different lengths")
    if a.ring != b.ring:
        raise ValidationError("Witt vectors over different rings")


def _eval_pair(f: AlgebraMap, a: WittVector, b: WittVector) -> WittVector:
    vals = list(a.components) + list(b.components)
    out = []
    for img in f.images:
        s = 0
        for m, c in img.terms.items():
            t = c
            for x, e in zip(vals, m):
                if e:
                    t = t * x ** e
            s += t
        out.append(s)
    return WittVector(tuple(out), a.ring)


def witt_add(a: WittVector, b: WittVector) -> WittVector:
    _check_lengths(a, b)
    if len(a) == 0:
        return a
    return _eval_pair(_lambda_level(len(a), a.ring).coadd, a, b)


def witt_mul(a: WittVector, b: WittVector) -> WittVector:
    _check_lengths(a, b)
    if len(a) == 0:
        return a
    return _eval_pair(_lambda_level(len(a), a.ring).comult, a, b)


def witt_neg(a: WittVector) -> WittVector:
    if len(a) == 0:
        return a
    lam = _lambda_level(len(a), a.ring).actions[-1]
    out = []
    for img in lam.images:
        s = 0
        for m, c in img.terms.items():
            t = c
            for x, e in zip(a.components, m):
                if e:
                    t = t * x ** e
            s += t
        out.append(s)
    return WittVector(tuple(out), a.ring)


def witt_one(n: int, ring: CoefficientRing = ZZ) -> WittVector:
    return WittVector((1,) + (0,) * (n - 1), ring) if n else WittVector((), ring)


def witt_zero(n: int, ring: CoefficientRing = ZZ) -> WittVector:
    return WittVector((0,) * n, ring)


def witt_coordinates(a: Sequence[int]) -> list:
    """w_1..w_n with 1 + sum a_n t^n = prod_d (1 - w_d (-t)^d)."""
    n = len(a)
    series = [1] + list(a)
    w = []
    for d in range(1, n + 1):
        wd = (-1) ** (d + 1) * series[d]
        w.append(wd)
        # divide by (1 - w_d (-t)^d) = 1 + (-1)^(d+1) w_d t^d
        q = (-1) ** (d + 1) * wd
        inv = [0] * (n + 1)
        inv[0] = 1
        for k in range(d, n + 1, d):
            inv[k] = (-q) ** (k // d)
        series = [sum(series[i] * inv[k - i] for i in range(k + 1)) for k in range(n + 1)]
    return w


def ghost(a: WittVector) -> list:
    """Ghost components sum_(d|n) d w_d^(n/d) of the Witt coordinates."""
    w = witt_coordinates([int(x) for x in a.components])
    n = len(w)
    return [sum(d * w[d - 1] ** (m // d) for d in range(1, m + 1) if m % d == 0) for m in range(1, n + 1)]


def power_sums(a: Sequence[int]) -> list:
    """Newton power sums of the roots: p_n = sum_(i<n) (-1)^(i-1) a_i p_(n-i) + (-1)^(n-1) n a_n."""
    p = []
    for n in range(1, len(a) + 1):
        v = (-1) ** (n - 1) * n * a[n - 1]
        for i in range(1, n):
            v += (-1) ** (i - 1) * a[i - 1] * p[n - i - 1]
        p.append(v)
    return p


# ---------------------------------------------------------------- divided powers

def divided_power_algebra(d: int, ring: CoefficientRing = ZZ) -> TruncatedAlgebra:
    gens = [Generator(f"x{i}", i) for i in range(1, d + 1)]
    rules = []
    for i in range(1, d + 1):
        for j in range(i, d + 1):
            if i + j > d:
                continue
            lead = [0] * d
            lead[i - 1] += 1
            lead[j - 1] += 1
            tail = [0] * d
            tail[i + j - 1] = 1
            rules.append(Rule(tuple(lead), ((tuple(tail), comb(i + j, i)),)))
    return TruncatedAlgebra(ring, gens, d, rules)


def divided_powers(N: int, ring: CoefficientRing = ZZ) -> SchemeStructure:
    """The divided polynomial algebra with psi_+(x_n) = sum x_i (x) x_j, psi_x(x_n) = n! x_n (x) x_n."""
    def build(d):
        d = min(max(d, 1), max(N, 1))
        A = divided_power_algebra(d, ring)
        T2 = tensor_product([A, A])
        k = ground_algebra(ring)
        xs = A.gens()
        left = [T2.one()] + [T2.inject(0, x) for x in xs]
        right = [T2.one()] + [T2.inject(1, x) for x in xs]
        coadd = AlgebraMap(A, T2, [sum((left[i] * right[n - i] for i in range(n + 1)), T2.zero())
                                   for n in range(1, d + 1)], name="psi_+")
        comult = AlgebraMap(A, T2, [left[n] * right[n] * factorial(n) for n in range(1, d + 1)],
                            graded=False, name="psi_x")
        cozero = AlgebraMap(A, k, [k.zero()] * d, graded=False)
        actions = {a: AlgebraMap(A, A, [xs[n - 1] * a ** n for n in range(1, d + 1)]) for a in (-1, 0, 1, 2)}
        return LevelStructure(A, coadd, cozero, comult, {0: cozero}, actions, unital=False)
    return SchemeStructure(f"DividedPowers_{N}", ring, build, "ZZ", {"kind": "divided", "bound": N})


# ---------------------------------------------------------------- small schemes

def identity_scheme(p: int = 0, ring: CoefficientRing = ZZ) -> SchemeStructure:
    """The identity functor: k[e] with e primitive (polynomial for even p, exterior for odd p)."""
    odd = bool(p % 2)

    def build(d):
        A = TruncatedAlgebra(ring, [Generator("e", 1, odd)], None)
        T2 = tensor_product([A, A])
        k = ground_algebra(ring)
        e = A.gen(0)
        coadd = AlgebraMap(A, T2, [T2.inject(0, e) + T2.inject(1, e)])
        cozero = AlgebraMap(A, k, [k.zero()], graded=False)
        actions = {a: AlgebraMap(A, A, [e * a]) for a in (-1, 0, 1, 2)}
        if odd:
            return LevelStructure(A, coadd, cozero, None, {0: cozero}, actions, unital=False)
        comult = AlgebraMap(A, T2, [T2.inject(0, e) * T2.inject(1, e)], graded=False)
        counits = {a: AlgebraMap(A, k, [k.scalar(a)], graded=False) for a in range(-3, 5)}
        counits[0] = cozero
        return LevelStructure(A, coadd, cozero, comult, counits, actions, unital=True)
    return SchemeStructure(f"Id({p})", ring, build, "ZZ", {"kind": "identity", "bidegree": (p, p)})


def nil_scheme(p: int = 0, ring: CoefficientRing = ZZ) -> SchemeStructure:
    """Completion at zero: level d is k[e]/(e^(d+1)); points are nilpotent elements."""
    odd = bool(p % 2)

    def build(d):
        A = TruncatedAlgebra(ring, [Generator("e", 1, odd)], max(d, 1))
        T2 = tensor_product([A, A])
        k = ground_algebra(ring)
        e = A.gen(0)
        coadd = AlgebraMap(A, T2, [T2.inject(0, e) + T2.inject(1, e)])
        cozero = AlgebraMap(A, k, [k.zero()], graded=False)
        comult = None if odd else AlgebraMap(A, T2, [T2.inject(0, e) * T2.inject(1, e)], graded=False)
        actions = {a: AlgebraMap(A, A, [e * a]) for a in (-1, 0, 1, 2)}
        return LevelStructure(A, coadd, cozero, comult, {0: cozero}, actions, unital=False)
    return SchemeStructure(f"Nil({p})", ring, build, "ZZ", {"kind": "nil", "bidegree": (p, p)})


def _idempotent_gens(m: int) -> list:
    return [Generator(f"f{i}", 0) for i in range(1, m)]


def _idempotent_rules(m: int, extra: int = 0) -> list:
    n = m - 1 + extra
    rules = []
    for i in range(m - 1):
        lead = [0] * n
        lead[i] = 2
        tail = [0] * n
        tail[i] = 1
        rules.append(Rule(tuple(lead), ((tuple(tail), 1),)))
        for j in range(i + 1, m - 1):
            lead = [0] * n
            lead[i] = lead[j] = 1
            rules.append(Rule(tuple(lead), ()))
    return rules


def _full_idempotents(T: TruncatedAlgebra, slot: int, m: int) -> list:
    """F_0..F_(m-1) in factor slot of T, with F_0 = 1 - sum F_i."""
    off = T.factor_offsets()[slot]
    fs = [T.gen(off + i) for i in range(m - 1)]
    return [T.one() - sum(fs, T.zero())] + fs


def idempotent_scheme(m: int, ring: CoefficientRing = ZZ) -> SchemeStructure:
    """hom(Z/m, k): points are complete m-tuples of orthogonal idempotents (a constant tower)."""
    if m < 2:
        raise ValidationError("m must be at least 2")

    def build(d):
        A = TruncatedAlgebra(ring, _idempotent_gens(m), None, _idempotent_rules(m))
        T2 = tensor_product([A, A])
        k = ground_algebra(ring)
        L, R = _full_idempotents(T2, 0, m), _full_idempotents(T2, 1, m)
        fa = _full_idempotents(A, 0, m)

        def conv(op):
            return [sum((L[i] * R[j] for i in range(m) for j in range(m) if op(i, j) % m == n), T2.zero())
                    for n in range(1, m)]
        coadd = AlgebraMap(A, T2, conv(lambda i, j: i + j))
        comult = AlgebraMap(A, T2, conv(lambda i, j: i * j))
        counits = {a: AlgebraMap(A, k, [k.scalar(1 if (a - i) % m == 0 else 0) for i in range(1, m)],
                                 graded=False) for a in range(-(m - 1), m)}
        cozero = counits[0]
        actions = {a: AlgebraMap(A, A, [sum((fa[i] for i in range(m) if (a * i - n) % m == 0), A.zero())
                                        for n in range(1, m)]) for a in (-1, 0, 1, 2)}
        return LevelStructure(A, coadd, cozero, comult, counits, actions, unital=True)
    return SchemeStructure(f"hom(Z/{m},k)", ring, build, f"ZZ/{m}", {"kind": "idempotent", "m": m})


def idempotent_points(m: int, R: FiniteRing) -> list:
    """All complete m-tuples (a_0..a_(m-1)) of orthogonal idempotents of R."""
    A = idempotent_scheme(m).level(0).algebra
    out = []
    for pt in points(A, R):
        s = R.zero
        for x in pt:
            s = R.add_t[s][x]
        a0 = R.add_t[R.one][R.neg_t[s]]
        if R.mul_t[a0][a0] != a0 or any(R.mul_t[a0][x] != R.zero for x in pt):
            continue
        out.append((a0,) + tuple(pt))
    return out


def idempotent_convolution(a: Sequence[int], b: Sequence[int], R: FiniteRing, mult: bool = False) -> tuple:
    """((a) + (b))_n = sum_(i+j=n) a_i b_j, or the product with i*j = n."""
    m = len(a)
    out = []
    for n in range(m):
        s = R.zero
        for i in range(m):
            for j in range(m):
                if ((i * j) if mult else (i + j)) % m == n:
                    s = R.add_t[s][R.mul_t[a[i]][b[j]]]
        out.append(s)
    return tuple(out)


def idempotent_point_ops(m: int, R: FiniteRing) -> dict:
    """Addition and multiplication of points read off the co-operations (second route)."""
    L = idempotent_scheme(m).level(0)
    add, mul = point_operation(L.coadd, R), point_operation(L.comult, R)

    def full(pt):
        s = R.zero
        for x in pt:
            s = R.add_t[s][x]
        return (R.add_t[R.one][R.neg_t[s]],) + tuple(pt)
    return {"add": lambda a, b: full(add(a[1:], b[1:])), "mul": lambda a, b: full(mul(a[1:], b[1:]))}


def formal_completion(m: int = 3, p: int = 0) -> SchemeStructure:
    """Spf hom(k, k) x Nil over k = Z/m, with product
    (lambda_1, x_1)(lambda_2, x_2) = (lambda_1 lambda_2, lambda_1 x_2 + lambda_2 x_1 + x_1 x_2)."""
    ring = CoefficientRing.mod(m)
    odd = bool(p % 2)

    def build(d):
        d = max(d, 1)
        gens = _idempotent_gens(m) + [Generator("e", 1, odd)]
        A = TruncatedAlgebra(ring, gens, d, _idempotent_rules(m, extra=1))
        T2 = tensor_product([A, A])
        k = ground_algebra(ring)
        L, R = _full_idempotents(T2, 0, m), _full_idempotents(T2, 1, m)
        off = T2.factor_offsets()
        eL, eR = T2.gen(off[0] + m - 1), T2.gen(off[1] + m - 1)
        e = A.gen("e")
        fa = _full_idempotents(A, 0, m)

        def conv(op):
            return [sum((L[i] * R[j] for i in range(m) for j in range(m) if op(i, j) % m == n), T2.zero())
                    for n in range(1, m)]
        coadd = AlgebraMap(A, T2, conv(lambda i, j: i + j) + [eL + eR], graded=False)
        comult = None
        if not odd:
            scal = sum((L[i] * eR * i + eL * R[i] * i for i in range(1, m)), T2.zero())
            comult = AlgebraMap(A, T2, conv(lambda i, j: i * j) + [scal + eL * eR], graded=False)
        counits = {a: AlgebraMap(A, k, [k.scalar(1 if (a - i) % m == 0 else 0) for i in range(1, m)] + [k.zero()],
                                 graded=False) for a in range(-(m - 1), m)}
        cozero = counits[0]
        actions = {a: AlgebraMap(A, A, [sum((fa[i] for i in range(m) if (a * i - n) % m == 0), A.zero())
                                        for n in range(1, m)] + [e * a], graded=False) for a in (-1, 0, 1, 2)}
        if odd:
            counits = {0: cozero}
        return LevelStructure(A, coadd, cozero, comult, counits, actions, unital=not odd)
    return SchemeStructure(f"FormalCompletion(Z/{m},{p})", ring, build, f"ZZ/{m}",
                           {"kind": "formal completion", "bidegree": (p, p), "m": m})


def small_schemes(ring: CoefficientRing = ZZ) -> dict:
    return {"identity(0)": identity_scheme(0, ring), "identity(1)": identity_scheme(1, ring),
            "nil(0)": nil_scheme(0, ring), "nil(1)": nil_scheme(1, ring),
            "formal_completion(3)": formal_completion(3), "formal_completion(2)": formal_completion(2),
            **{f"idempotent({m})": idempotent_scheme(m, ring) for m in range(2, 7)}}


# ---------------------------------------------------------------- plethysm

def _witt_series_add(T2map: AlgebraMap, a: list, b: list, target: TruncatedAlgebra) -> list:
    f = AlgebraMap(T2map.target, target, a + b, graded=False)
    return [f(img) for img in T2map.images]


class _PlethysmEngine:
    """Computes f o g in Z[c_1..c_W] truncated at weight W."""

    def __init__(self, W: int, ring: CoefficientRing = ZZ):
        self.W = W
        self.ring = ring
        self.A = lambda_algebra(W, ring, bound=W)
        self.L = lambda_structure(W, ring).level(W)
        self._basic: dict = {}
        self._lock = threading.RLock()

    def truncate(self, p: Polynomial) -> Polynomial:
        A = self.A
        return Polynomial.from_terms(A, {m[:A.ngens] + (0,) * (A.ngens - len(m)): c for m, c in p.terms.items()
                                         if p.algebra.weight_of(m) <= self.W})

    def basic_point(self, k: int, n_max: int) -> list:
        """(c_n o c_k)_(n=1..n_max)."""
        with self._lock:
            key = (k, n_max)
            if key not in self._basic:
                out = []
                for n in range(1, n_max + 1):
                    if n * k > self.W:
                        out.append(self.A.zero())
                        continue
                    terms = {tuple(_c_monomial(nu, self.W)): c for nu, c in plethysm_table(n, k).items()}
                    out.append(Polynomial.from_terms(self.A, terms))
                self._basic[key] = out
            return self._basic[key]

    def scalar_point(self, c: int, n_max: int) -> list:
        return [self.A.scalar(binomial(c, n)) for n in range(1, n_max + 1)]

    def _level(self, n_max):
        return lambda_structure(n_max, self.ring).level(n_max)

    def point(self, g: Polynomial, n_max: int) -> list:
        """(c_n o g)_n as a Witt vector with polynomial components."""
        L = self._level(n_max)
        names = [gen.name for gen in g.algebra.generators]
        idx = [int(nm[1:]) for nm in names]
        total = [self.A.zero()] * n_max
        for m, c in g.terms.items():
            pt = self.scalar_point(int(c), n_max)
            for k, e in zip(idx, m):
                for _ in range(e):
                    pt = _witt_series_add(L.comult, pt, self.basic_point(k, n_max), self.A)
            total = _witt_series_add(L.coadd, total, pt, self.A)
        return total

    def compose(self, f: Polynomial, g: Polynomial) -> Polynomial:
        names = [gen.name for gen in f.algebra.generators]
        idx = [int(nm[1:]) for nm in names]
        used = [i for i, e in zip(idx, map(any, zip(*f.terms))) if e] if f.terms else []
        n_max = max(used) if used else 0
        pt = self.point(g, n_max) if n_max else []
        images = [pt[i - 1] if i <= n_max else self.A.zero() for i in idx]
        return AlgebraMap(f.algebra, self.A, images, graded=False)(f)


@functools.lru_cache(maxsize=None)
def _engine(W: int, ring: CoefficientRing) -> _PlethysmEngine:
    return _PlethysmEngine(W, ring)


def lift_to_lambda(p: Polynomial, W: int) -> Polynomial:
    """Re-express a polynomial in c-generators inside Z[c_1..c_W] truncated at W."""
    A = lambda_algebra(W, p.algebra.ring, bound=W)
    terms = {}
    for m, c in p.terms.items():
        mm = [0] * W
        ok = True
        for gen, e in zip(p.algebra.generators, m):
            if not e:
                continue
            i = int(gen.name.lstrip("c").split("[")[0])
            if i > W:
                ok = False
                break
            mm[i - 1] += e
        if ok and sum((i + 1) * e for i, e in enumerate(mm)) <= W:
            terms[tuple(mm)] = terms.get(tuple(mm), 0) + c
    return Polynomial.from_terms(A, terms)


def plethysm(f: Polynomial, g: Polynomial, N: int) -> Polynomial:
    """f o g through weight N, in Z[c_1..c_N]."""
    E = _engine(N, f.algebra.ring)
    return E.compose(lift_to_lambda(f, N), lift_to_lambda(g, N))


def c(n: int, W: int, ring: CoefficientRing = ZZ) -> Polynomial:
    return lambda_algebra(W, ring, bound=W).gen(f"c{n}")


def power_sum(n: int, W: int, ring: CoefficientRing = ZZ) -> Polynomial:
    return newton_primitive(n, lambda_algebra(W, ring, bound=W))


# ---------------------------------------------------------------- the Lambda plethory

@dataclass
class PlethoryData:
    """A formal plethory: the scheme, Delta on generators of Reg(F o F), and the counit."""
    scheme: SchemeStructure
    weight: int
    delta: dict  # (m, i) -> image of d_(m,i) in Reg F
    counit: dict  # generator name of Reg F -> coefficient of e
    checks: dict = field(default_factory=dict)

    def delta_image(self, m: int, i: int) -> Polynomial:
        return self.delta[(m, i)]


def lambda_comonoid(N: int, ring: CoefficientRing = ZZ) -> PlethoryData:
    """Delta: d_(m,i) -> c_i o c_m; counit c_1 -> e, c_n -> 0; axioms checked through weight N."""
    S = lambda_structure(N, ring)
    delta = {}
    for m in range(1, N + 1):
        for i in range(1, N // m + 1):
            delta[(m, i)] = plethysm(c(i, N, ring), c(m, N, ring), N)
    counit = {f"c{n}": (1 if n == 1 else 0) for n in range(1, N + 1)}
    P = PlethoryData(S, N, delta, counit)
    checks = {}
    # counit: inner and outer counit give c_i back
    checks["counit.left"] = all(delta[(1, i)] == c(i, N, ring) for i in range(1, N + 1))
    checks["counit.right"] = all(delta[(m, 1)] == c(m, N, ring) for m in range(1, N + 1))
    # coassociativity on generators: c_i o (c_j o c_m) = (c_i o c_j) o c_m
    ok = True
    for i in range(1, N + 1):
        for j in range(1, N // i + 1):
            for m in range(1, N // (i * j) + 1):
                lhs = plethysm(c(i, N, ring), delta[(m, j)], N)
                rhs = plethysm(delta[(j, i)], c(m, N, ring), N)
                if lhs != rhs:
                    ok = False
    checks["coassociative"] = ok
    P.checks = checks
    if not all(checks.values()):
        raise StructuralError(f"Lambda comonoid axioms fail: {checks}")
    return P
