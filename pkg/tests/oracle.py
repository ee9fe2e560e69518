"""Brute-force oracle: explicit variables, full expansion, leading-term elimination.

Run `python3 tests/oracle.py` to regenerate tests/frozen/oracle.json.
"""
import itertools
import json
import pathlib
from math import comb

FROZEN = pathlib.Path(__file__).parent / "frozen" / "oracle.json"


# sparse polynomials: {exponent tuple: int}

def padd(p, q, s=1):
    out = dict(p)
    for m, c in q.items():
        out[m] = out.get(m, 0) + s * c
        if not out[m]:
            del out[m]
    return out


def pmul(p, q):
    out = {}
    for a, x in p.items():
        for b, y in q.items():
            m = tuple(i + j for i, j in zip(a, b))
            out[m] = out.get(m, 0) + x * y
    return {m: c for m, c in out.items() if c}


def elementary(k, v):
    out = {}
    for S in itertools.combinations(range(v), k):
        out[tuple(1 if i in S else 0 for i in range(v))] = 1
    return out


def e_product(nu_exps, v):
    """prod e_k^nu_k for nu_exps = (n_1, n_2, ...)."""
    out = {(0,) * v: 1}
    for k, n in enumerate(nu_exps, start=1):
        for _ in range(n):
            out = pmul(out, elementary(k, v))
    return out


def to_elementary(p, v):
    """Symmetric p in v variables -> {(n_1..n_v): coef} with p = sum coef prod e_k^n_k."""
    p = dict(p)
    out = {}
    while p:
        lead = max(p)
        c = p[lead]
        exps = tuple(lead[k] - (lead[k + 1] if k + 1 < v else 0) for k in range(v))
        out[exps] = c
        p = padd(p, e_product(exps, v), -c)
    return out


def split_alphabets(p, v):
    """Polynomial in x_1..x_v, y_1..y_v -> {x-part: y-poly}."""
    out = {}
    for m, c in p.items():
        out.setdefault(m[:v], {})[m[v:]] = c
    return out


def two_alphabet_elementary(p, v):
    """{(left c-exponents, right c-exponents): coef}."""
    by_y = {}
    for xm, ypoly in split_alphabets(p, v).items():
        by_y[xm] = to_elementary(ypoly, v)
    # now linear combination over y-elementary monomials; reduce each x-polynomial
    coeffs = {}
    for xm, yexp in by_y.items():
        for ye, c in yexp.items():
            coeffs.setdefault(ye, {})[xm] = c
    out = {}
    for ye, xpoly in coeffs.items():
        for xe, c in to_elementary(xpoly, v).items():
            out[(xe, ye)] = c
    return out


def product_coefficient(n, v):
    """Coefficient of t^n in prod_(i,j) (1 + t x_i y_j)."""
    pairs = [(i, j) for i in range(v) for j in range(v)]
    out = {}
    for S in itertools.combinations(pairs, n):
        m = [0] * (2 * v)
        for i, j in S:
            m[i] += 1
            m[v + j] += 1
        m = tuple(m)
        out[m] = out.get(m, 0) + 1
    return out


def psi_times(n):
    res = two_alphabet_elementary(product_coefficient(n, n), n)
    res2 = two_alphabet_elementary(product_coefficient(n, n + 1), n + 1)
    trimmed = {(a[:n], b[:n]): c for (a, b), c in res2.items() if not any(a[n:]) and not any(b[n:])}
    assert trimmed == res and len(trimmed) == len(res2), "unstable in the number of variables"
    return res


def plethysm_basic(n, m):
    """e_n evaluated on the monomials of e_m, in the elementary basis of the inner variables."""
    v = n * m
    monos = list(elementary(m, v))
    out = {}
    for S in itertools.combinations(monos, n):
        e = tuple(sum(x[i] for x in S) for i in range(v))
        out[e] = out.get(e, 0) + 1
    return to_elementary(out, v)


def newton(n):
    v = n
    p = {tuple(n if j == i else 0 for j in range(v)): 1 for i in range(v)}
    return to_elementary(p, v)


def counit(a, n):
    """Coefficient of t^n in (1 + t)^a as a power series, a any integer."""
    coeffs = [1] + [0] * n
    base = [1, 1] + [0] * (n - 1) if a >= 0 else [(-1) ** k for k in range(n + 1)]
    for _ in range(abs(a)):
        coeffs = [sum(coeffs[i] * base[k - i] for i in range(k + 1)) for k in range(n + 1)]
    return coeffs[n]


def idempotent_tuples(m, elements, add, mul, one, zero):
    out = []
    for t in itertools.product(elements, repeat=m):
        s = zero
        for x in t:
            s = add(s, x)
        if s != one:
            continue
        if all(mul(x, x) == x for x in t) and all(mul(t[i], t[j]) == zero for i in range(m) for j in range(m) if i != j):
            out.append(t)
    return out


def trim(exps):
    exps = list(exps)
    while exps and exps[-1] == 0:
        exps.pop()
    return exps


def build():
    data = {"psi_times": {}, "plethysm": {}, "newton": {}, "counit": {}, "idempotent_points": {}}
    for n in range(1, 5):
        data["psi_times"][str(n)] = sorted([trim(a), trim(b), c] for (a, b), c in psi_times(n).items())
    for n in range(1, 4):
        for m in range(1, 4):
            if n * m <= 6:
                data["plethysm"][f"{n},{m}"] = sorted([trim(e), c] for e, c in plethysm_basic(n, m).items())
    for n in range(1, 9):
        data["newton"][str(n)] = sorted([trim(e), c] for e, c in newton(n).items())
    for a in range(-3, 5):
        data["counit"][str(a)] = [counit(a, n) for n in range(0, 7)]
        assert a < 0 or data["counit"][str(a)] == [comb(a, n) for n in range(7)]
    F3 = dict(elements=range(3), add=lambda x, y: (x + y) % 3, mul=lambda x, y: x * y % 3, one=1, zero=0)
    F3sq = dict(elements=list(itertools.product(range(3), repeat=2)),
                add=lambda x, y: ((x[0] + y[0]) % 3, (x[1] + y[1]) % 3),
                mul=lambda x, y: (x[0] * y[0] % 3, x[1] * y[1] % 3), one=(1, 1), zero=(0, 0))
    data["idempotent_points"]["F3"] = len(idempotent_tuples(2, **F3))
    data["idempotent_points"]["F3xF3"] = len(idempotent_tuples(2, **F3sq))
    return data


if __name__ == "__main__":
    FROZEN.parent.mkdir(exist_ok=True)
    FROZEN.write_text(json.dumps(build(), indent=1, sort_keys=True) + "\n")
