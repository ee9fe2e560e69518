"""Exact linear algebra over Z, Z/m and fields (Q, F_p).

Matrices are lists of rows. Entries are Python ints, or Fractions over Q.
Over Z the workhorse is the Smith normal form; over fields it is row reduction.
Over Z/m with m composite everything is lifted to Z by appending m*I.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Optional, Sequence

Matrix = list  # list[list[int | Fraction]]


def zeros(m: int, n: int) -> Matrix:
    return [[0] * n for _ in range(m)]


def identity(n: int) -> Matrix:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def transpose(M: Matrix, ncols: Optional[int] = None) -> Matrix:
    if not M:
        return [[] for _ in range(ncols or 0)]
    return [list(col) for col in zip(*M)]


def matmul(A: Matrix, B: Matrix, ncols: Optional[int] = None) -> Matrix:
    """A (m x k) times B (k x n). Pass ncols when B may have no rows."""
    n = len(B[0]) if B else (ncols or 0)
    Bt = transpose(B) if B else [[] for _ in range(n)]
    out = []
    for row in A:
        nz = [(k, a) for k, a in enumerate(row) if a]
        out.append([sum(a * Bt[j][k] for k, a in nz) for j in range(n)])
    return out


def matvec(M: Matrix, v: Sequence) -> list:
    return [sum(a * b for a, b in zip(row, v) if a) for row in M]


def ncols_of(M: Matrix, default: int = 0) -> int:
    return len(M[0]) if M else default


# ---------------------------------------------------------------- Smith form

def smith_form(M: Matrix, ncols: Optional[int] = None):
    """Return (U, D, V) with U*M*V = D diagonal, U, V unimodular, d_i | d_{i+1}, d_i >= 0."""
    m = len(M)
    n = ncols_of(M, ncols or 0)
    A = [list(map(int, row)) for row in M]
    U = identity(m)
    V = identity(n)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):
        # row_dst += q * row_src
        A[dst] = [a + q * b for a, b in zip(A[dst], A[src])]
        U[dst] = [a + q * b for a, b in zip(U[dst], U[src])]

    def add_col(dst, src, q):
        for row in A:
            row[dst] += q * row[src]
        for row in V:
            row[dst] += q * row[src]

    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                a = A[i][j]
                if a and (best is None or abs(a) < best[0]):
                    best = (abs(a), i, j)
                    if best[0] == 1:
                        break
            if best and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            p = A[t][t]
            dirty = False
            for i in range(t + 1, m):
                if A[i][t]:
                    add_row(i, t, -(A[i][t] // p))
                    if A[i][t]:
                        dirty = True
            for j in range(t + 1, n):
                if A[t][j]:
                    add_col(j, t, -(A[t][j] // p))
                    if A[t][j]:
                        dirty = True
            if dirty:
                # move the smallest remaining entry of row/column t onto the pivot
                cands = [(abs(A[i][t]), i, t) for i in range(t, m) if A[i][t]]
                cands += [(abs(A[t][j]), t, j) for j in range(t, n) if A[t][j]]
                _, i, j = min(cands)
                swap_rows(t, i)
                swap_cols(t, j)
                continue
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if A[i][j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(t, bad, 1)
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
            U[t] = [-a for a in U[t]]
        t += 1
    return U, A, V


def smith_invariants(M: Matrix, ncols: Optional[int] = None) -> list:
    _, D, _ = smith_form(M, ncols)
    return [D[i][i] for i in range(min(len(D), ncols_of(D, ncols or 0)))]


def hnf_rows(rows: Sequence[Sequence[int]], n: int) -> list:
    """Row Hermite normal form of the lattice spanned by rows (zero rows dropped)."""
    A = [list(map(int, r)) for r in rows if any(r)]
    out = []
    col = 0
    while A and col < n:
        piv = [r for r in A if r[col]]
        if not piv:
            col += 1
            continue
        rest = [r for r in A if not r[col]]
        while len(piv) > 1:
            piv.sort(key=lambda r: abs(r[col]))
            p = piv[0]
            new = [p]
            for r in piv[1:]:
                q = r[col] // p[col]
                r = [a - q * b for a, b in zip(r, p)]
                if r[col]:
                    new.append(r)
                elif any(r):
                    rest.append(r)
            piv = new
        p = piv[0]
        if p[col] < 0:
            p = [-a for a in p]
        out.append((col, p))
        A = rest
        col += 1
    # reduce entries above pivots
    for k in range(len(out)):
        ck, pk = out[k]
        for i in range(k):
            ci, ri = out[i]
            q = ri[ck] // pk[ck]
            if q:
                out[i] = (ci, [a - q * b for a, b in zip(ri, pk)])
    return [r for _, r in out]


# ---------------------------------------------------------------- fields

def rref(M: Matrix, n: int, p: Optional[int] = None):
    """Reduced row echelon form over Q (p None) or F_p. Returns (rows, pivots)."""
    if p is None:
        A = [[Fraction(a) for a in row] for row in M]
    else:
        A = [[a % p for a in row] for row in M]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(A)) if A[i][c]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = (1 / A[r][c]) if p is None else pow(A[r][c], -1, p)
        A[r] = [a * inv if p is None else a * inv % p for a in A[r]]
        for i in range(len(A)):
            if i != r and A[i][c]:
                f = A[i][c]
                if p is None:
                    A[i] = [a - f * b for a, b in zip(A[i], A[r])]
                else:
                    A[i] = [(a - f * b) % p for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == len(A):
            break
    rows = [[_clean(a) for a in row] for row in A[:r]]
    return rows, pivots


def _clean(a):
    if isinstance(a, Fraction) and a.denominator == 1:
        return int(a)
    return a


def _field_kernel(M: Matrix, n: int, p: Optional[int]) -> list:
    rows, pivots = rref(M, n, p)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = [0] * n
        v[f] = 1
        for row, c in zip(rows, pivots):
            v[c] = _clean(-row[f]) if p is None else (-row[f]) % p
        basis.append(v)
    return basis


# ---------------------------------------------------------------- ring-aware API

def _ring_kind(ring):
    """Return ("Z", None) | ("Q", None) | ("Fp", p) | ("Zm", m)."""
    if ring.kind == "ZZ":
        return "Z", None
    if ring.kind == "QQ":
        return "Q", None
    m = ring.modulus
    if ring.is_field:
        return "Fp", m
    return "Zm", m


def _lift_mod(M: Matrix, m: int, n: int) -> Matrix:
    rows = len(M)
    return [list(map(int, M[i])) + [m if j == i else 0 for j in range(rows)] for i in range(rows)]


def kernel(M: Matrix, ring, n: Optional[int] = None) -> list:
    """Generators of {x : M x = 0}; a basis for Z (saturated) and for fields."""
    n = ncols_of(M, n or 0)
    kind, p = _ring_kind(ring)
    if n == 0:
        return []
    if not M:
        return identity(n)
    if kind == "Q":
        return _field_kernel(M, n, None)
    if kind == "Fp":
        return _field_kernel(M, n, p)
    if kind == "Z":
        U, D, V = smith_form(M, n)
        r = sum(1 for i in range(min(len(D), n)) if D[i][i])
        vecs = [[V[i][j] for i in range(n)] for j in range(r, n)]
        return hnf_rows(vecs, n)
    # Z/m composite: x with M x in m Z^rows
    L = _lift_mod(M, p, n)
    U, D, V = smith_form(L)
    total = len(L[0])
    r = sum(1 for i in range(min(len(D), total)) if D[i][i])
    vecs = [[V[i][j] for i in range(n)] for j in range(r, total)]
    lattice = hnf_rows(vecs + [[p if i == j else 0 for i in range(n)] for j in range(n)], n)
    gens = [[a % p for a in v] for v in lattice]
    return [v for v in gens if any(v)]


def rank(M: Matrix, ring, n: Optional[int] = None) -> int:
    """Rank of the column span; over Z/m composite, the number of invariants equal to m."""
    n = ncols_of(M, n or 0)
    if not M or n == 0:
        return 0
    kind, p = _ring_kind(ring)
    if kind in ("Q", "Fp"):
        return len(rref(M, n, p)[1])
    if kind == "Z":
        return sum(1 for d in smith_invariants(M, n) if d)
    inv = smith_invariants(_lift_mod(M, p, n))
    return sum(1 for d in inv if d % p)


@dataclass(frozen=True)
class Cokernel:
    """ring^rows / im(M) ~ (+) ring/(d_i). projection maps ambient coordinates to summands."""
    orders: tuple  # per summand: 0 means free (Z, Q, F_p), m means free over Z/m, else torsion order
    projection: tuple  # rows: linear forms; entry i is taken modulo orders[i] when nonzero
    lifts: tuple  # ambient vectors mapping to the i-th unit vector

    @property
    def rank(self) -> int:
        return len(self.orders)

    def is_free(self, ring) -> bool:
        kind, p = _ring_kind(ring)
        if kind in ("Zm", "Fp"):
            return all(o == p for o in self.orders)
        return all(o == 0 for o in self.orders)

    def project(self, v: Sequence) -> list:
        out = []
        for row, o in zip(self.projection, self.orders):
            x = sum(a * b for a, b in zip(row, v) if a)
            out.append(x % o if o else _clean(Fraction(x)) if isinstance(x, Fraction) else x)
        return out


def cokernel(M: Matrix, ring, rows: int, n: Optional[int] = None) -> Cokernel:
    """Cokernel of M: ring^n -> ring^rows."""
    n = ncols_of(M, n or 0)
    kind, p = _ring_kind(ring)
    if kind in ("Q", "Fp"):
        Mt = transpose(M, rows) if M else [[0] * 0 for _ in range(rows)]
        # left kernel: y with y M = 0, i.e. kernel of M^T
        if n == 0:
            left = identity(rows)
        else:
            left = _field_kernel(Mt, rows, p)
        left = [list(r) for r in left]
        lifts = _field_lifts(left, rows, p)
        return Cokernel(tuple(0 if kind == "Q" else p for _ in left), tuple(map(tuple, left)),
                        tuple(map(tuple, lifts)))
    if kind == "Z":
        A = M if n else [[] for _ in range(rows)]
        if n == 0:
            U, D, V = identity(rows), [[] for _ in range(rows)], []
            diag = [0] * rows
        else:
            U, D, V = smith_form(A, n)
            diag = [D[i][i] if i < n else 0 for i in range(rows)]
        keep = [i for i in range(rows) if diag[i] != 1]
        Uinv = _unimodular_inverse(U)
        return Cokernel(tuple(diag[i] for i in keep), tuple(tuple(U[i]) for i in keep),
                        tuple(tuple(Uinv[r][i] for r in range(rows)) for i in keep))
    L = _lift_mod(M, p, n) if rows else []
    U, D, V = smith_form(L, n + rows)
    diag = [D[i][i] for i in range(rows)]
    keep = [i for i in range(rows) if diag[i] % p != 1 and diag[i] != 1]
    Uinv = _unimodular_inverse(U)
    return Cokernel(tuple(diag[i] for i in keep), tuple(tuple(a % p for a in U[i]) for i in keep),
                    tuple(tuple(Uinv[r][i] % p for r in range(rows)) for i in keep))


def _field_lifts(left: list, rows: int, p: Optional[int]) -> list:
    # vectors g_j with left * g_j = e_j
    lifts = []
    for j in range(len(left)):
        e = [1 if i == j else 0 for i in range(len(left))]
        x = solve(left, e, _FieldRing(p), rows)
        lifts.append(x)
    return lifts


class _FieldRing:
    def __init__(self, p):
        self.kind = "QQ" if p is None else "ZZ/m"
        self.modulus = p
        self.is_field = True


def _unimodular_inverse(U: Matrix) -> Matrix:
    n = len(U)
    rows, _ = rref([list(r) + [1 if i == j else 0 for j in range(n)] for i, r in enumerate(U)], 2 * n)
    return [[int(a) for a in r[n:]] for r in rows]


def solve(M: Matrix, b: Sequence, ring, n: Optional[int] = None):
    """Some x with M x = b, or None."""
    n = ncols_of(M, n or 0)
    rows = len(b)
    kind, p = _ring_kind(ring)
    if rows == 0:
        return [0] * n
    if n == 0:
        return [0] * 0 if not any(b) else None
    if kind in ("Q", "Fp"):
        aug = [list(M[i]) + [b[i]] for i in range(rows)]
        R, piv = rref(aug, n + 1, p)
        if n in piv:
            return None
        x = [0] * n
        for row, c in zip(R, piv):
            x[c] = row[n]
        return x
    A = M if kind == "Z" else _lift_mod(M, p, n)
    total = len(A[0])
    U, D, V = smith_form(A, total)
    c = matvec(U, b)
    y = [0] * total
    for i in range(rows):
        d = D[i][i] if i < total else 0
        if d == 0:
            if c[i]:
                return None
        else:
            if c[i] % d:
                return None
            y[i] = c[i] // d
    x = matvec(V, y)[:n]
    return x if kind == "Z" else [a % p for a in x]


def determinant(M: Matrix) -> Fraction:
    n = len(M)
    A = [[Fraction(a) for a in row] for row in M]
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if A[i][c]), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            det = -det
        det *= A[c][c]
        for i in range(c + 1, n):
            f = A[i][c] / A[c][c]
            if f:
                A[i] = [a - f * b for a, b in zip(A[i], A[c])]
    return det


def is_invertible(M: Matrix, ring) -> bool:
    """Square matrix invertible over the ring."""
    n = len(M)
    if any(len(r) != n for r in M):
        return False
    if n == 0:
        return True
    d = determinant(M)
    kind, p = _ring_kind(ring)
    if kind == "Q":
        return d != 0
    if kind == "Z":
        return d in (1, -1)
    return gcd(int(d) % p, p) == 1
