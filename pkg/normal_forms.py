"""
Normal forms for integer and p-adic matrices.

- smith_normal_form: U*M*V = diag(s1, s2, ...) with s1 | s2 | ... (integer pivoting,
  same row/column clearing scheme as the usual PID Smith decomposition).
- hnf2: left-unimodular Hermite form of a nonsingular 2x2 integer matrix.
- symplectic_elementary_divisors / padic_block_diagonalize: two-sided reduction of
  a similitude by *symplectic* row and column operations to diag(a1,a2,d1,d2).
  The same pivot loop runs over Z (xgcd reducers) or over Z_(p) (valuation
  reducers on exact Fractions).
- classify_stratum: rank/valuation label of a multiplier-zero matrix over Q_p.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from sympy import isprime, multiplicity

from errors import DomainError
from symplectic_core import MatQ, Similitude, multiplier

logger = logging.getLogger(__name__)


# --- small integer helpers ----------------------------------------------------

def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """(g, s, t) with s*a + t*b = g = gcd(a, b) >= 0."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if a < 0:
        a, s0, t0 = -a, -s0, -t0
    return a, s0, t0


def valuation(x, p: int) -> float:
    """p-adic valuation of an exact rational; +inf for zero."""
    x = Fraction(x)
    if x == 0:
        return math.inf
    return multiplicity(p, abs(x.numerator)) - multiplicity(p, x.denominator)


def _eye(n: int) -> list[list]:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _mul(a: list[list], b: list[list]) -> list[list]:
    n, m, k = len(a), len(b[0]), len(b)
    return [[sum(a[i][t] * b[t][j] for t in range(k)) for j in range(m)] for i in range(n)]


def _as_rows(M) -> list[list]:
    if isinstance(M, MatQ):
        return M.rows()
    return [list(r) for r in M]


def _int_rows(M) -> list[list[int]]:
    rows = _as_rows(M)
    out = []
    for r in rows:
        row = []
        for v in r:
            v = Fraction(v)
            if v.denominator != 1:
                raise DomainError(f"expected an integer matrix, found entry {v}")
            row.append(int(v))
        out.append(row)
    return out


# --- types --------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class DivisorType:
    """Symplectic elementary divisors (a1, a2, d2, d1) of a double coset of multiplier r."""
    a1: int
    a2: int
    d2: int
    d1: int
    r: int = field(default=0, compare=False)

    def __post_init__(self):
        r = self.r or self.a1 * self.d1
        object.__setattr__(self, "r", r)
        vals = (self.a1, self.a2, self.d2, self.d1)
        if min(vals) < 1:
            raise DomainError(f"elementary divisors must be positive, got {vals}")
        if self.a2 % self.a1 or self.d2 % self.a2 or self.d1 % self.d2:
            raise DomainError(f"divisibility chain a1|a2|d2|d1 fails for {vals}")
        if self.a1 * self.d1 != r or self.a2 * self.d2 != r:
            raise DomainError(f"a1*d1 = a2*d2 = r fails for {vals} with r={r}")

    @classmethod
    def parse(cls, text: str) -> "DivisorType":
        parts = [int(t) for t in str(text).replace(" ", "").split(",") if t]
        if len(parts) != 4:
            raise DomainError(f"a divisor type needs four entries a1,a2,d2,d1, got {text!r}")
        return cls(*parts)

    @classmethod
    def from_exponents(cls, p: int, e1: int, e2: int, l: int) -> "DivisorType":
        return cls(p ** e1, p ** e2, p ** (l - e2), p ** (l - e1))

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.a1, self.a2, self.d2, self.d1)

    def exponents(self, p: int) -> tuple[int, ...]:
        return tuple(multiplicity(p, v) for v in self.as_tuple())

    def diag(self) -> MatQ:
        return MatQ.diag(self.a1, self.a2, self.d1, self.d2)

    def __str__(self) -> str:
        return ",".join(str(v) for v in self.as_tuple())


@dataclass(frozen=True, order=True)
class StratumLabel:
    """Rank1{k0} (ks has one entry) or unordered Rank2{kmin,kmax}."""
    rank: int
    ks: tuple

    def __post_init__(self):
        ks = tuple(sorted(int(k) for k in self.ks))
        if self.rank not in (1, 2) or len(ks) != self.rank:
            raise DomainError(f"bad stratum label rank={self.rank} ks={self.ks}")
        object.__setattr__(self, "ks", ks)

    def shift(self, j: int) -> "StratumLabel":
        return StratumLabel(self.rank, tuple(k + j for k in self.ks))

    def __str__(self) -> str:
        return f"Rank{self.rank}{{{','.join(str(k) for k in self.ks)}}}"

    @classmethod
    def parse(cls, text: str) -> "StratumLabel":
        head, _, body = text.strip().partition("{")
        ks = tuple(int(t) for t in body.rstrip("}").split(",") if t.strip())
        return cls(int(head.replace("Rank", "")), ks)


def Rank1(k0: int) -> StratumLabel:
    return StratumLabel(1, (k0,))


def Rank2(k1: int, k2: int) -> StratumLabel:
    return StratumLabel(2, (k1, k2))


# --- Smith / Hermite ------------------------------------------------------------

def _snf(a: list[list[int]]):
    n, m = len(a), len(a[0]) if a else 0
    a = [list(r) for r in a]
    U, V = _eye(n), _eye(m)

    def add_row(dst, src, q):  # row dst += q*row src
        for mat in (a, U):
            mat[dst] = [x + q * y for x, y in zip(mat[dst], mat[src])]

    def add_col(dst, src, q):
        for mat in (a, V):
            for row in mat:
                row[dst] += q * row[src]

    for t in range(min(n, m)):
        while True:
            best = None
            for i in range(t, n):
                for j in range(t, m):
                    if a[i][j] and (best is None or abs(a[i][j]) < abs(a[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                return U, a, V
            i, j = best
            a[t], a[i] = a[i], a[t]
            U[t], U[i] = U[i], U[t]
            for mat in (a, V):
                for row in mat:
                    row[t], row[j] = row[j], row[t]
            piv = a[t][t]
            clean = True
            for i in range(t + 1, n):
                q = a[i][t] // piv
                if q:
                    add_row(i, t, -q)
                clean &= a[i][t] == 0
            for j in range(t + 1, m):
                q = a[t][j] // piv
                if q:
                    add_col(j, t, -q)
                clean &= a[t][j] == 0
            if not clean:
                continue
            bad = next((i for i in range(t + 1, n) for j in range(t + 1, m) if a[i][j] % piv), None)
            if bad is None:
                break
            add_row(t, bad, 1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            U[t] = [-x for x in U[t]]
    return U, a, V


def smith_normal_form(M) -> tuple[MatQ, MatQ, MatQ]:
    """(U, S, V) with U*M*V = S diagonal, s1 | s2 | ..., U and V unimodular."""
    rows = _int_rows(M)
    U, S, V = _snf(rows)
    return MatQ.from_rows(U), MatQ.from_rows(S), MatQ.from_rows(V)


def smith_invariants(M) -> tuple[int, ...]:
    _, S, _ = _snf(_int_rows(M))
    return tuple(S[i][i] for i in range(min(len(S), len(S[0]))))


def hnf2(D) -> tuple[MatQ, MatQ]:
    """(U, H) with H = U*D upper triangular, h11, h22 > 0 and 0 <= h12 < h22."""
    (a, b), (c, d) = _int_rows(D)
    if a * d - b * c == 0:
        raise DomainError("hnf2 needs a nonsingular matrix")
    g, x, y = xgcd(a, c)
    U = [[x, y], [-c // g, a // g]]
    H = _mul(U, [[a, b], [c, d]])
    if H[1][1] < 0:
        U[1] = [-v for v in U[1]]
        H[1] = [-v for v in H[1]]
    q = H[0][1] // H[1][1]
    if q:
        U[0] = [u0 - q * u1 for u0, u1 in zip(U[0], U[1])]
        H[0] = [h0 - q * h1 for h0, h1 in zip(H[0], H[1])]
    return MatQ.from_rows(U), MatQ.from_rows(H)


def hnf2_key(D) -> tuple[int, int, int]:
    _, H = hnf2(D)
    return int(H[0, 0]), int(H[0, 1]), int(H[1, 1])


# --- symplectic two-sided reduction ---------------------------------------------

class _IntegerRing:
    def reducer(self, x, y):
        """Determinant-one W with (x, y) W = (g, 0)."""
        g, s, t = xgcd(int(x), int(y))
        return [[s, -int(y) // g], [t, int(x) // g]]

    def divides(self, h, x) -> bool:
        return int(x) % int(h) == 0


class _LocalRing:
    def __init__(self, p: int):
        self.p = p

    def reducer(self, x, y):
        if valuation(x, self.p) <= valuation(y, self.p):
            return [[1, -Fraction(y) / x], [0, 1]]
        return [[0, -1], [1, Fraction(x) / y]]

    def divides(self, h, x) -> bool:
        return valuation(h, self.p) <= valuation(x, self.p)


def _embed_pair(i: int, W) -> list[list]:
    """W acting on the coordinate pair (i, i+2)."""
    E = _eye(4)
    E[i][i], E[i][i + 2] = W[0][0], W[0][1]
    E[i + 2][i], E[i + 2][i + 2] = W[1][0], W[1][1]
    return E


def _J(U) -> list[list]:
    """(U 0; 0 U^-t) for det U = +-1."""
    det = U[0][0] * U[1][1] - U[0][1] * U[1][0]
    Uit = [[U[1][1] * det, -U[1][0] * det], [-U[0][1] * det, U[0][0] * det]]
    E = [[0] * 4 for _ in range(4)]
    for i in range(2):
        for j in range(2):
            E[i][j] = U[i][j]
            E[i + 2][j + 2] = Uit[i][j]
    return E


def _T(W) -> list[list]:
    return [[W[0][0], W[1][0]], [W[0][1], W[1][1]]]


class _Reducer:
    def __init__(self, X, ring):
        self.X = [list(r) for r in X]
        self.L = _eye(4)
        self.R = _eye(4)
        self.ring = ring

    def left(self, E):
        self.X = _mul(E, self.X)
        self.L = _mul(E, self.L)

    def right(self, E):
        self.X = _mul(self.X, E)
        self.R = _mul(self.R, E)

    def clear_row0(self):
        X = self.X
        if X[0][2]:
            self.right(_embed_pair(0, self.ring.reducer(X[0][0], X[0][2])))
        if self.X[0][3]:
            self.right(_embed_pair(1, self.ring.reducer(self.X[0][1], self.X[0][3])))
        if self.X[0][1]:
            self.right(_J(self.ring.reducer(self.X[0][0], self.X[0][1])))

    def clear_col0(self):
        if self.X[2][0]:
            self.left(_embed_pair(0, _T(self.ring.reducer(self.X[0][0], self.X[2][0]))))
        if self.X[3][0]:
            self.left(_embed_pair(1, _T(self.ring.reducer(self.X[1][0], self.X[3][0]))))
        if self.X[1][0]:
            self.left(_J(_T(self.ring.reducer(self.X[0][0], self.X[1][0]))))

    def pivot(self):
        while True:
            self.clear_row0()
            self.clear_col0()
            if not any(self.X[0][1:]):
                return

    def clear_inner(self):
        """2x2 block on coordinates (1, 3)."""
        while True:
            X = self.X
            if X[1][3]:
                self.right(_embed_pair(1, self.ring.reducer(X[1][1], X[1][3])))
            if self.X[3][1]:
                self.left(_embed_pair(1, _T(self.ring.reducer(self.X[1][1], self.X[3][1]))))
            if not self.X[1][3]:
                return


def _diagonalize(X, ring, integral_signs: bool) -> _Reducer:
    red = _Reducer(X, ring)
    while True:
        red.pivot()
        h = red.X[0][0]
        bad = next((i for i in (1, 3) for j in (1, 3) if not ring.divides(h, red.X[i][j])), None)
        if bad is None:
            break
        if bad == 1:
            red.left(_J([[1, 1], [0, 1]]))
        else:
            E = _eye(4)
            E[0][3], E[1][2] = 1, 1
            red.left(E)
    while True:
        red.clear_inner()
        s1 = red.X[1][1]
        if ring.divides(s1, red.X[3][3]):
            break
        red.left(_embed_pair(1, [[1, 1], [0, 1]]))
    if integral_signs:
        if red.X[0][0] < 0:
            red.left(_embed_pair(0, [[-1, 0], [0, -1]]))
        if red.X[1][1] < 0:
            red.left(_embed_pair(1, [[-1, 0], [0, -1]]))
    return red


def _check_diagonal(X) -> None:
    off = [(i, j) for i in range(4) for j in range(4) if i != j and X[i][j]]
    if off:
        raise RuntimeError(f"symplectic reduction left off-diagonal entries at {off}")


def symplectic_elementary_divisors(N: Similitude) -> tuple[DivisorType, MatQ, MatQ]:
    """DivisorType of Gamma N Gamma with witnesses g1, g2 in Sp4(Z): g1 N g2 = diag(a1,a2,d1,d2)."""
    if not N.mat.is_integral():
        raise DomainError("symplectic_elementary_divisors needs an integral matrix")
    if N.lam <= 0 or N.lam.denominator != 1:
        raise DomainError(f"multiplier must be a positive integer, got {N.lam}")
    r = int(N.lam)
    red = _diagonalize(N.mat.to_int_rows(), _IntegerRing(), integral_signs=True)
    X = red.X
    _check_diagonal(X)
    a1, a2, d1, d2 = X[0][0], X[1][1], X[2][2], X[3][3]
    dt = DivisorType(a1, a2, d2, d1, r)
    g1, g2 = MatQ.from_rows(red.L), MatQ.from_rows(red.R)
    if g1 @ N.mat @ g2 != dt.diag():
        raise RuntimeError("witness check failed in symplectic_elementary_divisors")
    return dt, g1, g2


def divisor_type_of(M, r: int | None = None) -> DivisorType:
    """
    DivisorType from determinantal divisors: a1 = gcd of entries, a1*a2 = gcd of
    the 2x2 minors. No witnesses; used on hot enumeration paths.
    """
    rows = _int_rows(M)
    a1 = math.gcd(*[v for row in rows for v in row])
    g2 = 0
    for r0, r1 in combinations(range(4), 2):
        x, y = rows[r0], rows[r1]
        for c0, c1 in combinations(range(4), 2):
            g2 = math.gcd(g2, x[c0] * y[c1] - x[c1] * y[c0])
    if r is None:
        lam = multiplier(MatQ.from_rows(rows))
        if lam is None or lam <= 0:
            raise DomainError("divisor_type_of needs a similitude with positive multiplier")
        r = int(lam)
    a2 = g2 // a1
    return DivisorType(a1, a2, r // a2, r // a1, r)


@dataclass
class PadicDiagonalForm:
    exponents: tuple[int, int, int, int]   # v(a1) <= v(a2) <= v(d2) <= v(d1)
    diagonal: MatQ                         # diag(a1, a2, d1, d2) up to p-units
    gamma1: MatQ
    gamma2: MatQ


def padic_block_diagonalize(g: Similitude, p: int) -> PadicDiagonalForm:
    """Two-sided Sp4(Z_(p)) reduction of a p-integral similitude with lam != 0."""
    if not isprime(p):
        raise DomainError(f"p must be prime, got {p}")
    if g.lam == 0:
        raise DomainError("multiplier is zero; use classify_stratum")
    if any(valuation(v, p) < 0 for v in g.mat.entries):
        raise DomainError("matrix is not p-integral")
    red = _diagonalize(g.mat.rows(), _LocalRing(p), integral_signs=False)
    X = red.X
    _check_diagonal(X)
    v = [valuation(X[i][i], p) for i in range(4)]
    exps = (int(v[0]), int(v[1]), int(v[3]), int(v[2]))
    if list(exps) != sorted(exps):
        raise RuntimeError(f"p-adic reduction produced unsorted exponents {exps}")
    return PadicDiagonalForm(exps, MatQ.from_rows(X), MatQ.from_rows(red.L), MatQ.from_rows(red.R))


def block_upper_form(M: Similitude) -> tuple[MatQ, MatQ]:
    """gamma in Sp4(Z) with gamma*M = (A B; 0 D) for an integral similitude M."""
    if not M.mat.is_integral() or M.lam == 0:
        raise DomainError("block_upper_form needs an integral similitude with nonzero multiplier")
    red = _Reducer(M.mat.to_int_rows(), _IntegerRing())
    red.clear_col0()
    if red.X[3][1]:
        red.left(_embed_pair(1, _T(red.ring.reducer(red.X[1][1], red.X[3][1]))))
    if any(red.X[i][j] for i in (2, 3) for j in (0, 1)):
        raise RuntimeError("left reduction did not reach block upper triangular form")
    return MatQ.from_rows(red.L), MatQ.from_rows(red.X)


# --- rank strata ----------------------------------------------------------------

def padic_smith_exponents(M: MatQ, p: int) -> list[int]:
    """Valuations of the nonzero p-adic Smith invariants (minimal-valuation pivoting)."""
    a = M.rows()
    live_rows, live_cols = list(range(M.n)), list(range(M.n))
    exps = []
    while True:
        best, bv = None, math.inf
        for i in live_rows:
            for j in live_cols:
                v = valuation(a[i][j], p)
                if v < bv:
                    best, bv = (i, j), v
        if best is None:
            break
        i, j = best
        exps.append(int(bv))
        pv = a[i][j]
        for r in live_rows:
            if r != i and a[r][j]:
                f = a[r][j] / pv
                a[r] = [x - f * y for x, y in zip(a[r], a[i])]
        live_rows.remove(i)
        live_cols.remove(j)
    return sorted(exps)


def classify_stratum(M: MatQ, p: int) -> StratumLabel:
    if M.is_zero():
        raise DomainError("the zero matrix lies in no stratum")
    lam = multiplier(M)
    if lam != 0:
        raise DomainError(f"classify_stratum needs multiplier 0, got {lam}")
    for v in M.entries:
        den = v.denominator
        if den != p ** multiplicity(p, den):
            raise DomainError(f"entry {v} has a denominator prime to p={p}")
    exps = padic_smith_exponents(M, p)
    if len(exps) == 1:
        return Rank1(exps[0])
    if len(exps) == 2:
        return Rank2(exps[0], exps[1])
    raise DomainError(f"multiplier-zero matrix of rank {len(exps)} is not classifiable")


def rank_mod_p(M, p: int) -> int:
    """Rank over F_p of an integral matrix."""
    a = [[int(v) % p for v in r] for r in _int_rows(M)]
    rank, n, m = 0, len(a), len(a[0])
    for c in range(m):
        piv = next((r for r in range(rank, n) if a[r][c]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = pow(a[rank][c], -1, p)
        a[rank] = [(x * inv) % p for x in a[rank]]
        for r in range(n):
            if r != rank and a[r][c]:
                f = a[r][c]
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[rank])]
        rank += 1
    return rank
