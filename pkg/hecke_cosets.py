"""
Right-coset representatives of Hecke double cosets Gamma2 M Gamma2 in GSp4(Q).

Every right coset of multiplier r has a unique representative (A B; 0 D) with
D in Hermite form (left GL2(Z) class), A = r (D^t)^-1 and B reduced modulo
{S D : S symmetric integral}. Writing T = B D^-1 (symmetric, denominators
dividing the largest elementary divisor delta of D), the reduced B are exactly
K D / delta with K symmetric in [0, delta)^3 and K D = 0 mod delta.

Levels r = p^l are enumerated once per (p, l) with numpy and grouped by
DivisorType through determinantal divisors; composite r is assembled from
coprime prime-power lists (combine_reps).
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Iterator, Sequence

import numpy as np
from sympy import factorint, isprime, multiplicity

from errors import DomainError
from normal_forms import DivisorType, block_upper_form, hnf2, rank_mod_p, smith_invariants
from symplectic_core import MatQ, Similitude

logger = logging.getLogger(__name__)


def _require_prime(p: int) -> None:
    if not isprime(p):
        raise DomainError(f"p must be prime, got {p}")


# --- representative type ----------------------------------------------------------

@dataclass(frozen=True)
class BlockUpperRep:
    A: MatQ
    B: MatQ
    D: MatQ
    lam: int

    def __post_init__(self):
        if self.lam < 1:
            raise DomainError(f"multiplier must be a positive integer, got {self.lam}")
        for name in ("A", "B", "D"):
            m = getattr(self, name)
            if m.n != 2 or not m.is_integral():
                raise DomainError(f"{name} must be an integral 2x2 matrix")
        if self.A != self.D.T.inverse().scale(self.lam):
            raise DomainError("A != lam * (D^t)^-1")
        if self.B.T @ self.D != self.D.T @ self.B:
            raise DomainError("B^t D is not symmetric")

    def matrix(self) -> MatQ:
        return MatQ.from_blocks(self.A, self.B, MatQ.zeros(2), self.D)

    def similitude(self) -> Similitude:
        return Similitude(self.matrix(), self.lam)

    def key(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self.D.entries + self.B.entries)

    def to_literal(self) -> list[str]:
        return self.matrix().to_literal()


def _rep_from_array(X: np.ndarray, lam: int) -> BlockUpperRep:
    X = X.tolist()
    blk = lambda i0, j0: MatQ.from_rows([row[j0:j0 + 2] for row in X[i0:i0 + 2]])
    return BlockUpperRep(blk(0, 0), blk(0, 2), blk(2, 2), lam)


# --- D and B enumeration -----------------------------------------------------------

def _hnf_candidates(p: int, l: int) -> Iterator[tuple[int, int, int]]:
    """(h11, h12, h22) of HNF matrices whose elementary divisors divide p^l."""
    r = p ** l
    for i in range(l + 1):
        for j in range(l + 1):
            a, c = p ** i, p ** j
            for b in range(c):
                d1 = math.gcd(a, b, c)
                if r % (a * c // d1) == 0:
                    yield a, b, c


def d_representatives(p: int, l: int) -> list[MatQ]:
    _require_prime(p)
    if l < 1:
        raise DomainError(f"l must be >= 1, got {l}")
    return [MatQ.from_rows([[a, b], [0, c]]) for a, b, c in sorted(_hnf_candidates(p, l))]


def _reduced_b_grid(D: Sequence[Sequence[int]], delta: int) -> np.ndarray:
    """All reduced B for D as an (k, 2, 2) int64 array, ordered by K lexicographically."""
    (d00, d01), (d10, d11) = D
    step = delta // math.gcd(d00, delta) if d10 == 0 else 1
    k12 = np.arange(0, delta, step, dtype=np.int64)
    k1, k2, k3 = (g.ravel() for g in np.meshgrid(k12, k12, np.arange(delta, dtype=np.int64), indexing="ij"))
    kd = np.stack([
        k1 * d00 + k2 * d10,
        k1 * d01 + k2 * d11,
        k2 * d00 + k3 * d10,
        k2 * d01 + k3 * d11,
    ], axis=1)
    keep = np.all(kd % delta == 0, axis=1)
    return (kd[keep] // delta).reshape(-1, 2, 2)


def b_representatives(D) -> list[MatQ]:
    rows = D.to_int_rows() if isinstance(D, MatQ) else [list(map(int, r)) for r in D]
    if rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0] == 0:
        raise DomainError("b_representatives needs a nonsingular D")
    delta = smith_invariants(rows)[-1]
    grid = _reduced_b_grid(rows, delta)
    return [MatQ.from_rows(b) for b in grid.tolist()]


def _level_blocks(p: int, l: int) -> Iterator[np.ndarray]:
    """Per Hermite D, the (k, 4, 4) array of representatives (A B; 0 D) of multiplier p^l."""
    r = p ** l
    for a, b, c in _hnf_candidates(p, l):
        Bs = _reduced_b_grid([[a, b], [0, c]], a * c // math.gcd(a, b, c))
        k = len(Bs)
        # A = r (D^t)^-1 = (r / ac) [[c, 0], [-b, a]]
        X = np.zeros((k, 4, 4), dtype=np.int64)
        X[:, 0, 0], X[:, 1, 0], X[:, 1, 1] = r // a, -(r * b) // (a * c), r // c
        X[:, 0:2, 2:4] = Bs
        X[:, 2, 2], X[:, 2, 3], X[:, 3, 3] = a, b, c
        yield X


_PAIRS = list(combinations(range(4), 2))


def _type_columns(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(a1, a2) per representative from gcds of entries and of 2x2 minors."""
    flat = X.reshape(len(X), 16)
    a1 = np.gcd.reduce(flat, axis=1)
    g2 = np.zeros(len(X), dtype=np.int64)
    for r0, r1 in _PAIRS:
        for c0, c1 in _PAIRS:
            g2 = np.gcd(g2, X[:, r0, c0] * X[:, r1, c1] - X[:, r0, c1] * X[:, r1, c0])
    return a1, g2 // a1


@lru_cache(maxsize=32)
def _level(p: int, l: int) -> dict[DivisorType, np.ndarray]:
    r = p ** l
    chunks, types = [], []
    for X in _level_blocks(p, l):
        chunks.append(X)
        types.append(np.stack(_type_columns(X), axis=1))
    X = np.concatenate(chunks)
    T = np.concatenate(types)
    out = {}
    for a1, a2 in sorted({tuple(t) for t in T.tolist()}):
        sel = X[(T[:, 0] == a1) & (T[:, 1] == a2)]
        order = np.lexsort(sel.reshape(len(sel), 16)[:, ::-1].T)
        out[DivisorType(a1, a2, r // a2, r // a1, r)] = sel[order]
    logger.debug("level p=%d l=%d: %d reps in %d double cosets", p, l, len(X), len(out))
    return out


@lru_cache(maxsize=64)
def type_degrees(p: int, l: int) -> dict[DivisorType, int]:
    """Degrees of every double coset of multiplier p^l, without building representatives."""
    _require_prime(p)
    if l < 0:
        raise DomainError(f"l must be >= 0, got {l}")
    r = p ** l
    counts: Counter = Counter()
    for X in _level_blocks(p, l):
        a1, a2 = _type_columns(X)
        pairs, n = np.unique(np.stack([a1, a2], axis=1), axis=0, return_counts=True)
        for (x, y), c in zip(pairs.tolist(), n.tolist()):
            counts[(x, y)] += c
    return {DivisorType(x, y, r // y, r // x, r): c for (x, y), c in sorted(counts.items())}


def _prime_power(r: int) -> tuple[int, int] | None:
    f = factorint(r)
    if len(f) != 1:
        return None
    (p, l), = f.items()
    return int(p), int(l)


def _local_type(dt: DivisorType, p: int) -> DivisorType:
    loc = [p ** multiplicity(p, v) for v in dt.as_tuple()]
    return DivisorType(*loc)


def right_coset_reps(divisor_type: DivisorType) -> list[BlockUpperRep]:
    dt = divisor_type
    if dt.r == 1:
        return [_identity_rep()]
    pl = _prime_power(dt.r)
    if pl is None:
        reps: list[BlockUpperRep] = [_identity_rep()]
        for p in sorted(factorint(dt.r)):
            reps = combine_reps(reps, right_coset_reps(_local_type(dt, int(p))))
        return sorted(reps, key=BlockUpperRep.key)
    p, l = pl
    block = _level(p, l).get(dt)
    if block is None:
        raise DomainError(f"no double coset of type {dt} at p={p}")
    return sorted((_rep_from_array(X, dt.r) for X in block), key=BlockUpperRep.key)


def reps_by_type(p: int, l: int) -> dict[DivisorType, list[BlockUpperRep]]:
    _require_prime(p)
    return {dt: right_coset_reps(dt) for dt in divisor_types(p, l)}


def _identity_rep() -> BlockUpperRep:
    one = MatQ.identity(2)
    return BlockUpperRep(one, MatQ.zeros(2), one, 1)


def degree(divisor_type: DivisorType) -> int:
    dt = divisor_type
    out = 1
    for p, _ in factorint(dt.r).items():
        loc = _local_type(dt, int(p))
        d = type_degrees(int(p), int(multiplicity(p, dt.r))).get(loc)
        if d is None:
            raise DomainError(f"no double coset of type {loc} at p={p}")
        out *= d
    return out


def divisor_types(p: int, l: int) -> list[DivisorType]:
    """Types (p^e1, p^e2, p^(l-e2), p^(l-e1)) with e1 <= e2 and 2*e2 <= l."""
    _require_prime(p)
    return sorted(
        DivisorType.from_exponents(p, e1, e2, l)
        for e1 in range(l // 2 + 1)
        for e2 in range(e1, l // 2 + 1)
    )


# --- canonical keys and products ---------------------------------------------------

def _canonical_from_blocks(A: MatQ, B: MatQ, D: MatQ, lam: int) -> BlockUpperRep:
    U, H = hnf2(D)
    V = U.inverse().T
    A, B = V @ A, V @ B
    T = B @ H.inverse()
    S = MatQ.from_rows([[-math.floor(T[i, j]) for j in range(2)] for i in range(2)])
    return BlockUpperRep(A, B + S @ H, H, lam)


def canonical_coset_key(M) -> BlockUpperRep:
    """Canonical (A B; 0 D) of the right coset Gamma2*M."""
    g = M if isinstance(M, Similitude) else Similitude.of(M)
    if g.lam <= 0 or g.lam.denominator != 1:
        raise DomainError(f"canonical_coset_key needs a positive integer multiplier, got {g.lam}")
    _, X = block_upper_form(g)
    A, B, _, D = X.blocks()
    return _canonical_from_blocks(A, B, D, int(g.lam))


def _as_rep(x) -> BlockUpperRep:
    if isinstance(x, BlockUpperRep):
        return x
    return canonical_coset_key(x)


def combine_reps(reps_q: Iterable, reps_r: Iterable) -> list[BlockUpperRep]:
    """Canonical forms of the products Q_i R_j for coprime multipliers."""
    qs, rs = [_as_rep(x) for x in reps_q], [_as_rep(x) for x in reps_r]
    if not qs or not rs:
        return []
    q, r = qs[0].lam, rs[0].lam
    if any(x.lam != q for x in qs) or any(x.lam != r for x in rs):
        raise DomainError("each representative list must have a single multiplier")
    if math.gcd(q, r) != 1:
        raise DomainError(f"combine_reps needs coprime multipliers, got {q} and {r}")
    out = []
    for Q in qs:
        for R in rs:
            out.append(_canonical_from_blocks(Q.A @ R.A, Q.A @ R.B + Q.B @ R.D, Q.D @ R.D, q * r))
    logger.debug("combined %d x %d reps for multiplier %d", len(qs), len(rs), q * r)
    return out


def all_reps(r: int) -> list[BlockUpperRep]:
    """Every right coset of multiplier r, across all double cosets."""
    if r < 1:
        raise DomainError(f"r must be a positive integer, got {r}")
    reps = [_identity_rep()]
    for p, l in sorted(factorint(r).items()):
        p, l = int(p), int(l)
        level = [_rep_from_array(X, p ** l) for block in _level(p, l).values() for X in block]
        reps = combine_reps(reps, level)
    return sorted(reps, key=BlockUpperRep.key)


# --- counting function -------------------------------------------------------------

def R_closed(p: int, l: int) -> int:
    _require_prime(p)
    num = 1 - p ** (2 * l) * (p + p ** 2 + p ** 3) + p ** (3 * l) * (p ** 2 + p ** 4)
    den = (1 - p) ** 2 * (1 + p + p ** 2)
    q, rem = divmod(num, den)
    if rem:
        raise RuntimeError(f"closed counting formula not integral at p={p}, l={l}")
    return q


def gl2_degree(p: int, l1: int, l2: int) -> int:
    """Degree of Gamma1 diag(p^l1, p^l2) Gamma1 in GL2."""
    k = l2 - l1
    if k < 0:
        raise DomainError(f"gl2_degree needs l1 <= l2, got ({l1}, {l2})")
    return 1 if k == 0 else p ** (k - 1) * (1 + p)


def R_sum(p: int, l: int) -> int:
    _require_prime(p)
    total = 0
    for i in range(l + 1):
        total += p ** (3 * i)
        for k in range(1, l - i + 1):
            total += gl2_degree(p, i, i + k) * p ** (3 * i + k)
    return total


def R_count(p: int, l: int) -> int:
    return sum(degree(t) for t in divisor_types(p, l))


# --- explicit tables -----------------------------------------------------------------

def hecke_generator(p: int, which: str) -> Similitude:
    """g1 = diag(1,1,p,p), g2 = p*1, g3 = diag(1,p,p^2,p)."""
    _require_prime(p)
    diags = {"g1": (1, 1, p, p), "g2": (p, p, p, p), "g3": (1, p, p * p, p)}
    if which not in diags:
        raise DomainError(f"unknown generator {which!r}; expected one of {sorted(diags)}")
    lam = p * p if which != "g1" else p
    return Similitude(MatQ.diag(*diags[which]), lam)


def lemma12_reps(p: int, which: str) -> list[MatQ]:
    """Explicit right-coset tables for g1, g2 and g3 (parameters run over 0..p-1, 0..p^2-1)."""
    _require_prime(p)
    m = lambda rows: MatQ.from_rows(rows)
    P = range(p)
    if which == "g2":
        return [MatQ.identity(4).scale(p)]
    if which == "g1":
        out = [MatQ.diag(p, p, 1, 1)]
        out += [m([[p, 0, 0, 0], [0, 1, 0, k1], [0, 0, 1, 0], [0, 0, 0, p]]) for k1 in P]
        out += [m([[1, -k2, k3, 0], [0, p, 0, 0], [0, 0, p, 0], [0, 0, k2, 1]]) for k2 in P for k3 in P]
        out += [m([[1, 0, k4, k5], [0, 1, k5, k6], [0, 0, p, 0], [0, 0, 0, p]])
                for k4 in P for k5 in P for k6 in P]
        return out
    if which == "g3":
        P2 = range(p * p)
        out = [MatQ.diag(p * p, p, 1, p)]
        out += [m([[p, -p * r1, 0, 0], [0, p * p, 0, 0], [0, 0, p, 0], [0, 0, r1, 1]]) for r1 in P]
        out += [m([[p, 0, 0, p * r2], [0, 1, r2, r3], [0, 0, p, 0], [0, 0, 0, p * p]])
                for r2 in P for r3 in P2]
        out += [m([[1, -r4, r5 * r4 + r6, r5], [0, p, p * r5, 0], [0, 0, p * p, 0], [0, 0, p * r4, p]])
                for r4 in P for r5 in P for r6 in P2]
        for r8 in P:
            for r9 in P:
                for r10 in P:
                    if rank_mod_p([[r8, r9], [r9, r10]], p) == 1:
                        out.append(m([[p, 0, r8, r9], [0, p, r9, r10], [0, 0, p, 0], [0, 0, 0, p]]))
        return out
    raise DomainError(f"unknown generator {which!r}; expected g1, g2 or g3")


# --- root datum and degree exponents -------------------------------------------------

def _unit(n: int, i: int) -> tuple[int, ...]:
    return tuple(int(k == i) for k in range(n + 1))


def _vec(*terms: tuple[int, tuple[int, ...]]) -> tuple[int, ...]:
    return tuple(sum(c * v[k] for c, v in terms) for k in range(len(terms[0][1])))


@dataclass(frozen=True)
class RootDatum:
    """Root datum of GSp_2n; vectors are coordinates in e0..en (roots) and f0..fn (coroots)."""
    n: int
    simple_roots: tuple[tuple[int, ...], ...]
    simple_coroots: tuple[tuple[int, ...], ...]
    cartan: tuple[tuple[int, ...], ...]
    positive_roots: tuple[tuple[int, ...], ...]
    two_rho: tuple[int, ...]

    def pairing_matrix(self) -> tuple[tuple[int, ...], ...]:
        return tuple(
            tuple(sum(a * c for a, c in zip(alpha, cor)) for cor in self.simple_coroots)
            for alpha in self.simple_roots
        )


def _displayed_cartan(n: int) -> tuple[tuple[int, ...], ...]:
    C = [[0] * n for _ in range(n)]
    for i in range(n):
        C[i][i] = 2
        if i + 1 < n:
            C[i][i + 1] = -1
            C[i + 1][i] = -1
    if n >= 2:
        C[n - 1][n - 2] = -2
    return tuple(tuple(r) for r in C)


@lru_cache(maxsize=None)
def root_datum(n: int) -> RootDatum:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    e = lambda i: _unit(n, i)
    roots = [_vec((1, e(n + 1 - i)), (-1, e(n - i))) for i in range(1, n)]
    roots.append(_vec((2, e(1)), (-1, e(0))))
    coroots = [_vec((1, e(n + 1 - i)), (-1, e(n - i))) for i in range(1, n)]
    coroots.append(e(1))
    positive = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            positive.append(_vec((1, e(j)), (-1, e(i))))
            positive.append(_vec((1, e(j)), (1, e(i)), (-1, e(0))))
        positive.append(_vec((2, e(i)), (-1, e(0))))
    rho2 = tuple(sum(v[k] for v in positive) for k in range(n + 1))
    rd = RootDatum(n, tuple(roots), tuple(coroots), _displayed_cartan(n), tuple(positive), rho2)
    if rd.pairing_matrix() != rd.cartan:
        raise RuntimeError(f"Cartan matrix of GSp_{2 * n} does not match the root pairings")
    return rd


def two_rho(n: int) -> tuple[int, ...]:
    return root_datum(n).two_rho


def degree_leading_exponent(ks: Sequence[int], l: int, n: int | None = None) -> int:
    """<2rho, k1 f1 + ... + kn fn + l f0>, the exponent E with degree = p^E (1 + O(1/p))."""
    ks = [int(k) for k in ks]
    n = len(ks) if n is None else n
    if len(ks) != n:
        raise DomainError(f"expected {n} exponents, got {len(ks)}")
    if ks != sorted(ks):
        raise DomainError(f"exponents must be nondecreasing, got {ks}")
    if ks[0] < l // 2 or ks[-1] > l:
        raise DomainError(f"exponents {ks} outside [{l // 2}, {l}]")
    rho = two_rho(n)
    return rho[0] * l + sum(rho[i] * k for i, k in enumerate(ks, start=1))


def reordered_exponents(dt: DivisorType, p: int) -> tuple[tuple[int, int], int]:
    """((k1, k2), l) with k1 = l - v(a2), k2 = l - v(a1)."""
    l = multiplicity(p, dt.r)
    if p ** l != dt.r:
        raise DomainError(f"{dt} is not of prime-power multiplier at p={p}")
    e1, e2 = multiplicity(p, dt.a1), multiplicity(p, dt.a2)
    return (l - e2, l - e1), l


def degree_ratio(dt: DivisorType, p: int) -> Fraction:
    ks, l = reordered_exponents(dt, p)
    return Fraction(degree(dt), p ** degree_leading_exponent(ks, l))
