"""
Symplectic core: exact 2x2 / 4x4 matrices over Q, the similitude predicate,
block relations, the interleaving embedding and Sp generators.

OVERVIEW
- MatQ holds a square matrix of Fractions (row-major, dimension stored at runtime).
- Omega(n) = (0 1_n; -1_n 0). A matrix M is a similitude with multiplier lam when
  M^t Omega M = lam Omega; lam = 0 is allowed (the enveloping semigroup MSp).
- The odot embedding puts M1 on rows/cols (1,3) and M2 on rows/cols (2,4).

MATRIX LITERALS
- A literal is a JSON array of strings, each an integer or "a/b", row-major.
  Nested rows are accepted on input; output is always flat.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from errors import DomainError

logger = logging.getLogger(__name__)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise DomainError(f"matrix entries must be exact (int, Fraction or 'a/b'), got {x!r}")


@dataclass(frozen=True)
class MatQ:
    n: int
    entries: tuple

    def __post_init__(self):
        if self.n not in (1, 2, 4):
            raise DomainError(f"unsupported dimension n={self.n}")
        vals = tuple(_as_fraction(v) for v in self.entries)
        if len(vals) != self.n * self.n:
            raise DomainError(f"expected {self.n * self.n} entries, got {len(vals)}")
        object.__setattr__(self, "entries", vals)

    # --- constructors -------------------------------------------------------
    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "MatQ":
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise DomainError("matrix must be square")
        return cls(n, tuple(v for r in rows for v in r))

    @classmethod
    def identity(cls, n: int) -> "MatQ":
        return cls(n, tuple(1 if i == j else 0 for i in range(n) for j in range(n)))

    @classmethod
    def zeros(cls, n: int) -> "MatQ":
        return cls(n, (0,) * (n * n))

    @classmethod
    def diag(cls, *vals) -> "MatQ":
        n = len(vals)
        return cls(n, tuple(vals[i] if i == j else 0 for i in range(n) for j in range(n)))

    @classmethod
    def from_blocks(cls, A: "MatQ", B: "MatQ", C: "MatQ", D: "MatQ") -> "MatQ":
        m = A.n
        rows = []
        for i in range(m):
            rows.append([A[i, j] for j in range(m)] + [B[i, j] for j in range(m)])
        for i in range(m):
            rows.append([C[i, j] for j in range(m)] + [D[i, j] for j in range(m)])
        return cls.from_rows(rows)

    @classmethod
    def from_literal(cls, lit) -> "MatQ":
        """Parse a matrix literal: flat or nested list of ints / 'a/b' strings."""
        if lit and isinstance(lit[0], (list, tuple)):
            return cls.from_rows(lit)
        flat = list(lit)
        n = int(round(len(flat) ** 0.5))
        if n * n != len(flat):
            raise DomainError(f"literal of length {len(flat)} is not a square matrix")
        return cls(n, tuple(flat))

    # --- access -------------------------------------------------------------
    def __getitem__(self, ij) -> Fraction:
        i, j = ij
        return self.entries[i * self.n + j]

    def rows(self) -> list[list[Fraction]]:
        n = self.n
        return [list(self.entries[i * n:(i + 1) * n]) for i in range(n)]

    def to_literal(self) -> list[str]:
        return [str(v) for v in self.entries]

    def to_int_rows(self) -> list[list[int]]:
        if not self.is_integral():
            raise DomainError("matrix is not integral")
        return [[int(v) for v in r] for r in self.rows()]

    def __repr__(self) -> str:
        return f"MatQ({self.n}, {self.to_literal()})"

    # --- arithmetic ---------------------------------------------------------
    def __matmul__(self, other: "MatQ") -> "MatQ":
        if self.n != other.n:
            raise DomainError(f"dimension mismatch {self.n} vs {other.n}")
        n = self.n
        a, b = self.entries, other.entries
        out = []
        for i in range(n):
            row = a[i * n:(i + 1) * n]
            for j in range(n):
                s = Fraction(0)
                for k in range(n):
                    if row[k]:
                        s += row[k] * b[k * n + j]
                out.append(s)
        return MatQ(n, tuple(out))

    def __add__(self, other: "MatQ") -> "MatQ":
        return MatQ(self.n, tuple(x + y for x, y in zip(self.entries, other.entries)))

    def __sub__(self, other: "MatQ") -> "MatQ":
        return MatQ(self.n, tuple(x - y for x, y in zip(self.entries, other.entries)))

    def __neg__(self) -> "MatQ":
        return MatQ(self.n, tuple(-x for x in self.entries))

    def scale(self, c) -> "MatQ":
        c = _as_fraction(c)
        return MatQ(self.n, tuple(c * x for x in self.entries))

    @property
    def T(self) -> "MatQ":
        n = self.n
        return MatQ(n, tuple(self.entries[j * n + i] for i in range(n) for j in range(n)))

    def is_integral(self) -> bool:
        return all(v.denominator == 1 for v in self.entries)

    def is_zero(self) -> bool:
        return not any(self.entries)

    def det(self) -> Fraction:
        m = self.rows()
        n = self.n
        d = Fraction(1)
        for c in range(n):
            piv = next((r for r in range(c, n) if m[r][c] != 0), None)
            if piv is None:
                return Fraction(0)
            if piv != c:
                m[c], m[piv] = m[piv], m[c]
                d = -d
            d *= m[c][c]
            for r in range(c + 1, n):
                f = m[r][c] / m[c][c]
                if f:
                    m[r] = [x - f * y for x, y in zip(m[r], m[c])]
        return d

    def inverse(self) -> "MatQ":
        n = self.n
        m = [r + [Fraction(int(i == k)) for k in range(n)] for i, r in enumerate(self.rows())]
        for c in range(n):
            piv = next((r for r in range(c, n) if m[r][c] != 0), None)
            if piv is None:
                raise DomainError("matrix is singular")
            m[c], m[piv] = m[piv], m[c]
            pv = m[c][c]
            m[c] = [x / pv for x in m[c]]
            for r in range(n):
                if r != c and m[r][c]:
                    f = m[r][c]
                    m[r] = [x - f * y for x, y in zip(m[r], m[c])]
        return MatQ.from_rows([r[n:] for r in m])

    def blocks(self) -> tuple["MatQ", "MatQ", "MatQ", "MatQ"]:
        """(A, B, C, D) with self = (A B; C D)."""
        if self.n % 2:
            raise DomainError("block split needs even dimension")
        h = self.n // 2
        r = self.rows()
        blk = lambda i0, j0: MatQ.from_rows([row[j0:j0 + h] for row in r[i0:i0 + h]])
        return blk(0, 0), blk(0, h), blk(h, 0), blk(h, h)


def omega(n: int = 4) -> MatQ:
    h = n // 2
    rows = [[0] * n for _ in range(n)]
    for i in range(h):
        rows[i][i + h] = 1
        rows[i + h][i] = -1
    return MatQ.from_rows(rows)


def multiplier(M: MatQ) -> Fraction | None:
    """lam with M^t Omega M = lam Omega, or None when M is not a similitude."""
    W = omega(M.n)
    X = M.T @ W @ M
    lam = X[0, M.n // 2]
    return lam if X == W.scale(lam) else None


@dataclass(frozen=True)
class Similitude:
    mat: MatQ
    lam: Fraction

    def __post_init__(self):
        lam = _as_fraction(self.lam)
        object.__setattr__(self, "lam", lam)
        W = omega(self.mat.n)
        if self.mat.T @ W @ self.mat != W.scale(lam):
            raise DomainError(f"matrix is not a similitude with multiplier {lam}")

    @classmethod
    def of(cls, M: MatQ) -> "Similitude":
        lam = multiplier(M)
        if lam is None:
            raise DomainError(f"{M!r} is not a similitude")
        return cls(M, lam)

    def __matmul__(self, other: "Similitude") -> "Similitude":
        return Similitude(self.mat @ other.mat, self.lam * other.lam)

    def scale(self, c) -> "Similitude":
        c = _as_fraction(c)
        return Similitude(self.mat.scale(c), self.lam * c * c)

    @property
    def n(self) -> int:
        return self.mat.n


def symplectic_inverse(g: Similitude) -> Similitude:
    """lam^-1 (D^t -B^t; -C^t A^t)."""
    if g.lam == 0:
        raise DomainError("a multiplier-zero element has no inverse")
    A, B, C, D = g.mat.blocks()
    inv = MatQ.from_blocks(D.T, -B.T, -C.T, A.T).scale(1 / g.lam)
    return Similitude(inv, 1 / g.lam)


def block_relations(g: Similitude) -> dict[str, bool]:
    """
    The block conditions that follow from g^t Omega g = lam Omega
    (column form) and g Omega g^t = lam Omega (row form).
    """
    A, B, C, D = g.mat.blocks()
    one = MatQ.identity(A.n).scale(g.lam)
    return {
        "AtC_sym": A.T @ C == C.T @ A,
        "BtD_sym": B.T @ D == D.T @ B,
        "AtD_minus_CtB": A.T @ D - C.T @ B == one,
        "ABt_sym": A @ B.T == B @ A.T,
        "CDt_sym": C @ D.T == D @ C.T,
        "ADt_minus_BCt": A @ D.T - B @ C.T == one,
    }


def odot(M1, M2) -> Similitude:
    """Interleave two 2x2 similitudes with a common multiplier into a 4x4 one."""
    m1 = M1.mat if isinstance(M1, Similitude) else M1
    m2 = M2.mat if isinstance(M2, Similitude) else M2
    if m1.n != 2 or m2.n != 2:
        raise DomainError("odot takes two 2x2 matrices")
    q1, q2 = m1.det(), m2.det()
    if q1 != q2:
        raise DomainError(f"odot needs equal multipliers, got {q1} and {q2}")
    a1, b1, c1, d1 = m1.entries
    a2, b2, c2, d2 = m2.entries
    M = MatQ.from_rows([
        [a1, 0, b1, 0],
        [0, a2, 0, b2],
        [c1, 0, d1, 0],
        [0, c2, 0, d2],
    ])
    return Similitude(M, q1)


def stratum_point(p: int, k1: int, k2: int | None = None) -> MatQ:
    """P_{k1,k2} = diag(0,0,p^k1,p^k2); with k2 None the rank-one P_{k0} = diag(0,0,p^k0,0)."""
    a = Fraction(p) ** k1
    b = 0 if k2 is None else Fraction(p) ** k2
    return MatQ.diag(0, 0, a, b)


# --- generators ---------------------------------------------------------------

def _elem(n: int, cells: Iterable[tuple[int, int, int]]) -> MatQ:
    rows = [[int(i == j) for j in range(n)] for i in range(n)]
    for i, j, v in cells:
        rows[i][j] += v
    return MatQ.from_rows(rows)


def generator_families(n: int = 2, modulus: int | None = None) -> dict[str, list[MatQ]]:
    """
    The five elementary families of Sp_{2n} plus Omega. Over Z (modulus None)
    alpha = 1; over Z/N alpha runs through 1..N-1. All entries are integers and
    every matrix has multiplier 1 over Z.
    """
    if n not in (1, 2):
        raise DomainError(f"generators are provided for n in (1, 2), got {n}")
    if modulus is not None and modulus < 2:
        raise DomainError(f"modulus must be >= 2, got {modulus}")
    alphas = [1] if modulus is None else list(range(1, modulus))
    N = 2 * n
    fam: dict[str, list[MatQ]] = {f"family{k}": [] for k in range(1, 6)}
    for a in alphas:
        for i in range(n):
            fam["family1"].append(_elem(N, [(i, i + n, a)]))
        for i in range(n):
            fam["family2"].append(_elem(N, [(i + n, i, a)]))
        for i, j in combinations(range(n), 2):
            fam["family3"].append(_elem(N, [(i, j + n, a), (j, i + n, a)]))
        for i, j in combinations(range(n), 2):
            fam["family4"].append(_elem(N, [(i + n, j, a), (j + n, i, a)]))
        for i in range(n):
            for j in range(n):
                if i != j:
                    fam["family5"].append(_elem(N, [(i, j, a), (j + n, i + n, -a)]))
    fam["omega"] = [omega(N)]
    return fam


def generators(n: int = 2, modulus: int | None = None) -> list[MatQ]:
    fam = generator_families(n, modulus)
    return [g for key in ("family1", "family2", "family3", "family4", "family5", "omega") for g in fam[key]]


def random_word(rng: np.random.Generator, length: int = 10, n: int = 2) -> Similitude:
    """Product of `length` random Sp generators or their inverses."""
    gens = [Similitude(g, 1) for g in generators(n)]
    pool = gens + [symplectic_inverse(g) for g in gens]
    out = Similitude(MatQ.identity(2 * n), 1)
    for idx in rng.integers(0, len(pool), size=length):
        out = out @ pool[int(idx)]
    return out
