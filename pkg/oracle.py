"""
Brute-force checks that do not share code paths with the coset enumerator.

- group_closure: breadth-first closure of generators inside Sp4(Z/N). For N <= 15
  matrices are packed into one int64 (16 base-N digits) and the visited set is
  a sorted numpy array, extended one frontier at a time.
- degree_oracle: deg(Gamma a Gamma) = [Gamma : Gamma cap a^-1 Gamma a], counted as
  |Sp4(Z/p^l)| / |stabiliser| over the enumerated group.
- coset_distinctness: R_i R_j^-1 is in Gamma iff R_i adj(R_j) = 0 mod lambda,
  with adj(R) = Omega^-1 R^t Omega.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from sympy import factorint

from errors import DomainError, ResourceBudgetError
from normal_forms import DivisorType, rank_mod_p, symplectic_elementary_divisors
from symplectic_core import MatQ, Similitude, generators, multiplier, omega, random_word

logger = logging.getLogger(__name__)

DEFAULT_MEMORY_BUDGET = 4 * 1024 ** 3
PACKED_MAX_MODULUS = 15
PACKED_BYTES_PER_ELEMENT = 48
GENERIC_BYTES_PER_ELEMENT = 160
FRONTIER_CHUNK = 1 << 18


# --- matrices mod N ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModMatrix:
    N: int
    entries: tuple[int, ...]

    def __post_init__(self):
        if not 2 <= self.N <= 2 ** 31:
            raise DomainError(f"modulus must lie in [2, 2^31], got {self.N}")
        if len(self.entries) != 16:
            raise DomainError(f"a 4x4 matrix needs 16 entries, got {len(self.entries)}")
        object.__setattr__(self, "entries", tuple(int(v) % self.N for v in self.entries))

    @classmethod
    def of(cls, M, N: int) -> "ModMatrix":
        if isinstance(M, Similitude):
            M = M.mat
        rows = M.to_int_rows() if isinstance(M, MatQ) else [list(map(int, r)) for r in M]
        return cls(N, tuple(v for r in rows for v in r))

    def encode(self) -> bytes:
        width = (max(1, (self.N - 1).bit_length()) + 7) // 8
        return b"".join(v.to_bytes(width, "little") for v in self.entries)

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(4, 4)


def _powers(N: int) -> np.ndarray:
    return N ** np.arange(15, -1, -1, dtype=np.int64)


def _pack(X: np.ndarray, N: int) -> np.ndarray:
    return X.reshape(len(X), 16) @ _powers(N)


def _unpack(keys: np.ndarray, N: int) -> np.ndarray:
    return ((keys[:, None] // _powers(N)[None, :]) % N).reshape(len(keys), 4, 4)


# --- closure ----------------------------------------------------------------------------------

def group_order_formula(N: int) -> int:
    """|Sp4(Z/N)| = N^10 prod_{p | N} (1 - p^-2)(1 - p^-4)."""
    if N < 2:
        raise DomainError(f"N must be >= 2, got {N}")
    out = N ** 10
    for p in factorint(N):
        p = int(p)
        out = out * (p * p - 1) * (p ** 4 - 1) // p ** 6
    return out


def estimate_closure_bytes(N: int) -> int:
    per = PACKED_BYTES_PER_ELEMENT if N <= PACKED_MAX_MODULUS else GENERIC_BYTES_PER_ELEMENT
    return group_order_formula(N) * per


@dataclass
class ClosureResult:
    N: int
    keys: np.ndarray | None = None      # sorted packed keys (N <= 15)
    members: set | None = None          # encoded bytes otherwise

    @property
    def order(self) -> int:
        return len(self.keys) if self.keys is not None else len(self.members)

    def __contains__(self, M) -> bool:
        mm = M if isinstance(M, ModMatrix) else ModMatrix.of(M, self.N)
        if self.keys is None:
            return mm.encode() in self.members
        k = int(_pack(mm.array()[None], self.N)[0])
        i = int(np.searchsorted(self.keys, k))
        return i < len(self.keys) and int(self.keys[i]) == k

    def matrices(self, chunk: int = FRONTIER_CHUNK) -> Iterable[np.ndarray]:
        """Group elements as (k, 4, 4) int64 blocks, in key order."""
        if self.keys is None:
            raise DomainError("element blocks are only available for packed closures")
        for start in range(0, len(self.keys), chunk):
            yield _unpack(self.keys[start:start + chunk], self.N)


def _check_budget(N: int, budget_bytes: int) -> None:
    need = estimate_closure_bytes(N)
    if need > budget_bytes:
        raise ResourceBudgetError(
            f"closure of Sp4(Z/{N}) needs about {need} bytes, over the budget of {budget_bytes}",
            needed_bytes=need, budget_bytes=budget_bytes,
        )


def _mod_arrays(gens: Sequence, N: int) -> np.ndarray:
    out = []
    for g in gens:
        mm = g if isinstance(g, ModMatrix) else ModMatrix.of(g, N)
        if mm.N != N:
            raise DomainError(f"generator reduced mod {mm.N}, expected {N}")
        out.append(mm.array())
    G = np.stack(out)
    J = omega(4).to_int_rows()
    J = np.array(J, dtype=np.int64)
    lhs = np.einsum("kji,jl,klm->kim", G, J, G) % N
    if not np.all(lhs == J % N):
        raise DomainError(f"generators must have multiplier 1 mod {N}")
    return G


def _closure_packed(G: np.ndarray, N: int) -> np.ndarray:
    visited = _pack(np.eye(4, dtype=np.int64)[None], N)
    frontier = visited
    depth = 0
    while len(frontier):
        fresh = []
        for start in range(0, len(frontier), FRONTIER_CHUNK):
            X = _unpack(frontier[start:start + FRONTIER_CHUNK], N)
            for g in G:
                fresh.append(_pack((X @ g) % N, N))
        cand = np.unique(np.concatenate(fresh))
        frontier = np.setdiff1d(cand, visited, assume_unique=True)
        visited = np.union1d(visited, frontier)
        depth += 1
        logger.debug("closure mod %d depth %d: frontier %d, visited %d", N, depth, len(frontier), len(visited))
    return visited


def _closure_generic(G: np.ndarray, N: int, budget_bytes: int) -> set:
    start = ModMatrix(N, tuple(np.eye(4, dtype=np.int64).ravel().tolist()))
    seen = {start.encode()}
    frontier = [start.array()]
    while frontier:
        nxt = []
        for X in frontier:
            for g in G:
                Y = ModMatrix(N, tuple(((X @ g) % N).ravel().tolist()))
                key = Y.encode()
                if key not in seen:
                    seen.add(key)
                    nxt.append(Y.array())
        if len(seen) * GENERIC_BYTES_PER_ELEMENT > budget_bytes:
            raise ResourceBudgetError(f"closure mod {N} exceeded the memory budget at {len(seen)} elements",
                                      needed_bytes=len(seen) * GENERIC_BYTES_PER_ELEMENT, budget_bytes=budget_bytes)
        frontier = nxt
    return seen


def group_closure(gens: Sequence, N: int, budget_bytes: int | None = None) -> ClosureResult:
    """Closure of `gens` (multiplier 1 mod N) under multiplication."""
    budget = DEFAULT_MEMORY_BUDGET if budget_bytes is None else int(budget_bytes)
    if N < 2:
        raise DomainError(f"N must be >= 2, got {N}")
    _check_budget(N, budget)
    G = _mod_arrays(gens, N)
    if N <= PACKED_MAX_MODULUS:
        keys = _closure_packed(G, N)
        logger.info("closure mod %d: order %d", N, len(keys))
        return ClosureResult(N, keys=keys)
    members = _closure_generic(G, N, budget)
    logger.info("closure mod %d: order %d", N, len(members))
    return ClosureResult(N, members=members)


@dataclass
class SurjectivityResult:
    N: int
    order_from_integer_generators: int
    order_from_all_families: int
    formula_order: int
    crt_consistent: bool | None

    @property
    def surjective(self) -> bool:
        return (self.order_from_integer_generators == self.order_from_all_families == self.formula_order
                and self.crt_consistent is not False)

    def to_dict(self) -> dict:
        return {"N": self.N, "surjective": self.surjective,
                "order_from_integer_generators": self.order_from_integer_generators,
                "order_from_all_families": self.order_from_all_families,
                "formula_order": self.formula_order, "crt_consistent": self.crt_consistent}


def surjectivity_check(N: int, budget_bytes: int | None = None) -> SurjectivityResult:
    """Images of the integral generators generate all of Sp4(Z/N)."""
    from_integers = group_closure(generators(2), N, budget_bytes).order
    from_families = group_closure(generators(2, modulus=N), N, budget_bytes).order
    crt_ok = None
    f = factorint(N)
    if len(f) > 1:
        parts = [int(p) ** int(e) for p, e in f.items()]
        crt_ok = from_integers == math.prod(group_closure(generators(2), q, budget_bytes).order for q in parts)
    return SurjectivityResult(N, from_integers, from_families, group_order_formula(N), crt_ok)


# --- degree oracle ----------------------------------------------------------------------------

def _diag_exponents(diagonal, p: int) -> tuple[int, int, int, int]:
    if isinstance(diagonal, DivisorType):
        vals = (diagonal.a1, diagonal.a2, diagonal.d1, diagonal.d2)
        exps = tuple(int(factorint(v).get(p, 0)) for v in vals)
        if any(p ** e != v for e, v in zip(exps, vals)):
            raise DomainError(f"{diagonal} is not a diagonal of powers of {p}")
        return exps
    exps = tuple(int(e) for e in diagonal)
    if len(exps) != 4:
        raise DomainError(f"need four exponents, got {diagonal}")
    return exps


def degree_oracle(diagonal, p: int, l: int, budget_bytes: int | None = None, closure: ClosureResult | None = None) -> int:
    """
    [Gamma : Gamma cap a^-1 Gamma a] for a = diag(p^e0, p^e1, p^e2, p^e3), counted mod p^l.
    `diagonal` is an exponent 4-tuple or a DivisorType (a = diag(a1, a2, d1, d2)).
    """
    e = _diag_exponents(diagonal, p)
    if min(e) < 0 or max(e) > l:
        raise DomainError(f"exponents {e} must lie in [0, {l}]")
    N = p ** l
    grp = closure if closure is not None else group_closure(generators(2), N, budget_bytes)
    # divisibility requirement p^max(0, e_j - e_i) on entry (i, j), reduced below N
    req = np.array([[min(N, p ** max(0, e[j] - e[i])) for j in range(4)] for i in range(4)], dtype=np.int64)
    stab = 0
    for X in grp.matrices():
        stab += int(np.count_nonzero(np.all((X % req) == 0, axis=(1, 2))))
    if grp.order % stab:
        raise RuntimeError(f"stabiliser order {stab} does not divide {grp.order}")
    return grp.order // stab


# --- distinctness and membership --------------------------------------------------------------

@dataclass
class DistinctnessResult:
    distinct: bool
    count: int
    first_violation: tuple[int, int] | None = None

    def __bool__(self) -> bool:
        return self.distinct

    def to_dict(self) -> dict:
        return {"distinct": self.distinct, "count": self.count,
                "first_violation": list(self.first_violation) if self.first_violation else None}


def _int_stack(reps: Sequence) -> tuple[np.ndarray, int]:
    mats, lams = [], set()
    for R in reps:
        if hasattr(R, "similitude"):
            R = R.similitude()
        g = R if isinstance(R, Similitude) else Similitude.of(R)
        if not g.mat.is_integral():
            raise DomainError("coset_distinctness needs integral representatives")
        mats.append(g.mat.to_int_rows())
        lams.add(g.lam)
    if len(lams) > 1:
        raise DomainError(f"representatives carry different multipliers {sorted(lams)}")
    lam = lams.pop()
    if lam.denominator != 1 or lam <= 0:
        raise DomainError(f"multiplier must be a positive integer, got {lam}")
    return np.array(mats, dtype=np.int64), int(lam)


def coset_distinctness(reps: Sequence) -> DistinctnessResult:
    if len(reps) < 2:
        return DistinctnessResult(True, len(reps))
    R, lam = _int_stack(reps)
    J = np.array(omega(4).to_int_rows(), dtype=np.int64)
    adj = -J @ np.transpose(R, (0, 2, 1)) @ J       # Omega^-1 = -Omega
    for i in range(len(R)):
        prods = R[i] @ adj
        same = np.all(prods % lam == 0, axis=(1, 2))
        same[i] = False
        hits = np.flatnonzero(same)
        if len(hits):
            return DistinctnessResult(False, len(R), (i, int(hits[0])))
    return DistinctnessResult(True, len(R))


def double_coset_membership(M, divisor_type: DivisorType) -> bool:
    g = M if isinstance(M, Similitude) else Similitude.of(M)
    if g.lam != divisor_type.r:
        raise DomainError(f"multiplier {g.lam} does not match the type's r = {divisor_type.r}")
    found, _, _ = symplectic_elementary_divisors(g)
    member = found == divisor_type
    f = factorint(divisor_type.r)
    if len(f) == 1:
        (p, l), = f.items()
        p = int(p)
        if l == 2 and divisor_type.as_tuple() == (1, p, p, p * p):
            by_rank = rank_mod_p(g.mat, p) == 1
            if by_rank != member:
                raise RuntimeError(f"rank-mod-{p} criterion disagrees with elementary divisors for {found}")
    return member


def random_translate(M, rng: np.random.Generator, length: int = 6) -> Similitude:
    """gamma M gamma' for random words gamma, gamma' in Sp4(Z)."""
    g = M if isinstance(M, Similitude) else Similitude.of(M)
    return random_word(rng, length) @ g @ random_word(rng, length)


def is_in_gamma(M) -> bool:
    """Integral with multiplier 1."""
    m = M.mat if isinstance(M, Similitude) else M
    return m.is_integral() and multiplier(m) == 1
