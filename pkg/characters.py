"""
Dirichlet characters as exponent vectors on generators of (Z/m)^x.

A character mod m assigns each unit-group generator g_i (of order o_i) the root
of unity exp(2 pi i e_i / o_i). Values are kept as exact fractions of a turn;
complex numbers only appear when L-series are summed.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable, Sequence

import numpy as np
from sympy import factorint, isprime, primitive_root, totient
from sympy.ntheory.modular import crt

from errors import DomainError
from thermodynamics import local_zeta_closed, twisted_local_factor

logger = logging.getLogger(__name__)

L_BLOCK = 1 << 16


# --- unit groups ------------------------------------------------------------------------------

@dataclass(frozen=True)
class UnitGroup:
    modulus: int
    generators: tuple[int, ...]
    orders: tuple[int, ...]
    primes: tuple[int, ...]       # the prime whose component each generator spans

    @property
    def order(self) -> int:
        return math.prod(self.orders)


def _local_generators(p: int, e: int) -> list[tuple[int, int]]:
    if p != 2:
        return [(int(primitive_root(p ** e)), (p - 1) * p ** (e - 1))]
    if e == 1:
        return []
    if e == 2:
        return [(3, 2)]
    return [(2 ** e - 1, 2), (3, 2 ** (e - 2))]


@lru_cache(maxsize=256)
def unit_group_structure(m: int) -> UnitGroup:
    """Generators of (Z/m)^x, one block per prime power of m, each lifted to be 1 at the other primes."""
    if m < 1:
        raise DomainError(f"modulus must be >= 1, got {m}")
    gens, orders, primes = [], [], []
    for p, e in sorted(factorint(m).items()):
        p, e = int(p), int(e)
        q = p ** e
        rest = m // q
        for g, o in _local_generators(p, e):
            lifted = g if rest == 1 else int(crt([q, rest], [g, 1])[0])
            gens.append(lifted % m)
            orders.append(o)
            primes.append(p)
    group = UnitGroup(m, tuple(gens), tuple(orders), tuple(primes))
    if group.order != int(totient(m)):
        raise RuntimeError(f"unit group generators for m={m} do not have product order phi(m)")
    return group


@lru_cache(maxsize=64)
def _discrete_logs(m: int) -> dict[int, tuple[int, ...]]:
    """residue -> exponent vector on the generators of (Z/m)^x."""
    G = unit_group_structure(m)
    table = {}
    for exps in product(*(range(o) for o in G.orders)):
        n = 1
        for g, a in zip(G.generators, exps):
            n = n * pow(g, a, m) % m
        table[n % m] = exps
    if len(table) != G.order:
        raise RuntimeError(f"generators of (Z/{m})^x are not independent")
    return table


# --- characters -------------------------------------------------------------------------------

def _root_of_unity(t: Fraction) -> complex:
    t = t % 1
    exact = {Fraction(0): 1 + 0j, Fraction(1, 2): -1 + 0j, Fraction(1, 4): 1j, Fraction(3, 4): -1j}
    if t in exact:
        return exact[t]
    return cmath.exp(2j * math.pi * float(t))


@dataclass(frozen=True)
class DirichletChar:
    modulus: int
    exponents: tuple[int, ...]

    def __post_init__(self):
        G = self.group
        if len(self.exponents) != len(G.orders):
            raise DomainError(f"mod {self.modulus} needs {len(G.orders)} exponents, got {len(self.exponents)}")
        object.__setattr__(self, "exponents", tuple(int(e) % o for e, o in zip(self.exponents, G.orders)))

    @property
    def group(self) -> UnitGroup:
        return unit_group_structure(self.modulus)

    @classmethod
    def principal(cls, m: int) -> "DirichletChar":
        return cls(m, (0,) * len(unit_group_structure(m).orders))

    @property
    def is_principal(self) -> bool:
        return not any(self.exponents)

    def value_turn(self, n: int) -> Fraction | None:
        """chi(n) as a fraction of a full turn; None when gcd(n, m) > 1."""
        m = self.modulus
        if math.gcd(n, m) != 1:
            return None
        logs = _discrete_logs(m)[n % m]
        return sum((Fraction(a * e, o) for a, e, o in zip(logs, self.exponents, self.group.orders)), Fraction(0)) % 1

    def __call__(self, n: int) -> complex:
        t = self.value_turn(n)
        return 0j if t is None else _root_of_unity(t)

    def order(self) -> int:
        return math.lcm(1, *(o // math.gcd(e, o) for e, o in zip(self.exponents, self.group.orders)))

    def period_values(self) -> np.ndarray:
        return np.array([self(n) for n in range(self.modulus)], dtype=np.complex128)

    def local_components(self) -> dict[int, "DirichletChar"]:
        """Restriction to each prime-power factor of the modulus."""
        G = self.group
        out = {}
        for p, e in sorted(factorint(self.modulus).items()):
            p, e = int(p), int(e)
            exps = tuple(x for x, q in zip(self.exponents, G.primes) if q == p)
            out[p] = DirichletChar(p ** e, exps)
        return out

    def lift_to(self, m2: int) -> "DirichletChar":
        """The same character presented modulo a multiple m2 of the modulus."""
        if m2 % self.modulus:
            raise DomainError(f"{m2} is not a multiple of {self.modulus}")
        G2 = unit_group_structure(m2)
        exps = []
        for g, o in zip(G2.generators, G2.orders):
            t = self.value_turn(g)
            e = t * o
            if e.denominator != 1:
                raise RuntimeError(f"character value at generator {g} has order not dividing {o}")
            exps.append(int(e))
        return DirichletChar(m2, tuple(exps))

    def __str__(self) -> str:
        return f"chi_{self.modulus}[{','.join(map(str, self.exponents))}]"


def characters_mod(m: int) -> list[DirichletChar]:
    G = unit_group_structure(m)
    return [DirichletChar(m, exps) for exps in product(*(range(o) for o in G.orders))]


def character_sum(chi: DirichletChar) -> complex:
    vals = chi.period_values()
    return complex(math.fsum(vals.real), math.fsum(vals.imag))


def char_from_local(local_chars: Sequence[DirichletChar]) -> DirichletChar:
    """Product character mod prod p^k_p of characters of (Z/p^k_p)^x at distinct primes."""
    if not local_chars:
        raise DomainError("char_from_local needs at least one local character")
    by_prime = {}
    for chi in local_chars:
        f = factorint(chi.modulus)
        if len(f) != 1:
            raise DomainError(f"local characters need a prime-power modulus, got {chi.modulus}")
        (p, _), = f.items()
        if int(p) in by_prime:
            raise DomainError(f"two local characters at p={p}")
        by_prime[int(p)] = chi
    m = math.prod(chi.modulus for chi in by_prime.values())
    exps: list[int] = []
    G = unit_group_structure(m)
    for p in sorted(by_prime):
        chi = by_prime[p]
        local_gens = [g for g, q in zip(G.generators, G.primes) if q == p]
        if [g % chi.modulus for g in local_gens] != list(chi.group.generators):
            raise RuntimeError(f"generator presentation at p={p} does not match")
        exps.extend(chi.exponents)
    return DirichletChar(m, tuple(exps))


@dataclass(frozen=True)
class LocalLevel:
    level: int
    principal: bool


def local_level(chi: DirichletChar) -> LocalLevel:
    """Minimal k' with chi trivial on 1 + p^k' Z_p, for chi of prime-power modulus p^k."""
    f = factorint(chi.modulus)
    if len(f) != 1:
        raise DomainError(f"local_level needs a prime-power modulus, got {chi.modulus}")
    (p, k), = f.items()
    p, k = int(p), int(k)
    if chi.is_principal:
        return LocalLevel(1, True)
    for kp in range(1, k + 1):
        step = p ** kp
        if all(chi.value_turn(1 + t * step) == 0 for t in range(p ** (k - kp))):
            return LocalLevel(kp, False)
    return LocalLevel(k, False)


def conductor(chi: DirichletChar) -> int:
    out = 1
    for p, loc in chi.local_components().items():
        lv = local_level(loc)
        if not lv.principal:
            out *= p ** lv.level
    return out


def crt_lift(congruences: Iterable[tuple[int, int]]) -> int:
    """n in [0, prod moduli) with n = a_k mod q_k for (a_k, q_k) pairs."""
    pairs = [(int(a), int(q)) for a, q in congruences]
    if not pairs:
        raise DomainError("crt_lift needs at least one congruence")
    for i, (a, q) in enumerate(pairs):
        if q < 2:
            raise DomainError(f"modulus must be >= 2, got {q}")
        if math.gcd(a, q) != 1:
            raise DomainError(f"residue {a} shares a factor with its modulus {q}")
        for _, q2 in pairs[i + 1:]:
            if math.gcd(q, q2) != 1:
                raise DomainError(f"moduli {q} and {q2} are not coprime")
    n, M = crt([q for _, q in pairs], [a for a, _ in pairs])
    return int(n) % int(M)


# --- L-functions ------------------------------------------------------------------------------

@dataclass
class LResult:
    value: complex
    tail_bound: float
    truncation: int

    def to_dict(self) -> dict:
        return {"re": self.value.real, "im": self.value.imag, "tail_bound": self.tail_bound,
                "truncation": self.truncation}


def _max_partial_sum(chi: DirichletChar) -> float:
    return float(np.max(np.abs(np.cumsum(chi.period_values()))))


def l_function(chi: DirichletChar, s: float, truncation: int = 1_000_000) -> LResult:
    """
    Partial sum to `truncation` with a tail bound: N^(1-s)/(s-1) for s > 1 and,
    for nontrivial chi and any s > 0, 2 B (N+1)^-s with B the largest partial
    character sum over one period.
    """
    s = float(s)
    N = int(truncation)
    if N < 1:
        raise DomainError(f"truncation must be >= 1, got {N}")
    if chi.is_principal and s <= 1:
        raise DomainError(f"L(s, principal) needs s > 1, got {s}")
    if s <= 0:
        raise DomainError(f"L(s, chi) is evaluated for s > 0, got {s}")
    period = chi.period_values()
    m = chi.modulus
    re_parts, im_parts = [], []
    for start in range(1, N + 1, L_BLOCK):
        n = np.arange(start, min(start + L_BLOCK, N + 1), dtype=np.int64)
        block = period[n % m] * n.astype(np.float64) ** -s
        re_parts.append(math.fsum(block.real))
        im_parts.append(math.fsum(block.imag))
    value = complex(math.fsum(re_parts), math.fsum(im_parts))
    bounds = []
    if s > 1:
        bounds.append(N ** (1 - s) / (s - 1))
    if not chi.is_principal:
        bounds.append(2 * _max_partial_sum(chi) * (N + 1) ** -s)
    return LResult(value, min(bounds), N)


def restricted_zeta(F: Iterable[int], s: float) -> float:
    return math.prod(1 / (1 - p ** -s) for p in F)


def restricted_product(chi: DirichletChar, beta, F: Iterable[int]) -> float:
    """prod over p in F of |twisted local factor at chi(p)| / local zeta at p."""
    out = 1.0
    for p in F:
        out *= abs(twisted_local_factor(p, beta, chi(p))) / float(local_zeta_closed(p, beta))
    return out


@dataclass
class Theorem58Result:
    beta: float
    primes: list[int]
    numerator: float
    denominator: float
    restricted_product: float
    l_values: list[LResult] = field(default_factory=list)

    @property
    def bound(self) -> float:
        return self.numerator / self.denominator

    def to_dict(self) -> dict:
        return {"beta": self.beta, "primes": self.primes, "numerator": self.numerator,
                "denominator": self.denominator, "bound": self.bound,
                "restricted_product": self.restricted_product,
                "l_values": [lv.to_dict() for lv in self.l_values]}


def theorem58_bound(chi: DirichletChar, beta, F: Iterable[int], truncation: int = 1_000_000) -> Theorem58Result:
    """|L(b-3)L(b-2)L(b-1)| / (zeta_F(b-3) zeta_F(b-2) zeta_F(b-1)) for nontrivial chi and 3 < b <= 4."""
    if chi.is_principal:
        raise DomainError("theorem58_bound needs a nontrivial character")
    b = float(beta)
    if not 3 < b <= 4:
        raise DomainError(f"beta must lie in (3, 4], got {beta}")
    primes = sorted(set(int(p) for p in F))
    bad = [p for p in primes if not isprime(p)]
    if bad:
        raise DomainError(f"F must contain primes only, got {bad}")
    overlap = [p for p in primes if chi.modulus % p == 0]
    if overlap:
        raise DomainError(f"F meets the primes of the modulus: {overlap}")
    lvals = [l_function(chi, b - k, truncation) for k in (3, 2, 1)]
    num = abs(lvals[0].value * lvals[1].value * lvals[2].value)
    den = math.prod(restricted_zeta(primes, b - k) for k in (3, 2, 1))
    logger.debug("bound quantity for %s at beta=%s over %d primes: %.6g", chi, b, len(primes), num / den)
    return Theorem58Result(b, primes, num, den, restricted_product(chi, b, primes), lvals)
