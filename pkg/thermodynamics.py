"""
Partition functions and KMS phase structure of the GSp4 system.

Local factor at p (sum over l of p^(-l beta) R(p^l)):

    (1 - p^(2-2b)) / ((1 - p^(3-b)) (1 - p^(2-b)) (1 - p^(1-b)) (1 - p^(-b)))

finite iff beta > 3. The global partition function is the Euler product of the
local factors, equal to zeta(b) zeta(b-1) zeta(b-2) zeta(b-3) / zeta(2b-2) for
beta > 4.

Integral beta is evaluated in exact Fractions; any other beta in float64.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from typing import Iterable

import numpy as np
import pandas as pd
from sympy import bernoulli, factorint, isprime, primerange

from errors import DomainError, ZetaDomainError
from hecke_cosets import R_closed, type_degrees
from normal_forms import DivisorType

logger = logging.getLogger(__name__)

ZETA_POLE_FACTOR = "(1 - p^(3-beta))"


def as_beta(beta) -> Fraction | float:
    """Exact Fraction for ints, Fractions, Decimals and "4.5" / "9/2" strings; float otherwise."""
    if isinstance(beta, (Fraction, int)):
        return Fraction(beta)
    if isinstance(beta, Decimal):
        return Fraction(beta)
    if isinstance(beta, str):
        try:
            return Fraction(beta.strip())
        except (ValueError, ZeroDivisionError):
            raise DomainError(f"beta {beta!r} is not a decimal or a/b rational") from None
    return float(beta)


def _is_integral(beta) -> bool:
    return isinstance(beta, Fraction) and beta.denominator == 1


def _pow(p: int, e) -> Fraction | float:
    """p^e, exact when the exponent is integral."""
    if isinstance(e, Fraction) and e.denominator == 1:
        return Fraction(p) ** int(e)
    return float(p) ** float(e)


def _require_prime(p: int) -> None:
    if not isprime(p):
        raise DomainError(f"p must be prime, got {p}")


# --- local zeta -----------------------------------------------------------------------------

def local_zeta_closed(p: int, beta) -> Fraction | float:
    _require_prime(p)
    b = as_beta(beta)
    if b <= 3:
        raise ZetaDomainError(
            f"local zeta at p={p} diverges for beta={beta} <= 3: factor {ZETA_POLE_FACTOR} "
            f"is {'zero' if b == 3 else 'non-positive'}",
            factor=ZETA_POLE_FACTOR,
        )
    if not _is_integral(b):
        b = float(b)
    num = 1 - _pow(p, 2 - 2 * b)
    den = 1
    for k in (3, 2, 1, 0):
        den *= 1 - _pow(p, k - b)
    return num / den


def local_zeta_error_bound(p: int, beta: float) -> float:
    """Relative rounding bound for the float evaluation of the 4-factor quotient."""
    b = float(beta)
    if b <= 3:
        raise ZetaDomainError(f"beta={beta} <= 3", factor=ZETA_POLE_FACTOR)
    eps = np.finfo(float).eps
    cond = 1.0 + sum(1.0 / abs(1.0 - p ** (k - b)) for k in (3, 2, 1, 0))
    return float(8 * eps * cond)


@dataclass
class SeriesResult:
    value: float
    tail_bound: float
    diverging: bool
    partials: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"value": self.value, "tail_bound": self.tail_bound, "diverging": self.diverging,
                "partials": self.partials}


def local_zeta_series(p: int, beta, lmax: int) -> SeriesResult:
    """Partial sums of sum_l p^(-l beta) R(p^l) with a geometric tail bound."""
    _require_prime(p)
    if lmax < 1:
        raise DomainError(f"lmax must be >= 1, got {lmax}")
    b = as_beta(beta)
    exact = _is_integral(b)
    x = Fraction(p) ** -int(b) if exact else float(p) ** -float(b)
    acc = Fraction(0) if exact else 0.0
    partials = []
    for l in range(lmax + 1):
        acc += R_closed(p, l) * x ** l
        partials.append(float(acc))
    if b <= 3:
        return SeriesResult(partials[-1], math.inf, True, partials)
    q = float(p) ** (3 - float(b))
    kprime = (p ** 2 + p ** 4 + 1) / ((p - 1) ** 2 * (p ** 2 + p + 1))
    tail = kprime * q ** (lmax + 1) / (1 - q)
    return SeriesResult(partials[-1], tail, False, partials)


def twisted_local_factor(p: int, beta, z: complex) -> complex:
    """sum_l p^(-l beta) R(p^l) z^l for |z| = 1, beta > 3."""
    _require_prime(p)
    b = float(as_beta(beta))
    if b <= 3:
        raise ZetaDomainError(f"twisted local factor diverges for beta={beta} <= 3", factor=ZETA_POLE_FACTOR)
    z = complex(z)
    if not math.isclose(abs(z), 1.0, rel_tol=1e-12):
        raise DomainError(f"z must lie on the unit circle, got |z|={abs(z)}")
    s = p + p ** 2 + p ** 3
    t = p ** 2 + p ** 4
    num = 1 / (1 - z * p ** -b) - s / (1 - z * p ** (2 - b)) + t / (1 - z * p ** (3 - b))
    return num / ((1 - p) ** 2 * (1 + p + p ** 2))


# --- Riemann zeta and the global partition function ---------------------------------------

def riemann_zeta(s: float, terms: int = 20, order: int = 12) -> float:
    """Euler-Maclaurin with `terms` direct summands and `order` Bernoulli corrections."""
    s = float(s)
    if s <= 1:
        raise ZetaDomainError(f"riemann_zeta needs s > 1, got {s}", factor="(s - 1)")
    N = int(terms)
    head = math.fsum(n ** -s for n in range(1, N))
    corr = [N ** (1 - s) / (s - 1), 0.5 * N ** -s]
    rising = s
    for k in range(1, order + 1):
        b2k = float(bernoulli(2 * k))
        corr.append(b2k / math.factorial(2 * k) * rising * N ** (-s - 2 * k + 1))
        rising *= (s + 2 * k - 1) * (s + 2 * k)
    return head + math.fsum(corr)


def zeta_quotient(beta, terms: int = 20, order: int = 12) -> float:
    b = float(as_beta(beta))
    if b <= 4:
        raise ZetaDomainError(f"zeta quotient needs beta > 4, got {beta}", factor="zeta(beta-3)")
    z = lambda s: riemann_zeta(s, terms, order)
    return z(b) * z(b - 1) * z(b - 2) * z(b - 3) / z(2 * b - 2)


def _local_factors(primes: np.ndarray, beta: float) -> np.ndarray:
    p = primes.astype(np.float64)
    den = (1 - p ** (3 - beta)) * (1 - p ** (2 - beta)) * (1 - p ** (1 - beta)) * (1 - p ** -beta)
    return (1 - p ** (2 - 2 * beta)) / den


@dataclass
class PartitionResult:
    beta: float
    prime_bound: int
    euler_product: float
    zeta_quotient: float
    primes_used: int

    @property
    def gap(self) -> float:
        return self.zeta_quotient - self.euler_product

    def to_dict(self) -> dict:
        return {"beta": self.beta, "prime_bound": self.prime_bound, "euler_product": self.euler_product,
                "zeta_quotient": self.zeta_quotient, "gap": self.gap, "primes_used": self.primes_used}


def global_partition(beta, prime_bound: int, terms: int = 20, order: int = 12) -> PartitionResult:
    b = float(as_beta(beta))
    if b <= 4:
        raise ZetaDomainError(f"global partition function diverges for beta={beta} <= 4", factor="zeta(beta-3)")
    if prime_bound < 2:
        raise DomainError(f"prime_bound must be >= 2, got {prime_bound}")
    primes = np.fromiter(primerange(2, prime_bound + 1), dtype=np.int64)
    prod = float(np.prod(_local_factors(primes, b)))
    logger.debug("euler product beta=%s over %d primes = %.12g", beta, len(primes), prod)
    return PartitionResult(b, prime_bound, prod, zeta_quotient(b, terms, order), len(primes))


def measure_of_Yp(beta, p: int) -> Fraction | float:
    b = as_beta(beta)
    if b <= 3:
        raise ZetaDomainError(
            f"no KMS state for beta={beta} <= 3: the local zeta function diverges, so Gamma\\Y_{p} would "
            "need both measure 1 and measure 0",
            factor=ZETA_POLE_FACTOR,
        )
    return 1 / local_zeta_closed(p, b)


# --- Gibbs weights ----------------------------------------------------------------------------

@dataclass
class GibbsResult:
    beta: float
    lambda_bound: int
    partition: float
    weights: list[tuple[DivisorType, int, int, float]]   # (type, multiplier, degree, weight)

    @property
    def mass(self) -> float:
        return math.fsum(w for *_, w in self.weights)

    @property
    def tail_bound(self) -> float:
        return max(0.0, 1.0 - self.mass)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(str(t), r, d, w) for t, r, d, w in self.weights],
            columns=["divisor_type", "multiplier", "degree", "weight"],
        )


def _types_of_multiplier(r: int) -> list[tuple[DivisorType, int]]:
    out = [((1, 1, 1, 1), 1)]
    for p, l in sorted(factorint(r).items()):
        local = type_degrees(int(p), int(l))
        out = [
            (tuple(a * b for a, b in zip(t, dt.as_tuple())), d * dl)
            for t, d in out
            for dt, dl in local.items()
        ]
    return sorted((DivisorType(*t), d) for t, d in out)


def gibbs_weights(beta, lambda_bound: int, terms: int = 20, order: int = 12) -> GibbsResult:
    """lam^-beta deg / Z for every double coset with multiplier <= lambda_bound."""
    b = float(as_beta(beta))
    if b <= 4:
        raise ZetaDomainError(f"Gibbs states need beta > 4, got {beta}", factor="zeta(beta-3)")
    if lambda_bound < 1:
        raise DomainError(f"lambda_bound must be >= 1, got {lambda_bound}")
    Z = zeta_quotient(b, terms, order)
    weights = []
    for r in range(1, lambda_bound + 1):
        for dt, d in _types_of_multiplier(r):
            weights.append((dt, r, d, d * r ** -b / Z))
    return GibbsResult(b, lambda_bound, Z, weights)


# --- phases -----------------------------------------------------------------------------------

class Phase(str, Enum):
    NO_KMS = "NoKMS"
    UNIQUE = "Unique"
    GIBBS_FAMILY = "GibbsFamily"
    UNRESOLVED = "Unresolved"


@dataclass
class PhaseVerdict:
    beta: float
    phase: Phase
    witness: dict = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> dict:
        return {"beta": self.beta, "phase": self.phase.value, "witness": self.witness, "note": self.note}


def kms_phase(beta, witness_lmax: int = 30, terms: int = 20, order: int = 12) -> PhaseVerdict:
    b = as_beta(beta)
    if b <= 0:
        raise DomainError(f"beta must be positive, got {beta}")
    bf = float(b)
    if b in (1, 2, 3):
        note = ("an explicit candidate measure is known at this beta but KMS existence is not settled"
                if b == 2 else "conjecturally no KMS state; not settled")
        series = local_zeta_series(2, b, witness_lmax)
        witness = {"p": 2, "lmax": witness_lmax, "last_partial": series.value, "diverging": series.diverging,
                   "vanishing_factor": f"(1 - p^({int(b)}-beta))"}
        return PhaseVerdict(bf, Phase.UNRESOLVED, witness, note)
    if b < 3:
        series = local_zeta_series(2, b, witness_lmax)
        witness = {"p": 2, "lmax": witness_lmax, "last_partial": series.value, "diverging": series.diverging}
        return PhaseVerdict(bf, Phase.NO_KMS, witness, "local zeta function diverges at p = 2")
    if b <= 4:
        zloc = local_zeta_closed(2, b)
        witness = {"p": 2, "local_zeta": str(zloc) if isinstance(zloc, Fraction) else zloc,
                   "measure_Yp": str(1 / zloc) if isinstance(zloc, Fraction) else 1 / zloc}
        return PhaseVerdict(bf, Phase.UNIQUE, witness, "unique KMS state")
    Z = zeta_quotient(b, terms, order)
    return PhaseVerdict(bf, Phase.GIBBS_FAMILY, {"partition_function": Z}, "extremal states are Gibbs states")


def siegel_volume(n: int, terms: int = 20, order: int = 12) -> float:
    """2 * prod_{i=1..n} pi^-i Gamma(i) zeta(2i)."""
    if not 1 <= n <= 4:
        raise DomainError(f"n must be in 1..4, got {n}")
    return 2 * math.prod(math.pi ** -i * math.gamma(i) * riemann_zeta(2 * i, terms, order) for i in range(1, n + 1))


def siegel_volume_factors(n: int, terms: int = 20, order: int = 12) -> list[float]:
    return [math.pi ** -i * math.gamma(i) * riemann_zeta(2 * i, terms, order) for i in range(1, n + 1)]


# --- sweeps -----------------------------------------------------------------------------------

def phase_sweep(betas: Iterable) -> pd.DataFrame:
    rows = []
    for beta in betas:
        v = kms_phase(beta)
        rows.append({"beta": v.beta, "phase": v.phase.value, "note": v.note, **{f"witness_{k}": w for k, w in v.witness.items()}})
    return pd.DataFrame(rows)


def partition_sweep(betas: Iterable, prime_bound: int, terms: int = 20, order: int = 12) -> pd.DataFrame:
    return pd.DataFrame([global_partition(b, prime_bound, terms, order).to_dict() for b in betas])


def local_zeta_sweep(p: int, betas: Iterable, lmax: int = 30) -> pd.DataFrame:
    rows = []
    for beta in betas:
        s = local_zeta_series(p, beta, lmax)
        closed = local_zeta_closed(p, beta) if as_beta(beta) > 3 else None
        rows.append({"p": p, "beta": float(as_beta(beta)), "series": s.value, "tail_bound": s.tail_bound,
                     "diverging": s.diverging, "closed": None if closed is None else float(closed)})
    return pd.DataFrame(rows)
