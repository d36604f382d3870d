"""
Hecke operators acting on indicator functions of the multiplier-zero rank strata.

deg(g) T_g f (P) = sum over right-coset reps h of Gamma g Gamma of f(h P). For an
indicator f of a stratum this is a count of reps, so every identity below is
checked by enumerating reps and classifying h*P exactly.

Polynomial bookkeeping: an expansion sum c_{a,b} f_{a,b} of rank-two strata
functions is stored as {(a, b): c} (x^a y^b), rank-one expansions as {a: c}.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import pandas as pd
from sympy import isprime, multiplicity

from errors import DomainError
from hecke_cosets import BlockUpperRep, degree, hecke_generator, right_coset_reps
from normal_forms import Rank1, Rank2, StratumLabel, classify_stratum, divisor_type_of
from symplectic_core import MatQ, Similitude, multiplier, stratum_point

logger = logging.getLogger(__name__)


# --- value types ----------------------------------------------------------------------

@dataclass
class StrataFn:
    """Finitely supported StratumLabel -> rational map; zero values are dropped."""
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, v in self.values.items():
            k = k if isinstance(k, StratumLabel) else StratumLabel.parse(str(k))
            v = Fraction(v)
            if v:
                clean[k] = clean.get(k, 0) + v
        self.values = {k: clean[k] for k in sorted(clean) if clean[k]}

    def __getitem__(self, label) -> Fraction:
        return self.values.get(label, Fraction(0))

    def __eq__(self, other) -> bool:
        return isinstance(other, StrataFn) and self.values == other.values

    def total(self) -> Fraction:
        return sum(self.values.values(), Fraction(0))

    def shift(self, j: int) -> "StrataFn":
        return StrataFn({k.shift(j): v for k, v in self.values.items()})

    def to_dict(self) -> dict[str, str]:
        return {str(k): str(v) for k, v in self.values.items()}


class LaurentPoly2:
    """Integer Laurent polynomial in p and x = p^-beta, as {(a, b): c} for c p^a x^b."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple[int, int], int] | None = None):
        clean: dict[tuple[int, int], int] = {}
        for (a, b), c in (terms or {}).items():
            clean[(int(a), int(b))] = clean.get((int(a), int(b)), 0) + int(c)
        self.terms = {k: clean[k] for k in sorted(clean) if clean[k]}

    @classmethod
    def const(cls, c: int) -> "LaurentPoly2":
        return cls({(0, 0): c})

    @classmethod
    def monomial(cls, c: int, a: int, b: int) -> "LaurentPoly2":
        return cls({(a, b): c})

    def __add__(self, other) -> "LaurentPoly2":
        other = _as_poly(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return LaurentPoly2(out)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly2":
        return LaurentPoly2({k: -c for k, c in self.terms.items()})

    def __sub__(self, other) -> "LaurentPoly2":
        return self + (-_as_poly(other))

    def __rsub__(self, other) -> "LaurentPoly2":
        return _as_poly(other) - self

    def __mul__(self, other) -> "LaurentPoly2":
        other = _as_poly(other)
        out: dict[tuple[int, int], int] = {}
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                k = (a1 + a2, b1 + b2)
                out[k] = out.get(k, 0) + c1 * c2
        return LaurentPoly2(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "LaurentPoly2":
        if n < 0:
            raise DomainError("negative powers of a Laurent polynomial sum are not supported")
        out = LaurentPoly2.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, LaurentPoly2) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(tuple(self.terms.items()))

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*p^{a}*x^{b}" for (a, b), c in self.terms.items())

    def evaluate(self, p, x) -> Fraction:
        p, x = Fraction(p), Fraction(x)
        return sum((c * p ** a * x ** b for (a, b), c in self.terms.items()), Fraction(0))

    def at_beta(self, p: int, beta: int) -> Fraction:
        return self.evaluate(p, Fraction(p) ** (-beta))


def _as_poly(v) -> LaurentPoly2:
    return v if isinstance(v, LaurentPoly2) else LaurentPoly2.const(int(v))


P_SYM = LaurentPoly2.monomial(1, 1, 0)
X_SYM = LaurentPoly2.monomial(1, 0, 1)


# --- operators ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeckeOperator:
    """g2^-twist * base, base in {id, g1, g3}; g2 = p*1 is central."""
    name: str
    base: str
    twist: int

    def element(self, p: int) -> Similitude:
        g = Similitude(MatQ.identity(4), 1) if self.base == "id" else hecke_generator(p, self.base)
        return g.scale(Fraction(1, p ** self.twist))

    def lambda_exponent(self) -> int:
        """e with lam(g) = p^-e."""
        return 2 * self.twist - {"id": 0, "g1": 1, "g3": 2}[self.base]


COMBINATION_OPERATORS = (
    HeckeOperator("g2^-1 g1", "g1", 1),
    HeckeOperator("g2^-2 g3", "g3", 2),
    HeckeOperator("g2^-1", "id", 1),
    HeckeOperator("g2^-2 g1", "g1", 2),
    HeckeOperator("g2^-2", "id", 2),
)
ALT_G3_OPERATOR = HeckeOperator("g2^-1 g3", "g3", 1)


def combination_coefficients(p: int) -> tuple[int, ...]:
    return (1, -p, -(p + p ** 3), p ** 3, -p ** 6)


def central_twist(reps: Iterable, j: int, p: int) -> list[Similitude]:
    """p^-j * h for every rep h."""
    out = []
    for h in reps:
        if isinstance(h, BlockUpperRep):
            h = h.similitude()
        elif isinstance(h, MatQ):
            h = Similitude.of(h)
        out.append(h if j == 0 else h.scale(Fraction(1, p ** j)))
    return out


def _untwist(g: Similitude, p: int) -> tuple[Similitude, int]:
    j = 0
    for v in g.mat.entries:
        if v.denominator != 1:
            if v.denominator != p ** multiplicity(p, v.denominator):
                raise DomainError(f"entry {v} has a denominator prime to p={p}")
            j = max(j, multiplicity(p, v.denominator))
    return g.scale(p ** j), j


@lru_cache(maxsize=64)
def _reps_for(g_key: tuple, lam: Fraction, p: int) -> tuple[Similitude, ...]:
    g = Similitude(MatQ(4, g_key), lam)
    g0, j = _untwist(g, p)
    dt = divisor_type_of(g0.mat, int(g0.lam))
    return tuple(central_twist(right_coset_reps(dt), j, p))


def hecke_reps(g: Similitude, p: int) -> list[Similitude]:
    """Right-coset reps of Gamma g Gamma for a p-power-denominator similitude."""
    if not isprime(p):
        raise DomainError(f"p must be prime, got {p}")
    return list(_reps_for(g.mat.entries, g.lam, p))


def point_matrix(point, p: int) -> MatQ:
    if isinstance(point, MatQ):
        M = point
    else:
        label = point if isinstance(point, StratumLabel) else StratumLabel.parse(str(point))
        M = stratum_point(p, *label.ks) if label.rank == 2 else stratum_point(p, label.ks[0])
    if multiplier(M) != 0:
        raise DomainError("Hecke points must be multiplier-zero matrices")
    return M


def apply_hecke_counts(g: Similitude, p: int, point) -> StrataFn:
    P = point_matrix(point, p)
    counts = Counter(classify_stratum(h.mat @ P, p) for h in hecke_reps(g, p))
    return StrataFn(dict(counts))


def _offset(label: StratumLabel, base: StratumLabel) -> tuple:
    return (label.rank,) + tuple(a - b for a, b in zip(label.ks, base.ks))


def offset_pattern(g: Similitude, p: int, point) -> dict[tuple, int]:
    """Counts keyed by (rank, output label - input label)."""
    base = point if isinstance(point, StratumLabel) else StratumLabel.parse(str(point))
    counts = apply_hecke_counts(g, p, base)
    return {_offset(k, base): int(v) for k, v in counts.values.items()}


def grid_points(radius: int) -> list[StratumLabel]:
    pts = [Rank2(k1, k2) for k1 in range(radius + 1) for k2 in range(k1, radius + 1)]
    return pts + [Rank1(k) for k in range(radius + 1)]


def grid_constancy(g: Similitude, p: int, radius: int) -> bool:
    """Offset patterns agree across points of the same shape (rank and gap)."""
    seen: dict[tuple, dict] = {}
    for pt in grid_points(radius):
        shape = (pt.rank, pt.ks[-1] - pt.ks[0])
        pat = offset_pattern(g, p, pt)
        if seen.setdefault(shape, pat) != pat:
            logger.debug("offset pattern changes at %s for shape %s", pt, shape)
            return False
    return True


# --- expansion identities -----------------------------------------------------------------

def _o1_rank2(p: int) -> dict:
    # keys are sorted labels; (k1, k2) and (k2, k1) are one stratum
    return {(0, 0): 1, (0, 1): p, (1, 1): p ** 3}


def _o1_rank1(p: int) -> dict:
    return {0: 1 + p, 1: p ** 3 + p ** 2}


def _shift2(poly: dict, d: int) -> dict:
    return {(a + d, b + d): c for (a, b), c in poly.items()}


RANK2_EXPANSIONS: dict[str, Callable[[int], dict]] = {
    "g2^-1 g1": _o1_rank2,
    "g2^-2 g3": lambda p: {(0, 1): 1, (1, 1): p ** 2 - 1, (1, 2): p ** 3},
    "g2^-1": lambda p: {(1, 1): 1},
    "g2^-2 g1": lambda p: _shift2(_o1_rank2(p), 1),
    "g2^-2": lambda p: {(2, 2): 1},
}

RANK1_EXPANSIONS: dict[str, Callable[[int], dict]] = {
    "g2^-1 g1": _o1_rank1,
    "g2^-2 g3": lambda p: {0: 1, 1: p ** 3 + p ** 2 + p - 1, 2: p ** 4},
    "g2^-1": lambda p: {1: 1},
    "g2^-2 g1": lambda p: {a + 1: c for a, c in _o1_rank1(p).items()},
    "g2^-2": lambda p: {2: 1},
}


def expected_count(expansion: dict, point: StratumLabel) -> int:
    """Coefficient of the point's stratum function, ordered pairs merged."""
    if not expansion:
        return 0
    rank2 = isinstance(next(iter(expansion)), tuple)
    if rank2 != (point.rank == 2):
        return 0
    if point.rank == 1:
        return expansion.get(point.ks[0], 0)
    k1, k2 = point.ks
    out = expansion.get((k1, k2), 0)
    if k1 != k2:
        out += expansion.get((k2, k1), 0)
    return out


@dataclass
class Lemma47Report:
    p: int
    radius: int
    rows: list[dict] = field(default_factory=list)
    combination_by_twist: dict[int, bool] = field(default_factory=dict)

    @property
    def all_ok(self) -> bool:
        return all(r["ok"] for r in self.rows)

    def failures(self) -> list[dict]:
        return [r for r in self.rows if not r["ok"]]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=["check", "operator", "target", "point", "expected", "computed", "ok"])

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "grid_radius": self.radius,
            "all_ok": self.all_ok,
            "combination_by_g3_twist": {str(k): v for k, v in sorted(self.combination_by_twist.items())},
            "rows": self.rows,
        }


def _point_counts(op: HeckeOperator, p: int, points: list[StratumLabel]) -> dict[StratumLabel, StrataFn]:
    g = op.element(p)
    return {pt: apply_hecke_counts(g, p, pt) for pt in points}


def _combination_holds(ops, p: int, points, target: StratumLabel, cache: dict) -> tuple[bool, dict]:
    coeffs = combination_coefficients(p)
    totals = {}
    for pt in points:
        totals[pt] = sum(c * int(cache[op.name][pt][target]) for c, op in zip(coeffs, ops))
    ok = all(totals[pt] == int(pt == target) for pt in points)
    return ok, totals


def verify_lemma47(p: int, grid_radius: int) -> Lemma47Report:
    """
    Pointwise check, on every stratum point with valuations in [0, grid_radius], of
    the five rank-two and five rank-one expansions of deg(g) T_g f_0 and of the
    combination that recovers f_0. The combination is evaluated for both g2^-2 g3
    and g2^-1 g3.
    """
    if not isprime(p):
        raise DomainError(f"p must be prime, got {p}")
    if grid_radius < 2:
        raise DomainError(f"grid_radius must be >= 2, got {grid_radius}")
    points = grid_points(grid_radius)
    report = Lemma47Report(p, grid_radius)
    targets = {"f1": (Rank2(0, 0), RANK2_EXPANSIONS), "f0": (Rank1(0), RANK1_EXPANSIONS)}
    cache: dict = {}
    for op in COMBINATION_OPERATORS + (ALT_G3_OPERATOR,):
        cache[op.name] = _point_counts(op, p, points)
        logger.debug("counted %s at p=%d over %d points", op.name, p, len(points))

    for family, (target, expansions) in targets.items():
        for op in COMBINATION_OPERATORS:
            poly = expansions[op.name](p)
            for pt in points:
                exp, got = expected_count(poly, pt), int(cache[op.name][pt][target])
                report.rows.append({"check": f"expansion_{family}", "operator": op.name, "target": str(target),
                                    "point": str(pt), "expected": exp, "computed": got, "ok": exp == got})
        _, totals = _combination_holds(COMBINATION_OPERATORS, p, points, target, cache)
        for pt in points:
            exp = int(pt == target)
            report.rows.append({"check": f"combination_{family}", "operator": "sum", "target": str(target),
                                "point": str(pt), "expected": exp, "computed": totals[pt], "ok": exp == totals[pt]})

    for twist, g3 in ((2, COMBINATION_OPERATORS[1]), (1, ALT_G3_OPERATOR)):
        ops = (COMBINATION_OPERATORS[0], g3) + COMBINATION_OPERATORS[2:]
        report.combination_by_twist[twist] = all(
            _combination_holds(ops, p, points, target, cache)[0] for target, _ in targets.values()
        )
    logger.info("hecke identities at p=%d radius=%d: %d checks, %d failures",
                p, grid_radius, len(report.rows), len(report.failures()))
    return report


# --- R(p, beta) ---------------------------------------------------------------------------

R_LONG_TERMS = (
    (1, 1, 1), (1, 2, 1), (1, 3, 1), (1, 0, 1),
    (-1, 1, 2), (-1, 2, 2), (-2, 3, 2), (-1, 4, 2), (-1, 5, 2),
    (1, 3, 3), (1, 4, 3), (1, 5, 3), (1, 6, 3),
    (-1, 6, 4),
)


def r_poly_long() -> LaurentPoly2:
    """The expanded form as (coefficient, power of p, power of x) terms."""
    return LaurentPoly2({(a, b): c for c, a, b in R_LONG_TERMS})


def r_poly_factored() -> LaurentPoly2:
    quartic = LaurentPoly2.const(1)
    for k in range(4):
        quartic = quartic * (X_SYM - LaurentPoly2.monomial(1, -k, 0))
    return 1 - LaurentPoly2.monomial(1, 6, 0) * quartic


def _degree_poly(base: str) -> LaurentPoly2:
    one = LaurentPoly2.const(1)
    if base == "g1":
        return (one + P_SYM) * (one + P_SYM ** 2)
    if base == "g3":
        return P_SYM + P_SYM ** 2 + P_SYM ** 3 + P_SYM ** 4
    return one


def r_poly_from_operators() -> LaurentPoly2:
    """sum_i c_i deg(g_i) lam(g_i)^beta over the combination operators."""
    coeffs = (
        LaurentPoly2.const(1),
        -P_SYM,
        -(P_SYM + P_SYM ** 3),
        P_SYM ** 3,
        -(P_SYM ** 6),
    )
    out = LaurentPoly2()
    for c, op in zip(coeffs, COMBINATION_OPERATORS):
        out = out + c * _degree_poly(op.base) * X_SYM ** op.lambda_exponent()
    return out


def r_poly_identity() -> bool:
    long = r_poly_long()
    return long == r_poly_factored() and long == r_poly_from_operators()


def r_value(p: int, beta: int) -> Fraction:
    return r_poly_long().at_beta(p, beta)


def operator_degree_check(p: int) -> dict[str, bool]:
    """deg of each twisted operator equals the symbolic degree polynomial at p."""
    out = {}
    for op in COMBINATION_OPERATORS:
        g0, _ = _untwist(op.element(p), p)
        dt = divisor_type_of(g0.mat, int(g0.lam))
        out[op.name] = degree(dt) == _degree_poly(op.base).evaluate(p, 1)
    return out
