"""
Run engine: module-level configuration, the worker pool, and `run_from_cfg`,
the single entry point used by the CLI and by parameter sweeps.

Every tunable is an ALL_CAPS constant below. A run is controlled by a cfg dict
whose keys are those names; `run_from_cfg` merges it onto the defaults,
temporarily rebinds the module constants, dispatches on COMMAND and returns

    {"record": <JSON-ready dict>, "tables": {name: DataFrame, ...}}
"""

from __future__ import annotations

import copy
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from fractions import Fraction
from functools import partial
from typing import Callable, Iterable

import pandas as pd
from sympy import factorint, primerange

from characters import DirichletChar, characters_mod, conductor, l_function, theorem58_bound
from errors import DomainError
from hecke_cosets import (
    R_closed,
    R_count,
    R_sum,
    degree,
    degree_ratio,
    divisor_types,
    right_coset_reps,
)
from hecke_operators import operator_degree_check, r_poly_identity, verify_lemma47
from normal_forms import DivisorType
from oracle import (
    coset_distinctness,
    degree_oracle,
    group_closure,
    group_order_formula,
    surjectivity_check,
)
from run_export import _short_hash
from symplectic_core import MatQ, generators
from thermodynamics import (
    as_beta,
    gibbs_weights,
    global_partition,
    kms_phase,
    local_zeta_closed,
    local_zeta_error_bound,
    local_zeta_series,
    local_zeta_sweep,
)

logger = logging.getLogger(__name__)

__version__ = "0.1.0"

COMMANDS = ("cosets", "degree", "zeta", "partition", "hecke-verify", "phase", "characters", "oracle")


def parse_bytes(text) -> int:
    """'4G' -> 4 * 1024**3; plain integers are bytes."""
    s = str(text).strip().upper().rstrip("B")
    mult = {"K": 1024, "M": 1024 ** 2, "G": 1024 ** 3}.get(s[-1:], 1)
    if mult != 1:
        s = s[:-1]
    try:
        n = int(float(s) * mult)
    except ValueError:
        raise DomainError(f"cannot parse a byte count from {text!r}") from None
    if n <= 0:
        raise DomainError(f"memory budget must be positive, got {text!r}")
    return n


# === Run selection ==============================================================================
COMMAND = "degree"
P = 2
L = 1
PRIMES = [2]
DIVISOR_TYPE = None            # "a1,a2,d2,d1"; None means every type at (P, L)
CHECK_DISTINCT = False

# === Thermodynamics =============================================================================
BETA = "4"                     # exact decimal string
BETAS = []                     # sweep values; non-empty overrides BETA
CLOSED = False
SERIES_LMAX = 30
PRIME_BOUND = 10_000
LAMBDA_BOUND = 0               # > 0 adds Gibbs weights up to this multiplier
ZETA_EM_TERMS = 20
ZETA_EM_ORDER = 12

# === Hecke identities ===========================================================================
GRID_RADIUS = 3

# === Characters =================================================================================
MODULUS = 4
CHAR_INDEX = None              # index into characters_mod(MODULUS); None = first nontrivial
S_VALUE = None
L_TRUNCATION = 1_000_000
F_CUTOFFS = []                 # prime cutoffs for the bound sweep

# === Oracle =====================================================================================
ORACLE_MODE = "closure"        # closure | degree | distinct
MOD_N = 2
CHECK_SURJECTIVE = False
REPS_FILE = None

# === Execution and output =======================================================================
WORKERS = int(os.getenv("GSP4_WORKERS", "0")) or (os.cpu_count() or 1)
MEMORY_BUDGET_BYTES = parse_bytes(os.getenv("GSP4_MEMORY_BUDGET", "4G"))
OUTPUT_FORMAT = "json"
OUTPUT_ROOT = os.getenv("GSP4_OUTPUT_ROOT", "runs")
WRITE_XLSX = False

# keys that change where or how fast a run happens, never what it computes
NON_SEMANTIC_KEYS = frozenset({"WORKERS", "OUTPUT_FORMAT", "OUTPUT_ROOT", "WRITE_XLSX", "MEMORY_BUDGET_BYTES"})

# === Config plumbing ============================================================================
_MISSING = object()


def _is_constant_name(name: str) -> bool:
    """ALL_CAPS names are config constants."""
    return name.isupper() and not name.startswith("_")


_NOT_CONFIG = {"COMMANDS", "NON_SEMANTIC_KEYS"}


def get_default_cfg() -> dict:
    """Snapshot the current module constants (ALL_CAPS) as defaults."""
    g = globals()
    out = {}
    for k, v in list(g.items()):
        if _is_constant_name(k) and k not in _NOT_CONFIG:
            out[k] = copy.deepcopy(v)
    return out


@contextmanager
def override_globals(new_vals: dict):
    """Temporarily rebind module constants from new_vals, then restore."""
    old = {}
    g = globals()
    try:
        for k, v in new_vals.items():
            old[k] = g.get(k, _MISSING)
            g[k] = v
        yield
    finally:
        for k, v in old.items():
            if v is _MISSING:
                g.pop(k, None)
            else:
                g[k] = v


def _as_list(v) -> list:
    if v is None:
        return []
    if isinstance(v, str):
        return [t.strip() for t in v.split(",") if t.strip()]
    if isinstance(v, (list, tuple)):
        return list(v)
    return [v]


FLAG_KEYS = ("CHECK_DISTINCT", "CLOSED", "CHECK_SURJECTIVE")
_TRUE_TOKENS = frozenset({"1", "true", "t", "yes", "y", "on"})
_FALSE_TOKENS = frozenset({"0", "false", "f", "no", "n", "off", ""})


def parse_flag(value, key: str = "flag") -> bool:
    """Booleans, 0/1 and yes/no style tokens; anything else is a DomainError naming the key."""
    if isinstance(value, str):
        token = value.strip().lower()
        if token in _TRUE_TOKENS:
            return True
        if token in _FALSE_TOKENS:
            return False
    elif value is not None and value in (0, 1):
        return bool(value)
    raise DomainError(f"{key} must be a yes/no flag, got {value!r}")


def resolve_cfg(user_cfg: dict | None = None) -> dict:
    """
    Merge user overrides onto the defaults, with light type guards so a scalar
    never lands where a list is expected and numeric strings become numbers.
    """
    defaults = get_default_cfg()
    merged = dict(defaults)
    if not user_cfg:
        return merged
    unknown = sorted(k for k in user_cfg if k not in defaults)
    if unknown:
        logger.warning("ignoring unknown config keys: %s", ", ".join(unknown))
    merged.update({k: v for k, v in user_cfg.items() if k in defaults})

    merged["PRIMES"] = [int(p) for p in _as_list(merged["PRIMES"])] or [int(merged["P"])]
    merged["BETAS"] = [str(b) for b in _as_list(merged["BETAS"])]
    merged["F_CUTOFFS"] = [int(c) for c in _as_list(merged["F_CUTOFFS"])]
    for k in ("P", "L", "SERIES_LMAX", "PRIME_BOUND", "LAMBDA_BOUND", "GRID_RADIUS", "MODULUS",
              "L_TRUNCATION", "MOD_N", "WORKERS", "ZETA_EM_TERMS", "ZETA_EM_ORDER"):
        merged[k] = int(merged[k])
    merged["BETA"] = str(merged["BETA"])
    for k in FLAG_KEYS:
        merged[k] = parse_flag(merged[k], k)
    if not isinstance(merged["MEMORY_BUDGET_BYTES"], int):
        merged["MEMORY_BUDGET_BYTES"] = parse_bytes(merged["MEMORY_BUDGET_BYTES"])
    if merged["COMMAND"] not in COMMANDS:
        raise DomainError(f"unknown command {merged['COMMAND']!r}; expected one of {', '.join(COMMANDS)}")
    return merged


def config_hash(cfg: dict) -> str:
    return _short_hash({k: v for k, v in sorted(cfg.items()) if k not in NON_SEMANTIC_KEYS})


# === Worker pool ================================================================================

def pool_map(fn: Callable, items: Iterable) -> list:
    """
    fn over items on a process pool of WORKERS workers, results in input order.
    Serial when WORKERS <= 1 or there is at most one item. `fn` must be picklable
    and must not read engine globals (workers do not see overrides).
    """
    items = list(items)
    workers = min(WORKERS, len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    logger.debug("mapping %s over %d items on %d workers", getattr(fn, "__name__", fn), len(items), workers)
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# === Per-item workers (module level so they pickle) =============================================

def _type_summary(dt: DivisorType, check_distinct: bool = False) -> tuple[dict, list]:
    reps = right_coset_reps(dt)
    summary = {"type": str(dt), "r": dt.r, "degree": len(reps)}
    if check_distinct:
        summary["distinct"] = coset_distinctness(reps).distinct
    return summary, [rep.to_literal() for rep in reps]


def _degree_rows(p: int, l: int) -> list[dict]:
    rows = []
    for dt in divisor_types(p, l):
        ratio = degree_ratio(dt, p)
        rows.append({"p": p, "l": l, "type": str(dt), "degree": degree(dt), "degree_ratio": ratio,
                     "ratio_float": float(ratio)})
    return rows


def _counting_row(p: int, l: int) -> dict:
    return {"p": p, "l": l, "R_count": R_count(p, l), "R_closed": R_closed(p, l), "R_sum": R_sum(p, l)}


def _zeta_row(beta: str, p: int, lmax: int) -> dict:
    return local_zeta_sweep(p, [beta], lmax).to_dict("records")[0]


def _partition_row(beta: str, prime_bound: int, terms: int, order: int) -> dict:
    return global_partition(beta, prime_bound, terms, order).to_dict()


def _phase_row(beta: str, lmax: int, terms: int, order: int) -> dict:
    v = kms_phase(beta, lmax, terms, order)
    return {"beta": v.beta, "verdict": v.phase.value, "witness": v.witness, "note": v.note}


def _hecke_report(p: int, radius: int) -> dict:
    rep = verify_lemma47(p, radius)
    out = rep.to_dict()
    out["operator_degrees"] = operator_degree_check(p)
    return out


def _bound_row(cutoff: int, modulus: int, exps: tuple, beta: float, truncation: int) -> dict:
    chi = DirichletChar(modulus, exps)
    F = [int(q) for q in primerange(2, cutoff + 1) if modulus % q]
    res = theorem58_bound(chi, beta, F, truncation)
    return {"cutoff": cutoff, "n_primes": len(F), "bound": res.bound, "numerator": res.numerator,
            "denominator": res.denominator, "restricted_product": res.restricted_product}


# === Commands ===================================================================================

def _betas() -> list[str]:
    return BETAS or [BETA]


def _parsed_type() -> DivisorType | None:
    return DivisorType.parse(DIVISOR_TYPE) if DIVISOR_TYPE else None


def _prime_power_of(r: int) -> tuple[int | None, int | None]:
    f = factorint(r)
    if len(f) != 1:
        return None, None
    (p, l), = f.items()
    return int(p), int(l)


def _run_cosets() -> dict:
    dt = _parsed_type()
    types = [dt] if dt is not None else divisor_types(P, L)
    done = pool_map(partial(_type_summary, check_distinct=CHECK_DISTINCT), types)
    summaries, reps = [], {}
    for t, (summary, lits) in zip(types, done):
        p, l = _prime_power_of(t.r)
        summaries.append({"p": p, "l": l, **summary})
        reps[str(t)] = lits
    rep_rows = [{"type": t, "index": i, "matrix": json.dumps(m)} for t, ms in reps.items() for i, m in enumerate(ms)]
    record = {"summary": summaries[0] if dt is not None else summaries, "reps": reps[str(dt)] if dt else reps}
    return {"record": record, "tables": {"summary": pd.DataFrame(summaries), "reps": pd.DataFrame(rep_rows)}}


def _run_degree() -> dict:
    dt = _parsed_type()
    if dt is not None:
        p, l = _prime_power_of(dt.r)
        record = {"type": str(dt), "r": dt.r, "degree": degree(dt)}
        if p is not None:
            record.update(p=p, l=l, degree_ratio=degree_ratio(dt, p))
        return {"record": record, "tables": {"degrees": pd.DataFrame([record])}}
    rows = [row for block in pool_map(partial(_degree_rows, l=L), PRIMES) for row in block]
    counting = pool_map(partial(_counting_row, l=L), PRIMES)
    record = {"degrees": rows, "counting": counting}
    return {"record": record, "tables": {"degrees": pd.DataFrame(rows), "counting": pd.DataFrame(counting)}}


def _run_zeta() -> dict:
    if BETAS:
        rows = pool_map(partial(_zeta_row, p=P, lmax=SERIES_LMAX), BETAS)
        return {"record": {"p": P, "sweep": rows}, "tables": {"zeta": pd.DataFrame(rows)}}
    beta = as_beta(BETA)
    if CLOSED:
        value = local_zeta_closed(P, beta)
        record = {"p": P, "beta": BETA, "value": value}
        if not isinstance(value, Fraction):
            record["error_bound"] = local_zeta_error_bound(P, float(beta))
    else:
        s = local_zeta_series(P, beta, SERIES_LMAX)
        record = {"p": P, "beta": BETA, "lmax": SERIES_LMAX, "value": s.value, "tail_bound": s.tail_bound,
                  "diverging": s.diverging, "partials": s.partials}
    table = pd.DataFrame([{k: v for k, v in record.items() if k != "partials"}])
    return {"record": record, "tables": {"zeta": table}}


def _run_partition() -> dict:
    rows = pool_map(partial(_partition_row, prime_bound=PRIME_BOUND, terms=ZETA_EM_TERMS, order=ZETA_EM_ORDER),
                    _betas())
    record = {"sweep": rows} if BETAS else dict(rows[0])
    tables = {"partition": pd.DataFrame(rows)}
    if LAMBDA_BOUND > 0:
        gibbs = gibbs_weights(BETA, LAMBDA_BOUND, ZETA_EM_TERMS, ZETA_EM_ORDER)
        record["gibbs"] = {"lambda_bound": LAMBDA_BOUND, "mass": gibbs.mass, "tail_bound": gibbs.tail_bound}
        tables["gibbs"] = gibbs.to_frame()
    return {"record": record, "tables": tables}


def _run_hecke_verify() -> dict:
    reports = pool_map(partial(_hecke_report, radius=GRID_RADIUS), PRIMES)
    record = {"r_poly_identity": r_poly_identity(), "reports": reports,
              "all_ok": all(r["all_ok"] for r in reports)}
    rows = [{"p": r["p"], **row} for r in reports for row in r["rows"]]
    return {"record": record, "tables": {"hecke_checks": pd.DataFrame(rows)}}


def _run_phase() -> dict:
    rows = pool_map(partial(_phase_row, lmax=SERIES_LMAX, terms=ZETA_EM_TERMS, order=ZETA_EM_ORDER), _betas())
    record = {"sweep": rows} if BETAS else rows[0]
    flat = [{"beta": r["beta"], "verdict": r["verdict"], "note": r["note"],
             **{f"witness_{k}": w for k, w in r["witness"].items()}} for r in rows]
    return {"record": record, "tables": {"phase": pd.DataFrame(flat)}}


def _selected_character():
    chars = characters_mod(MODULUS)
    if CHAR_INDEX is not None:
        i = int(CHAR_INDEX)
        if not 0 <= i < len(chars):
            raise DomainError(f"character index {i} out of range for modulus {MODULUS} ({len(chars)} characters)")
        return chars[i]
    nontrivial = [c for c in chars if not c.is_principal]
    if not nontrivial:
        raise DomainError(f"modulus {MODULUS} has no nontrivial character")
    return nontrivial[0]


def _run_characters() -> dict:
    chars = characters_mod(MODULUS)
    listing = []
    for i, chi in enumerate(chars):
        listing.append({"index": i, "name": str(chi), "order": chi.order(), "principal": chi.is_principal,
                        "conductor": conductor(chi),
                        "values": [None if (t := chi.value_turn(n)) is None else t for n in range(MODULUS)]})
    record = {"modulus": MODULUS, "characters": listing}
    tables = {"characters": pd.DataFrame([{k: v for k, v in c.items() if k != "values"} for c in listing])}
    if S_VALUE is not None:
        s = float(S_VALUE)
        lvals = []
        for i, chi in enumerate(chars):
            if chi.is_principal and s <= 1:
                continue
            lvals.append({"index": i, "name": str(chi), "s": s, **l_function(chi, s, L_TRUNCATION).to_dict()})
        record["l_values"] = lvals
        tables["l_values"] = pd.DataFrame(lvals)
    if F_CUTOFFS:
        chi = _selected_character()
        beta = float(as_beta(BETA))
        rows = pool_map(partial(_bound_row, modulus=MODULUS, exps=chi.exponents, beta=beta,
                                truncation=L_TRUNCATION), F_CUTOFFS)
        record["bound_sweep"] = {"character": str(chi), "beta": BETA, "rows": rows}
        tables["bound_sweep"] = pd.DataFrame(rows)
    return {"record": record, "tables": tables}


def _load_reps(path: str) -> list[MatQ]:
    with open(path) as f:
        data = json.load(f)
    if isinstance(data, dict):
        data = data.get("reps", data)
    if isinstance(data, dict):
        data = [m for ms in data.values() for m in ms]
    if not isinstance(data, list):
        raise DomainError(f"{path}: expected a list of matrix literals")
    return [MatQ.from_literal(m) for m in data]


def _run_oracle() -> dict:
    if ORACLE_MODE == "closure":
        res = group_closure(generators(2), MOD_N, MEMORY_BUDGET_BYTES)
        record = {"mode": "closure", "N": MOD_N, "order": res.order, "formula_order": group_order_formula(MOD_N)}
        if CHECK_SURJECTIVE:
            record["surjectivity"] = surjectivity_check(MOD_N, MEMORY_BUDGET_BYTES).to_dict()
    elif ORACLE_MODE == "degree":
        dt = _parsed_type()
        if dt is None:
            raise DomainError("oracle degree needs a divisor type")
        found = degree_oracle(dt, P, L, MEMORY_BUDGET_BYTES)
        record = {"mode": "degree", "p": P, "l": L, "type": str(dt), "oracle_degree": found,
                  "enumerated_degree": degree(dt)}
        record["agree"] = record["oracle_degree"] == record["enumerated_degree"]
    elif ORACLE_MODE == "distinct":
        if not REPS_FILE:
            raise DomainError("oracle distinct needs a reps file")
        res = coset_distinctness(_load_reps(REPS_FILE))
        record = {"mode": "distinct", "reps_file": os.path.basename(REPS_FILE), **res.to_dict()}
    else:
        raise DomainError(f"unknown oracle mode {ORACLE_MODE!r}")
    return {"record": record, "tables": {"oracle": pd.DataFrame([{k: v for k, v in record.items()
                                                                 if not isinstance(v, dict)}])}}


_DISPATCH = {
    "cosets": _run_cosets,
    "degree": _run_degree,
    "zeta": _run_zeta,
    "partition": _run_partition,
    "hecke-verify": _run_hecke_verify,
    "phase": _run_phase,
    "characters": _run_characters,
    "oracle": _run_oracle,
}


def run_from_cfg(cfg: dict | None = None) -> dict:
    """
    Public entrypoint for CLI and batch use.
    - Merges cfg with the defaults captured from this module
    - Temporarily overrides module constants and runs the selected command
    - Restores globals afterward
    Returns {"record", "tables", "provenance", "config"}.
    """
    merged = resolve_cfg(cfg)
    h = config_hash(merged)
    logger.info("%s  config=%s  workers=%d  budget=%d bytes",
                merged["COMMAND"], h, merged["WORKERS"], merged["MEMORY_BUDGET_BYTES"])

    with override_globals(merged):
        artifacts = _DISPATCH[COMMAND]()

    artifacts["provenance"] = {"command": merged["COMMAND"], "config_hash": h, "library_version": __version__}
    artifacts["config"] = {k: v for k, v in merged.items() if k not in NON_SEMANTIC_KEYS}
    return artifacts


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="[%(name)s] %(message)s")
    print(json.dumps(run_from_cfg({})["record"], default=str, indent=2))
