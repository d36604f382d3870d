#!/usr/bin/env python3
"""
gsp4-hecke command line.

    python main.py degree --p 2 --type 1,1,2,2
    python main.py zeta --p 2 --beta 4 --closed
    python main.py phase --beta 2.5
    python main.py partition --betas 5,6,7 --format csv --xlsx
    python main.py oracle closure --mod 3

The result document (provenance header + result) is printed to stdout and
saved under <out>/<run_id>/ unless --no-save is given. Module errors print a
machine-readable error record and exit with status 2; anything else exits 1.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

from engine import OUTPUT_ROOT, WORKERS, parse_bytes, run_from_cfg
from errors import DomainError, Gsp4Error, error_record
from hecke_cosets import R_closed
from run_export import dumps_result, error_document, export_run

logger = logging.getLogger("gsp4")


# PARAMETER SPECIFICATIONS - every numeric knob the CLI accepts
PARAM_SPECS = {
    # =============================================================================
    # HECKE ALGEBRA
    # =============================================================================
    "P": {
        "type": "int", "min": 2, "max": 97, "default": 2,
        "label": "Prime p",
        "desc": "Prime at which double cosets, local zeta functions and Hecke identities are computed.",
        "group": "hecke",
    },
    "L": {
        "type": "int", "min": 0, "max": 6, "default": 1,
        "label": "Multiplier exponent l",
        "desc": "Double cosets of multiplier p^l are enumerated; the rep count grows like p^(3l).",
        "group": "hecke",
    },
    "GRID_RADIUS": {
        "type": "int", "min": 2, "max": 6, "default": 3,
        "label": "Stratum grid radius",
        "desc": "Largest valuation on the stratum grid used to check the Hecke expansion identities.",
        "group": "hecke",
    },
    # =============================================================================
    # THERMODYNAMICS
    # =============================================================================
    "SERIES_LMAX": {
        "type": "int", "min": 1, "max": 500, "default": 30,
        "label": "Series length",
        "desc": "Number of terms of the local zeta series; also the witness length for divergence.",
        "group": "thermodynamics",
    },
    "PRIME_BOUND": {
        "type": "int", "min": 2, "max": 10_000_000, "default": 10_000,
        "label": "Euler product prime bound",
        "desc": "Primes up to this bound enter the truncated global partition function.",
        "group": "thermodynamics",
    },
    "LAMBDA_BOUND": {
        "type": "int", "min": 0, "max": 2000, "default": 0,
        "label": "Gibbs multiplier bound",
        "desc": "Gibbs weights are listed for every double coset with multiplier up to this bound (0 = off).",
        "group": "thermodynamics",
    },
    # =============================================================================
    # CHARACTERS
    # =============================================================================
    "MODULUS": {
        "type": "int", "min": 1, "max": 100_000, "default": 4,
        "label": "Character modulus",
        "desc": "Dirichlet characters modulo this integer are listed and evaluated.",
        "group": "characters",
    },
    "L_TRUNCATION": {
        "type": "int", "min": 1, "max": 100_000_000, "default": 1_000_000,
        "label": "L-series truncation",
        "desc": "Number of terms summed for L(s, chi); the tail bound is reported alongside.",
        "group": "characters",
    },
    # =============================================================================
    # ORACLE AND EXECUTION
    # =============================================================================
    "MOD_N": {
        "type": "int", "min": 2, "max": 64, "default": 2,
        "label": "Closure modulus N",
        "desc": "Sp4(Z/N) is enumerated by breadth-first closure of the generator images.",
        "group": "oracle",
    },
    "WORKERS": {
        "type": "int", "min": 1, "max": 512, "default": WORKERS,
        "label": "Worker processes",
        "desc": "Size of the process pool; 1 runs everything in-process.",
        "group": "execution",
    },
}


def _check_spec(name: str, value) -> Optional[str]:
    spec = PARAM_SPECS[name]
    if value is None:
        return None
    if value < spec["min"] or value > spec["max"]:
        return f"{spec['label']} must lie in [{spec['min']}, {spec['max']}], got {value}"
    return None


def validate_parameter_combination(params_state: dict) -> List[str]:
    """Validate parameter combinations and return list of error messages"""
    errors = []

    # 1. Per-knob ranges
    for name in PARAM_SPECS:
        if name in params_state:
            msg = _check_spec(name, params_state[name])
            if msg:
                errors.append(msg)

    # 2. Exact beta values
    for b in [params_state.get("BETA")] + list(params_state.get("BETAS") or []):
        if b is None:
            continue
        try:
            Fraction(str(b))
        except (ValueError, ZeroDivisionError):
            errors.append(f"beta {b!r} is not a decimal or a/b rational")

    command = params_state.get("COMMAND")
    mode = params_state.get("ORACLE_MODE")

    # 3. Enumeration size
    if command == "cosets" and not params_state.get("DIVISOR_TYPE"):
        p, l = params_state.get("P", 2), params_state.get("L", 1)
        if 2 <= p <= 97 and 0 <= l <= 6 and R_closed(p, l) > 5_000_000:
            errors.append(f"p={p}, l={l} has {R_closed(p, l)} right cosets; pick a single --type instead")

    # 4. Oracle sub-modes
    if command == "oracle":
        if mode == "degree" and not params_state.get("DIVISOR_TYPE"):
            errors.append("oracle degree needs --type a1,a2,d2,d1")
        if mode == "distinct":
            path = params_state.get("REPS_FILE")
            if not path:
                errors.append("oracle distinct needs --reps FILE")
            elif not os.path.exists(path):
                errors.append(f"reps file {path} does not exist")

    # 5. Character bound sweep
    if command == "characters" and params_state.get("F_CUTOFFS"):
        if params_state.get("MODULUS", 4) < 3:
            errors.append("the bound sweep needs a modulus with a nontrivial character (>= 3)")
        cutoffs = params_state["F_CUTOFFS"]
        if any(c < 2 for c in cutoffs):
            errors.append("prime cutoffs must be >= 2")

    return errors


@dataclass
class RunConfig:
    command: str
    primes: List[int] = field(default_factory=list)
    p: int = 2
    l: int = 1
    divisor_type: Optional[str] = None
    check_distinct: bool = False
    beta: str = "4"
    betas: List[str] = field(default_factory=list)
    closed: bool = False
    lmax: int = 30
    prime_bound: int = 10_000
    lambda_bound: int = 0
    grid_radius: int = 3
    modulus: int = 4
    char_index: Optional[int] = None
    s: Optional[float] = None
    truncation: int = 1_000_000
    cutoffs: List[int] = field(default_factory=list)
    oracle_mode: str = "closure"
    mod_n: int = 2
    check_surjective: bool = False
    reps_file: Optional[str] = None
    output_root: str = OUTPUT_ROOT
    fmt: str = "json"
    xlsx: bool = False
    save: bool = True
    workers: Optional[int] = None
    memory_budget: Optional[str] = None

    def __post_init__(self):
        for b in [self.beta] + list(self.betas):
            try:
                Fraction(str(b))
            except (ValueError, ZeroDivisionError):
                raise DomainError(f"beta {b!r} is not a decimal or a/b rational") from None

    def to_cfg(self) -> dict:
        cfg = {
            "COMMAND": self.command,
            "P": self.p,
            "L": self.l,
            "PRIMES": list(self.primes) or [self.p],
            "DIVISOR_TYPE": self.divisor_type,
            "CHECK_DISTINCT": self.check_distinct,
            "BETA": self.beta,
            "BETAS": list(self.betas),
            "CLOSED": self.closed,
            "SERIES_LMAX": self.lmax,
            "PRIME_BOUND": self.prime_bound,
            "LAMBDA_BOUND": self.lambda_bound,
            "GRID_RADIUS": self.grid_radius,
            "MODULUS": self.modulus,
            "CHAR_INDEX": self.char_index,
            "S_VALUE": self.s,
            "L_TRUNCATION": self.truncation,
            "F_CUTOFFS": list(self.cutoffs),
            "ORACLE_MODE": self.oracle_mode,
            "MOD_N": self.mod_n,
            "CHECK_SURJECTIVE": self.check_surjective,
            "REPS_FILE": self.reps_file,
            "OUTPUT_ROOT": self.output_root,
            "OUTPUT_FORMAT": self.fmt,
            "WRITE_XLSX": self.xlsx,
        }
        if self.workers is not None:
            cfg["WORKERS"] = self.workers
        if self.memory_budget is not None:
            cfg["MEMORY_BUDGET_BYTES"] = parse_bytes(self.memory_budget)
        return cfg


def _int_list(text: str) -> List[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _str_list(text: str) -> List[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", dest="output_root", default=OUTPUT_ROOT, help="run folder root")
    common.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    common.add_argument("--xlsx", action="store_true", help="also write tables.xlsx")
    common.add_argument("--no-save", dest="save", action="store_false", help="print only, write no run folder")
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("--memory-budget", default=None, help="bytes, or with K/M/G suffix")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="gsp4", description="GSp4 Hecke combinatorics and thermodynamics")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    sp = add("cosets", "enumerate right-coset representatives")
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--l", type=int, default=1)
    sp.add_argument("--type", dest="divisor_type", default=None, help="a1,a2,d2,d1")
    sp.add_argument("--check-distinct", action="store_true")

    sp = add("degree", "double-coset degrees and the counting function")
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--primes", type=_int_list, default=[])
    sp.add_argument("--l", type=int, default=1)
    sp.add_argument("--type", dest="divisor_type", default=None, help="a1,a2,d2,d1")

    sp = add("zeta", "local zeta function, by series or closed form")
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--beta", default="4")
    sp.add_argument("--betas", type=_str_list, default=[])
    sp.add_argument("--closed", action="store_true")
    sp.add_argument("--lmax", type=int, default=30)

    sp = add("partition", "truncated Euler product against the zeta quotient")
    sp.add_argument("--beta", default="5")
    sp.add_argument("--betas", type=_str_list, default=[])
    sp.add_argument("--prime-bound", type=int, default=10_000)
    sp.add_argument("--lambda-bound", type=int, default=0)

    sp = add("hecke-verify", "check the Hecke expansion identities on a stratum grid")
    sp.add_argument("--primes", type=_int_list, default=[2])
    sp.add_argument("--grid-radius", type=int, default=3)

    sp = add("phase", "KMS phase verdict with witness")
    sp.add_argument("--beta", default="4")
    sp.add_argument("--betas", type=_str_list, default=[])
    sp.add_argument("--lmax", type=int, default=30)

    sp = add("characters", "Dirichlet characters, L-values and the ergodicity bound sweep")
    sp.add_argument("--mod", dest="modulus", type=int, default=4)
    sp.add_argument("--s", type=float, default=None)
    sp.add_argument("--char", dest="char_index", type=int, default=None)
    sp.add_argument("--beta", default="4")
    sp.add_argument("--cutoffs", type=_int_list, default=[])
    sp.add_argument("--truncation", type=int, default=1_000_000)

    sp = add("oracle", "brute-force cross-checks over Sp4(Z/N)")
    sp.add_argument("oracle_mode", choices=("closure", "degree", "distinct"))
    sp.add_argument("--mod", dest="mod_n", type=int, default=2)
    sp.add_argument("--surjective", dest="check_surjective", action="store_true")
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--l", type=int, default=1)
    sp.add_argument("--type", dest="divisor_type", default=None)
    sp.add_argument("--reps", dest="reps_file", default=None)
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    return RunConfig(**fields)


def run(config: RunConfig) -> int:
    """Run one command; returns the process exit status."""
    try:
        cfg = config.to_cfg()
        problems = validate_parameter_combination(cfg)
        if problems:
            raise DomainError("; ".join(problems))
        artifacts = run_from_cfg(cfg)
    except Gsp4Error as e:
        logger.error("%s: %s", type(e).__name__, e)
        sys.stdout.write(error_document(error_record(e, config.command)))
        return 2
    except Exception as e:
        logger.exception("unexpected failure in %s", config.command)
        sys.stdout.write(error_document(error_record(e, config.command)))
        return 1

    sys.stdout.write(dumps_result(artifacts))
    if config.save:
        meta = export_run(artifacts, config.output_root, config.fmt, config.xlsx)
        logger.info("run %s saved to %s", meta["run_id"], meta["out_dir"])
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="[%(name)s] %(message)s",
        stream=sys.stderr,
    )
    try:
        config = config_from_args(args)
    except Gsp4Error as e:
        sys.stdout.write(error_document(error_record(e, args.command)))
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
