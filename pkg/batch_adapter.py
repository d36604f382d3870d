# batch_adapter.py
"""
Parameter sweeps: one scenario per DataFrame row, one engine run per scenario,
one concatenated summary table out.

    scenarios = pd.DataFrame({"COMMAND": "partition", "BETA": ["5", "6", "7"]})
    df = run_batch(scenarios)
"""
from __future__ import annotations

import json
import logging
from typing import Any, Callable, Dict, Optional

import numpy as np
import pandas as pd

from engine import parse_flag, run_from_cfg

logger = logging.getLogger(__name__)


def _beta_text(val) -> str:
    # str() of a float is its shortest repr, so 2.5 -> "2.5" and 5.0 -> "5"
    if isinstance(val, (float, np.floating)) and float(val).is_integer():
        return str(int(val))
    return str(val)


def _prime_list(val) -> list[int]:
    """JSON list, comma-separated text, or array-like."""
    if isinstance(val, str):
        text = val.strip()
        val = json.loads(text) if text.startswith("[") else text.split(",")
    return [int(x) for x in np.atleast_1d(val)]


def _flag(internal_key: str) -> Callable[[Any], bool]:
    return lambda v: parse_flag(v, internal_key)


# external column -> (engine key, coercion)
ALLOWED_OVERRIDES: Dict[str, tuple[str, Callable[[Any], Any]]] = {
    "COMMAND": ("COMMAND", str),

    # cosets / degree
    "PRIME": ("P", int),
    "P": ("P", int),
    "L": ("L", int),
    "PRIMES": ("PRIMES", _prime_list),
    "TYPE": ("DIVISOR_TYPE", str),
    "CHECK_DISTINCT": ("CHECK_DISTINCT", _flag("CHECK_DISTINCT")),

    # thermodynamics
    "BETA": ("BETA", _beta_text),
    "CLOSED": ("CLOSED", _flag("CLOSED")),
    "LMAX": ("SERIES_LMAX", int),
    "PRIME_BOUND": ("PRIME_BOUND", int),
    "LAMBDA_BOUND": ("LAMBDA_BOUND", int),

    # hecke identities
    "GRID_RADIUS": ("GRID_RADIUS", int),

    # characters
    "MODULUS": ("MODULUS", int),
    "CHAR_INDEX": ("CHAR_INDEX", int),
    "S": ("S_VALUE", float),
    "CUTOFF": ("F_CUTOFFS", lambda v: [int(v)]),
    "TRUNCATION": ("L_TRUNCATION", int),

    # oracle
    "ORACLE_MODE": ("ORACLE_MODE", str),
    "MOD": ("MOD_N", int),
    "CHECK_SURJECTIVE": ("CHECK_SURJECTIVE", _flag("CHECK_SURJECTIVE")),
}

# table reported per command when the caller does not pick one
PRIMARY_TABLE = {
    "cosets": "summary",
    "degree": "degrees",
    "zeta": "zeta",
    "partition": "partition",
    "hecke-verify": "hecke_checks",
    "phase": "phase",
    "characters": "bound_sweep",
    "oracle": "oracle",
}


def _row_to_overrides(row: pd.Series) -> dict:
    """Known, non-missing columns of one scenario row as engine overrides."""
    present = [k for k in row.index if k in ALLOWED_OVERRIDES and np.all(pd.notna(row[k]))]
    return {ALLOWED_OVERRIDES[k][0]: ALLOWED_OVERRIDES[k][1](row[k]) for k in present}


def run_batch(scenarios: pd.DataFrame, table: Optional[str] = None, base_cfg: Optional[dict] = None) -> pd.DataFrame:
    """
    Run a batch defined by a DataFrame of scenario rows.
    Each row is mapped to an overrides dict via _row_to_overrides (on top of
    base_cfg) and run through engine.run_from_cfg. Returns the concatenation of
    each run's summary table with scenario_id and config_hash columns in front.
    """
    frames = []
    for i, row in scenarios.reset_index(drop=True).iterrows():
        cfg = dict(base_cfg or {})
        cfg.update(_row_to_overrides(row))
        art = run_from_cfg(cfg)
        name = table or PRIMARY_TABLE[art["provenance"]["command"]]
        if name not in art["tables"]:
            raise KeyError(f"scenario {i}: run produced no {name!r} table (have {sorted(art['tables'])})")
        df = art["tables"][name].copy()
        df.insert(0, "config_hash", art["provenance"]["config_hash"])
        df.insert(0, "scenario_id", i)
        frames.append(df)
        logger.info("scenario %d: %s rows=%d", i, art["provenance"]["command"], len(df))

    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
