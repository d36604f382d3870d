# run_export.py
"""
Per-run output folders.

Each run lands in <output_root>/<run_id>/ with
  result.json     the source of truth: provenance header + record
  <table>.csv     one file per table when the format is csv
  tables.xlsx     one sheet per table (optional, via openpyxl)
  metadata.json   run id, timestamp, files written and the config snapshot

result.json carries the config hash but no timestamp, so rerunning a config
reproduces it byte for byte; only the folder name changes.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import logging
import math
import os
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
from openpyxl import Workbook
from openpyxl.styles import Font

logger = logging.getLogger(__name__)


def _short_hash(obj: Any) -> str:
    """
    First 8 hex digits of the sha1 of `obj` rendered through to_jsonable as
    sorted-key JSON. Fractions hash as "a/b"; any value to_jsonable cannot map
    hashes as its str().
    """
    s = json.dumps(to_jsonable(obj), sort_keys=True).encode("utf-8")
    return hashlib.sha1(s).hexdigest()[:8]


def _now_ts() -> str:
    return datetime.datetime.now().strftime("%Y%m%d_%H%M%S")


def make_run_id(config_like: Dict[str, Any]) -> str:
    return f"{_now_ts()}_{_short_hash(config_like)}"


def to_jsonable(obj: Any) -> Any:
    """Exact rationals become 'a/b' strings; numpy scalars become Python; inf/nan become strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(to_jsonable(v) for v in obj)
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps_result(artifacts: Dict[str, Any]) -> str:
    body = {"provenance": artifacts["provenance"], "result": artifacts["record"]}
    return json.dumps(to_jsonable(body), indent=2) + "\n"


def error_document(record: Dict[str, Any], provenance: Optional[Dict[str, Any]] = None) -> str:
    body = {"provenance": provenance or {"command": record.get("command")}, "error": record}
    return json.dumps(to_jsonable(body), indent=2) + "\n"


def _cell(v: Any) -> Any:
    v = to_jsonable(v)
    if isinstance(v, (dict, list)):
        return json.dumps(v)
    return v


def write_csv(df: pd.DataFrame, path: str, provenance: Dict[str, Any]) -> None:
    header = ", ".join(f"{k}={v}" for k, v in provenance.items())
    with open(path, "w", newline="") as f:
        f.write(f"# {header}\n")
        df.map(_cell).to_csv(f, index=False)


def write_xlsx(tables: Dict[str, pd.DataFrame], path: str, provenance: Dict[str, Any]) -> None:
    wb = Workbook()
    ws = wb.active
    ws.title = "provenance"
    for i, (k, v) in enumerate(provenance.items(), start=1):
        ws.cell(row=i, column=1, value=k).font = Font(bold=True)
        ws.cell(row=i, column=2, value=str(v))
    for name, df in tables.items():
        sheet = wb.create_sheet(title=name[:31])
        for j, col in enumerate(df.columns, start=1):
            sheet.cell(row=1, column=j, value=str(col)).font = Font(bold=True)
        for i, row in enumerate(df.itertuples(index=False), start=2):
            for j, v in enumerate(row, start=1):
                sheet.cell(row=i, column=j, value=_cell(v))
    wb.save(path)


def export_run(
    artifacts: Dict[str, Any],
    output_root: str = "runs",
    fmt: str = "json",
    xlsx: bool = False,
) -> Dict[str, Any]:
    """Write one run folder and return its metadata."""
    if fmt not in ("json", "csv"):
        raise ValueError(f"format must be json or csv, got {fmt!r}")
    prov = artifacts["provenance"]
    run_id = make_run_id(artifacts.get("config", prov))
    out_dir = os.path.join(output_root, run_id)
    os.makedirs(out_dir, exist_ok=True)

    files = []
    json_path = os.path.join(out_dir, "result.json")
    with open(json_path, "w") as f:
        f.write(dumps_result(artifacts))
    files.append(json_path)

    tables = artifacts.get("tables", {})
    if fmt == "csv":
        for name, df in tables.items():
            path = os.path.join(out_dir, f"{name}.csv")
            write_csv(df, path, prov)
            files.append(path)
    if xlsx and tables:
        path = os.path.join(out_dir, "tables.xlsx")
        write_xlsx(tables, path, prov)
        files.append(path)

    meta = {
        "run_id": run_id,
        "timestamp": datetime.datetime.now().isoformat(),
        "output_root": output_root,
        "out_dir": out_dir,
        "files": files,
        "provenance": prov,
        "config_snapshot": to_jsonable(artifacts.get("config", {})),
    }
    meta_path = os.path.join(out_dir, "metadata.json")
    with open(meta_path, "w") as f:
        json.dump(meta, f, indent=2, default=str)
    logger.info("wrote %d files to %s", len(files) + 1, out_dir)
    return meta
