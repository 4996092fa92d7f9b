"""
CSV and manifest persistence.

CSV schemas (header row, fixed column order, floats written with ``repr`` so
they re-parse to the identical binary value):

* diagnostics: ``t,name,value``
* sweep: ``N,s,sup_delta_energy,commutator_sum,lambda,iu0_h1,interval_count,valid``
  followed by ``slope_energy,slope_commutator,floor`` when a slope could be fitted
  (at least three valid N values)
* morawetz: ``t,morawetz_action,l4_norm4,lhs``
* report: ``source,kind,x,name,value`` (long format; ``kind`` is ``series`` or ``sweep``)

A manifest is a JSON object holding the subcommand, the full validated
configuration, the seed and library versions. It carries no timestamps, so
identical manifests describe identical runs.
"""

from __future__ import annotations

import csv
import json
import math
import platform
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import scipy

from .dynamics import DiagnosticsSeries
from .experiments import SweepResult, interval_count

SERIES_COLUMNS = ("t", "name", "value")
SWEEP_COLUMNS = ("N", "s", "sup_delta_energy", "commutator_sum", "lambda", "iu0_h1", "interval_count", "valid")
SLOPE_COLUMNS = ("slope_energy", "slope_commutator", "floor")
MORAWETZ_COLUMNS = ("t", "morawetz_action", "l4_norm4", "lhs")
REPORT_COLUMNS = ("source", "kind", "x", "name", "value")


def fmt(x: Any) -> str:
    """Full-precision text for a cell."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def read_csv(path: str | Path) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return list(reader.fieldnames or []), list(reader)


def write_series_csv(path: str | Path, series: DiagnosticsSeries) -> None:
    write_csv(path, SERIES_COLUMNS, series.rows)


def read_series_csv(path: str | Path) -> DiagnosticsSeries:
    cols, rows = read_csv(path)
    if tuple(cols) != SERIES_COLUMNS:
        raise ValueError(f"{path}: not a diagnostics CSV (columns {cols})")
    out = DiagnosticsSeries()
    for r in rows:
        out.add(float(r["t"]), r["name"], float(r["value"]))
    return out


def write_sweep_csv(path: str | Path, result: SweepResult, gamma: float, K: float = 1.0, mu: float = 0.1) -> None:
    have_fit = result.slope_energy is not None or result.slope_commutator is not None
    columns = SWEEP_COLUMNS + (SLOPE_COLUMNS if have_fit else ())
    rows = []
    for r in result.rows:
        count = interval_count(K, r.lam, gamma, mu) if r.valid and r.lam > 0 else math.nan
        row = [r.N, r.s, r.sup_delta_energy, r.commutator_sum, r.lam, r.iu0_h1, count, r.valid]
        if have_fit:
            row += [result.slope_energy, result.slope_commutator, result.floor]
        rows.append(row)
    write_csv(path, columns, rows)


def write_manifest(path: str | Path, subcommand: str, config: dict[str, Any], seed: int | None, extra: dict[str, Any] | None = None) -> None:
    from . import __version__

    record = {
        "subcommand": subcommand,
        "seed": seed,
        "config": config,
        "versions": {
            "hartree_lab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    if extra:
        record.update(extra)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")


def _json_default(obj: Any) -> Any:
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (tuple, set)):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_long(path: str | Path) -> list[tuple[str, str, float, str, float]]:
    """Rows (source, kind, x, name, value) from any CSV this package writes."""
    cols, rows = read_csv(path)
    source = Path(path).stem
    out = []
    if tuple(cols) == SERIES_COLUMNS:
        for r in rows:
            out.append((source, "series", float(r["t"]), r["name"], float(r["value"])))
    elif tuple(cols[: len(SWEEP_COLUMNS)]) == SWEEP_COLUMNS:
        for r in rows:
            if r["valid"] != "true":
                continue
            tag = f"[s={r['s']}]"
            for name in ("sup_delta_energy", "commutator_sum", "lambda", "iu0_h1", "interval_count"):
                out.append((source, "sweep", float(r["N"]), name + tag, float(r[name])))
    elif tuple(cols) == MORAWETZ_COLUMNS:
        for r in rows:
            for name in MORAWETZ_COLUMNS[1:]:
                out.append((source, "series", float(r["t"]), name, float(r[name])))
    elif tuple(cols) == REPORT_COLUMNS:
        for r in rows:
            out.append((r["source"], r["kind"], float(r["x"]), r["name"], float(r["value"])))
    else:
        raise ValueError(f"{path}: unrecognized CSV schema {cols}")
    return out
