"""Plot-ready tables of d_k, c_k and the matching asymptotic form."""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from . import asymptotics as asy
from .distribution import DegreeDistribution, Regime, regime_params

TABLE_COLUMNS = ("k", "d_k", "c_k", "asymptotic_k")


def table_metadata(d: DegreeDistribution) -> dict:
    regime = d.regime
    if regime is Regime.CRITICAL:
        beta = None
        gamma = 1.0
    else:
        rp = regime_params(d.p)
        beta, gamma = rp.beta, rp.gamma
    return {
        "p": d.p,
        "regime": regime.value,
        "beta": beta,
        "gamma": gamma,
        "method": d.method.value,
        "K": d.K,
        "tol": d.tol,
        "tail_mass": d.tail_mass,
    }


def table_rows(d: DegreeDistribution) -> list[tuple[int, float, float, float]]:
    k = np.arange(1, d.K + 1)
    asym = asy.asymptotic(d.p, k)
    return [(int(kk), float(v), float(v) / int(kk), float(a)) for kk, v, a in zip(k, d.values, asym)]


def _header_line(meta: dict) -> str:
    parts = []
    for key, value in meta.items():
        if value is None:
            text = "none"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        parts.append(f"{key}={text}")
    return "# " + " ".join(parts)


def table_to_csv(d: DegreeDistribution) -> str:
    buf = io.StringIO()
    buf.write(_header_line(table_metadata(d)) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for k, dk, ck, ak in table_rows(d):
        writer.writerow((k, repr(dk), repr(ck), repr(ak)))
    return buf.getvalue()


def table_to_json(d: DegreeDistribution) -> str:
    rows = [dict(zip(TABLE_COLUMNS, row)) for row in table_rows(d)]
    return json.dumps({"meta": table_metadata(d), "rows": rows}, indent=1)


def parse_table_csv(text: str) -> tuple[dict, np.ndarray]:
    """Inverse of ``table_to_csv``: (header fields as strings, array of rows)."""
    lines = text.splitlines()
    meta = {}
    if lines and lines[0].startswith("#"):
        for item in lines[0][1:].split():
            key, _, value = item.partition("=")
            meta[key] = value
        lines = lines[1:]
    reader = csv.reader(lines)
    header = next(reader)
    if tuple(header) != TABLE_COLUMNS:
        raise ValueError(f"unexpected table columns {header}")
    rows = np.array([[float(x) for x in row] for row in reader if row])
    return meta, rows.reshape(-1, len(TABLE_COLUMNS))


def asymptotic_ratios(d: DegreeDistribution, ks) -> np.ndarray:
    """d_k / asymptotic(k), formed in log space so deep tails do not underflow."""
    ks = np.asarray(ks, dtype=int)
    logs = d.log_values[ks - 1] if d.log_values is not None else np.log(d.values[ks - 1])
    return np.exp(logs - asy.log_asymptotic(d.p, ks))


__all__ = [
    "TABLE_COLUMNS",
    "asymptotic_ratios",
    "parse_table_csv",
    "table_metadata",
    "table_rows",
    "table_to_csv",
    "table_to_json",
]
