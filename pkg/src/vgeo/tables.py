"""CSV and JSON writers/readers with exact float round-tripping."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

VERDICT_COLUMNS = ["property", "set", "point", "eps", "radius", "verdict", "margin", "samples", "seed",
                   "witness_lhs", "witness_rhs", "witness"]
DEDUPE_KEY = ("set", "property", "eps", "radius", "seed")


def fmt(v) -> str:
    """17 significant digits for floats so values re-parse exactly; '' for None."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def write_csv(path, header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(path_or_text, numeric=True):
    """Rows as dicts; numeric fields become floats when numeric=True."""
    text = path_or_text
    if not isinstance(text, str) or "\n" not in text:
        text = Path(path_or_text).read_text()
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        if numeric:
            row = {k: _maybe_float(v) for k, v in row.items()}
        out.append(row)
    return out


def _maybe_float(v):
    if v is None or v == "":
        return None
    try:
        return float(v)
    except ValueError:
        return v


def curve_rows(curve):
    for t, p, d in zip(curve.grid, curve.points, curve.deriv):
        yield [float(t), *map(float, p), *map(float, d)]


def curve_header(dim: int):
    return ["t", *[f"x{i + 1}" for i in range(dim)], *[f"dx{i + 1}" for i in range(dim)]]


def write_curve(path, curve) -> str:
    return write_csv(path, curve_header(curve.dim), curve_rows(curve))


def read_curve(path):
    """(grid, points, deriv) arrays from a curve CSV."""
    rows = read_csv(path)
    keys = list(rows[0].keys())
    n = (len(keys) - 1) // 2
    A = np.array([[r[k] for k in keys] for r in rows], dtype=float)
    return A[:, 0], A[:, 1 : 1 + n], A[:, 1 + n :]


def write_verdicts(path, verdicts) -> str:
    rows = []
    for v in verdicts:
        r = v.to_row() if hasattr(v, "to_row") else v
        rows.append([r.get(c) for c in VERDICT_COLUMNS])
    return write_csv(path, VERDICT_COLUMNS, rows)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def write_json(path, obj) -> str:
    text = dumps(obj)
    if path is not None:
        Path(path).write_text(text)
    return text


def dedupe(rows, key=DEDUPE_KEY):
    seen, out = set(), []
    for r in rows:
        k = tuple("" if r.get(c) is None else str(r.get(c)) for c in key)
        if k not in seen:
            seen.add(k)
            out.append(r)
    return out
