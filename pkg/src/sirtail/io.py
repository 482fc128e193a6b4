"""CSV and JSON writers for experiment artifacts.

Floats are written with 9 significant digits through Python's own
formatting, which never consults the locale.  Nothing run-dependent
(thread counts, timestamps, paths) is written, so equal inputs give
byte-identical files.
"""

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

SIG_DIGITS = 9


def fmt(x):
    """Format a scalar for CSV output."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, f".{SIG_DIGITS}g")


def jsonable(obj):
    """Recursively convert to JSON-safe values, rounding floats to 9 significant digits."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return fmt(x)
        return float(format(x, f".{SIG_DIGITS}g"))
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return obj


def dumps_json(obj):
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(obj), encoding="utf-8")
    return path


def csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(header, rows), encoding="utf-8")
    return path


TAIL_COLUMNS = ("theta", "p_hat", "ci_low", "ci_high", "scaled")
BOUND_COLUMNS = (
    "r",
    "empirical",
    "ci_high",
    "calka",
    "ginibre_petal",
    "generic_petal",
    "calka_valid",
    "ginibre_petal_valid",
    "generic_petal_valid",
)


def write_tail_csv(path, curve):
    """One row per threshold: ``theta, p_hat, ci_low, ci_high, scaled``."""
    return write_csv(path, TAIL_COLUMNS, curve.entries)


def write_bounds_csv(path, table):
    """Write a bounds table (a dict of equal-length columns keyed by :data:`BOUND_COLUMNS`)."""
    rows = zip(*(table[c] for c in BOUND_COLUMNS))
    return write_csv(path, BOUND_COLUMNS, rows)


def write_constant_csv(path, estimates):
    """Table mode for sweeps: one row per :class:`ConstantEstimate`."""
    header = ("beta", "fading", "method", "value", "std_error", "bracket_low", "bracket_high")
    rows = []
    for e in estimates:
        fading = e.metadata.get("fading", {})
        label = ":".join(str(v) for v in fading.values()) if isinstance(fading, dict) else str(fading)
        rows.append((e.metadata.get("beta", math.nan), label, e.method, e.value, e.std_error,
                     e.bracket_low, e.bracket_high))
    return write_csv(path, header, rows)
