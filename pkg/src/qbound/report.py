"""Text output shared by the command-line tools.

Floats are written with 12 significant digits and infinite bounds as
``"divergent"``. CSV files start with one comment line recording the package
version, the command line, kappa and the alpha-model label.
"""

from __future__ import annotations

import csv
import io
import json
import math
import shlex

import numpy as np

from . import __version__

DIGITS = 12
DIVERGENT = "divergent"


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return DIVERGENT if v > 0 else "-" + DIVERGENT
        if math.isnan(v):
            return "nan"
        return f"{v:.{DIGITS}g}"
    if value is None:
        return ""
    return str(value)


def header_line(argv, kappa=None, alpha_label: str | None = None) -> str:
    parts = [f"qbound {__version__}", "command: " + shlex.join(["qbound", *argv])]
    parts.append("kappa: " + (fmt(kappa) if kappa is not None else "n/a"))
    parts.append("alpha: " + (alpha_label or "n/a"))
    return "# " + " | ".join(parts)


def csv_text(columns, rows, header: str | None = None, comments=()) -> str:
    buf = io.StringIO()
    if header:
        buf.write(header + "\n")
    for c in comments:
        buf.write("# " + c + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json_value(value):
    if isinstance(value, dict):
        return {str(k): _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return DIVERGENT if v > 0 else "-" + DIVERGENT
        return float(f"{v:.{DIGITS}g}")
    if hasattr(value, "value"):
        return value.value
    return value


def json_text(obj) -> str:
    return json.dumps(_json_value(obj), indent=2, sort_keys=False) + "\n"
