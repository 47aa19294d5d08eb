"""Deterministic CSV / JSON / NDJSON writers.

Floats are printed with 17 significant digits so they round-trip exactly,
CSV follows RFC 4180 with a header row and LF endings, and JSON keeps the
insertion order of its keys. Identical inputs give identical bytes.
"""

import csv
import io
import json
import math
import os
from pathlib import Path

import numpy as np


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = format(x, ".17g")
    # keep floats recognisable as floats ("2.0", not "2")
    return s if ("." in s or "e" in s) else s + ".0"


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    if v is None:
        return ""
    return str(v)


def csv_text(columns, rows) -> str:
    """CSV with a header; ``rows`` are dicts keyed by column or sequences."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        values = [r[c] for c in columns] if isinstance(r, dict) else r
        w.writerow([_cell(x) for x in values])
    return buf.getvalue()


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(csv_text(columns, rows))
    return path


def _json_value(v, indent, level):
    if indent is None:
        pad = end = ""
        open_, sep, close = "", ", ", ""
    else:
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        open_, sep, close = "\n", ",\n", "\n"
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_json_value(x, indent, level + 1)}" for k, x in v.items()]
        return "{" + open_ + sep.join(items) + close + end + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        if len(v) == 0:
            return "[]"
        items = [f"{pad}{_json_value(x, indent, level + 1)}" for x in v]
        return "[" + open_ + sep.join(items) + close + end + "]"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        # JSON has no literal for these; keep them readable as strings
        return fmt_float(x) if math.isfinite(x) else json.dumps(fmt_float(x))
    if v is None:
        return "null"
    return json.dumps(str(v), ensure_ascii=False)


def json_text(obj, indent: int | None = 2) -> str:
    """JSON in key insertion order; ``indent=None`` gives a single line."""
    return _json_value(obj, indent, 0) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(json_text(obj))
    return path


def ndjson_line(record: dict) -> str:
    return json_text(record, indent=None)


def write_ndjson(path, records) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        for r in records:
            f.write(ndjson_line(r))
    return path


def thread_count() -> int:
    """Worker cap from ``PWL_THREADS`` (default: CPU count)."""
    v = os.environ.get("PWL_THREADS")
    if v:
        try:
            n = int(v)
        except ValueError:
            raise ValueError(f"PWL_THREADS must be a positive integer, got {v!r}") from None
        if n < 1:
            raise ValueError(f"PWL_THREADS must be a positive integer, got {v!r}")
        return n
    return os.cpu_count() or 1


def parallel_map(fn, items):
    """``[fn(x) for x in items]`` on up to ``thread_count()`` threads, in input order.

    The compiled kernels release the GIL, so threads run them concurrently.
    """
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
