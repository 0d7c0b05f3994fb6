"""
Sweep report serialization.

CSV: one header line with the columns of :data:`CSV_COLUMNS`
(``domain, lam_abs, angle_frac, lam_re, lam_im, q, ratio_grad, ratio_u,
res_mom, res_div, iterations, rho, status``), one line per row, floats in
shortest round-trip form, ``\\n`` line endings.

JSON: ``{"schema": 1, "config": {...}, "columns": [...], "rows": [...],
"summary": {...}}`` with rows as objects in column order; NaN is written
as ``null``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .sweep import CSV_COLUMNS, SweepReport, SweepRow

__all__ = ["emit_report", "parse_report", "report_to_csv", "report_to_json", "SCHEMA"]

SCHEMA = 1
_INT = {"iterations"}
_STR = {"domain", "status"}


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def report_to_csv(report: SweepReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, float):
        return None if math.isnan(obj) or math.isinf(obj) else obj
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def report_to_json(report: SweepReport) -> str:
    doc = {
        "schema": SCHEMA,
        "config": report.config,
        "columns": list(CSV_COLUMNS),
        "rows": [{c: getattr(r, c) for c in CSV_COLUMNS} for r in report.rows],
        "summary": report.summary(),
    }
    return json.dumps(_clean(doc), indent=2, allow_nan=False) + "\n"


def emit_report(report: SweepReport, fmt: str, path) -> Path:
    """Write ``report`` as ``csv`` or ``json`` to ``path``."""
    if fmt not in ("csv", "json"):
        raise ValueError("format must be 'csv' or 'json'")
    text = report_to_csv(report) if fmt == "csv" else report_to_json(report)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc}") from exc
    return path


def _row(values: dict) -> SweepRow:
    kw = {}
    for c in CSV_COLUMNS:
        v = values[c]
        if c in _STR:
            kw[c] = str(v)
        elif c in _INT:
            kw[c] = int(v)
        else:
            kw[c] = float("nan") if v is None else float(v)
    return SweepRow(**kw)


def parse_report(path) -> SweepReport:
    """Read a report written by :func:`emit_report` (format from the suffix)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read report {path}: {exc}") from exc
    if path.suffix == ".json":
        doc = json.loads(text)
        if doc.get("schema") != SCHEMA:
            raise ValueError(f"{path}: unsupported schema {doc.get('schema')!r}")
        return SweepReport(doc["config"], [_row(r) for r in doc["rows"]])
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected CSV header {reader.fieldnames}")
    return SweepReport({}, [_row(r) for r in reader])
