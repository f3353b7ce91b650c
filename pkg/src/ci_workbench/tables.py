"""CSV formats: metric values, logits, and coverage rows.

* metric values: a single ``value`` column;
* logits: ``label,logit_0,...,logit_{d-1}``;
* coverage: the :data:`COVERAGE_COLUMNS` header, in that exact order.

All files are UTF-8 with '.' as decimal separator.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import ParseError, SchemaMismatch
from .metrics import LogitTable
from .stats_core import Sample

COVERAGE_COLUMNS = (
    "model", "statistic", "method", "aggregation", "n", "trials", "alpha",
    "coverage", "coverage_se", "mean_width", "median_width", "degenerate_count", "seed",
)
_INT_COLUMNS = {"n", "trials", "degenerate_count", "seed"}
_FLOAT_COLUMNS = {"alpha", "coverage", "coverage_se", "mean_width", "median_width"}


def _float(text: str, line: int, path: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {text!r} as a number", line, path) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {text!r}", line, path)
    return v


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for row in reader:
            yield reader.line_num, [c.strip() for c in row]


def read_input(path, bounds=None) -> Sample | LogitTable:
    """Read a metric-values or logits CSV, deciding by its header."""
    path = str(path)
    rows = _rows(path)
    try:
        line, header = next(rows)
    except StopIteration:
        raise ParseError("empty file", None, path) from None
    if header == ["value"]:
        values = []
        for line, row in rows:
            if not row or row == [""]:
                continue
            if len(row) != 1:
                raise ParseError(f"expected 1 column, found {len(row)}", line, path)
            values.append(_float(row[0], line, path))
        if not values:
            raise ParseError("no data rows", None, path)
        return Sample(np.array(values), bounds)
    if header and header[0] == "label" and len(header) >= 3:
        d = len(header) - 1
        expected = ["label"] + [f"logit_{k}" for k in range(d)]
        if header != expected:
            raise ParseError(f"logits header must be {','.join(expected)}", line, path)
        labels, logits = [], []
        for line, row in rows:
            if not row or row == [""]:
                continue
            if len(row) != d + 1:
                raise ParseError(f"expected {d + 1} columns, found {len(row)}", line, path)
            try:
                label = int(row[0])
            except ValueError:
                raise ParseError(f"label {row[0]!r} is not an integer", line, path) from None
            if not 0 <= label < d:
                raise ParseError(f"label {label} outside [0, {d})", line, path)
            labels.append(label)
            logits.append([_float(c, line, path) for c in row[1:]])
        if not labels:
            raise ParseError("no data rows", None, path)
        return LogitTable(np.array(logits), np.array(labels), d)
    raise ParseError("header must be 'value' or 'label,logit_0,...'", line, path)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_coverage(path, rows: list[dict]) -> None:
    rows = sorted(rows, key=lambda r: (r["model"], r["statistic"], r["aggregation"], r["method"], int(r["n"])))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COVERAGE_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in COVERAGE_COLUMNS])


def read_coverage(path) -> list[dict]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != COVERAGE_COLUMNS:
            raise SchemaMismatch(f"{path}: header does not match the coverage schema")
        for row in reader:
            if not row:
                continue
            if len(row) != len(COVERAGE_COLUMNS):
                raise SchemaMismatch(f"{path}:{reader.line_num}: expected {len(COVERAGE_COLUMNS)} columns")
            rec = {}
            for col, text in zip(COVERAGE_COLUMNS, row):
                try:
                    if col in _INT_COLUMNS:
                        rec[col] = int(text)
                    elif col in _FLOAT_COLUMNS:
                        rec[col] = float(text)
                    else:
                        rec[col] = text
                except ValueError:
                    raise SchemaMismatch(f"{path}:{reader.line_num}: bad {col} {text!r}") from None
            out.append(rec)
    return out


def write_csv(path_or_fh, header, rows) -> None:
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])

    if hasattr(path_or_fh, "write"):
        _write(path_or_fh)
    else:
        with open(Path(path_or_fh), "w", newline="", encoding="utf-8") as fh:
            _write(fh)
