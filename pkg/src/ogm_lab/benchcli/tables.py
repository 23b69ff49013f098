"""Versioned CSV tables for traces and certificate reports.

Layout::

    schema=1
    # key=value        (metadata, any number of lines)
    col_a,col_b,...    (header)
    ...                (data, floats as %.17g)

Lines end with LF. Parsing a written table gives back identical values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from ..errors import UsageError

SCHEMA = "schema=1"
INT_COLUMNS = frozenset({"k", "violated", "lyap_violated"})

TRACE_COLUMNS = (
    "k", "f_x", "f_y", "f_xtilde", "grad_dual_norm", "gap_y", "gap_xtilde",
    "bound_primary", "bound_secondary", "lyap", "lyap_tilde",
    "slack_primary", "slack_secondary", "violated",
)
CERT_COLUMNS = ("k", "lyap", "dlyap", "bound", "gap", "slack", "violated", "lyap_violated")


def format_float(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return "%.17g" % v


@dataclass
class Table:
    """Named columns of equal length plus string metadata."""

    columns: Dict[str, np.ndarray]
    meta: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        sizes = {len(v) for v in self.columns.values()}
        if len(sizes) > 1:
            raise UsageError("table columns differ in length")

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def __getitem__(self, name):
        return self.columns[name]

    def same_values(self, other: "Table") -> bool:
        if self.meta != other.meta or list(self.columns) != list(other.columns):
            return False
        return all(
            np.array_equal(self.columns[c], other.columns[c], equal_nan=c not in INT_COLUMNS)
            for c in self.columns
        )

    def to_csv(self) -> str:
        lines = [SCHEMA]
        for key, value in self.meta.items():
            if "\n" in key or "\n" in str(value) or "=" in key:
                raise UsageError(f"invalid metadata entry {key!r}")
            lines.append(f"# {key}={value}")
        names = list(self.columns)
        lines.append(",".join(names))
        cols = [self.columns[n] for n in names]
        for i in range(len(self)):
            lines.append(",".join(
                str(int(c[i])) if n in INT_COLUMNS else format_float(c[i])
                for n, c in zip(names, cols)
            ))
        return "\n".join(lines) + "\n"

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "Table":
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines or lines[0] != SCHEMA:
            raise UsageError("not a schema=1 table")
        meta = {}
        i = 1
        while i < len(lines) and lines[i].startswith("# "):
            key, _, value = lines[i][2:].partition("=")
            meta[key] = value
            i += 1
        if i >= len(lines):
            raise UsageError("table has no header")
        names = lines[i].split(",")
        rows = [ln.split(",") for ln in lines[i + 1:]]
        for r, row in enumerate(rows):
            if len(row) != len(names):
                raise UsageError(f"row {r + 1} has {len(row)} fields, expected {len(names)}")
        columns = {}
        for j, n in enumerate(names):
            vals = [row[j] for row in rows]
            if n in INT_COLUMNS:
                columns[n] = np.array([int(v) for v in vals], dtype=np.int64)
            else:
                columns[n] = np.array([float(v) for v in vals], dtype=np.float64)
        return cls(columns=columns, meta=meta)

    @classmethod
    def read(cls, path) -> "Table":
        with open(path, encoding="utf-8", newline="") as fh:
            return cls.from_csv(fh.read())


def _col(report, attr, n):
    return getattr(report, attr) if report is not None else np.full(n, np.nan)


def trace_table(trace, reports: Mapping, meta: Mapping[str, str]) -> Table:
    """Per-iteration trace rows merged with the primary/secondary certificates."""
    n = len(trace)
    oracle_gap = reports.get("_gap_y")
    prim = reports.get("primary")
    sec = reports.get("secondary")
    violated = np.zeros(n, dtype=np.int64)
    for rep in (prim, sec):
        if rep is not None:
            violated |= (rep.violated | rep.lyap_violated).astype(np.int64)
    cols = {
        "k": np.arange(n, dtype=np.int64),
        "f_x": trace.f_x,
        "f_y": trace.f_y,
        "f_xtilde": trace.f_xtilde if trace.f_xtilde is not None else np.full(n, np.nan),
        "grad_dual_norm": reports["_grad_dual_norm"],
        "gap_y": oracle_gap if oracle_gap is not None else np.full(n, np.nan),
        "gap_xtilde": reports.get("_gap_xtilde", np.full(n, np.nan)),
        "bound_primary": _col(prim, "bound", n),
        "bound_secondary": _col(sec, "bound", n),
        "lyap": _col(prim, "lyap", n),
        "lyap_tilde": _col(sec, "lyap", n),
        "slack_primary": _col(prim, "slack", n),
        "slack_secondary": _col(sec, "slack", n),
        "violated": violated,
    }
    return Table(columns=cols, meta=dict(meta))


def cert_table(report, meta: Mapping[str, str]) -> Table:
    cols = report.columns()
    return Table(columns={c: np.asarray(cols[c]) for c in CERT_COLUMNS}, meta=dict(meta))
