"""Standalone SVG convergence plots (log-scale y axis, no renderer needed)."""
from __future__ import annotations

import math
from typing import Sequence, Tuple, Union
from xml.sax.saxutils import escape

import numpy as np

from ..errors import UsageError
from .tables import Table

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=30, bottom=50)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

# (column, legend suffix, dash pattern)
SERIES = (
    ("gap_y", "f(y) - f*", None),
    ("bound_primary", "bound", "6,4"),
)


def _points(k, v):
    keep = np.isfinite(v) & (v > 0.0)
    return k[keep], np.log10(v[keep])


def _fmt(v):
    return f"{v:.2f}"


def emit_plot(trace: Union[Table, Sequence[Tuple[str, Table]]], path, title: str = "") -> None:
    """Write ``f(y_k) - f*`` and the primary bound against ``k`` as SVG.

    ``trace`` is one trace table or a sequence of ``(label, table)`` pairs
    drawn on shared axes. A curve with one point is drawn as a marker.
    """
    pairs = [("", trace)] if isinstance(trace, Table) else list(trace)
    if not pairs or any(len(t) == 0 for _, t in pairs):
        raise UsageError("cannot plot an empty trace")
    curves = []
    for i, (label, table) in enumerate(pairs):
        k = np.asarray(table["k"], dtype=float)
        for col, suffix, dash in SERIES:
            if col not in table.columns:
                continue
            xs, ys = _points(k, np.asarray(table[col], dtype=float))
            if xs.size:
                name = f"{label} {suffix}".strip()
                curves.append((name, PALETTE[i % len(PALETTE)], dash, xs, ys))

    kmax = max(float(np.max(t["k"])) for _, t in pairs)
    if curves:
        lo = math.floor(min(float(c[4].min()) for c in curves))
        hi = math.ceil(max(float(c[4].max()) for c in curves))
    else:
        lo, hi = 0, 1
    if hi <= lo:
        hi = lo + 1
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]

    def px(k):
        return x0 + (x1 - x0) * (k / kmax if kmax > 0 else 0.5)

    def py(v):
        return y0 + (y1 - y0) * (v - lo) / (hi - lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="#444"/>',
    ]
    step = max(1, (hi - lo) // 8)
    for e in range(lo, hi + 1, step):
        yy = _fmt(py(e))
        out.append(f'<line x1="{x0}" y1="{yy}" x2="{x1}" y2="{yy}" stroke="#ddd"/>')
        out.append(f'<text x="{x0 - 6}" y="{yy}" text-anchor="end" dy="4">1e{e}</text>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        kk = kmax * frac
        xx = _fmt(px(kk))
        out.append(f'<text x="{xx}" y="{y0 + 16}" text-anchor="middle">{kk:g}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle">k</text>')
    if title:
        out.append(f'<text x="{x0}" y="{y1 - 10}">{escape(title)}</text>')
    for j, (name, color, dash, xs, ys) in enumerate(curves):
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        if xs.size == 1:
            out.append(f'<circle cx="{_fmt(px(xs[0]))}" cy="{_fmt(py(ys[0]))}" r="3" fill="{color}"/>')
        else:
            pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(xs, ys))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                       f'stroke-width="1.5"{dash_attr}/>')
        ly = y1 + 14 + 14 * j
        out.append(f'<line x1="{x1 - 150}" y1="{ly}" x2="{x1 - 125}" y2="{ly}" stroke="{color}"'
                   f' stroke-width="1.5"{dash_attr}/>')
        out.append(f'<text x="{x1 - 120}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
