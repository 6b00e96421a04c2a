"""Minimal deterministic SVG line plots."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=78, right=150, top=30, bottom=58)


def _nice_ticks(lo: float, hi: float, n: int = 6):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def line_plot(x, series: dict, *, xlabel: str = "", ylabel: str = "", title: str = "",
              logx: bool = False, logy: bool = False) -> str:
    """Render ``series`` (label -> y array) against ``x`` as an SVG document."""
    x = np.asarray(x, dtype=float)
    tx = np.log10(x) if logx else x
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    ty = {k: (np.log10(v) if logy else v) for k, v in ys.items()}
    finite = np.concatenate([v[np.isfinite(v)] for v in ty.values()])
    x0, x1 = float(np.min(tx)), float(np.max(tx))
    y0, y1 = float(np.min(finite)), float(np.max(finite))
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    pad = 0.04 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    if x1 == x0:
        x0, x1 = x0 - 1.0, x1 + 1.0
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def py(v):
        return MARGIN["top"] + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        X = px(t)
        label = _fmt(10.0 ** t) if logx else _fmt(t)
        out.append(f'<line x1="{X:.2f}" y1="{MARGIN["top"] + ph}" x2="{X:.2f}" '
                   f'y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{MARGIN["top"] + ph + 18}" '
                   f'text-anchor="middle">{escape(label)}</text>')
    for t in _nice_ticks(y0, y1):
        Y = py(t)
        label = _fmt(10.0 ** t) if logy else _fmt(t)
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{Y:.2f}" x2="{MARGIN["left"]}" '
                   f'y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{Y + 4:.2f}" '
                   f'text-anchor="end">{escape(label)}</text>')
    for i, (label, v) in enumerate(ty.items()):
        color = COLORS[i % len(COLORS)]
        ok = np.isfinite(v) & np.isfinite(tx)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(tx[ok], v[ok]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN["top"] + 14 + 16 * i
        lx = WIDTH - MARGIN["right"] + 10
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly}">{escape(label)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 16}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(18,{MARGIN["top"] + ph / 2:.1f}) rotate(-90)" '
               f'text-anchor="middle">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="18" text-anchor="middle" '
                   f'font-size="13">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
