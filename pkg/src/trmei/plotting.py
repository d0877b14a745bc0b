"""Dependency-free SVG convergence plots.

Output is a pure function of the input curves, so re-plotting the same
files yields byte-identical SVG.
"""

from __future__ import annotations

import math
from html import escape

import numpy as np

__all__ = ["nice_ticks", "convergence_svg"]

WIDTH, HEIGHT = 720, 440
MARGIN = dict(left=70, right=150, top=40, bottom=50)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"]


def nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _label(v: float) -> str:
    return f"{v:.4g}"


def convergence_svg(title: str, series: dict, log_y: bool = False, metadata: str = ""):
    """Render ``{name: (x, mean, se)}`` as an SVG string.

    Returns ``(svg, n_dropped)`` where ``n_dropped`` counts points removed
    because they were non-positive on a log axis.
    """
    dropped = 0
    cleaned = {}
    for name in sorted(series):
        x, mean, se = (np.asarray(a, dtype=float) for a in series[name])
        lo, hi = mean - se, mean + se
        if log_y:
            bad = mean <= 0
            dropped += int(bad.sum())
            x, mean, lo, hi = x[~bad], mean[~bad], lo[~bad], hi[~bad]
            lo = np.where(lo > 0, lo, mean)
            mean, lo, hi = np.log10(mean), np.log10(lo), np.log10(hi)
        cleaned[name] = (x, mean, lo, hi)

    xs = [c[0] for c in cleaned.values() if c[0].size]
    ys = [np.concatenate([c[2], c[3]]) for c in cleaned.values() if c[0].size]
    xmin, xmax = (min(a.min() for a in xs), max(a.max() for a in xs)) if xs else (0.0, 1.0)
    ymin, ymax = (min(a.min() for a in ys), max(a.max() for a in ys)) if ys else (0.0, 1.0)
    if xmax <= xmin:
        xmax = xmin + 1.0
    if ymax <= ymin:
        ymin, ymax = ymin - 0.5, ymax + 0.5

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - xmin) / (xmax - xmin) * pw

    def sy(v):
        return MARGIN["top"] + (1.0 - (v - ymin) / (ymax - ymin)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
    ]
    if metadata:
        out.append(f"<metadata>{escape(metadata)}</metadata>")
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    out.append(f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>')
    x0, y0 = MARGIN["left"], MARGIN["top"] + ph
    out.append(f'<rect x="{x0}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')

    for t in nice_ticks(xmin, xmax):
        px = sx(t)
        out.append(f'<line x1="{_fmt(px)}" y1="{y0}" x2="{_fmt(px)}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(px)}" y="{y0 + 18}" text-anchor="middle">{_label(t)}</text>')
    for t in nice_ticks(ymin, ymax):
        py = sy(t)
        text = f"1e{_label(t)}" if log_y else _label(t)
        out.append(f'<line x1="{x0 - 5}" y1="{_fmt(py)}" x2="{x0}" y2="{_fmt(py)}" stroke="black"/>')
        out.append(f'<line x1="{x0}" y1="{_fmt(py)}" x2="{x0 + pw}" y2="{_fmt(py)}" stroke="#dddddd"/>')
        out.append(f'<text x="{x0 - 8}" y="{_fmt(py + 4)}" text-anchor="end">{text}</text>')
    out.append(f'<text x="{x0 + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">function evaluations</text>')
    ylab = "log10 best feasible value" if log_y else "best feasible value"
    out.append(f'<text transform="translate(16,{MARGIN["top"] + ph / 2:.1f}) rotate(-90)" '
               f'text-anchor="middle">{ylab}</text>')

    for k, (name, (x, mean, lo, hi)) in enumerate(cleaned.items()):
        color = PALETTE[k % len(PALETTE)]
        if x.size:
            band = [f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, hi)]
            band += [f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x[::-1], lo[::-1])]
            out.append(f'<polygon points="{" ".join(band)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
            line = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, mean))
            out.append(f'<polyline class="series" data-name="{escape(name)}" points="{line}" '
                       f'fill="none" stroke="{color}" stroke-width="2"/>')
        ly = MARGIN["top"] + 16 + 20 * k
        lx = x0 + pw + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="3"/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n", dropped
