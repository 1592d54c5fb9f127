"""Minimal SVG scatter plots (no plotting dependency)."""
from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    out, t = [], start
    while t <= hi + 1e-12 * step:
        if t >= lo - 1e-12 * step:
            out.append(round(t, 12))
        t += step
    return out


def scatter_svg(x: Sequence[float], y: Sequence[float], labels: Optional[Sequence[str]] = None,
                xlabel: str = "", ylabel: str = "", title: str = "", width: int = 480, height: int = 360) -> str:
    """Labeled scatter plot as an SVG document string."""
    pts = [(float(a), float(b), (labels[i] if labels else "")) for i, (a, b) in enumerate(zip(x, y))
           if a is not None and b is not None and math.isfinite(a) and math.isfinite(b)]
    ml, mr, mt, mb = 60, 20, 30 if title else 15, 45
    pw, ph = width - ml - mr, height - mt - mb
    xs = [p[0] for p in pts] or [0.0, 1.0]
    ys = [p[1] for p in pts] or [0.0, 1.0]
    pad = lambda lo, hi: (lo - 0.05 * (hi - lo or 1), hi + 0.05 * (hi - lo or 1))  # noqa: E731
    x0, x1 = pad(min(xs), max(xs))
    y0, y1 = pad(min(ys), max(ys))
    sx = lambda v: ml + (v - x0) / (x1 - x0) * pw  # noqa: E731
    sy = lambda v: mt + ph - (v - y0) / (y1 - y0) * ph  # noqa: E731

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
             f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
             f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        parts.append(f'<line x1="{sx(t):.2f}" y1="{mt + ph}" x2="{sx(t):.2f}" y2="{mt + ph + 4}" stroke="black"/>')
        parts.append(f'<text x="{sx(t):.2f}" y="{mt + ph + 16}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        parts.append(f'<line x1="{ml - 4}" y1="{sy(t):.2f}" x2="{ml}" y2="{sy(t):.2f}" stroke="black"/>')
        parts.append(f'<text x="{ml - 6}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    if title:
        parts.append(f'<text x="{width / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')
    parts.append(f'<text x="{ml + pw / 2}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(f'<text x="14" y="{mt + ph / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {mt + ph / 2})">{escape(ylabel)}</text>')
    for a, b, lab in pts:
        parts.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="4" fill="#1f77b4"/>')
        if lab:
            parts.append(f'<text x="{sx(a) + 6:.2f}" y="{sy(b) - 6:.2f}">{escape(str(lab))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
