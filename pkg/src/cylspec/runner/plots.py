"""Self-contained SVG figures, written by hand (no plotting library).

Plots are views of CSV data: every plotted point comes from a table the
study also writes.
"""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 480
MARGIN = 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


class _Axes:
    def __init__(self, xs, ys):
        xs = [x for x in xs if math.isfinite(x)]
        ys = [y for y in ys if math.isfinite(y)]
        self.x0, self.x1 = _span(xs)
        self.y0, self.y1 = _span(ys)

    def px(self, x):
        return MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2 * MARGIN)

    def py(self, y):
        return HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2 * MARGIN)


def _span(values):
    if not values:
        return 0.0, 1.0
    lo, hi = min(values), max(values)
    if hi == lo:
        pad = max(abs(lo), 1.0) * 0.5
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _frame(title, xlabel, ylabel, body):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
        f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{MARGIN / 2}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 15}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{escape(xlabel)}</text>',
        f'<text x="15" y="{HEIGHT / 2}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 15 {HEIGHT / 2})">{escape(ylabel)}</text>',
    ]
    parts.extend(body)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _pt(v):
    return f"{v:.2f}"


def _polyline(ax, xs, ys, color, dashed=False):
    pts = " ".join(f"{_pt(ax.px(x))},{_pt(ax.py(y))}" for x, y in zip(xs, ys)
                   if math.isfinite(x) and math.isfinite(y))
    if not pts:
        return ""
    dash = ' stroke-dasharray="6,4"' if dashed else ""
    return f'<polyline points="{pts}" fill="none" stroke="{color}"{dash}/>'


def spectrum_plane(series, curves, title="spectrum"):
    """Complex-plane scatter with predicted curves overlaid.

    ``series``: list of (label, list of complex); ``curves``: list of
    (label, list of complex) drawn as dashed lines.
    """
    xs = [z.real for _, pts in series for z in pts] + [z.real for _, c in curves for z in c]
    ys = [z.imag for _, pts in series for z in pts] + [z.imag for _, c in curves for z in c]
    ax = _Axes(xs, ys)
    body = []
    for i, (label, pts) in enumerate(series):
        color = COLORS[i % len(COLORS)]
        body.append(f'<g fill="{color}"><title>{escape(label)}</title>')
        for z in pts:
            if math.isfinite(z.real) and math.isfinite(z.imag):
                body.append(f'<circle cx="{_pt(ax.px(z.real))}" cy="{_pt(ax.py(z.imag))}" r="2"/>')
        body.append("</g>")
    for i, (label, pts) in enumerate(curves):
        body.append(_polyline(ax, [z.real for z in pts], [z.imag for z in pts],
                              COLORS[i % len(COLORS)], dashed=True))
    return _frame(title, "Re mu", "Im mu", body)


def decay_plot(x, logpsi, fits, title="eigenfunction tail"):
    """Log-linear tail with fitted lines; ``fits`` is a list of (label, slope,
    intercept, x0, x1)."""
    ax = _Axes(list(x), list(logpsi))
    body = [_polyline(ax, x, logpsi, COLORS[0])]
    for i, (label, slope, intercept, x0, x1) in enumerate(fits):
        color = COLORS[(i + 1) % len(COLORS)]
        body.append(_polyline(ax, [x0, x1], [slope * x0 + intercept, slope * x1 + intercept],
                              color, dashed=True))
        body.append(f'<text x="{MARGIN + 10}" y="{MARGIN + 20 + 16 * i}" font-family="sans-serif" '
                    f'font-size="12" fill="{color}">{escape(label)}: slope = {slope:.6g}</text>')
    return _frame(title, "x", "log |psi|", body)


def staircase(params, counts, title="eigenvalue count"):
    """Accumulation staircase N versus the sweep parameter."""
    ax = _Axes(list(params), list(counts) + [0])
    xs, ys = [], []
    for i, (p, c) in enumerate(zip(params, counts)):
        if i:
            xs.append(p)
            ys.append(counts[i - 1])
        xs.append(p)
        ys.append(c)
    body = [_polyline(ax, xs, ys, COLORS[0])]
    for p, c in zip(params, counts):
        body.append(f'<circle cx="{_pt(ax.px(p))}" cy="{_pt(ax.py(c))}" r="3" fill="{COLORS[1]}"/>')
    return _frame(title, "sweep parameter", "N", body)
