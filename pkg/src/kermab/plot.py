"""Dependency-free SVG rendering of cumulative-regret curves."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from kermab.simcore import Curves

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")

WIDTH, HEIGHT = 720, 450
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 20, 55


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _label(v: float) -> str:
    return f"{v:g}"


def render_svg(series: list[tuple[str, Curves]]) -> str:
    """One mean curve and a +/-1 std band per series, legend in input order."""
    t_max = max(float(c.t[-1]) for _, c in series)
    t_min = min(float(c.t[0]) for _, c in series)
    y_hi = max(float((c.mean_cum_regret + c.std_cum_regret).max()) for _, c in series)
    y_lo = min(0.0, min(float((c.mean_cum_regret - c.std_cum_regret).min()) for _, c in series))
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    if t_max <= t_min:
        t_max = t_min + 1.0
    pw, ph = WIDTH - MARGIN_L - MARGIN_R, HEIGHT - MARGIN_T - MARGIN_B

    def sx(t):
        return MARGIN_L + (t - t_min) / (t_max - t_min) * pw

    def sy(y):
        return MARGIN_T + ph - (y - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    for v in _nice_ticks(y_lo, y_hi):
        y = sy(v)
        out.append(f'<line x1="{MARGIN_L}" y1="{y:.2f}" x2="{MARGIN_L + pw}" y2="{y:.2f}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{y + 4:.2f}" text-anchor="end">{_label(v)}</text>')
    for v in _nice_ticks(t_min, t_max):
        x = sx(v)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN_T + ph}" x2="{x:.2f}" y2="{MARGIN_T + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN_T + ph + 18}" text-anchor="middle">{_label(v)}</text>')

    for k, (name, c) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        upper = [f"{sx(t):.2f},{sy(m + s):.2f}" for t, m, s in zip(c.t, c.mean_cum_regret, c.std_cum_regret)]
        lower = [f"{sx(t):.2f},{sy(m - s):.2f}" for t, m, s in zip(c.t, c.mean_cum_regret, c.std_cum_regret)]
        band = " ".join(upper + lower[::-1])
        out.append(f'<polygon class="band" points="{band}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{sx(t):.2f},{sy(m):.2f}" for t, m in zip(c.t, c.mean_cum_regret))
        out.append(f'<polyline class="mean" points="{line}" fill="none" stroke="{color}" stroke-width="2"/>')

    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle">t</text>')
    out.append(f'<text x="18" y="{MARGIN_T + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {MARGIN_T + ph / 2:.2f})">R(t)</text>')
    for k, (name, _) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        y = MARGIN_T + 16 + 18 * k
        x = MARGIN_L + 12
        out.append(f'<g class="legend-entry"><line x1="{x}" y1="{y - 4}" x2="{x + 22}" y2="{y - 4}" '
                   f'stroke="{color}" stroke-width="2"/><text x="{x + 28}" y="{y}">{escape(name)}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
